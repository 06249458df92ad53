"""Bi-LSTM sentence encoder and the per-token BIO trigger head."""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .corpus import LabelVocab, decode_bio


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class LstmCell:
    """One LSTM direction; the four gates share a single fused weight matrix
    over [h_prev, x_t], laid out i|f|o|g. Forget-gate bias starts at 1."""

    def __init__(self, name: str, input_dim: int, hidden: int, rng: np.random.Generator):
        self.hidden = hidden
        self.input_dim = input_dim
        self.w = T.Parameter(f"{name}.w", glorot(rng, input_dim + hidden, 4 * hidden))
        bias = np.zeros(4 * hidden)
        bias[hidden:2 * hidden] = 1.0
        self.b = T.Parameter(f"{name}.b", bias, kind="bias")

    def parameters(self):
        return [self.w, self.b]

    def run(self, rows, reverse: bool = False):
        """Feed (1, input_dim) row tensors through the recurrence; returns
        the per-step hidden rows in original sentence order."""
        state_h = T.constant(np.zeros((1, self.hidden)))
        state_c = T.constant(np.zeros((1, self.hidden)))
        order = range(len(rows) - 1, -1, -1) if reverse else range(len(rows))
        outputs = [None] * len(rows)
        for t in order:
            state_h, state_c = T.lstm_step(rows[t], state_h, state_c, self.w, self.b)
            outputs[t] = state_h
        return outputs


class BiLstm:
    """Forward and backward LSTM over the sentence matrix; pad rows of the
    output are zeroed so nothing downstream sees pad states."""

    def __init__(self, input_dim: int, hidden: int, rng: np.random.Generator, name: str = "bilstm"):
        self.fw = LstmCell(f"{name}.fw", input_dim, hidden, rng)
        self.bw = LstmCell(f"{name}.bw", input_dim, hidden, rng)
        self.out_dim = 2 * hidden

    def parameters(self):
        return self.fw.parameters() + self.bw.parameters()

    def forward(self, x: T.Tensor, pad_col: T.Tensor) -> T.Tensor:
        length, width = x.shape
        if width != self.fw.input_dim:
            raise T.TensorError(
                f"bilstm: input width {width} != configured {self.fw.input_dim}"
            )
        rows = [T.slice_axis(x, t, t + 1, axis=0) for t in range(length)]
        fw_out = self.fw.run(rows, reverse=False)
        bw_out = self.bw.run(rows, reverse=True)
        steps = [T.concat([f, b], axis=-1) for f, b in zip(fw_out, bw_out)]
        p = T.concat(steps, axis=0)
        return T.mul(p, pad_col)


class TriggerHead:
    """Two-layer per-token classifier over BIO trigger labels."""

    def __init__(self, in_dim: int, hidden: int, n_labels: int, rng: np.random.Generator,
                 name: str = "trigger"):
        self.w1 = T.Parameter(f"{name}.w1", glorot(rng, in_dim, hidden))
        self.b1 = T.Parameter(f"{name}.b1", np.zeros(hidden), kind="bias")
        self.w2 = T.Parameter(f"{name}.w2", glorot(rng, hidden, n_labels))
        self.b2 = T.Parameter(f"{name}.b2", np.zeros(n_labels), kind="bias")

    def parameters(self):
        return [self.w1, self.b1, self.w2, self.b2]

    def forward(self, p: T.Tensor, dropout_rate: float = 0.0,
                rng: np.random.Generator | None = None, train: bool = False) -> T.Tensor:
        hidden = T.relu(T.add(T.matmul(p, self.w1.tensor), self.b1.tensor))
        hidden = T.dropout(hidden, dropout_rate, rng, train)
        return T.softmax_last_axis(T.add(T.matmul(hidden, self.w2.tensor), self.b2.tensor))


def extract_trigger_candidates(y: T.Tensor, vocab: LabelVocab, pad_mask: np.ndarray,
                               gold=None, mode: str = "predicted"):
    """Candidate spans for the argument stage.

    ``gold`` mode returns the gold spans (teacher forcing) while the live
    softmax rows stay in the computation path; ``predicted`` mode decodes
    the per-token argmax, with pad positions forced to O.
    """
    if mode == "gold":
        if gold is None:
            raise ValueError("gold mode requires gold triggers")
        return list(gold)
    if mode != "predicted":
        raise ValueError(f"unknown candidate mode {mode!r}")
    labels = np.argmax(y.data, axis=-1)
    labels = np.where(np.asarray(pad_mask) > 0, labels, 0)
    return decode_bio(labels, vocab)


def triggers_to_spans(triggers) -> list:
    return [(t.start, t.end) for t in triggers]
