"""Argument-stage layers: pair input, SDP masking, convolution with dynamic
multi-pooling, the SDP-length graph convolution with its gate and
self-attention aggregation, and the identification/role output heads.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .trigger import glorot


def combine_pair_input(p: T.Tensor, y: T.Tensor, trig_pf: T.Tensor, arg_pf: T.Tensor,
                       pad_col: T.Tensor) -> T.Tensor:
    """Per-token concat of encoder rows, trigger scores, and the two
    position-feature row blocks; pad rows are zeroed, which also keeps
    gradients out of the PF rows looked up at pad positions."""
    return T.mul(T.concat([p, y, trig_pf, arg_pf], axis=-1), pad_col)


def build_pair_input(p: T.Tensor, y: T.Tensor, pf_table, trigger_span, argument_span,
                     pad_col: T.Tensor, pf_index_fn) -> T.Tensor:
    length = p.shape[0]
    trig_pf = pf_table.lookup(pf_index_fn(trigger_span, length))
    arg_pf = pf_table.lookup(pf_index_fn(argument_span, length))
    return combine_pair_input(p, y, trig_pf, arg_pf, pad_col)


def apply_sdp_mask(h: T.Tensor, sdp_vec: np.ndarray) -> T.Tensor:
    """Zero every row not on the pair's shortest dependency path."""
    col = T.constant(np.asarray(sdp_vec, dtype=np.float64).reshape(-1, 1))
    return T.mul(h, col)


def pooling_segments(trigger_start: int, argument_start: int, length: int) -> list:
    """Three half-open row ranges split at the candidates' first tokens.

    Split points are sorted; boundary rows belong to the left segment.
    Degenerate ranges (coinciding split points, or a candidate on the last
    token) come out empty and are given a padded-window value by the caller.
    """
    p1, p2 = sorted((trigger_start, argument_start))
    return [(0, p1 + 1), (p1 + 1, p2 + 1), (p2 + 1, length)]


class Dmcnn:
    """Window convolution over pair-input rows followed by per-segment max
    pooling; empty segments pool one all-zero padded window, i.e. relu(bias)."""

    def __init__(self, n_h: int, n_filters: int, window: int, rng: np.random.Generator,
                 name: str = "dmcnn"):
        self.n_h = n_h
        self.n_filters = n_filters
        self.window = window
        self.w = T.Parameter(f"{name}.w", glorot(rng, window * n_h, n_filters))
        self.b = T.Parameter(f"{name}.b", np.zeros(n_filters), kind="bias")

    def parameters(self):
        return [self.w, self.b]

    def forward(self, h_masked: T.Tensor, trigger_start: int, argument_start: int) -> T.Tensor:
        length, width = h_masked.shape
        if width != self.n_h:
            raise T.TensorError(f"dmcnn: input width {width} != configured {self.n_h}")
        conv = T.relu(T.conv1d_rows(h_masked, self.w, self.b, self.window))
        segments = pooling_segments(trigger_start, argument_start, length)
        if all(s < e for s, e in segments):
            pooled = T.max_over_segment(conv, segments)
        else:
            parts = []
            for s, e in segments:
                if s < e:
                    parts.append(T.max_over_segment(conv, [(s, e)]))
                else:
                    parts.append(T.reshape(T.relu(self.b.tensor), (1, self.n_filters)))
            pooled = T.concat(parts, axis=0)
        return T.reshape(pooled, (3 * self.n_filters,))


def pair_feature(pooled: T.Tensor, sdp_len: int, etype_idx: int,
                 sdp_l_table, arg_type_table) -> T.Tensor:
    """Pooled convolution features plus the path-length and argument-type
    embedding rows, concatenated into the pair vector."""
    sdp_row = T.reshape(sdp_l_table.lookup([int(sdp_len)]), (sdp_l_table.dim,))
    type_row = T.reshape(arg_type_table.lookup([int(etype_idx)]), (arg_type_table.dim,))
    return T.concat([pooled, sdp_row, type_row], axis=-1)


def gcn_layer(m_d: np.ndarray, gate: T.Tensor, features: T.Tensor) -> T.Tensor:
    """Aggregate gated argument rows along one length-indexed adjacency.

    ``gate`` is one scalar per argument, shaped (n_e,) or (n_e, 1).
    """
    n_e = features.shape[0]
    gate_col = gate if gate.data.ndim == 2 else T.reshape(gate, (n_e, 1))
    return T.matmul(T.constant(m_d), T.mul(gate_col, features))


class GcnSdp:
    """Graph convolution over argument candidates, one adjacency per path
    length 0..n_s, aggregated across lengths by self-attention (or a plain
    sum when attention is off)."""

    def __init__(self, n_o: int, n_s: int, rng: np.random.Generator, name: str = "gcn"):
        self.n_o = n_o
        self.n_s = n_s
        levels = n_s + 1
        # one gate weight vector per length, stored column-wise so all
        # levels' gates come out of a single matmul
        self.gate_w = T.Parameter(f"{name}.gate_w", glorot(rng, n_o, levels))
        self.gate_b = T.Parameter(f"{name}.gate_b", np.zeros(levels), kind="bias")
        self.att_w = T.Parameter(f"{name}.att_w", glorot(rng, 1, n_o))
        self.att_b = T.Parameter(f"{name}.att_b", np.zeros(1), kind="bias")
        self.z = T.Parameter(f"{name}.z", np.zeros(levels))

    def parameters(self):
        return [self.gate_w, self.gate_b, self.att_w, self.att_b, self.z]

    def gates(self, features: T.Tensor) -> T.Tensor:
        """Per-argument, per-length scalars in (0,1): shape (n_e, n_s+1)."""
        return T.sigmoid(T.add(T.matmul(features, self.gate_w.tensor), self.gate_b.tensor))

    def gate(self, features: T.Tensor, d: int) -> T.Tensor:
        n_e = features.shape[0]
        return T.reshape(T.slice_axis(self.gates(features), d, d + 1, axis=-1), (n_e,))

    def level_stack(self, features: T.Tensor, adjacency: list) -> list:
        g = self.gates(features)
        return [
            gcn_layer(adjacency[d], T.slice_axis(g, d, d + 1, axis=-1), features)
            for d in range(self.n_s + 1)
        ]

    def attention_aggregate(self, stack: list):
        """Convex combination of the per-length aggregates.

        Per argument j and length d the score is softmax over d of
        z_d * tanh(att_w . I_d[j] + att_b). Returns (aggregate, scores)
        where scores has one row per argument and one column per length.
        """
        n_e = stack[0].shape[0]
        cols = []
        for d, level in enumerate(stack):
            s_d = T.tanh(T.add(T.sum_axis(T.mul(level, self.att_w.tensor), axis=-1),
                               self.att_b.tensor))
            z_d = T.slice_axis(self.z.tensor, d, d + 1)
            cols.append(T.reshape(T.mul(z_d, s_d), (n_e, 1)))
        scores = T.softmax_last_axis(T.concat(cols, axis=-1))
        agg = None
        for d, level in enumerate(stack):
            weighted = T.mul(level, T.slice_axis(scores, d, d + 1, axis=-1))
            agg = weighted if agg is None else T.add(agg, weighted)
        return agg, scores

    def forward(self, features: T.Tensor, adjacency: list, attention: bool = True):
        stack = self.level_stack(features, adjacency)
        if attention:
            return self.attention_aggregate(stack)
        agg = stack[0]
        for level in stack[1:]:
            agg = T.add(agg, level)
        return agg, None


class OutputHead:
    """Shared shape for the argument identification and role heads."""

    def __init__(self, in_dim: int, hidden: int, n_out: int, rng: np.random.Generator,
                 name: str = "role"):
        self.w4 = T.Parameter(f"{name}.w4", glorot(rng, in_dim, hidden))
        self.b4 = T.Parameter(f"{name}.b4", np.zeros(hidden), kind="bias")
        self.w5 = T.Parameter(f"{name}.w5", glorot(rng, hidden, n_out))
        self.b5 = T.Parameter(f"{name}.b5", np.zeros(n_out), kind="bias")

    def parameters(self):
        return [self.w4, self.b4, self.w5, self.b5]

    def forward(self, rows: T.Tensor) -> T.Tensor:
        hidden = T.relu(T.add(T.matmul(rows, self.w4.tensor), self.b4.tensor))
        return T.softmax_last_axis(T.add(T.matmul(hidden, self.w5.tensor), self.b5.tensor))
