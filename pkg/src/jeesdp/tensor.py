"""Dense float64 tensors with a reverse-mode autodiff tape.

Everything runs on numpy arrays. Operations record themselves on the
thread-local active tape whenever gradients are enabled and at least one
input requires them; ``backward`` replays the tape in reverse once and
then invalidates it.
"""

from __future__ import annotations

import itertools
import threading

import numpy as np


class TensorError(Exception):
    """Shape mismatch, tape misuse, or non-finite values in the engine."""


_SERIAL = itertools.count(1)


class Tape:
    """Ordered record of primitive operations for one forward pass."""

    def __init__(self):
        self.nodes = []
        self.serial = next(_SERIAL)


class _EngineState(threading.local):
    def __init__(self):
        self.tape = None
        self.grad_enabled = True


_STATE = _EngineState()


def new_tape() -> Tape:
    """Install a fresh tape for the calling thread and return it."""
    _STATE.tape = Tape()
    return _STATE.tape


class no_grad:
    """Context manager disabling tape recording (inference / finite differences)."""

    def __enter__(self):
        self._prev = _STATE.grad_enabled
        _STATE.grad_enabled = False
        return self

    def __exit__(self, *exc):
        _STATE.grad_enabled = self._prev
        return False


class Tensor:
    """Row-major float64 value array, optionally tracked for gradients."""

    __slots__ = ("data", "grad", "requires_grad", "_tape_serial")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._tape_serial = 0

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise TensorError(f"item() on tensor of shape {self.data.shape}")
        return float(self.data.reshape(()))

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


class Parameter:
    """Named trainable tensor.

    ``kind`` distinguishes weight matrices from biases and lookup tables so
    the L2 term and initializers can treat them differently.
    """

    def __init__(self, name: str, data, kind: str = "weight"):
        if kind not in ("weight", "bias", "table"):
            raise ValueError(f"unknown parameter kind {kind!r}")
        self.name = name
        self.kind = kind
        self.tensor = Tensor(data, requires_grad=True)

    @property
    def data(self):
        return self.tensor.data

    @property
    def grad(self):
        return self.tensor.grad

    @property
    def shape(self):
        return self.tensor.data.shape

    def zero_grad(self):
        self.tensor.grad = None

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape}, kind={self.kind})"


def constant(data) -> Tensor:
    return Tensor(data, requires_grad=False)


def _should_record(*tensors: Tensor) -> bool:
    return _STATE.grad_enabled and _STATE.tape is not None and any(
        t.requires_grad for t in tensors
    )


def _record(out: Tensor, backward_fn) -> None:
    out.requires_grad = True
    out._tape_serial = _STATE.tape.serial
    _STATE.tape.nodes.append((out, backward_fn))


def _record_multi(outs, backward_fn) -> None:
    """Record one node with several outputs (e.g. an LSTM step's h and c);
    its backward receives one gradient (or None) per output."""
    serial = _STATE.tape.serial
    for out in outs:
        out.requires_grad = True
        out._tape_serial = serial
    _STATE.tape.nodes.append((tuple(outs), backward_fn))


def _accum(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.array(g)  # owned copy; later contributions add in place
    else:
        t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum gradient over axes that numpy broadcasting expanded."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def backward(loss: Tensor, leaves=()) -> None:
    """Populate gradients of everything the scalar ``loss`` depends on.

    Leaves listed in ``leaves`` that did not participate get zero-filled
    grad buffers.  The tape is consumed: a second backward without a new
    forward is an error.
    """
    tape = _STATE.tape
    if tape is None:
        raise TensorError("backward() with no active tape")
    if loss.data.size != 1:
        raise TensorError(f"backward() needs a scalar loss, got shape {loss.data.shape}")
    if loss._tape_serial != tape.serial:
        raise TensorError(
            "loss was not produced on the current tape "
            "(second backward without a new forward?)"
        )
    loss.grad = np.ones_like(loss.data)
    for out, fn in reversed(tape.nodes):
        if type(out) is tuple:
            if all(o.grad is None for o in out):
                continue
            fn(tuple(o.grad for o in out))
            for o in out:
                o.grad = None
        else:
            g = out.grad
            if g is None:
                continue
            fn(g)
            out.grad = None  # intermediates are not needed after their node runs
    tape.nodes.clear()
    tape.serial = next(_SERIAL)
    for leaf in leaves:
        t = leaf.tensor if isinstance(leaf, Parameter) else leaf
        if t.requires_grad and t.grad is None:
            t.grad = np.zeros_like(t.data)


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise TensorError(f"matmul: incompatible shapes {a.data.shape} x {b.data.shape}")
    out = Tensor(a.data @ b.data)
    if _should_record(a, b):
        def bwd(g):
            if a.requires_grad:
                _accum(a, g @ b.data.T)
            if b.requires_grad:
                _accum(b, a.data.T @ g)
        _record(out, bwd)
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data + b.data
    except ValueError:
        raise TensorError(f"add: shapes {a.data.shape} and {b.data.shape} do not broadcast")
    out = Tensor(data)
    if _should_record(a, b):
        def bwd(g):
            if a.requires_grad:
                _accum(a, _unbroadcast(g, a.data.shape))
            if b.requires_grad:
                _accum(b, _unbroadcast(g, b.data.shape))
        _record(out, bwd)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data * b.data
    except ValueError:
        raise TensorError(f"mul: shapes {a.data.shape} and {b.data.shape} do not broadcast")
    out = Tensor(data)
    if _should_record(a, b):
        def bwd(g):
            if a.requires_grad:
                _accum(a, _unbroadcast(g * b.data, a.data.shape))
            if b.requires_grad:
                _accum(b, _unbroadcast(g * a.data, b.data.shape))
        _record(out, bwd)
    return out


def scalar_scale(x: Tensor, s: float) -> Tensor:
    s = float(s)
    out = Tensor(x.data * s)
    if _should_record(x):
        def bwd(g):
            _accum(x, g * s)
        _record(out, bwd)
    return out


def concat(xs, axis: int = -1) -> Tensor:
    xs = list(xs)
    if not xs:
        raise TensorError("concat of zero tensors")
    try:
        data = np.concatenate([x.data for x in xs], axis=axis)
    except ValueError as e:
        raise TensorError(f"concat: {e}")
    out = Tensor(data)
    if _should_record(*xs):
        sizes = [x.data.shape[axis] for x in xs]
        splits = np.cumsum(sizes)[:-1]
        def bwd(g):
            for x, piece in zip(xs, np.split(g, splits, axis=axis)):
                if x.requires_grad:
                    _accum(x, piece)
        _record(out, bwd)
    return out


def concat_last_axis(xs) -> Tensor:
    return concat(xs, axis=-1)


def slice_axis(x: Tensor, start: int, stop: int, axis: int = -1) -> Tensor:
    ax = axis if axis >= 0 else x.data.ndim + axis
    if not (0 <= start < stop <= x.data.shape[ax]):
        raise TensorError(f"slice_axis: [{start},{stop}) out of range for shape {x.data.shape}")
    idx = tuple(slice(None) if d != ax else slice(start, stop) for d in range(x.data.ndim))
    out = Tensor(x.data[idx])
    if _should_record(x):
        def bwd(g):
            if x.grad is None:
                x.grad = np.zeros_like(x.data)
            x.grad[idx] += g
        _record(out, bwd)
    return out


def reshape(x: Tensor, shape) -> Tensor:
    out = Tensor(x.data.reshape(shape))
    if _should_record(x):
        def bwd(g):
            _accum(x, g.reshape(x.data.shape))
        _record(out, bwd)
    return out


def sigmoid(x: Tensor) -> Tensor:
    data = 1.0 / (1.0 + np.exp(-x.data))
    out = Tensor(data)
    if _should_record(x):
        def bwd(g):
            _accum(x, g * data * (1.0 - data))
        _record(out, bwd)
    return out


def tanh(x: Tensor) -> Tensor:
    data = np.tanh(x.data)
    out = Tensor(data)
    if _should_record(x):
        def bwd(g):
            _accum(x, g * (1.0 - data * data))
        _record(out, bwd)
    return out


def relu(x: Tensor) -> Tensor:
    out = Tensor(np.maximum(x.data, 0.0))
    if _should_record(x):
        mask = x.data > 0.0  # subgradient at 0 is 0
        def bwd(g):
            _accum(x, g * mask)
        _record(out, bwd)
    return out


def exp(x: Tensor) -> Tensor:
    data = np.exp(x.data)
    out = Tensor(data)
    if _should_record(x):
        def bwd(g):
            _accum(x, g * data)
        _record(out, bwd)
    return out


def log(x: Tensor, floor: float | None = None) -> Tensor:
    """Natural log; with ``floor`` the input is clamped from below first."""
    if floor is not None:
        clamped = np.maximum(x.data, floor)
        data = np.log(clamped)
    else:
        clamped = x.data
        data = np.log(x.data)
    out = Tensor(data)
    if _should_record(x):
        if floor is not None:
            active = x.data > floor
            def bwd(g):
                _accum(x, np.where(active, g / clamped, 0.0))
        else:
            def bwd(g):
                _accum(x, g / x.data)
        _record(out, bwd)
    return out


def softmax_last_axis(x: Tensor) -> Tensor:
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(data)
    if _should_record(x):
        def bwd(g):
            dot = (g * data).sum(axis=-1, keepdims=True)
            _accum(x, (g - dot) * data)
        _record(out, bwd)
    return out


def sum_axis(x: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    out = Tensor(x.data.sum(axis=axis, keepdims=keepdims))
    if _should_record(x):
        def bwd(g):
            if axis is None:
                _accum(x, np.broadcast_to(g, x.data.shape).copy())
            else:
                gg = g if keepdims else np.expand_dims(g, axis)
                _accum(x, np.broadcast_to(gg, x.data.shape).copy())
        _record(out, bwd)
    return out


def max_over_segment(x: Tensor, segments) -> Tensor:
    """Per-segment max over the first axis.

    ``segments`` is a list of half-open ``(start, stop)`` row ranges; the
    result has one row (or scalar entry, for 1-D input) per segment.  Ties
    route the gradient to the first maximal element.
    """
    n = x.data.shape[0]
    segs = [(int(s), int(e)) for s, e in segments]
    for s, e in segs:
        if not (0 <= s < e <= n):
            raise TensorError(f"max_over_segment: empty or out-of-range segment [{s},{e}) for {n} rows")
    data = np.stack([x.data[s:e].max(axis=0) for s, e in segs])
    out = Tensor(data)
    if _should_record(x):
        arg = [s + np.argmax(x.data[s:e], axis=0) for s, e in segs]
        def bwd(g):
            if x.grad is None:
                x.grad = np.zeros_like(x.data)
            if x.data.ndim == 1:
                for k, idx in enumerate(arg):
                    x.grad[idx] += g[k]
            else:
                cols = np.arange(x.data.shape[1])
                for k, idx in enumerate(arg):
                    x.grad[idx, cols] += g[k]
        _record(out, bwd)
    return out


def embedding_lookup(table: Tensor | Parameter, indices) -> Tensor:
    """Gather rows of a 2-D tensor; gradient scatter-adds back into the rows."""
    t = table.tensor if isinstance(table, Parameter) else table
    idx = np.asarray(indices, dtype=np.intp)
    if idx.ndim != 1:
        raise TensorError(f"embedding_lookup: indices must be 1-D, got shape {idx.shape}")
    if t.data.ndim != 2:
        raise TensorError(f"embedding_lookup: table must be 2-D, got shape {t.data.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= t.data.shape[0]):
        raise TensorError(
            f"embedding_lookup: index out of range for table with {t.data.shape[0]} rows"
        )
    out = Tensor(t.data[idx])
    if _should_record(t):
        def bwd(g):
            if t.grad is None:
                t.grad = np.zeros_like(t.data)
            np.add.at(t.grad, idx, g)
        _record(out, bwd)
    return out


def pick_rows(x: Tensor, indices) -> Tensor:
    """Select one entry per row of a 2-D tensor: out[k] = x[k, indices[k]]."""
    idx = np.asarray(indices, dtype=np.intp)
    n = x.data.shape[0]
    if idx.shape != (n,):
        raise TensorError(f"pick_rows: need {n} indices, got shape {idx.shape}")
    rows = np.arange(n)
    out = Tensor(x.data[rows, idx])
    if _should_record(x):
        def bwd(g):
            if x.grad is None:
                x.grad = np.zeros_like(x.data)
            np.add.at(x.grad, (rows, idx), g)
        _record(out, bwd)
    return out


def dropout(x: Tensor, rate: float, rng: np.random.Generator, train: bool) -> Tensor:
    """Inverted dropout: train-time zeroing with 1/(1-rate) rescale, eval identity."""
    if not train or rate == 0.0:
        return x
    if not (0.0 <= rate < 1.0):
        raise TensorError(f"dropout: rate {rate} outside [0, 1)")
    keep = rng.random(x.data.shape) >= rate
    scale = 1.0 / (1.0 - rate)
    out = Tensor(x.data * keep * scale)
    if _should_record(x):
        def bwd(g):
            _accum(x, g * keep * scale)
        _record(out, bwd)
    return out


def conv1d_rows(x: Tensor, w: Tensor | Parameter, b: Tensor | Parameter, window: int) -> Tensor:
    """Pre-activation 1-D convolution over the rows of ``x``.

    Window i covers rows i..i+window-1 with zero rows appended past the end,
    so the output keeps one row per input row.  ``w`` is the flattened
    filter bank of shape (window * n_h, n_k); ``b`` has shape (n_k,).
    """
    wt = w.tensor if isinstance(w, Parameter) else w
    bt = b.tensor if isinstance(b, Parameter) else b
    L, n_h = x.data.shape
    if wt.data.shape[0] != window * n_h:
        raise TensorError(
            f"conv1d_rows: filter rows {wt.data.shape[0]} != window*n_h {window * n_h}"
        )
    xpad = np.vstack([x.data, np.zeros((window - 1, n_h))])
    windows = np.lib.stride_tricks.sliding_window_view(xpad, (window, n_h))
    windows = windows.reshape(L, window * n_h)
    out = Tensor(windows @ wt.data + bt.data)
    if _should_record(x, wt, bt):
        def bwd(g):
            if wt.requires_grad:
                _accum(wt, windows.T @ g)
            if bt.requires_grad:
                _accum(bt, g.sum(axis=0))
            if x.requires_grad:
                gwin = (g @ wt.data.T).reshape(L, window, n_h)
                gpad = np.zeros_like(xpad)
                for o in range(window):
                    gpad[o:o + L] += gwin[:, o, :]
                _accum(x, gpad[:L])
        _record(out, bwd)
    return out


def _sigmoid_np(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def lstm_step(x_row: Tensor, h_prev: Tensor, c_prev: Tensor,
              w: Tensor | Parameter, b: Tensor | Parameter):
    """One fused LSTM step: gates i|f|o|g over [h_prev, x_row].

    Returns (h, c). Fusing the step into a single tape node keeps the
    recurrence from dominating the tape; the hand-written backward is
    validated by grad_check in the test suite.
    """
    wt = w.tensor if isinstance(w, Parameter) else w
    bt = b.tensor if isinstance(b, Parameter) else b
    hidden = h_prev.data.shape[-1]
    if wt.data.shape != (h_prev.data.shape[-1] + x_row.data.shape[-1], 4 * hidden):
        raise TensorError(
            f"lstm_step: weight shape {wt.data.shape} does not match "
            f"inputs {h_prev.data.shape} + {x_row.data.shape}"
        )
    inp = np.concatenate([h_prev.data, x_row.data], axis=-1)
    z = inp @ wt.data + bt.data
    i = _sigmoid_np(z[:, :hidden])
    f = _sigmoid_np(z[:, hidden:2 * hidden])
    o = _sigmoid_np(z[:, 2 * hidden:3 * hidden])
    g = np.tanh(z[:, 3 * hidden:])
    c_data = f * c_prev.data + i * g
    tc = np.tanh(c_data)
    h_data = o * tc
    h_out = Tensor(h_data)
    c_out = Tensor(c_data)
    if _should_record(x_row, h_prev, c_prev, wt, bt):
        def bwd(grads):
            gh, gc = grads
            dc = np.zeros_like(c_data) if gc is None else np.array(gc)
            if gh is not None:
                dc += gh * o * (1.0 - tc * tc)
                do = gh * tc
            else:
                do = np.zeros_like(o)
            di = dc * g
            df = dc * c_prev.data
            dg = dc * i
            dz = np.concatenate([
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                do * o * (1.0 - o),
                dg * (1.0 - g * g),
            ], axis=-1)
            if wt.requires_grad:
                _accum(wt, inp.T @ dz)
            if bt.requires_grad:
                _accum(bt, dz.sum(axis=0))
            dinp = dz @ wt.data.T
            if h_prev.requires_grad:
                _accum(h_prev, dinp[:, :hidden])
            if x_row.requires_grad:
                _accum(x_row, dinp[:, hidden:])
            if c_prev.requires_grad:
                _accum(c_prev, dc * f)
        _record_multi((h_out, c_out), bwd)
    return h_out, c_out


# ---------------------------------------------------------------------------
# gradient checking
# ---------------------------------------------------------------------------


def grad_check(f, x: Tensor, eps: float = 1e-6) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``f`` maps ``x`` to a scalar Tensor and must be evaluable repeatedly.
    Relative error per coordinate is |a - n| / max(1, |a|, |n|).
    """
    if not np.all(np.isfinite(x.data)):
        raise TensorError("grad_check: non-finite input")
    new_tape()
    out = f(x)
    if out.data.size != 1:
        raise TensorError(f"grad_check: f must be scalar-valued, got shape {out.data.shape}")
    x.grad = None
    backward(out, leaves=[x])
    analytic = x.grad.reshape(-1).copy()
    x.grad = None
    flat = x.data.reshape(-1)
    numeric = np.zeros_like(flat)
    with no_grad():
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            fp = f(x).item()
            flat[i] = orig - eps
            fm = f(x).item()
            flat[i] = orig
            numeric[i] = (fp - fm) / (2.0 * eps)
    if not (np.all(np.isfinite(analytic)) and np.all(np.isfinite(numeric))):
        raise TensorError("grad_check: non-finite derivative encountered")
    if flat.size == 0:
        return 0.0
    denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    return float(np.max(np.abs(analytic - numeric) / denom))
