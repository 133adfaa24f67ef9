"""Dense float64 tensors with reverse-mode differentiation.

Minimal tape engine: every op builds a node holding its inputs and a backward
closure; `backward(loss)` walks the recorded graph in reverse topological
order. Values are checked for NaN/Inf after every forward op and every
backward contribution, and the offending op is named (fail-fast policy).
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .errors import ContractError, DegenerateInputError, NonFiniteError


def _check_finite(op: str, arr: np.ndarray) -> None:
    # One-pass check: any NaN/Inf propagates into the sum. (A sum overflowing
    # on all-finite entries would need ~1e308-scale values, which no healthy
    # desk-scale run produces.)
    if not math.isfinite(float(arr.sum())):
        raise NonFiniteError(f"non-finite values produced by op '{op}'")


class Tensor:
    """n-d float64 array with an optional same-shape gradient slot."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None
        self.op = "leaf"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError("item() requires a scalar tensor")
        return float(self.data.reshape(()))

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})"

    # operator sugar; scalars are allowed on the right for * only
    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return add(self, scale(other, -1.0))

    def __neg__(self) -> "Tensor":
        return scale(self, -1.0)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    def __rmul__(self, other) -> "Tensor":
        return scale(self, float(other))

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


def parameter(data) -> Tensor:
    return Tensor(data, requires_grad=True)


def constant(data) -> Tensor:
    return Tensor(data, requires_grad=False)


def _result(data: np.ndarray, parents: tuple[Tensor, ...], backward, op: str) -> Tensor:
    _check_finite(op, data)
    out = Tensor(data)
    out.requires_grad = any(p.requires_grad for p in parents)
    if out.requires_grad:
        out._parents = parents
        out._backward = backward
    out.op = op
    return out


def _acc(node: Tensor, g: np.ndarray, op: str) -> None:
    """Accumulate a backward contribution into node.grad (only if it wants one)."""
    if not node.requires_grad:
        return
    _check_finite(f"backward of '{op}'", g)
    if node.grad is None:
        node.grad = np.zeros_like(node.data)
    node.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum g over axes that were broadcast to reach its shape from `shape`."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# -----------------------------------------------------------------------------
# elementwise and linear-algebra ops
# -----------------------------------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data + b.data
    except ValueError as e:
        raise ContractError(f"add: incompatible shapes {a.shape} and {b.shape}") from e

    def bwd(out):
        _acc(a, _unbroadcast(out.grad, a.data.shape), "add")
        _acc(b, _unbroadcast(out.grad, b.data.shape), "add")

    out = _result(data, (a, b), None, "add")
    out._backward = (lambda: bwd(out)) if out.requires_grad else None
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data * b.data
    except ValueError as e:
        raise ContractError(f"mul: incompatible shapes {a.shape} and {b.shape}") from e

    def bwd(out):
        _acc(a, _unbroadcast(out.grad * b.data, a.data.shape), "mul")
        _acc(b, _unbroadcast(out.grad * a.data, b.data.shape), "mul")

    out = _result(data, (a, b), None, "mul")
    out._backward = (lambda: bwd(out)) if out.requires_grad else None
    return out


def scale(a: Tensor, c: float) -> Tensor:
    data = a.data * c

    def bwd(out):
        _acc(a, out.grad * c, "scale")

    out = _result(data, (a,), None, "scale")
    out._backward = (lambda: bwd(out)) if out.requires_grad else None
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = np.matmul(a.data, b.data)
    except ValueError as e:
        raise ContractError(f"matmul: incompatible shapes {a.shape} and {b.shape}") from e

    def bwd(out):
        g = out.grad
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        _acc(a, _unbroadcast(ga, a.data.shape), "matmul")
        _acc(b, _unbroadcast(gb, b.data.shape), "matmul")

    out = _result(data, (a, b), None, "matmul")
    out._backward = (lambda: bwd(out)) if out.requires_grad else None
    return out


def transpose(a: Tensor, axes: tuple[int, ...]) -> Tensor:
    data = np.transpose(a.data, axes)
    inv = np.argsort(axes)

    def bwd(out):
        _acc(a, np.transpose(out.grad, inv), "transpose")

    out = _result(data, (a,), None, "transpose")
    out._backward = (lambda: bwd(out)) if out.requires_grad else None
    return out


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    try:
        data = a.data.reshape(shape)
    except ValueError as e:
        raise ContractError(f"reshape: cannot view {a.shape} as {shape}") from e

    def bwd(out):
        _acc(a, out.grad.reshape(a.data.shape), "reshape")

    out = _result(data, (a,), None, "reshape")
    out._backward = (lambda: bwd(out)) if out.requires_grad else None
    return out


def concat(tensors: list[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ContractError("concat: empty tensor list")
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bwd(out):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * out.grad.ndim
            sl[axis] = slice(lo, hi)
            _acc(t, out.grad[tuple(sl)], "concat")

    out = _result(data, tuple(tensors), None, "concat")
    out._backward = (lambda: bwd(out)) if out.requires_grad else None
    return out


def tensor_sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def bwd(out):
        g = out.grad
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _acc(a, np.broadcast_to(g, a.data.shape).copy(), "sum")

    out = _result(data, (a,), None, "sum")
    out._backward = (lambda: bwd(out)) if out.requires_grad else None
    return out


def relu(a: Tensor) -> Tensor:
    data = np.maximum(a.data, 0.0)

    def bwd(out):
        _acc(a, out.grad * (a.data > 0.0), "relu")

    out = _result(data, (a,), None, "relu")
    out._backward = (lambda: bwd(out)) if out.requires_grad else None
    return out


def sigmoid(a: Tensor) -> Tensor:
    # split by sign for overflow-free exp
    data = np.where(a.data >= 0, 1.0 / (1.0 + np.exp(-np.abs(a.data))),
                    np.exp(-np.abs(a.data)) / (1.0 + np.exp(-np.abs(a.data))))

    def bwd(out):
        _acc(a, out.grad * data * (1.0 - data), "sigmoid")

    out = _result(data, (a,), None, "sigmoid")
    out._backward = (lambda: bwd(out)) if out.requires_grad else None
    return out


# -----------------------------------------------------------------------------
# gathers and scatters
# -----------------------------------------------------------------------------


def take(a: Tensor, idx: np.ndarray) -> Tensor:
    """Gather along axis 0: out[...] = a[idx[...]]; idx may be any int shape."""
    idx = np.asarray(idx)
    if idx.size and (idx.min() < 0 or idx.max() >= a.data.shape[0]):
        raise ContractError("take: index out of range")
    data = a.data[idx]

    def bwd(out):
        if a.requires_grad:
            if a.grad is None:
                a.grad = np.zeros_like(a.data)
            rows = out.grad.reshape(idx.size, -1)
            _check_finite("backward of 'take'", rows)
            kernels.scatter_add_rows(a.grad.reshape(a.data.shape[0], -1), idx.ravel(), rows)

    out = _result(data, (a,), None, "take")
    out._backward = (lambda: bwd(out)) if out.requires_grad else None
    return out


def embedding_lookup(table: Tensor, ids: np.ndarray) -> Tensor:
    """table (V, d), ids (L,) int -> (L, d). Duplicate ids accumulate gradient."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 1:
        raise ContractError("embedding_lookup: ids must be 1-D")
    return take(table, ids)


def scatter_probs(attn: Tensor, src_ids: np.ndarray, vocab_size: int) -> Tensor:
    """attn (T, L) -> (T, V) with out[t, src_ids[j]] += attn[t, j].

    Duplicate source tokens accumulate; row sums are preserved.
    """
    src_ids = np.asarray(src_ids, dtype=np.int64)
    if attn.data.ndim != 2 or src_ids.shape != (attn.data.shape[1],):
        raise ContractError("scatter_probs: attn (T, L) and src_ids (L,) required")
    if src_ids.size and (src_ids.min() < 0 or src_ids.max() >= vocab_size):
        raise ContractError("scatter_probs: source id out of vocab range")
    data = np.zeros((attn.data.shape[0], vocab_size))
    kernels.scatter_add_cols(data, src_ids, attn.data)

    def bwd(out):
        _acc(attn, out.grad[:, src_ids], "scatter_probs")

    out = _result(data, (attn,), None, "scatter_probs")
    out._backward = (lambda: bwd(out)) if out.requires_grad else None
    return out


# -----------------------------------------------------------------------------
# fused neural-net ops
# -----------------------------------------------------------------------------


def softmax(x: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """Masked softmax over the last axis.

    mask is a boolean array broadcastable to x.shape; masked entries come out
    exactly 0 and each row must keep at least one valid entry. mask=None runs
    the same code with an all-valid mask so both paths are bit-identical.
    """
    if mask is None:
        m_arr = np.ones(x.data.shape, dtype=bool)
    else:
        m_arr = np.broadcast_to(np.asarray(mask, dtype=bool), x.data.shape)
    if not m_arr.any(axis=-1).all():
        raise DegenerateInputError("softmax: fully masked row")
    xm = np.where(m_arr, x.data, -np.inf)
    row_max = xm.max(axis=-1, keepdims=True)
    e = np.where(m_arr, np.exp(np.where(m_arr, x.data, row_max) - row_max), 0.0)
    denom = e.sum(axis=-1, keepdims=True)
    data = e / denom

    def bwd(out):
        g = out.grad
        dot = (g * data).sum(axis=-1, keepdims=True)
        _acc(x, data * (g - dot), "softmax")

    out = _result(data, (x,), None, "softmax")
    out._backward = (lambda: bwd(out)) if out.requires_grad else None
    return out


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-6) -> Tensor:
    """Normalize over the last axis, then scale and shift."""
    d = x.data.shape[-1]
    if gain.data.shape != (d,) or bias.data.shape != (d,):
        raise ContractError("layer_norm: gain/bias must have shape (d,)")
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    data = gain.data * xhat + bias.data

    def bwd(out):
        g = out.grad
        _acc(gain, (g * xhat).reshape(-1, d).sum(axis=0), "layer_norm")
        _acc(bias, g.reshape(-1, d).sum(axis=0), "layer_norm")
        if x.requires_grad:
            gx_hat = g * gain.data
            dvar = (gx_hat * xc).sum(axis=-1, keepdims=True) * (-0.5) * inv**3
            dmu = -(gx_hat * inv).sum(axis=-1, keepdims=True) + dvar * (-2.0 / d) * xc.sum(
                axis=-1, keepdims=True
            )
            _acc(x, gx_hat * inv + dvar * 2.0 * xc / d + dmu / d, "layer_norm")

    out = _result(data, (x, gain, bias), None, "layer_norm")
    out._backward = (lambda: bwd(out)) if out.requires_grad else None
    return out


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """x (..., din) @ weight (din, dout) + bias (dout,)."""
    out = matmul(x, weight)
    if bias is not None:
        out = add(out, bias)
    return out


def dropout(x: Tensor, rate: float, rng: np.random.Generator | None, training: bool) -> Tensor:
    """Inverted dropout; identity when not training or rate == 0."""
    if not 0.0 <= rate < 1.0:
        raise ContractError(f"dropout: rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ContractError("dropout: a seeded generator is required in training mode")
    keep = (rng.random(x.data.shape) >= rate) / (1.0 - rate)
    data = x.data * keep

    def bwd(out):
        _acc(x, out.grad * keep, "dropout")

    out = _result(data, (x,), None, "dropout")
    out._backward = (lambda: bwd(out)) if out.requires_grad else None
    return out


# -----------------------------------------------------------------------------
# losses
# -----------------------------------------------------------------------------


def _smoothing_weights(target_ids: np.ndarray, vocab: int, smoothing: float, pad_id: int):
    target_ids = np.asarray(target_ids, dtype=np.int64)
    if target_ids.ndim != 1:
        raise ContractError("loss: target ids must be 1-D")
    if not 0.0 <= smoothing < 1.0:
        raise ContractError(f"loss: smoothing must be in [0, 1), got {smoothing}")
    if target_ids.size and (target_ids.min() < 0 or target_ids.max() >= vocab):
        raise ContractError("loss: target id out of vocab range")
    w = (target_ids != pad_id).astype(np.float64)
    return target_ids, w, float(w.sum())


def label_smoothed_cross_entropy(
    logits: Tensor, target_ids: np.ndarray, smoothing: float, pad_id: int
) -> Tensor:
    """Mean smoothed CE over non-pad positions; logits (T, V).

    Target distribution is (1-smoothing)*one_hot + smoothing/V uniform.
    """
    T, V = logits.data.shape
    ids, w, count = _smoothing_weights(target_ids, V, smoothing, pad_id)
    if ids.shape != (T,):
        raise ContractError("loss: targets must align with logits rows")
    if count == 0.0:
        return tensor_sum(scale(logits, 0.0))
    x = logits.data
    row_max = x.max(axis=-1, keepdims=True)
    logz = np.log(np.exp(x - row_max).sum(axis=-1, keepdims=True)) + row_max
    logp = x - logz
    per_pos = -((1.0 - smoothing) * logp[np.arange(T), ids] + (smoothing / V) * logp.sum(axis=-1))
    data = np.array((per_pos * w).sum() / count)

    def bwd(out):
        p = np.exp(logp)
        q = np.full_like(p, smoothing / V)
        q[np.arange(T), ids] += 1.0 - smoothing
        _acc(logits, (p - q) * (w / count)[:, None] * out.grad, "label_smoothed_cross_entropy")

    out = _result(data, (logits,), None, "label_smoothed_cross_entropy")
    out._backward = (lambda: bwd(out)) if out.requires_grad else None
    return out


def label_smoothed_nll(
    probs: Tensor,
    target_ids: np.ndarray,
    smoothing: float,
    pad_id: int,
    floor: float = 1e-10,
) -> Tensor:
    """Smoothed NLL on an already-normalized distribution (the copy-mixture path).

    Probabilities are clamped at `floor` before the log so a saturated gate
    cannot produce -inf; gradient is zero where the clamp is active.
    """
    T, V = probs.data.shape
    ids, w, count = _smoothing_weights(target_ids, V, smoothing, pad_id)
    if ids.shape != (T,):
        raise ContractError("loss: targets must align with probability rows")
    if count == 0.0:
        return tensor_sum(scale(probs, 0.0))
    p = np.maximum(probs.data, floor)
    logp = np.log(p)
    per_pos = -((1.0 - smoothing) * logp[np.arange(T), ids] + (smoothing / V) * logp.sum(axis=-1))
    data = np.array((per_pos * w).sum() / count)

    def bwd(out):
        q = np.full((T, V), smoothing / V)
        q[np.arange(T), ids] += 1.0 - smoothing
        g = np.where(probs.data > floor, -q / p, 0.0)
        _acc(probs, g * (w / count)[:, None] * out.grad, "label_smoothed_nll")

    out = _result(data, (probs,), None, "label_smoothed_nll")
    out._backward = (lambda: bwd(out)) if out.requires_grad else None
    return out


# -----------------------------------------------------------------------------
# reverse pass
# -----------------------------------------------------------------------------


def backward(loss: Tensor) -> None:
    """Populate .grad for every requires-grad tensor reachable from a scalar loss."""
    if loss.data.size != 1:
        raise ContractError("backward: loss must be a scalar")
    if not loss.requires_grad:
        raise ContractError("backward: loss does not depend on any parameter")

    # iterative post-order over requires-grad subgraph
    order: list[Tensor] = []
    state: dict[int, int] = {}
    stack = [loss]
    while stack:
        node = stack[-1]
        st = state.get(id(node), 0)
        if st == 0:
            state[id(node)] = 1
            for p in node._parents:
                if p.requires_grad and state.get(id(p), 0) == 0:
                    stack.append(p)
        else:
            stack.pop()
            if st == 1:
                state[id(node)] = 2
                order.append(node)

    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward is not None:
            node._backward()
