"""A small reverse-mode autodiff engine over numpy arrays.

Only the operations the scaling network and its losses need are provided.
Values are float64 throughout. Graphs are built eagerly: every op computes
its value immediately and records a closure that pushes the output gradient
back to its parents.

    >>> a = Tensor(np.array([3.0, 4.0]), requires_grad=True)
    >>> l2norm(a).backward()
    >>> a.grad
    array([0.6, 0.8])
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Sequence

import numpy as np


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "op", "_parents", "_backward")

    def __init__(self, value, requires_grad: bool = False, op: str = "leaf", parents=()):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self.op = op
        self._parents: tuple[Tensor, ...] = tuple(parents)
        self._backward: Callable[[np.ndarray], None] | None = None

    def __repr__(self):
        return f"Tensor(op={self.op}, shape={self.shape})"

    @property
    def shape(self):
        return self.value.shape

    @property
    def size(self):
        return self.value.size

    def numpy(self) -> np.ndarray:
        return self.value

    def zero_grad(self):
        self.grad = None

    def _accum(self, g: np.ndarray):
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    def backward(self, grad=None):
        """Accumulate d(self)/d(leaf) into every leaf's ``.grad``."""
        if grad is None:
            if self.size != 1:
                raise ValueError(f"backward() without a seed gradient needs a scalar, got shape {self.shape}")
            grad = np.ones_like(self.value)
        order = _topo(self)
        grads: dict[int, np.ndarray] = {id(self): np.asarray(grad, dtype=np.float64)}
        for node in order:
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node._accum(g)
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                if id(parent) in grads:
                    grads[id(parent)] = grads[id(parent)] + pg
                else:
                    grads[id(parent)] = pg

    __add__ = lambda self, other: add(self, other)
    __radd__ = lambda self, other: add(other, self)
    __sub__ = lambda self, other: sub(self, other)
    __rsub__ = lambda self, other: sub(other, self)
    __mul__ = lambda self, other: mul(self, other)
    __rmul__ = lambda self, other: mul(other, self)
    __neg__ = lambda self: scale(self, -1.0)

    def __getitem__(self, idx):
        return index(self, idx)


def _topo(root: Tensor) -> list[Tensor]:
    """Reverse topological order (root first), deterministic for a given graph."""
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in reversed(node._parents):
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order[::-1]


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(value, op, parents, backward) -> Tensor:
    out = Tensor(value, op=op, parents=parents)
    if out.requires_grad:
        out._backward = backward
    return out


def _same_shape(op: str, a: Tensor, b: Tensor):
    if a.shape != b.shape and a.size != 1 and b.size != 1:
        raise ValueError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def _reduce_to(g: np.ndarray, shape) -> np.ndarray:
    # only scalar operands are broadcast
    if g.shape == shape:
        return g
    return np.sum(g).reshape(shape)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape("add", a, b)
    return _node(a.value + b.value, "add", (a, b),
                 lambda g: (_reduce_to(g, a.shape), _reduce_to(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape("sub", a, b)
    return _node(a.value - b.value, "sub", (a, b),
                 lambda g: (_reduce_to(g, a.shape), _reduce_to(-g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape("mul", a, b)
    return _node(a.value * b.value, "mul", (a, b),
                 lambda g: (_reduce_to(g * b.value, a.shape), _reduce_to(g * a.value, b.shape)))


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    c = float(c)
    return _node(a.value * c, "scale", (a,), lambda g: (g * c,))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    y = np.tanh(a.value)
    return _node(y, "tanh", (a,), lambda g: (g * (1 - y * y),))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    y = 0.5 * (1 + np.tanh(0.5 * a.value))
    return _node(y, "sigmoid", (a,), lambda g: (g * y * (1 - y),))


def absolute(a) -> Tensor:
    a = as_tensor(a)
    return _node(np.abs(a.value), "abs", (a,), lambda g: (g * np.sign(a.value),))


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    y = np.sqrt(a.value)

    def back(g):
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(y > 0, 0.5 / y, 0.0)
        return (g * d,)

    return _node(y, "sqrt", (a,), back)


def index(a, idx) -> Tensor:
    """Basic or integer-array indexing, e.g. a channel slice or a bin subset."""
    a = as_tensor(a)

    def back(g):
        out = np.zeros_like(a.value)
        np.add.at(out, idx, g)
        return (out,)

    return _node(a.value[idx], "index", (a,), back)


def take(a, indices, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    indices = np.asarray(indices, dtype=np.int64)
    ax = axis % a.value.ndim

    def back(g):
        out = np.zeros_like(a.value)
        sl = [slice(None)] * a.value.ndim
        for j, i in enumerate(indices):
            sl[ax] = i
            src = [slice(None)] * g.ndim
            src[ax] = j
            out[tuple(sl)] += g[tuple(src)]
        return (out,)

    return _node(np.take(a.value, indices, axis=ax), "take", (a,), back)


def concat(tensors: Sequence, axis: int = 1) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    ax = axis % ts[0].value.ndim
    sizes = [t.shape[ax] for t in ts]
    try:
        value = np.concatenate([t.value for t in ts], axis=ax)
    except ValueError as e:
        raise ValueError(f"concat: {e}") from None
    cuts = np.cumsum(sizes)[:-1]

    def back(g):
        return tuple(np.split(g, cuts, axis=ax))

    return _node(value, "concat", tuple(ts), back)


def total(a, axis=None) -> Tensor:
    """Sum over ``axis`` (all elements when None)."""
    a = as_tensor(a)

    def back(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),)

    return _node(np.sum(a.value, axis=axis), "sum", (a,), back)


def mean(a, axis=None) -> Tensor:
    a = as_tensor(a)
    n = a.size if axis is None else a.shape[axis]
    return scale(total(a, axis), 1.0 / n)


def l2norm(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    y = np.sqrt(np.sum(a.value**2, axis=axis))

    def back(g):
        yk = np.expand_dims(y, axis)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(yk > 0, a.value / yk, 0.0)
        return (np.expand_dims(g, axis) * d,)

    return _node(y, "l2norm", (a,), back)


def std(a, axis: int = -1, ddof: int = 1) -> Tensor:
    a = as_tensor(a)
    n = a.shape[axis]
    if n - ddof <= 0:
        raise ValueError(f"std: need more than {ddof} elements along axis, got {n}")
    centered = a.value - np.mean(a.value, axis=axis, keepdims=True)
    y = np.sqrt(np.sum(centered**2, axis=axis) / (n - ddof))

    def back(g):
        yk = np.expand_dims(y, axis)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(yk > 0, centered / (yk * (n - ddof)), 0.0)
        return (np.expand_dims(g, axis) * d,)

    return _node(y, "std", (a,), back)


def linear(a, matrix: np.ndarray, op: str = "linear") -> Tensor:
    """``a @ matrix`` along the last axis with a constant matrix."""
    a = as_tensor(a)
    if a.shape[-1] != matrix.shape[0]:
        raise ValueError(f"{op}: input has {a.shape[-1]} samples, matrix expects {matrix.shape[0]}")
    return _node(a.value @ matrix, op, (a,), lambda g: (g @ matrix.T,))


@lru_cache(maxsize=8)
def dft_matrices(size: int) -> tuple[np.ndarray, np.ndarray]:
    """Dense real/imag DFT matrices for bins 0..size/2-1."""
    n = np.arange(size)[:, None]
    k = np.arange(size // 2)[None, :]
    # reduce n*k modulo size so the angle stays exact for large products
    ang = 2 * np.pi * ((n * k) % size) / size
    cos, sin = np.cos(ang), -np.sin(ang)
    cos.flags.writeable = False
    sin.flags.writeable = False
    return cos, sin


def dft(a) -> tuple[Tensor, Tensor]:
    a = as_tensor(a)
    cos, sin = dft_matrices(a.shape[-1])
    return linear(a, cos, "dft_re"), linear(a, sin, "dft_im")


def magnitude(re, im) -> Tensor:
    re, im = as_tensor(re), as_tensor(im)
    _same_shape("magnitude", re, im)
    y = np.hypot(re.value, im.value)

    def back(g):
        with np.errstate(divide="ignore", invalid="ignore"):
            gr = np.where(y > 0, re.value / y, 0.0)
            gi = np.where(y > 0, im.value / y, 0.0)
        return (g * gr, g * gi)

    return _node(y, "magnitude", (re, im), back)


def conv1d(x, w, b=None, dilation: int = 1, padding: int | None = None) -> Tensor:
    """Non-causal dilated convolution (cross-correlation, as in deep-learning layers).

    x: (batch, c_in, length); w: (c_out, c_in, k); b: (c_out,). With the default
    padding ``dilation*(k-1)/2`` on both sides the length is preserved.
    """
    x, w = as_tensor(x), as_tensor(w)
    if x.value.ndim != 3 or w.value.ndim != 3 or x.shape[1] != w.shape[1]:
        raise ValueError(f"conv1d: incompatible input {x.shape} and weight {w.shape}")
    c_out, c_in, k = w.shape
    if padding is None:
        if (k - 1) * dilation % 2:
            raise ValueError("conv1d: symmetric padding needs (k-1)*dilation even")
        padding = (k - 1) * dilation // 2
    batch, _, length = x.shape
    xp = np.pad(x.value, ((0, 0), (0, 0), (padding, padding)))
    out_len = length + 2 * padding - (k - 1) * dilation
    if out_len <= 0:
        raise ValueError("conv1d: kernel longer than padded input")
    cols = np.stack([xp[:, :, j * dilation: j * dilation + out_len] for j in range(k)], axis=2)
    out = np.einsum("bckl,ock->bol", cols, w.value, optimize=True)
    parents = [x, w]
    if b is not None:
        b = as_tensor(b)
        if b.shape != (c_out,):
            raise ValueError(f"conv1d: bias shape {b.shape}, expected {(c_out,)}")
        out = out + b.value[None, :, None]
        parents.append(b)

    def back(g):
        gw = np.einsum("bol,bckl->ock", g, cols, optimize=True) if w.requires_grad else None
        gx = None
        if x.requires_grad:
            gcols = np.einsum("bol,ock->bckl", g, w.value, optimize=True)
            gxp = np.zeros_like(xp)
            for j in range(k):
                gxp[:, :, j * dilation: j * dilation + out_len] += gcols[:, :, j, :]
            gx = gxp[:, :, padding: padding + length]
        grads = [gx, gw]
        if b is not None:
            grads.append(g.sum(axis=(0, 2)))
        return tuple(grads)

    return _node(out, "conv1d", tuple(parents), back)


def stop_gradient(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(a.value.copy(), op="stop_gradient")


def round_half_away(v: np.ndarray) -> np.ndarray:
    return np.sign(v) * np.floor(np.abs(v) + 0.5)


def round_ste(a) -> Tensor:
    """Straight-through rounding: ``a + stop_gradient(round(a) - a)``."""
    a = as_tensor(a)
    return add(a, stop_gradient(round_half_away(a.value) - a.value))


def grad_check(fn: Callable[..., Tensor], inputs: Sequence[np.ndarray], eps: float = 1e-6,
               wrt: Sequence[int] | None = None) -> float:
    """Max normwise relative error between backward and central differences.

    ``fn`` maps Tensors to a scalar Tensor. For each input checked the error is
    ``max|analytic - numeric| / max(max|numeric|, 1e-8)``.
    """
    arrays = [np.array(v, dtype=np.float64) for v in inputs]
    wrt = range(len(arrays)) if wrt is None else wrt
    leaves = [Tensor(v, requires_grad=True) for v in arrays]
    fn(*leaves).backward()
    worst = 0.0
    for i in wrt:
        analytic = leaves[i].grad if leaves[i].grad is not None else np.zeros_like(arrays[i])
        numeric = np.zeros_like(arrays[i])
        flat = arrays[i].reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + eps
            fp = float(fn(*[Tensor(v) for v in arrays]).value)
            flat[j] = orig - eps
            fm = float(fn(*[Tensor(v) for v in arrays]).value)
            flat[j] = orig
            numeric.reshape(-1)[j] = (fp - fm) / (2 * eps)
        err = np.max(np.abs(analytic - numeric)) / max(np.max(np.abs(numeric)), 1e-8)
        worst = max(worst, float(err))
    return worst
