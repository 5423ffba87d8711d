"""Dense 64-bit tensors with tape-based reverse-mode differentiation.

The tape is an explicit scope: operations record themselves only while a
`tape()` block is active and at least one operand is attached. Everything
is float64 end to end so numerical checks are not confounded by precision.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "Tape",
    "tape",
    "add",
    "sub",
    "mul",
    "matmul",
    "affine",
    "sin",
    "cos",
    "exp",
    "log",
    "silu",
    "square",
    "absolute",
    "tsum",
    "tmean",
    "concat",
    "slice_",
    "detach",
    "backward",
    "zero_grad",
    "Adam",
]


class Tape:
    """Ordered record of primitive applications for one backward scope."""

    def __init__(self) -> None:
        self._records: list[tuple["Tensor", list[tuple["Tensor", Callable]]]] = []
        self._alive = True

    def clear(self) -> None:
        """Free all recorded state; backward through this tape afterwards is an error."""
        self._records.clear()
        self._alive = False


_ACTIVE_TAPES: list[Tape] = []


class tape:
    """Context manager opening a fresh recording scope; clears it on exit."""

    def __enter__(self) -> Tape:
        self._tape = Tape()
        _ACTIVE_TAPES.append(self._tape)
        return self._tape

    def __exit__(self, exc_type, exc, tb) -> None:
        _ACTIVE_TAPES.pop()
        self._tape.clear()


def _active_tape() -> Tape | None:
    return _ACTIVE_TAPES[-1] if _ACTIVE_TAPES else None


class Tensor:
    """n-dimensional float64 array, optionally carrying a gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad", "name", "_tape")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._tape: Tape | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, grad={'set' if self.grad is not None else 'none'})"

    # operator sugar; scalars and arrays are promoted to constant tensors
    def __add__(self, other):
        return add(self, as_tensor(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, as_tensor(other))

    def __rsub__(self, other):
        return sub(as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, as_tensor(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise TypeError("division by a Tensor is not a primitive; multiply by a reciprocal constant")
        return mul(self, as_tensor(1.0 / float(other)))

    def __neg__(self):
        return mul(self, as_tensor(-1.0))

    def __matmul__(self, other):
        return matmul(self, as_tensor(other))

    def detach(self) -> "Tensor":
        return detach(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _attached(x: Tensor, tp: Tape) -> bool:
    # leaves (no producing tape) attach anywhere; op outputs only to their own tape
    return x.requires_grad and (x._tape is None or x._tape is tp)


def _apply(out_data: np.ndarray, pairs: Sequence[tuple[Tensor, Callable]]) -> Tensor:
    out = Tensor(out_data)
    tp = _active_tape()
    if tp is not None:
        live = [(x, vjp) for x, vjp in pairs if _attached(x, tp)]
        if live:
            out.requires_grad = True
            out._tape = tp
            tp._records.append((out, live))
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient back down to `shape` after numpy broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _check_broadcast(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ValueError(f"{op}: operand shapes {a.shape} and {b.shape} do not broadcast") from None


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("add", a, b)
    return _apply(
        a.data + b.data,
        [(a, lambda g: _unbroadcast(g, a.shape)), (b, lambda g: _unbroadcast(g, b.shape))],
    )


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("sub", a, b)
    return _apply(
        a.data - b.data,
        [(a, lambda g: _unbroadcast(g, a.shape)), (b, lambda g: _unbroadcast(-g, b.shape))],
    )


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("mul", a, b)
    return _apply(
        a.data * b.data,
        [
            (a, lambda g: _unbroadcast(g * b.data, a.shape)),
            (b, lambda g: _unbroadcast(g * a.data, b.shape)),
        ],
    )


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim not in (1, 2) or b.data.ndim != 2 or a.shape[-1] != b.shape[0]:
        raise ValueError(f"matmul: operand shapes {a.shape} and {b.shape} do not conform")

    def vjp_a(g):
        return g @ b.data.T

    def vjp_b(g):
        if a.data.ndim == 1:
            return np.outer(a.data, g)
        return a.data.T @ g

    return _apply(a.data @ b.data, [(a, vjp_a), (b, vjp_b)])


def affine(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """y = x @ w + b for x of rank 1 or 2."""
    x, w, b = as_tensor(x), as_tensor(w), as_tensor(b)
    if x.data.ndim not in (1, 2) or w.data.ndim != 2 or x.shape[-1] != w.shape[0] or b.shape != (w.shape[1],):
        raise ValueError(f"affine: operand shapes {x.shape}, {w.shape}, {b.shape} do not conform")

    def vjp_x(g):
        return g @ w.data.T

    def vjp_w(g):
        if x.data.ndim == 1:
            return np.outer(x.data, g)
        return x.data.T @ g

    def vjp_b(g):
        if x.data.ndim == 1:
            return g
        return g.sum(axis=0)

    return _apply(x.data @ w.data + b.data, [(x, vjp_x), (w, vjp_w), (b, vjp_b)])


def sin(x: Tensor) -> Tensor:
    x = as_tensor(x)
    return _apply(np.sin(x.data), [(x, lambda g: g * np.cos(x.data))])


def cos(x: Tensor) -> Tensor:
    x = as_tensor(x)
    return _apply(np.cos(x.data), [(x, lambda g: -g * np.sin(x.data))])


def exp(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out = np.exp(x.data)
    return _apply(out, [(x, lambda g: g * out)])


def log(x: Tensor) -> Tensor:
    x = as_tensor(x)
    if np.any(x.data <= 0):
        raise ValueError("log: requires strictly positive input")
    return _apply(np.log(x.data), [(x, lambda g: g / x.data)])


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def silu(x: Tensor) -> Tensor:
    x = as_tensor(x)
    s = _sigmoid(x.data)
    return _apply(x.data * s, [(x, lambda g: g * (s * (1.0 + x.data * (1.0 - s))))])


def square(x: Tensor) -> Tensor:
    x = as_tensor(x)
    return _apply(x.data * x.data, [(x, lambda g: g * 2.0 * x.data)])


def absolute(x: Tensor) -> Tensor:
    """|x| with subgradient 0 at 0."""
    x = as_tensor(x)
    return _apply(np.abs(x.data), [(x, lambda g: g * np.sign(x.data))])


def tsum(x: Tensor, axis: int | None = None) -> Tensor:
    x = as_tensor(x)

    def vjp(g):
        if axis is None:
            return np.broadcast_to(g, x.shape).copy()
        return np.broadcast_to(np.expand_dims(g, axis), x.shape).copy()

    return _apply(x.data.sum(axis=axis), [(x, vjp)])


def tmean(x: Tensor, axis: int | None = None) -> Tensor:
    x = as_tensor(x)
    n = x.size if axis is None else x.shape[axis]

    def vjp(g):
        if axis is None:
            return np.broadcast_to(g / n, x.shape).copy()
        return np.broadcast_to(np.expand_dims(g, axis) / n, x.shape).copy()

    return _apply(x.data.mean(axis=axis), [(x, vjp)])


def concat(parts: Iterable[Tensor], axis: int = -1) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    if not parts:
        raise ValueError("concat: needs at least one operand")
    out = np.concatenate([p.data for p in parts], axis=axis)
    splits = np.cumsum([p.data.shape[axis] for p in parts])[:-1]

    def make_vjp(i):
        return lambda g: np.split(g, splits, axis=axis)[i]

    return _apply(out, [(p, make_vjp(i)) for i, p in enumerate(parts)])


def slice_(x: Tensor, start: int, stop: int, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    idx = [np.s_[:]] * x.data.ndim
    idx[axis] = np.s_[start:stop]
    idx = tuple(idx)

    def vjp(g):
        full = np.zeros(x.shape)
        full[idx] = g
        return full

    return _apply(x.data[idx], [(x, vjp)])


def detach(x: Tensor) -> Tensor:
    """Copy of x severed from any tape; never accumulates gradient."""
    x = as_tensor(x)
    return Tensor(x.data.copy())


def backward(loss: Tensor) -> None:
    """Populate .grad on every attached leaf reachable from a scalar loss.

    Gradients accumulate additively across calls until explicitly zeroed.
    """
    if loss.size != 1:
        raise ValueError(f"backward: loss must be scalar, got shape {loss.shape}")
    tp = loss._tape
    if tp is None:
        raise ValueError("backward: loss is detached from any tape")
    if not tp._alive:
        raise RuntimeError("backward: tape has been cleared")

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaves: dict[int, Tensor] = {}
    for out, pairs in reversed(tp._records):
        g_out = grads.get(id(out))
        if g_out is None:
            continue
        for inp, vjp in pairs:
            contrib = vjp(g_out)
            key = id(inp)
            if key in grads:
                grads[key] = grads[key] + contrib
            else:
                grads[key] = np.array(contrib, dtype=np.float64)
            if inp._tape is None:
                leaves[key] = inp
    for key, leaf in leaves.items():
        if leaf.grad is None:
            leaf.grad = np.zeros_like(leaf.data)
        leaf.grad += grads[key]


def zero_grad(params: Iterable[Tensor]) -> None:
    for p in params:
        p.grad = None


class Adam:
    """Adam with bias correction; updates parameter data in place."""

    def __init__(
        self,
        params: Sequence[Tensor],
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = list(params)
        self.lr = float(lr)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def step(self, lr: float | None = None) -> None:
        lr = self.lr if lr is None else float(lr)
        self.step_count += 1
        t = self.step_count
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            if not np.all(np.isfinite(g)):
                label = p.name if p.name else f"param[{i}]"
                raise FloatingPointError(f"adam: non-finite gradient for {label}")
            self._m[i] = self.beta1 * self._m[i] + (1.0 - self.beta1) * g
            self._v[i] = self.beta2 * self._v[i] + (1.0 - self.beta2) * (g * g)
            m_hat = self._m[i] / (1.0 - self.beta1**t)
            v_hat = self._v[i] / (1.0 - self.beta2**t)
            p.data -= lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grad(self) -> None:
        zero_grad(self.params)
