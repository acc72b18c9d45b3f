"""Small reverse-mode differentiation engine.

Only the operations the tagger needs are provided. Values are numpy arrays
(float64 unless ``DTYPE`` is changed); every op records a backward closure on
the active :class:`Tape`, and :meth:`Tape.backward` replays them in reverse.

Outside a ``with Tape():`` block ops run forward only, which is what inference
uses.
"""

from __future__ import annotations

import threading
from typing import Callable, Iterable, Sequence

import numpy as np

DTYPE = np.float64

_state = threading.local()


class ShapeError(ValueError):
    pass


class Tensor:
    """A dense array plus (lazily allocated) gradient."""

    __slots__ = ("value", "grad", "requires_grad")

    def __init__(self, value, requires_grad: bool = False):
        self.value = np.asarray(value, dtype=DTYPE)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=DTYPE)
        else:
            self.grad += g

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape})"


class Param(Tensor):
    """A named, persistent leaf whose gradient survives across tapes.

    ``sparse=True`` marks embedding-style tables: gradients arrive by row
    and only the rows in ``touched`` are cleared or updated.
    """

    __slots__ = ("name", "sparse", "touched")

    def __init__(self, name: str, value, sparse: bool = False):
        super().__init__(value, requires_grad=True)
        self.name = name
        self.sparse = sparse
        self.touched: set[int] = set()
        self.grad = np.zeros_like(self.value)

    def _accumulate(self, g: np.ndarray) -> None:
        self.grad += g

    def zero_grad(self) -> None:
        if self.sparse:
            if self.touched:
                self.grad[sorted(self.touched)] = 0.0
            self.touched.clear()
        else:
            self.grad.fill(0.0)

    def __repr__(self) -> str:
        return f"Param({self.name!r}, shape={self.shape})"


class Tape:
    """Ordered record of executed ops.

    Use as a context manager; ops executed inside record themselves here.
    """

    def __init__(self):
        self.nodes: list[tuple[Tensor, Callable[[], None]]] = []
        self.params: dict[int, Param] = {}

    def __enter__(self) -> Tape:
        stack = _tape_stack()
        stack.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _tape_stack().pop()

    def record(self, out: Tensor, backward: Callable[[], None], inputs: Sequence[Tensor]) -> None:
        self.nodes.append((out, backward))
        for t in inputs:
            if isinstance(t, Param):
                self.params[id(t)] = t

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(param) into every Param used on this tape."""
        if loss.value.size != 1:
            raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
        for out, _ in self.nodes:
            if not isinstance(out, Param):
                out.grad = None
        loss.grad = np.ones_like(loss.value)
        for out, fn in reversed(self.nodes):
            if out.grad is not None:
                fn()

    def used_params(self) -> list[Param]:
        return list(self.params.values())


def _tape_stack() -> list[Tape]:
    stack = getattr(_state, "stack", None)
    if stack is None:
        stack = _state.stack = []
    return stack


def active_tape() -> Tape | None:
    stack = _tape_stack()
    return stack[-1] if stack else None


def _result(value: np.ndarray, inputs: Sequence[Tensor], backward_factory) -> Tensor:
    tape = active_tape()
    needs = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(value, requires_grad=needs)
    if needs:
        tape.record(out, backward_factory(out), inputs)
    return out


def constant(value) -> Tensor:
    return Tensor(value)


# ---------------------------------------------------------------- linear algebra


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """``a @ b`` for a 2-D ``a`` and a 2-D or 1-D ``b``."""
    if a.value.ndim != 2 or b.value.ndim not in (1, 2) or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    value = a.value @ b.value

    def factory(out):
        def backward():
            g = out.grad
            if a.requires_grad:
                a._accumulate(np.outer(g, b.value) if b.value.ndim == 1 else g @ b.value.T)
            if b.requires_grad:
                b._accumulate(a.value.T @ g)
        return backward

    return _result(value, (a, b), factory)


def transpose(a: Tensor) -> Tensor:
    if a.value.ndim != 2:
        raise ShapeError(f"transpose needs a matrix, got {a.shape}")

    def factory(out):
        def backward():
            a._accumulate(out.grad.T)
        return backward

    return _result(a.value.T, (a,), factory)


# ---------------------------------------------------------------- elementwise


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "add")

    def factory(out):
        def backward():
            if a.requires_grad:
                a._accumulate(out.grad)
            if b.requires_grad:
                b._accumulate(out.grad)
        return backward

    return _result(a.value + b.value, (a, b), factory)


def add_bias(m: Tensor, bias: Tensor) -> Tensor:
    """Add a vector to every row of a matrix (the only broadcast supported)."""
    if m.value.ndim != 2 or bias.value.ndim != 1 or m.shape[1] != bias.shape[0]:
        raise ShapeError(f"add_bias shape mismatch: {m.shape} + {bias.shape}")

    def factory(out):
        def backward():
            if m.requires_grad:
                m._accumulate(out.grad)
            if bias.requires_grad:
                bias._accumulate(out.grad.sum(axis=0))
        return backward

    return _result(m.value + bias.value, (m, bias), factory)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "mul")

    def factory(out):
        def backward():
            if a.requires_grad:
                a._accumulate(out.grad * b.value)
            if b.requires_grad:
                b._accumulate(out.grad * a.value)
        return backward

    return _result(a.value * b.value, (a, b), factory)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a: Tensor) -> Tensor:
    s = _sigmoid(a.value)

    def factory(out):
        def backward():
            a._accumulate(out.grad * s * (1.0 - s))
        return backward

    return _result(s, (a,), factory)


def tanh(a: Tensor) -> Tensor:
    t = np.tanh(a.value)

    def factory(out):
        def backward():
            a._accumulate(out.grad * (1.0 - t * t))
        return backward

    return _result(t, (a,), factory)


_ELEMENTWISE = {"add": add, "mul": mul, "sigmoid": sigmoid, "tanh": tanh}


def elementwise(f: str, *args: Tensor) -> Tensor:
    try:
        op = _ELEMENTWISE[f]
    except KeyError:
        raise ValueError(f"unknown elementwise op {f!r}") from None
    return op(*args)


def scale(a: Tensor, c: float) -> Tensor:
    def factory(out):
        def backward():
            a._accumulate(out.grad * c)
        return backward

    return _result(a.value * c, (a,), factory)


# ---------------------------------------------------------------- structure


def concat(parts: Sequence[Tensor]) -> Tensor:
    if not parts:
        raise ValueError("concat of an empty list")
    for p in parts:
        if p.value.ndim != 1:
            raise ShapeError(f"concat expects vectors, got {p.shape}")
    value = np.concatenate([p.value for p in parts])

    def factory(out):
        def backward():
            offset = 0
            for p in parts:
                n = p.shape[0]
                if p.requires_grad:
                    p._accumulate(out.grad[offset:offset + n])
                offset += n
        return backward

    return _result(value, parts, factory)


def stack(rows: Sequence[Tensor]) -> Tensor:
    """Stack equal-length vectors into a matrix, one per row."""
    if not rows:
        raise ValueError("stack of an empty list")
    value = np.stack([r.value for r in rows])

    def factory(out):
        def backward():
            for i, r in enumerate(rows):
                if r.requires_grad:
                    r._accumulate(out.grad[i])
        return backward

    return _result(value, rows, factory)


def row(m: Tensor, i: int) -> Tensor:
    """Row ``i`` of a matrix. Sparse Params only record the touched row."""
    if m.value.ndim != 2:
        raise ShapeError(f"row expects a matrix, got {m.shape}")
    if not 0 <= i < m.shape[0]:
        raise IndexError(f"row {i} out of range for {m.shape[0]} rows")

    def factory(out):
        def backward():
            if isinstance(m, Param):
                m.grad[i] += out.grad
                if m.sparse:
                    m.touched.add(i)
            else:
                g = np.zeros_like(m.value)
                g[i] = out.grad
                m._accumulate(g)
        return backward

    return _result(m.value[i], (m,), factory)


def slice_(v: Tensor, start: int, stop: int) -> Tensor:
    if v.value.ndim != 1 or not 0 <= start < stop <= v.shape[0]:
        raise ShapeError(f"bad slice [{start}:{stop}] of {v.shape}")

    def factory(out):
        def backward():
            g = np.zeros_like(v.value)
            g[start:stop] = out.grad
            v._accumulate(g)
        return backward

    return _result(v.value[start:stop], (v,), factory)


def max_over_rows(m: Tensor) -> Tensor:
    """Columnwise max; the gradient goes to the first row attaining it."""
    if m.value.ndim != 2 or m.shape[0] == 0:
        raise ShapeError(f"max_over_rows needs a non-empty matrix, got {m.shape}")
    idx = np.argmax(m.value, axis=0)
    cols = np.arange(m.shape[1])

    def factory(out):
        def backward():
            g = np.zeros_like(m.value)
            g[idx, cols] = out.grad
            m._accumulate(g)
        return backward

    return _result(m.value[idx, cols], (m,), factory)


# ---------------------------------------------------------------- reductions


def log_softmax_values(x: np.ndarray) -> np.ndarray:
    shifted = x - np.max(x, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def log_softmax(a: Tensor) -> Tensor:
    if a.value.ndim != 1 or a.shape[0] == 0:
        raise ShapeError(f"log_softmax expects a non-empty vector, got {a.shape}")
    out_value = log_softmax_values(a.value)
    probs = np.exp(out_value)

    def factory(out):
        def backward():
            g = out.grad
            a._accumulate(g - probs * g.sum())
        return backward

    return _result(out_value, (a,), factory)


def pick(v: Tensor, i: int) -> Tensor:
    """Entry ``i`` of a vector as a shape-(1,) tensor."""
    if v.value.ndim != 1 or not 0 <= i < v.shape[0]:
        raise IndexError(f"pick {i} from shape {v.shape}")

    def factory(out):
        def backward():
            g = np.zeros_like(v.value)
            g[i] = out.grad[0]
            v._accumulate(g)
        return backward

    return _result(v.value[i:i + 1], (v,), factory)


def sum_(a: Tensor) -> Tensor:
    def factory(out):
        def backward():
            a._accumulate(np.full_like(a.value, out.grad[0]))
        return backward

    return _result(np.array([a.value.sum()]), (a,), factory)


def add_all(terms: Sequence[Tensor]) -> Tensor:
    """Sum of equal-shape tensors, accumulated left to right."""
    if not terms:
        raise ValueError("add_all of an empty list")
    value = terms[0].value.copy()
    for t in terms[1:]:
        _same_shape(terms[0], t, "add_all")
        value = value + t.value

    def factory(out):
        def backward():
            for t in terms:
                if t.requires_grad:
                    t._accumulate(out.grad)
        return backward

    return _result(value, terms, factory)


# ---------------------------------------------------------------- verification


def zero_grad(params: Iterable[Param]) -> None:
    for p in params:
        p.zero_grad()


def gradient_check(loss_fn: Callable[[], Tensor | float], params: Sequence[Param],
                   eps: float = 1e-5) -> float:
    """Max relative error between tape gradients and central differences.

    The relative error per coordinate is
    ``|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)``.
    """
    zero_grad(params)
    with Tape() as tape:
        loss = loss_fn()
    if not np.all(np.isfinite(loss.value)):
        raise FloatingPointError("loss is not finite")
    tape.backward(loss)
    analytic = [p.grad.copy() for p in params]
    zero_grad(params)

    def scalar() -> float:
        out = loss_fn()
        v = float(out.value.reshape(-1)[0]) if isinstance(out, Tensor) else float(out)
        if not np.isfinite(v):
            raise FloatingPointError("loss is not finite")
        return v

    worst = 0.0
    for p, grad in zip(params, analytic):
        flat = p.value.reshape(-1)
        gflat = grad.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + eps
            up = scalar()
            flat[j] = orig - eps
            down = scalar()
            flat[j] = orig
            numeric = (up - down) / (2.0 * eps)
            denom = max(abs(gflat[j]), abs(numeric), 1e-8)
            worst = max(worst, abs(gflat[j] - numeric) / denom)
    return worst
