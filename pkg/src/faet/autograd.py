"""Reverse-mode automatic differentiation over dense float64 arrays.

A `Value` wraps a numpy array together with an accumulated gradient and a
backward rule.  Operations build an implicit computation graph through the
`_prev` links; `Value.backward()` topologically sorts the graph and applies
the chain rule in reverse.  Everything is float64 and single-threaded, so a
seeded forward/backward replay is bitwise reproducible.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np

LOG_CLAMP = 1e-12


class ShapeError(ValueError):
    """Operand shapes are invalid for the requested operation."""


_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph construction (evaluation fast path)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Value:
    """Dense tensor node in the differentiation graph.

    `grad` is allocated (zeros) whenever the node requires grad, and is
    accumulated into: repeated `backward()` calls add up on leaves, which is
    the documented behavior (callers reset with `zero_grad`).
    """

    __slots__ = ("data", "grad", "requires_grad", "_prev", "_backward", "_op")

    def __init__(self, data, requires_grad: bool = False,
                 _prev: tuple = (), _op: str = "leaf"):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad) and _grad_enabled
        self._prev = _prev if self.requires_grad else ()
        # leaves carry their accumulator from birth; intermediates get a
        # fresh one per backward pass
        self.grad = (np.zeros_like(self.data)
                     if self.requires_grad and not self._prev else None)
        self._backward: Callable[[], None] | None = None
        self._op = _op

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad[...] = 0.0

    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into every reachable grad-requiring leaf.

        Intermediate grads are reset per call; leaf grads accumulate across
        calls.  Raises unless `self` is scalar.
        """
        if self.size != 1:
            raise ShapeError(
                f"backward: loss must be scalar, got shape {self.shape}")
        if not self.requires_grad:
            return
        order = topo_order(self)
        for node in order:
            if node._prev:
                node.grad = np.zeros_like(node.data)
        if self._prev:
            self.grad = np.ones_like(self.data)
        else:
            self.grad = self.grad + np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None:
                node._backward()

    def __repr__(self) -> str:
        return f"Value(shape={self.shape}, op={self._op!r})"

    # operator sugar; everything routes through the module-level ops
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, mul(_coerce(other), -1.0))

    def __rsub__(self, other):
        return add(_coerce(other), mul(self, -1.0))

    def __matmul__(self, other):
        return matmul(self, other)


def param(data, rng: np.random.Generator | None = None,
          scale: float | None = None, shape: tuple | None = None) -> Value:
    """Create a trainable leaf, optionally seeded uniform in [-scale, scale]."""
    if rng is not None:
        assert shape is not None and scale is not None
        data = rng.uniform(-scale, scale, size=shape)
    return Value(data, requires_grad=True)


def constant(data) -> Value:
    return Value(data, requires_grad=False)


def _coerce(x) -> Value:
    return x if isinstance(x, Value) else Value(x)


def topo_order(root: Value) -> list[Value]:
    """Topological order of the graph below `root` (children before parents).

    Iterative DFS: graph depth grows with sequence length, so recursion is
    off the table.  Children are tuples, which keeps the visit order (and
    hence float accumulation order) identical across runs.
    """
    order: list[Value] = []
    seen: set[int] = set()
    stack: list[tuple[Value, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for child in reversed(node._prev):
            if id(child) not in seen:
                stack.append((child, False))
    return order


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    keep = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if keep:
        grad = grad.sum(axis=keep, keepdims=True)
    return grad.reshape(shape)


def make_node(data, inputs: Sequence[Value], op: str) -> Value:
    """Graph-node constructor for ops (including fused ops defined outside
    this module): callers attach the backward rule via `out._backward`."""
    needs = _grad_enabled and any(v.requires_grad for v in inputs)
    out = Value(data, requires_grad=needs,
                _prev=tuple(inputs) if needs else (), _op=op)
    return out


def add(a, b) -> Value:
    a, b = _coerce(a), _coerce(b)
    try:
        data = a.data + b.data
    except ValueError as exc:
        raise ShapeError(f"add: shapes {a.shape} and {b.shape}: {exc}") from exc
    out = make_node(data, (a, b), "add")
    if out.requires_grad:
        def _bw():
            if a.requires_grad:
                a.grad += _unbroadcast(out.grad, a.shape)
            if b.requires_grad:
                b.grad += _unbroadcast(out.grad, b.shape)
        out._backward = _bw
    return out


def mul(a, b) -> Value:
    a, b = _coerce(a), _coerce(b)
    try:
        data = a.data * b.data
    except ValueError as exc:
        raise ShapeError(f"mul: shapes {a.shape} and {b.shape}: {exc}") from exc
    out = make_node(data, (a, b), "mul")
    if out.requires_grad:
        def _bw():
            if a.requires_grad:
                a.grad += _unbroadcast(out.grad * b.data, a.shape)
            if b.requires_grad:
                b.grad += _unbroadcast(out.grad * a.data, b.shape)
        out._backward = _bw
    return out


def matmul(a, b) -> Value:
    a, b = _coerce(a), _coerce(b)
    if a.ndim not in (1, 2) or b.ndim not in (1, 2):
        raise ShapeError(
            f"matmul: only 1-D/2-D operands, got {a.shape} and {b.shape}")
    try:
        data = a.data @ b.data
    except ValueError as exc:
        raise ShapeError(f"matmul: shapes {a.shape} and {b.shape}: {exc}") from exc
    out = make_node(data, (a, b), "matmul")
    if out.requires_grad:
        def _bw():
            g = out.grad
            if a.ndim == 2 and b.ndim == 2:
                if a.requires_grad:
                    a.grad += g @ b.data.T
                if b.requires_grad:
                    b.grad += a.data.T @ g
            elif a.ndim == 2 and b.ndim == 1:
                if a.requires_grad:
                    a.grad += np.outer(g, b.data)
                if b.requires_grad:
                    b.grad += a.data.T @ g
            elif a.ndim == 1 and b.ndim == 2:
                if a.requires_grad:
                    a.grad += b.data @ g
                if b.requires_grad:
                    b.grad += np.outer(a.data, g)
            else:  # 1-D dot 1-D -> scalar
                if a.requires_grad:
                    a.grad += g * b.data
                if b.requires_grad:
                    b.grad += g * a.data
        out._backward = _bw
    return out


def concat(parts: Iterable[Value], axis: int = 0) -> Value:
    parts = [_coerce(p) for p in parts]
    if not parts:
        raise ShapeError("concat: no operands")
    try:
        data = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError as exc:
        shapes = [p.shape for p in parts]
        raise ShapeError(f"concat(axis={axis}): shapes {shapes}: {exc}") from exc
    out = make_node(data, parts, "concat")
    if out.requires_grad:
        sizes = [p.shape[axis] for p in parts]
        def _bw():
            start = 0
            for p, length in zip(parts, sizes):
                if p.requires_grad:
                    sl = [slice(None)] * out.grad.ndim
                    sl[axis] = slice(start, start + length)
                    p.grad += out.grad[tuple(sl)]
                start += length
        out._backward = _bw
    return out


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(x) -> Value:
    x = _coerce(x)
    out = make_node(_stable_sigmoid(x.data), (x,), "sigmoid")
    if out.requires_grad:
        def _bw():
            if x.requires_grad:
                s = out.data
                x.grad += out.grad * s * (1.0 - s)
        out._backward = _bw
    return out


def tanh(x) -> Value:
    x = _coerce(x)
    out = make_node(np.tanh(x.data), (x,), "tanh")
    if out.requires_grad:
        def _bw():
            if x.requires_grad:
                x.grad += out.grad * (1.0 - out.data * out.data)
        out._backward = _bw
    return out


def exp(x) -> Value:
    x = _coerce(x)
    out = make_node(np.exp(x.data), (x,), "exp")
    if out.requires_grad:
        def _bw():
            if x.requires_grad:
                x.grad += out.grad * out.data
        out._backward = _bw
    return out


def log(x) -> Value:
    """Natural log with the input clamped at LOG_CLAMP (keeps -inf out)."""
    x = _coerce(x)
    clamped = np.maximum(x.data, LOG_CLAMP)
    out = make_node(np.log(clamped), (x,), "log")
    if out.requires_grad:
        def _bw():
            if x.requires_grad:
                x.grad += out.grad / clamped
        out._backward = _bw
    return out


def relu(x) -> Value:
    x = _coerce(x)
    out = make_node(np.maximum(x.data, 0.0), (x,), "relu")
    if out.requires_grad:
        def _bw():
            if x.requires_grad:
                x.grad += out.grad * (x.data > 0.0)
        out._backward = _bw
    return out


def softmax(x, axis: int = -1) -> Value:
    """Shift-stabilized softmax along `axis`; rows sum to 1."""
    x = _coerce(x)
    if x.data.shape[axis] == 0:
        raise ShapeError(f"softmax: empty axis {axis} in shape {x.shape}")
    shifted = x.data - np.max(x.data, axis=axis, keepdims=True)
    e = np.exp(shifted)
    p = e / np.sum(e, axis=axis, keepdims=True)
    out = make_node(p, (x,), "softmax")
    if out.requires_grad:
        def _bw():
            if x.requires_grad:
                g = out.grad
                dot = np.sum(g * p, axis=axis, keepdims=True)
                x.grad += p * (g - dot)
        out._backward = _bw
    return out


def max_along(x, axis: int) -> Value:
    """Max along `axis`; ties route the gradient to the first maximal index."""
    x = _coerce(x)
    if x.data.shape[axis] == 0:
        raise ShapeError(f"max_along: empty axis {axis} in shape {x.shape}")
    idx = np.argmax(x.data, axis=axis)
    data = np.max(x.data, axis=axis)
    out = make_node(data, (x,), "max")
    if out.requires_grad:
        sel = np.zeros(x.shape, dtype=bool)
        np.put_along_axis(sel, np.expand_dims(idx, axis), True, axis=axis)
        def _bw():
            if x.requires_grad:
                x.grad += np.where(sel, np.expand_dims(out.grad, axis), 0.0)
        out._backward = _bw
    return out


def mean_along(x, axis: int) -> Value:
    x = _coerce(x)
    if x.data.shape[axis] == 0:
        raise ShapeError(f"mean_along: empty axis {axis} in shape {x.shape}")
    n = x.data.shape[axis]
    out = make_node(np.mean(x.data, axis=axis), (x,), "mean")
    if out.requires_grad:
        def _bw():
            if x.requires_grad:
                x.grad += np.expand_dims(out.grad, axis) / n
        out._backward = _bw
    return out


def sum_along(x, axis: int | None = None) -> Value:
    x = _coerce(x)
    out = make_node(np.sum(x.data, axis=axis), (x,), "sum")
    if out.requires_grad:
        def _bw():
            if x.requires_grad:
                g = out.grad if axis is None else np.expand_dims(out.grad, axis)
                x.grad += np.broadcast_to(g, x.shape)
        out._backward = _bw
    return out


def conv1d(x, weights, bias, width: int) -> Value:
    """Valid 1-D convolution over a (length, channels) sequence.

    `weights` is (filters, width*channels): each filter sees a flattened
    window of `width` consecutive positions.  Output is (length-width+1,
    filters).
    """
    x, weights, bias = _coerce(x), _coerce(weights), _coerce(bias)
    length, channels = x.shape
    if length < width:
        raise ShapeError(f"conv1d: sequence length {length} < width {width}")
    if weights.shape[1] != width * channels:
        raise ShapeError(
            f"conv1d: weights {weights.shape} incompatible with width {width} "
            f"x channels {channels}")
    n_out = length - width + 1
    windows = np.concatenate(
        [x.data[i:i + n_out] for i in range(width)], axis=1)  # (n_out, width*C)
    data = windows @ weights.data.T + bias.data
    out = make_node(data, (x, weights, bias), "conv1d")
    if out.requires_grad:
        def _bw():
            g = out.grad  # (n_out, filters)
            if weights.requires_grad:
                weights.grad += g.T @ windows
            if bias.requires_grad:
                bias.grad += g.sum(axis=0)
            if x.requires_grad:
                gw = g @ weights.data  # (n_out, width*C)
                for i in range(width):
                    x.grad[i:i + n_out] += gw[:, i * channels:(i + 1) * channels]
        out._backward = _bw
    return out


def dropout(x, rate: float, rng: np.random.Generator) -> Value:
    """Inverted dropout with a caller-owned seeded mask stream.

    rate == 0 returns the input unchanged without consuming the stream;
    callers disable dropout entirely during evaluation and gradient checks.
    """
    x = _coerce(x)
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout: rate {rate} outside [0, 1)")
    if rate == 0.0:
        return x
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    out = make_node(x.data * mask, (x,), "dropout")
    if out.requires_grad:
        def _bw():
            if x.requires_grad:
                x.grad += out.grad * mask
        out._backward = _bw
    return out


def take_rows(table, ids) -> Value:
    """Row lookup `table[ids]`; the gradient scatter-adds into the table."""
    table = _coerce(table)
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise IndexError(
            f"take_rows: ids outside [0, {table.shape[0]}): "
            f"min={ids.min()}, max={ids.max()}")
    out = make_node(table.data[ids], (table,), "take_rows")
    if out.requires_grad:
        def _bw():
            if table.requires_grad:
                np.add.at(table.grad, ids, out.grad)
        out._backward = _bw
    return out


def narrow(x, axis: int, start: int, length: int) -> Value:
    """Contiguous slice [start, start+length) along `axis`."""
    x = _coerce(x)
    if start < 0 or start + length > x.shape[axis]:
        raise ShapeError(
            f"narrow: [{start}, {start + length}) outside axis {axis} "
            f"of shape {x.shape}")
    sl = [slice(None)] * x.ndim
    sl[axis] = slice(start, start + length)
    sl = tuple(sl)
    out = make_node(x.data[sl].copy(), (x,), "narrow")
    if out.requires_grad:
        def _bw():
            if x.requires_grad:
                x.grad[sl] += out.grad
        out._backward = _bw
    return out


def transpose(x) -> Value:
    x = _coerce(x)
    if x.ndim != 2:
        raise ShapeError(f"transpose: need 2-D, got {x.shape}")
    out = make_node(x.data.T.copy(), (x,), "transpose")
    if out.requires_grad:
        def _bw():
            if x.requires_grad:
                x.grad += out.grad.T
        out._backward = _bw
    return out


def reshape(x, shape) -> Value:
    x = _coerce(x)
    out = make_node(x.data.reshape(shape), (x,), "reshape")
    if out.requires_grad:
        def _bw():
            if x.requires_grad:
                x.grad += out.grad.reshape(x.shape)
        out._backward = _bw
    return out


def broadcast_to(x, shape) -> Value:
    x = _coerce(x)
    out = make_node(np.broadcast_to(x.data, shape).copy(), (x,), "broadcast")
    if out.requires_grad:
        def _bw():
            if x.requires_grad:
                x.grad += _unbroadcast(out.grad, x.shape)
        out._backward = _bw
    return out


def finite_difference_check(
    f: Callable[[], Value],
    params: dict[str, Value],
    h: float = 1e-5,
    samples_per_group: int = 8,
    seed: int = 0,
) -> dict[str, float]:
    """Compare analytic gradients of `f` against central differences.

    `f` must be a deterministic closure over `params` returning a fresh
    scalar Value per call (dropout disabled).  At least `samples_per_group`
    coordinates of every group are probed; the report maps group name to
    max relative error |analytic - numeric| / max(1, |analytic|, |numeric|).
    """
    for p in params.values():
        p.zero_grad()
    loss = f()
    loss.backward()
    analytic = {name: p.grad.copy() for name, p in params.items()}

    rng = np.random.default_rng(seed)
    report: dict[str, float] = {}
    for name, p in params.items():
        flat = p.data.reshape(-1)
        n = flat.size
        k = min(max(samples_per_group, 1), n)
        coords = rng.choice(n, size=k, replace=False) if n > k else np.arange(n)
        worst = 0.0
        for i in coords:
            orig = flat[i]
            with no_grad():
                flat[i] = orig + h
                f_plus = float(f().data)
                flat[i] = orig - h
                f_minus = float(f().data)
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * h)
            ana = float(analytic[name].reshape(-1)[i])
            err = abs(ana - numeric) / max(1.0, abs(ana), abs(numeric))
            worst = max(worst, err)
        report[name] = worst
    return report
