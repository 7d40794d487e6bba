"""Dense tensors with reverse-mode automatic differentiation.

Define-by-run: every operation records a node holding its inputs and
backward rule; calling ``Tensor.backward()`` walks the recorded graph in
reverse topological order exactly once. Parameters and activations are
float32 by default; gradient checking runs the same graphs in float64.
"""

from __future__ import annotations

import contextlib
from typing import Iterable, Optional, Sequence

import numpy as np

from .. import _kernels
from ..errors import ShapeError

LOG_EPS = 1e-12  # floor for log arguments, keeps losses finite

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (inference fast path)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def _as_array(data, dtype=None):
    if isinstance(data, np.ndarray) and dtype is None:
        if data.dtype in (np.float32, np.float64):
            return data
        if np.issubdtype(data.dtype, np.integer):
            return data.astype(np.float32)
    return np.asarray(data, dtype=dtype or np.float32)


class Tensor:
    """n-dimensional array plus an optional gradient buffer.

    The shape is fixed at construction; ``grad`` matches ``data`` in shape
    and dtype whenever present.
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "_ctx",
                 "_touched_rows", "_sparse_ok")

    def __init__(self, data, requires_grad: bool = False, dtype=None,
                 name: Optional[str] = None):
        self.data = _as_array(data, dtype)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self._ctx: Optional[Function] = None
        # Sparse-update bookkeeping for embedding-style tables: which rows
        # received gradient this step, and whether any op other than a row
        # gather contributed (which forces a dense optimizer update).
        self._touched_rows: list = []
        self._sparse_ok = True

    # -- basic introspection -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{tag})"

    # -- gradient bookkeeping ------------------------------------------------

    def zero_grad(self):
        self.grad = None
        self._touched_rows = []
        self._sparse_ok = True

    def touched_rows(self) -> Optional[np.ndarray]:
        """Unique rows with possibly nonzero grad, or None if dense."""
        if not self._sparse_ok or not self._touched_rows:
            return None
        return np.unique(np.concatenate(self._touched_rows))

    def _accumulate(self, g: np.ndarray, rows: Optional[np.ndarray]):
        g = g.astype(self.data.dtype, copy=False)
        if g.shape != self.data.shape:
            raise ShapeError(
                f"gradient shape {g.shape} does not match tensor shape {self.data.shape}"
            )
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad += g
        if rows is None:
            self._sparse_ok = False
        else:
            self._touched_rows.append(rows)

    def backward(self, grad: Optional[np.ndarray] = None):
        """Reverse-mode pass seeded at this tensor.

        With no argument the seed is all-ones (the usual scalar-loss case).
        """
        if grad is None:
            grad = np.ones_like(self.data)
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            if node._ctx is not None:
                for inp in node._ctx.inputs:
                    if inp.requires_grad:
                        stack.append((inp, False))
        grads: dict[int, np.ndarray] = {id(self): grad.astype(self.data.dtype)}
        self.grad = grads[id(self)]
        for node in reversed(topo):
            ctx = node._ctx
            if ctx is None:
                continue
            gout = grads.pop(id(node), None)
            if gout is None:
                continue
            in_grads = ctx.backward(gout)
            for i, (inp, g) in enumerate(zip(ctx.inputs, in_grads)):
                if g is None or not inp.requires_grad:
                    continue
                rows = ctx.sparse_rows(i)
                if inp._ctx is None:
                    inp._accumulate(g, rows)
                else:
                    g = g.astype(inp.data.dtype, copy=False)
                    if id(inp) in grads:
                        grads[id(inp)] = grads[id(inp)] + g
                    else:
                        grads[id(inp)] = g
                    inp.grad = grads[id(inp)]

    # -- operator sugar ------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return negate(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    def transpose(self, *axes):
        return transpose(self, axes or None)

    @property
    def T(self):
        return transpose(self, None)


def ensure_tensor(x, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x, dtype=dtype)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum out broadcast dimensions so g matches the original shape."""
    if g.shape == tuple(shape):
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, dim in enumerate(shape):
        if dim == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g.reshape(shape)


class Function:
    """One recorded operation: inputs, forward result, backward rule."""

    def __init__(self, *inputs: Tensor):
        self.inputs = inputs

    def forward(self, *arrays, **kwargs) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray):
        raise NotImplementedError

    def sparse_rows(self, i: int) -> Optional[np.ndarray]:
        """Rows of input i touched by this op's backward, None = dense."""
        return None

    @classmethod
    def apply(cls, *args, **kwargs) -> Tensor:
        tensors = tuple(ensure_tensor(a) for a in args)
        fn = cls(*tensors)
        out_data = fn.forward(*(t.data for t in tensors), **kwargs)
        requires = _grad_enabled and any(t.requires_grad for t in tensors)
        out = Tensor(out_data, requires_grad=requires, dtype=out_data.dtype)
        if requires:
            out._ctx = fn
        return out


# -- elementwise -------------------------------------------------------------


class Add(Function):
    def forward(self, a, b):
        self.shapes = (a.shape, b.shape)
        return a + b

    def backward(self, grad):
        sa, sb = self.shapes
        return _unbroadcast(grad, sa), _unbroadcast(grad, sb)


class Sub(Function):
    def forward(self, a, b):
        self.shapes = (a.shape, b.shape)
        return a - b

    def backward(self, grad):
        sa, sb = self.shapes
        return _unbroadcast(grad, sa), _unbroadcast(-grad, sb)


class Mul(Function):
    def forward(self, a, b):
        self.a, self.b = a, b
        return a * b

    def backward(self, grad):
        return (_unbroadcast(grad * self.b, self.a.shape),
                _unbroadcast(grad * self.a, self.b.shape))


class Neg(Function):
    def forward(self, a):
        return -a

    def backward(self, grad):
        return (-grad,)


class Sigmoid(Function):
    def forward(self, a):
        # tanh form is overflow-free for large |a|
        self.out = 0.5 * (1.0 + np.tanh(0.5 * a))
        return self.out

    def backward(self, grad):
        return (grad * self.out * (1.0 - self.out),)


class Tanh(Function):
    def forward(self, a):
        self.out = np.tanh(a)
        return self.out

    def backward(self, grad):
        return (grad * (1.0 - self.out * self.out),)


class ReLU(Function):
    def forward(self, a):
        self.mask = a > 0
        return a * self.mask

    def backward(self, grad):
        return (grad * self.mask,)


class Log(Function):
    """Natural log with the argument floored at LOG_EPS."""

    def forward(self, a):
        self.clamped = np.maximum(a, LOG_EPS)
        return np.log(self.clamped)

    def backward(self, grad):
        return (grad / self.clamped,)


def add(a, b):
    return Add.apply(a, b)


def sub(a, b):
    return Sub.apply(a, b)


def mul(a, b):
    return Mul.apply(a, b)


def negate(a):
    return Neg.apply(a)


def sigmoid(a):
    return Sigmoid.apply(a)


def tanh(a):
    return Tanh.apply(a)


def relu(a):
    return ReLU.apply(a)


def log(a):
    return Log.apply(a)


_ELEMENTWISE = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "relu": relu,
    "log": log,
    "negate": negate,
}


def elementwise(op: str, *operands) -> Tensor:
    """Named-op dispatcher over the elementwise family."""
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        raise ValueError(f"unknown elementwise op {op!r}") from None
    return fn(*operands)


# -- matmul ------------------------------------------------------------------


class MatMul(Function):
    def forward(self, a, b):
        if a.ndim < 2 or b.ndim < 2:
            raise ShapeError(f"matmul needs matrices, got {a.shape} and {b.shape}")
        if a.shape[-1] != b.shape[-2]:
            raise ShapeError(f"matmul inner dimensions disagree: {a.shape} vs {b.shape}")
        self.a, self.b = a, b
        return a @ b

    def backward(self, grad):
        ga = grad @ self.b.swapaxes(-1, -2)
        gb = self.a.swapaxes(-1, -2) @ grad
        return (_unbroadcast(ga, self.a.shape), _unbroadcast(gb, self.b.shape))


def matmul(a, b):
    return MatMul.apply(a, b)


# -- reductions --------------------------------------------------------------


def _check_axis(shape, axis):
    if axis is not None and not (-len(shape) <= axis < len(shape)):
        raise ShapeError(f"axis {axis} out of range for shape {shape}")
    if axis is not None and shape[axis] == 0:
        raise ShapeError(f"cannot reduce over empty axis {axis} of shape {shape}")


class Sum(Function):
    def forward(self, a, axis=None, keepdims=False):
        _check_axis(a.shape, axis)
        self.shape, self.axis, self.keepdims = a.shape, axis, keepdims
        return a.sum(axis=axis, keepdims=keepdims)

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad, self.shape).astype(grad.dtype),)


class Mean(Function):
    def forward(self, a, axis=None, keepdims=False):
        _check_axis(a.shape, axis)
        self.shape, self.axis, self.keepdims = a.shape, axis, keepdims
        self.count = a.size if axis is None else a.shape[axis]
        return a.mean(axis=axis, keepdims=keepdims)

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad / self.count, self.shape).astype(grad.dtype),)


class Max(Function):
    """Max along one axis; gradient routed to the first argmax on ties."""

    def forward(self, a, axis, keepdims=False):
        _check_axis(a.shape, axis)
        self.shape = a.shape
        self.axis = axis % a.ndim
        self.keepdims = keepdims
        self.am = np.argmax(a, axis=self.axis)
        out = np.take_along_axis(a, np.expand_dims(self.am, self.axis), self.axis)
        return out if keepdims else out.squeeze(self.axis)

    def backward(self, grad):
        if not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        g = np.zeros(self.shape, dtype=grad.dtype)
        np.put_along_axis(g, np.expand_dims(self.am, self.axis), grad, self.axis)
        return (g,)


def tensor_sum(a, axis=None, keepdims=False):
    return Sum.apply(a, axis=axis, keepdims=keepdims)


def mean(a, axis=None, keepdims=False):
    return Mean.apply(a, axis=axis, keepdims=keepdims)


def mean_rows(a):
    """Average over the row axis: (..., n, k) -> (..., k)."""
    return Mean.apply(a, axis=-2)


def max_over_axis(a, axis, keepdims=False):
    return Max.apply(a, axis=axis, keepdims=keepdims)


def reduce(op: str, a, axis=None, keepdims=False):
    """Named-op dispatcher over the reduction family."""
    if op == "sum":
        return tensor_sum(a, axis=axis, keepdims=keepdims)
    if op == "mean_rows":
        return mean_rows(a)
    if op == "max_over_axis":
        return max_over_axis(a, axis=axis, keepdims=keepdims)
    raise ValueError(f"unknown reduce op {op!r}")


# -- shape manipulation ------------------------------------------------------


class Reshape(Function):
    def forward(self, a, shape):
        self.orig = a.shape
        return a.reshape(shape)

    def backward(self, grad):
        return (grad.reshape(self.orig),)


class Transpose(Function):
    def forward(self, a, axes=None):
        self.axes = axes if axes is not None else tuple(range(a.ndim))[::-1]
        return a.transpose(self.axes)

    def backward(self, grad):
        return (grad.transpose(np.argsort(self.axes)),)


class Concat(Function):
    def forward(self, *arrays, axis=0):
        self.axis = axis
        self.splits = np.cumsum([a.shape[axis] for a in arrays])[:-1]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        return tuple(np.split(grad, self.splits, axis=self.axis))


class Stack(Function):
    def forward(self, *arrays, axis=0):
        self.axis = axis
        return np.stack(arrays, axis=axis)

    def backward(self, grad):
        return tuple(np.moveaxis(grad, self.axis, 0))


def reshape(a, shape):
    return Reshape.apply(a, shape=shape)


def transpose(a, axes=None):
    return Transpose.apply(a, axes=axes)


def concat(tensors: Sequence, axis: int = 0):
    return Concat.apply(*tensors, axis=axis)


def stack(tensors: Sequence, axis: int = 0):
    return Stack.apply(*tensors, axis=axis)


# -- gather / embedding lookup ----------------------------------------------


class Gather(Function):
    """Row gather from a 2-D+ table; backward scatter-adds into the rows."""

    def forward(self, table, ids=None):
        ids = np.asarray(ids)
        if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
            raise IndexError(
                f"id out of range: table has {table.shape[0]} rows, "
                f"ids span [{ids.min()}, {ids.max()}]"
            )
        self.ids = ids.astype(np.int64)
        self.table_shape = table.shape
        return table[self.ids]

    def backward(self, grad):
        g = np.zeros(self.table_shape, dtype=grad.dtype)
        flat_ids = self.ids.reshape(-1)
        row_shape = self.table_shape[1:]
        rows = grad.reshape((-1,) + row_shape)
        if len(row_shape) == 1:
            _kernels.scatter_add_rows(g, flat_ids, rows)
        else:
            _kernels.scatter_add_rows(
                g.reshape(self.table_shape[0], -1), flat_ids,
                rows.reshape(rows.shape[0], -1),
            )
        self._rows = np.unique(flat_ids)
        return (g,)

    def sparse_rows(self, i):
        return self._rows if i == 0 else None


def embedding_lookup(table: Tensor, ids) -> Tensor:
    """Gather rows: out[..., :] = table[ids[...], :]."""
    return Gather.apply(table, ids=ids)


# -- softmax -----------------------------------------------------------------


def _stable_softmax(x: np.ndarray) -> np.ndarray:
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class SoftmaxRow(Function):
    def forward(self, a):
        self.out = _stable_softmax(a)
        return self.out

    def backward(self, grad):
        dot = (grad * self.out).sum(axis=-1, keepdims=True)
        return ((grad - dot) * self.out,)


def softmax_row(a):
    """Row-wise softmax over the last axis, max-subtracted for stability."""
    return SoftmaxRow.apply(a)


class SoftmaxCrossEntropy(Function):
    """Fused softmax + cross entropy over integer class labels.

    Loss is the mean of -log p[label] over the leading batch axis;
    backward is the classic (p - onehot) / batch rule.
    """

    def forward(self, logits, labels=None):
        if logits.ndim != 2:
            raise ShapeError(f"expected (batch, classes) logits, got {logits.shape}")
        self.labels = np.asarray(labels, dtype=np.int64)
        self.probs = _stable_softmax(logits)
        batch = logits.shape[0]
        picked = self.probs[np.arange(batch), self.labels]
        return np.asarray(-np.log(np.maximum(picked, LOG_EPS)).mean(),
                          dtype=logits.dtype)

    def backward(self, grad):
        batch = self.probs.shape[0]
        g = self.probs.copy()
        g[np.arange(batch), self.labels] -= 1.0
        return (g * (grad / batch),)


def softmax_cross_entropy(logits: Tensor, labels) -> Tensor:
    return SoftmaxCrossEntropy.apply(logits, labels=labels)


# -- region window pooling (kernel-backed) -----------------------------------


class RegionPool(Function):
    """Masked element-wise max of (context embedding * context weight).

    Inputs are (B, n, w, k) tensors; ``valid`` is the (n, w) window mask.
    Backed by the compiled kernel when available.
    """

    def forward(self, e_ctx, u, valid=None):
        out, am = _kernels.region_pool_forward(e_ctx, u, valid)
        self.e_ctx, self.u, self.am = e_ctx, u, am
        return out

    def backward(self, grad):
        de, du = _kernels.region_pool_backward(self.e_ctx, self.u, self.am, grad)
        return (de, du)


def region_pool(e_ctx: Tensor, u: Tensor, valid: np.ndarray) -> Tensor:
    return RegionPool.apply(e_ctx, u, valid=valid)


# -- parameter helpers -------------------------------------------------------


def zeros(shape, dtype=np.float32, requires_grad=False, name=None):
    return Tensor(np.zeros(shape, dtype=dtype), requires_grad=requires_grad, name=name)


def uniform(rng: np.random.Generator, shape, low, high, dtype=np.float32,
            name=None) -> Tensor:
    data = rng.uniform(low, high, size=shape).astype(dtype)
    return Tensor(data, requires_grad=True, name=name)


def glorot_uniform(rng: np.random.Generator, shape, dtype=np.float32,
                   name=None) -> Tensor:
    fan_in, fan_out = shape[-2], shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return uniform(rng, shape, -limit, limit, dtype=dtype, name=name)


def parameters_of(obj) -> Iterable[Tensor]:
    """All trainable tensors reachable from an object's __dict__ (shallow)."""
    for value in vars(obj).values():
        if isinstance(value, Tensor) and value.requires_grad:
            yield value
