"""Reverse-mode differentiation over a small fixed set of array ops.

Every op takes :class:`Node` inputs (or plain arrays, treated as constants),
computes its output eagerly with numpy, and records a closure that maps the
output gradient to input gradients.  ``loss.backward()`` walks the recorded
graph in reverse topological order.  Nodes built only from constants record
nothing, so inference runs without tape overhead.

All values are float64.  An op whose output contains NaN or Inf raises
:class:`NumericError` immediately.
"""

from __future__ import annotations

import math

import numpy as np


class NumericError(FloatingPointError):
    """A computation produced a non-finite value."""


def _check(value, op):
    if not np.all(np.isfinite(value)):
        raise NumericError(f"non-finite value produced by {op}")
    return value


class Node:
    __slots__ = ("value", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, value, requires_grad=False, name=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Node{label}(shape={self.value.shape}, requires_grad={self.requires_grad})"

    def backward(self, grad=None):
        """Accumulate d(self)/d(leaf) into ``.grad`` of every reachable leaf."""
        if grad is None:
            if self.value.size != 1:
                raise ValueError("backward() without a seed needs a scalar output")
            grad = np.ones_like(self.value)
        order = _topological(self)
        grads = {id(self): np.asarray(grad, dtype=np.float64)}
        for node in order:
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg

    def zero_grad(self):
        self.grad = None


def _topological(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    order.reverse()
    return order


def param(value, name=None):
    return Node(np.array(value, dtype=np.float64), requires_grad=True, name=name)


def _as_node(x):
    return x if isinstance(x, Node) else Node(x)


def _make(value, parents, backward, op):
    out = Node(_check(value, op))
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# -- elementwise / linear algebra ------------------------------------------------

def add(a, b):
    a, b = _as_node(a), _as_node(b)
    return _make(a.value + b.value, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)), "add")


def sub(a, b):
    a, b = _as_node(a), _as_node(b)
    return _make(a.value - b.value, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)), "sub")


def mul(a, b):
    a, b = _as_node(a), _as_node(b)
    return _make(a.value * b.value, (a, b),
                 lambda g: (_unbroadcast(g * b.value, a.shape),
                            _unbroadcast(g * a.value, b.shape)), "mul")


def scale(a, c):
    a = _as_node(a)
    return _make(a.value * c, (a,), lambda g: (g * c,), "scale")


def reshape(a, shape):
    a = _as_node(a)
    return _make(a.value.reshape(shape), (a,), lambda g: (g.reshape(a.shape),), "reshape")


def transpose(a):
    a = _as_node(a)
    return _make(a.value.T, (a,), lambda g: (g.T,), "transpose")


def matmul(a, b):
    """``a @ b`` for 2-D ``a`` and 1-D or 2-D ``b``."""
    a, b = _as_node(a), _as_node(b)

    def backward(g):
        if b.value.ndim == 1:
            return np.outer(g, b.value), a.value.T @ g
        return g @ b.value.T, a.value.T @ g

    return _make(a.value @ b.value, (a, b), backward, "matmul")


def concat(nodes, axis=1):
    nodes = [_as_node(n) for n in nodes]
    sizes = [n.shape[axis] for n in nodes]
    cuts = np.cumsum(sizes)[:-1]
    return _make(np.concatenate([n.value for n in nodes], axis=axis), nodes,
                 lambda g: tuple(np.split(g, cuts, axis=axis)), "concat")


def leaky_relu(x, slope=0.2):
    """``x`` where ``x >= 0`` else ``slope * x``; the derivative at 0 is taken as 1."""
    x = _as_node(x)
    pos = x.value >= 0
    return _make(np.where(pos, x.value, slope * x.value), (x,),
                 lambda g: (np.where(pos, g, slope * g),), "leaky_relu")


def tanh(x):
    x = _as_node(x)
    t = np.tanh(x.value)
    return _make(t, (x,), lambda g: (g * (1.0 - t * t),), "tanh")


def _sigmoid(v):
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    e = np.exp(v[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def sigmoid(x):
    x = _as_node(x)
    s = _sigmoid(x.value)
    return _make(s, (x,), lambda g: (g * s * (1.0 - s),), "sigmoid")


def log(x):
    x = _as_node(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(x.value)
    return _make(out, (x,), lambda g: (g / x.value,), "log")


def log_sigmoid(x):
    """``log(sigmoid(x))`` evaluated without overflow for large ``|x|``."""
    x = _as_node(x)
    v = x.value
    out = np.minimum(v, 0.0) - np.log1p(np.exp(-np.abs(v)))
    return _make(out, (x,), lambda g: (g * _sigmoid(-v),), "log_sigmoid")


def total(x):
    x = _as_node(x)
    return _make(np.asarray(x.value.sum()), (x,),
                 lambda g: (np.broadcast_to(g, x.shape).copy(),), "sum")


def row_dot(a, b):
    """Row-wise inner products of two ``(k, d)`` arrays."""
    a, b = _as_node(a), _as_node(b)
    return _make(np.einsum("ij,ij->i", a.value, b.value), (a, b),
                 lambda g: (g[:, None] * b.value, g[:, None] * a.value), "row_dot")


# -- indexing / neighbor-list ops -------------------------------------------------

def _scatter_add(index, values, n):
    """``out[index[i]] += values[i]`` for 1-D or 2-D ``values`` (bincount-based)."""
    if values.ndim == 1:
        return np.bincount(index, weights=values, minlength=n)
    width = values.shape[1]
    flat = (index[:, None] * width + np.arange(width)).ravel()
    return np.bincount(flat, weights=values.ravel(), minlength=n * width).reshape(n, width)


def _segment_max(v, segment, num_segments):
    out = np.full(num_segments, -np.inf)
    if len(v) == 0:
        return out
    if np.all(segment[1:] >= segment[:-1]):
        starts = np.flatnonzero(np.r_[True, segment[1:] != segment[:-1]])
        out[segment[starts]] = np.maximum.reduceat(v, starts)
    else:
        np.maximum.at(out, segment, v)
    return out


def take(x, i):
    """``x[i]`` along the first axis for a single integer ``i``."""
    x = _as_node(x)

    def backward(g):
        out = np.zeros_like(x.value)
        out[i] = g
        return (out,)

    return _make(x.value[i], (x,), backward, "take")


def gather(x, index):
    """Rows ``x[index]``; the backward pass scatter-adds into ``x``."""
    x = _as_node(x)
    index = np.asarray(index, dtype=np.int64)

    strictly_increasing = bool(np.all(index[1:] > index[:-1]))

    def backward(g):
        if strictly_increasing or x.value.ndim > 2:
            out = np.zeros_like(x.value)
            if strictly_increasing:
                out[index] = g
            else:
                np.add.at(out, index, g)
            return (out,)
        return (_scatter_add(index, g, x.shape[0]),)

    return _make(x.value[index], (x,), backward, "gather")


def segment_sum(x, segment, num_segments):
    """Sum rows of ``x`` that share a segment id; empty segments give zeros."""
    x = _as_node(x)
    segment = np.asarray(segment, dtype=np.int64)
    if x.value.ndim > 2:
        out = np.zeros((num_segments,) + x.shape[1:])
        np.add.at(out, segment, x.value)
    else:
        out = _scatter_add(segment, x.value, num_segments)
    return _make(out, (x,), lambda g: (g[segment],), "segment_sum")


def segment_softmax(logits, segment, num_segments):
    """Softmax of a 1-D ``logits`` within each segment.

    Entries of one segment need not be contiguous.  The per-segment maximum is
    subtracted before exponentiation.
    """
    logits = _as_node(logits)
    segment = np.asarray(segment, dtype=np.int64)
    v = logits.value
    peak = _segment_max(v, segment, num_segments)
    e = np.exp(v - peak[segment])
    denom = np.bincount(segment, weights=e, minlength=num_segments)
    p = e / denom[segment]

    def backward(g):
        inner = np.bincount(segment, weights=g * p, minlength=num_segments)
        return (p * (g - inner[segment]),)

    return _make(p, (logits,), backward, "segment_softmax")


# -- scalar helpers -----------------------------------------------------------------

def leaky_relu_scalar(x, slope=0.2):
    """Value and derivative of LeakyReLU at one point (derivative 1 at 0)."""
    if not 0.0 < slope < 1.0:
        raise ValueError("slope must lie in (0, 1)")
    return (x, 1.0) if x >= 0 else (slope * x, slope)


def masked_softmax(logits):
    """Softmax of a non-empty list of finite logits, as a list of floats."""
    v = np.asarray(logits, dtype=np.float64)
    if v.size == 0:
        raise ValueError("softmax of an empty list is undefined")
    _check(v, "masked_softmax input")
    e = np.exp(v - v.max())
    return (e / e.sum()).tolist()


def grad_check(f, theta, h=1e-5, max_coords=None, seed=0, value=None):
    """Largest relative gap between analytic and central-difference gradients.

    ``f(theta)`` must return ``(value, grads)`` with ``grads`` shaped like
    ``theta``; ``theta`` is an array or a dict of arrays (perturbed in place and
    restored).  The error of one coordinate is
    ``|analytic - numeric| / max(1, |analytic|)``.  ``max_coords`` samples that
    many coordinates per array instead of checking all of them.  ``value``, if
    given, is a cheaper ``theta -> float`` used for the perturbed evaluations.
    """
    if not 1e-7 <= h <= 1e-3:
        raise ValueError("h must lie in [1e-7, 1e-3]")
    single = not isinstance(theta, dict)
    params = {"theta": theta} if single else theta

    def call():
        value, grads = f(theta)
        value = float(value)
        if not math.isfinite(value):
            raise NumericError("objective is not finite")
        return value, ({"theta": grads} if single else grads)

    def objective():
        if value is None:
            return call()[0]
        out = float(value(theta))
        if not math.isfinite(out):
            raise NumericError("objective is not finite")
        return out

    _, analytic = call()
    analytic = {k: np.array(v, dtype=np.float64) for k, v in analytic.items()}
    rng = np.random.default_rng(seed)
    worst = 0.0
    for key, arr in params.items():
        flat = arr.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = rng.choice(flat.size, size=max_coords, replace=False)
        ga = analytic[key].reshape(-1)
        for i in coords:
            orig = flat[i]
            flat[i] = orig + h
            fp = objective()
            flat[i] = orig - h
            fm = objective()
            flat[i] = orig
            numeric = (fp - fm) / (2.0 * h)
            err = abs(ga[i] - numeric) / max(1.0, abs(ga[i]))
            worst = max(worst, err)
    return worst
