"""Base-2 log-domain accumulation."""

import numpy as np


def log2sumexp2(x, axis=None):
    """Return ``log2(sum(2**x))`` without overflow or underflow.

    Empty input gives ``-inf``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        if axis is None:
            return -np.inf
        shape = list(x.shape)
        del shape[axis]
        return np.full(shape, -np.inf)
    top = np.max(x, axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log2(np.sum(np.exp2(x - top), axis=axis, keepdims=True)) + top
    if axis is None:
        return float(out.reshape(()))
    return np.squeeze(out, axis=axis)


def log2addexp2(a, b):
    """``log2(2**a + 2**b)`` for scalars."""
    return float(np.logaddexp2(a, b))
