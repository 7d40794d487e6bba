"""Pure-numpy implementations of the hot kernels.

Drop-in fallback for the compiled extension; selected at import time by
``exam._kernels`` when the extension is unavailable or explicitly disabled.
"""

import numpy as np


def scatter_add_rows(table_grad, ids, rows):
    """Accumulate rows[j] into table_grad[ids[j]] (duplicate ids sum)."""
    np.add.at(table_grad, ids, rows)


def region_pool_forward(e_ctx, u, valid):
    """Masked element-wise max over the context window.

    e_ctx, u: (B, n, w, k) context embeddings and their per-word weights.
    valid:    (n, w) bool, False where the window position falls outside
              the text; invalid positions never win the max (w index 0
              always covers at least the middle word for s = 0, and the
              middle offset is always valid for s > 0).

    Returns (out, argmax) with shapes (B, n, k) and (B, n, k); argmax is
    the winning window index, first occurrence on ties.
    """
    p = e_ctx * u
    p = np.where(valid[None, :, :, None], p, -np.inf)
    am = np.argmax(p, axis=2)
    out = np.take_along_axis(p, am[:, :, None, :], axis=2)[:, :, 0, :]
    return out, am.astype(np.int8)


def region_pool_backward(e_ctx, u, am, grad_out):
    """Route grad_out to the argmax window positions of e_ctx and u."""
    idx = am.astype(np.int64)[:, :, None, :]
    de = np.zeros_like(e_ctx)
    du = np.zeros_like(u)
    u_win = np.take_along_axis(u, idx, axis=2)[:, :, 0, :]
    e_win = np.take_along_axis(e_ctx, idx, axis=2)[:, :, 0, :]
    np.put_along_axis(de, idx, (grad_out * u_win)[:, :, None, :], axis=2)
    np.put_along_axis(du, idx, (grad_out * e_win)[:, :, None, :], axis=2)
    return de, du
