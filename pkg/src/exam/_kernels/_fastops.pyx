# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: region window max-pool and embedding scatter-add.

Same contracts as exam._kernels._numpy_ops; see that module for docs.
"""

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()

ctypedef fused real:
    float
    double


def scatter_add_rows(table_grad, ids, rows):
    table_grad = np.ascontiguousarray(table_grad)
    ids = np.ascontiguousarray(ids, dtype=np.int64)
    rows = np.ascontiguousarray(rows, dtype=table_grad.dtype)
    _scatter_add_rows(table_grad, ids, rows)


@cython.boundscheck(False)
def _scatter_add_rows(real[:, ::1] table, cnp.int64_t[::1] ids, real[:, ::1] rows):
    cdef Py_ssize_t m = ids.shape[0]
    cdef Py_ssize_t k = table.shape[1]
    cdef Py_ssize_t j, d, r
    for j in range(m):
        r = ids[j]
        for d in range(k):
            table[r, d] += rows[j, d]


def region_pool_forward(e_ctx, u, valid):
    e_ctx = np.ascontiguousarray(e_ctx)
    u = np.ascontiguousarray(u, dtype=e_ctx.dtype)
    valid_u8 = np.ascontiguousarray(valid, dtype=np.uint8)
    out = np.empty(
        (e_ctx.shape[0], e_ctx.shape[1], e_ctx.shape[3]), dtype=e_ctx.dtype
    )
    am = np.empty(out.shape, dtype=np.int8)
    _region_pool_forward(e_ctx, u, valid_u8, out, am)
    return out, am


def _region_pool_forward(
    real[:, :, :, ::1] e_ctx,
    real[:, :, :, ::1] u,
    cnp.uint8_t[:, ::1] valid,
    real[:, :, ::1] out,
    cnp.int8_t[:, :, ::1] am,
):
    cdef Py_ssize_t B = e_ctx.shape[0]
    cdef Py_ssize_t n = e_ctx.shape[1]
    cdef Py_ssize_t w = e_ctx.shape[2]
    cdef Py_ssize_t k = e_ctx.shape[3]
    cdef Py_ssize_t b, i, t, d
    cdef real v
    cdef bint first
    for b in range(B):
        for i in range(n):
            first = True
            for t in range(w):
                if not valid[i, t]:
                    continue
                if first:
                    for d in range(k):
                        out[b, i, d] = e_ctx[b, i, t, d] * u[b, i, t, d]
                        am[b, i, d] = <cnp.int8_t> t
                    first = False
                else:
                    for d in range(k):
                        v = e_ctx[b, i, t, d] * u[b, i, t, d]
                        if v > out[b, i, d]:
                            out[b, i, d] = v
                            am[b, i, d] = <cnp.int8_t> t
    return None


def region_pool_backward(e_ctx, u, am, grad_out):
    e_ctx = np.ascontiguousarray(e_ctx)
    u = np.ascontiguousarray(u, dtype=e_ctx.dtype)
    am = np.ascontiguousarray(am, dtype=np.int8)
    grad_out = np.ascontiguousarray(grad_out, dtype=e_ctx.dtype)
    de = np.zeros_like(e_ctx)
    du = np.zeros_like(u)
    _region_pool_backward(e_ctx, u, am, grad_out, de, du)
    return de, du


def _region_pool_backward(
    real[:, :, :, ::1] e_ctx,
    real[:, :, :, ::1] u,
    cnp.int8_t[:, :, ::1] am,
    real[:, :, ::1] grad_out,
    real[:, :, :, ::1] de,
    real[:, :, :, ::1] du,
):
    cdef Py_ssize_t B = e_ctx.shape[0]
    cdef Py_ssize_t n = e_ctx.shape[1]
    cdef Py_ssize_t k = e_ctx.shape[3]
    cdef Py_ssize_t b, i, d, t
    cdef real g
    for b in range(B):
        for i in range(n):
            for d in range(k):
                t = am[b, i, d]
                g = grad_out[b, i, d]
                de[b, i, t, d] = g * u[b, i, t, d]
                du[b, i, t, d] = g * e_ctx[b, i, t, d]
    return None
