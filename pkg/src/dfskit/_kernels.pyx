# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: Kronecker sums for superoperators and MPS trace expansion."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

from scipy.linalg.cython_blas cimport zgemv

# batch size (in matrices) of the tail block
cdef Py_ssize_t _TAIL_BATCH = 256


def kron_sum(a, b):
    """``sum_k a[k] (x) conj(b[k])`` for stacks ``a`` (K,p,p) and ``b`` (K,q,q)."""
    cdef const double complex[:, :, ::1] av = np.ascontiguousarray(a, dtype=complex)
    cdef const double complex[:, :, ::1] bv = np.ascontiguousarray(b, dtype=complex)
    cdef Py_ssize_t nk = av.shape[0], p = av.shape[1], q = bv.shape[1]
    cdef Py_ssize_t k, i, j, s, t
    cdef double complex x
    out = np.zeros((p * q, p * q), dtype=complex)
    cdef double complex[:, ::1] ov = out
    for k in range(nk):
        for i in range(p):
            for j in range(p):
                x = av[k, i, j]
                if x == 0:
                    continue
                for s in range(q):
                    for t in range(q):
                        ov[i * q + s, j * q + t] += x * bv[k, s, t].conjugate()
    return out


cdef inline void _matmul(const double complex* x, const double complex* y,
                         double complex* z, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j, l
    cdef double complex xil
    for i in range(n * n):
        z[i] = 0
    for i in range(n):
        for l in range(n):
            xil = x[i * n + l]
            for j in range(n):
                z[i * n + j] = z[i * n + j] + xil * y[l * n + j]


def expand_traces(mats, int n):
    """Vector of ``tr(A_{k1} ... A_{kn})`` over all multi-indices, k1 most significant.

    The last ``t`` indices form a tail block of ``d**t`` products whose
    transposes are stored as rows of ``T``; the leading ``n - t`` indices
    are walked depth-first keeping one prefix product per level, and each
    prefix ``P`` fills ``d**t`` outputs with one ``T @ vec(P)``.
    """
    arr = np.ascontiguousarray(mats, dtype=complex)
    cdef Py_ssize_t d = arr.shape[0], dim = arr.shape[1], sq = dim * dim
    cdef Py_ssize_t t, lvl, i
    if d == 1:
        t = n
    else:
        t = max(1, min(n, int(np.log(_TAIL_BATCH) / np.log(d))))
    tail = arr
    for _ in range(t - 1):
        tail = np.einsum("aij,bjk->abik", tail, arr).reshape(-1, dim, dim)
    cdef const double complex[:, ::1] tv = np.ascontiguousarray(tail.transpose(0, 2, 1).reshape(-1, sq))
    cdef int width = tv.shape[0]
    cdef Py_ssize_t depth = n - t
    out = np.empty(int(arr.shape[0]) ** n, dtype=complex)
    cdef double complex[::1] ov = out
    cdef const double complex[:, :, ::1] m = arr
    cdef double complex[:, ::1] prods = np.empty((depth + 1, sq), dtype=complex)
    cdef Py_ssize_t[::1] idx = np.zeros(depth + 1, dtype=np.intp)
    cdef const double complex* mp = &m[0, 0, 0]
    cdef double complex* pp = &prods[0, 0]
    cdef double complex* op = &ov[0]
    cdef double complex one = 1.0, zero = 0.0
    cdef int isq = <int>sq, inc = 1
    cdef char trans = b'T'
    cdef Py_ssize_t pos = 0
    with nogil:
        # level 0 holds the identity; level j the product of the first j factors
        for i in range(sq):
            pp[i] = 0
        for i in range(dim):
            pp[i * dim + i] = 1
        for lvl in range(1, depth + 1):
            _matmul(pp + (lvl - 1) * sq, mp, pp + lvl * sq, dim)
        while True:
            # row-major T (width x sq) is column-major T^T, hence 'T'
            zgemv(&trans, &isq, &width, &one, <double complex*>&tv[0, 0], &isq,
                  pp + depth * sq, &inc, &zero, op + pos, &inc)
            pos += width
            lvl = depth
            while lvl >= 1:
                idx[lvl] += 1
                if idx[lvl] < d:
                    break
                idx[lvl] = 0
                lvl -= 1
            if lvl < 1:
                break
            while lvl <= depth:
                _matmul(pp + (lvl - 1) * sq, mp + idx[lvl] * sq, pp + lvl * sq, dim)
                lvl += 1
    return out
