"""Pure numpy implementations of the hot kernels (fallback for ``_kernels``)."""
import numpy as np

# batch size (in matrices) for the vectorised tail of expand_traces
_TAIL_BATCH = 4096


def kron_sum(a, b):
    """``sum_k a[k] (x) conj(b[k])`` for stacks ``a`` (K,p,p) and ``b`` (K,q,q)."""
    a = np.ascontiguousarray(a, dtype=complex)
    b = np.ascontiguousarray(b, dtype=complex)
    p, q = a.shape[1], b.shape[1]
    return np.einsum("kij,kab->iajb", a, b.conj()).reshape(p * q, p * q)


def expand_traces(mats, n):
    """Vector of ``tr(A_{k1} ... A_{kn})`` over all multi-indices, k1 most significant."""
    mats = np.ascontiguousarray(mats, dtype=complex)
    d, dim, _ = mats.shape
    if d == 1:
        t = n
    else:
        t = max(1, min(n, int(np.log(_TAIL_BATCH) / np.log(d))))
    tail = mats
    for _ in range(t - 1):
        tail = np.einsum("aij,bjk->abik", tail, mats).reshape(-1, dim, dim)
    # tr(P T) = sum_ij P_ij T_ji
    tail_t = tail.transpose(0, 2, 1).reshape(tail.shape[0], dim * dim)
    width = tail.shape[0]
    out = np.empty(d ** n, dtype=complex)
    pos = 0
    for prefix in _prefix_products(mats, n - t, np.eye(dim, dtype=complex)):
        out[pos:pos + width] = tail_t @ prefix.ravel()
        pos += width
    return out


def _prefix_products(mats, depth, acc):
    if depth == 0:
        yield acc
        return
    for m in mats:
        yield from _prefix_products(mats, depth - 1, acc @ m)
