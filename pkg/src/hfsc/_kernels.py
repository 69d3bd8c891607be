"""Hot loops with a numba path and a pure-numpy path.

Set ``HFSC_DISABLE_NUMBA=1`` to force the numpy path (also used when numba
is not importable).  Both paths compute the same quantities; results agree
to round-off.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and os.environ.get("HFSC_DISABLE_NUMBA", "0").strip().lower() not in (
    "1",
    "true",
    "yes",
)

BACKEND = "numba" if USE_NUMBA else "numpy"


def _m_entries_numpy(sigma, a, b, xt, t, alpha4):
    # rows: nodes; M[p, k, j] = (conj(ep_k) ep_j + conj(em_k) em_j) / (sigma_j - conj(sigma_k))
    theta = 1j * sigma[None, :] * xt[:, None] - 1j * alpha4 * sigma[None, :] ** 2 * t[:, None]
    ep = a[None, :] * np.exp(theta)
    em = b[None, :] * np.exp(-theta)
    denom = sigma[None, :] - np.conj(sigma)[:, None]
    m = (np.conj(ep)[:, :, None] * ep[:, None, :] + np.conj(em)[:, :, None] * em[:, None, :]) / denom
    return m, ep, em


def nsoliton_numpy(sigma, a, b, xt, t, alpha4):
    """Batched general N-soliton field.  Returns ``(u, cond)`` per node.

    ``cond`` is the 1-norm condition number of the Jacobi-scaled M.
    """
    m, ep, em = _m_entries_numpy(sigma, a, b, xt, t, alpha4)
    n = sigma.shape[0]
    s = 1.0 / np.sqrt(np.abs(np.diagonal(m, axis1=1, axis2=2)))
    ms = m * s[:, :, None] * s[:, None, :]
    rhs = np.conj(ep) * s
    lhs = em * s
    u = np.empty(xt.shape[0], dtype=np.complex128)
    cond = np.empty(xt.shape[0])
    norm_m = np.abs(ms).sum(axis=1).max(axis=1)
    eye = np.broadcast_to(np.eye(n, dtype=np.complex128), ms.shape)
    try:
        sol = np.linalg.solve(ms, np.concatenate([rhs[:, :, None], eye], axis=2))
    except np.linalg.LinAlgError:
        sol = np.full((ms.shape[0], n, n + 1), np.nan, dtype=np.complex128)
        for p in range(ms.shape[0]):
            try:
                sol[p] = np.linalg.solve(ms[p], np.concatenate([rhs[p, :, None], eye[p]], axis=1))
            except np.linalg.LinAlgError:
                pass
    y = sol[:, :, 0]
    inv = sol[:, :, 1:]
    u[:] = -2.0 * np.sum(lhs * y, axis=1)
    cond[:] = norm_m * np.abs(inv).sum(axis=1).max(axis=1)
    bad = ~np.isfinite(cond)
    cond[bad] = np.inf
    return u, cond


def nonlinear_rotate_numpy(u, coef):
    """In place: u <- u * exp(-i * coef * |u|^2)."""
    u *= np.exp(-1j * coef * (u.real**2 + u.imag**2))
    return u


if numba is not None:

    @numba.njit(cache=True)
    def _lu_factor(a, piv):
        n = a.shape[0]
        for col in range(n):
            p = col
            best = abs(a[col, col])
            for r in range(col + 1, n):
                v = abs(a[r, col])
                if v > best:
                    best = v
                    p = r
            piv[col] = p
            if best == 0.0:
                return False
            if p != col:
                for c in range(n):
                    tmp = a[col, c]
                    a[col, c] = a[p, c]
                    a[p, c] = tmp
            inv_pivot = 1.0 / a[col, col]
            for r in range(col + 1, n):
                f = a[r, col] * inv_pivot
                a[r, col] = f
                for c in range(col + 1, n):
                    a[r, c] -= f * a[col, c]
        return True

    @numba.njit(cache=True)
    def _lu_solve(lu, piv, rhs):
        n = lu.shape[0]
        for i in range(n):
            p = piv[i]
            if p != i:
                tmp = rhs[i]
                rhs[i] = rhs[p]
                rhs[p] = tmp
        for i in range(n):
            acc = rhs[i]
            for j in range(i):
                acc -= lu[i, j] * rhs[j]
            rhs[i] = acc
        for i in range(n - 1, -1, -1):
            acc = rhs[i]
            for j in range(i + 1, n):
                acc -= lu[i, j] * rhs[j]
            rhs[i] = acc / lu[i, i]

    @numba.njit(cache=True, parallel=False)
    def nsoliton_numba(sigma, a, b, xt, t, alpha4):
        n = sigma.shape[0]
        npts = xt.shape[0]
        u = np.empty(npts, dtype=np.complex128)
        cond = np.empty(npts)
        ep = np.empty(n, dtype=np.complex128)
        em = np.empty(n, dtype=np.complex128)
        s = np.empty(n)
        m = np.empty((n, n), dtype=np.complex128)
        rhs = np.empty(n, dtype=np.complex128)
        col = np.empty(n, dtype=np.complex128)
        piv = np.empty(n, dtype=np.int64)
        sig2 = sigma * sigma
        for p in range(npts):
            for j in range(n):
                th = 1j * sigma[j] * xt[p] - 1j * alpha4 * sig2[j] * t[p]
                e = np.exp(th)
                ep[j] = a[j] * e
                em[j] = b[j] / e
            for k in range(n):
                for j in range(n):
                    m[k, j] = (ep[k].conjugate() * ep[j] + em[k].conjugate() * em[j]) / (
                        sigma[j] - sigma[k].conjugate()
                    )
            for j in range(n):
                s[j] = 1.0 / np.sqrt(abs(m[j, j]))
            norm_m = 0.0
            for j in range(n):
                colsum = 0.0
                for k in range(n):
                    m[k, j] = m[k, j] * s[k] * s[j]
                    colsum += abs(m[k, j])
                if colsum > norm_m:
                    norm_m = colsum
            if not _lu_factor(m, piv):
                u[p] = np.nan
                cond[p] = np.inf
                continue
            for j in range(n):
                rhs[j] = ep[j].conjugate() * s[j]
            _lu_solve(m, piv, rhs)
            acc = 0.0j
            for k in range(n):
                acc += em[k] * s[k] * rhs[k]
            u[p] = -2.0 * acc
            norm_inv = 0.0
            for j in range(n):
                for k in range(n):
                    col[k] = 0.0
                col[j] = 1.0
                _lu_solve(m, piv, col)
                colsum = 0.0
                for k in range(n):
                    colsum += abs(col[k])
                if colsum > norm_inv:
                    norm_inv = colsum
            c = norm_m * norm_inv
            cond[p] = c if np.isfinite(c) else np.inf
        return u, cond

    @numba.njit(cache=True)
    def nonlinear_rotate_numba(u, coef):
        for i in range(u.shape[0]):
            z = u[i]
            u[i] = z * np.exp(-1j * coef * (z.real * z.real + z.imag * z.imag))
        return u

else:  # pragma: no cover
    nsoliton_numba = None
    nonlinear_rotate_numba = None


if USE_NUMBA:
    nsoliton = nsoliton_numba
    nonlinear_rotate = nonlinear_rotate_numba
else:
    nsoliton = nsoliton_numpy
    nonlinear_rotate = nonlinear_rotate_numpy
