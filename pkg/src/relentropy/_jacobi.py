"""Cyclic Jacobi eigensolver for dense complex Hermitian matrices."""

import numba
import numpy as np


@numba.njit(cache=True)
def _off_norm(a):
    n = a.shape[0]
    s = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                s += a[i, j].real ** 2 + a[i, j].imag ** 2
    return np.sqrt(s)


@numba.njit(cache=True)
def cyclic_jacobi(h, rel_tol, max_sweeps):
    """Diagonalize the Hermitian matrix ``h`` by cyclic Jacobi sweeps.

    Returns ``(eigenvalues, vectors, sweeps)`` with ``sweeps = -1`` when the
    off-diagonal mass did not drop below ``rel_tol * ||h||_F`` in
    ``max_sweeps`` sweeps.  The input is not modified.
    """
    n = h.shape[0]
    a = h.copy()
    v = np.eye(n, dtype=np.complex128)
    fro = np.sqrt(np.sum(a.real ** 2 + a.imag ** 2))
    target = rel_tol * fro
    if n < 2 or _off_norm(a) <= target:
        return np.real(np.diag(a)).copy(), v, 0
    for sweep in range(1, max_sweeps + 1):
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = a[p, q]
                ag = abs(g)
                if ag == 0.0:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                # skip pivots already negligible next to the diagonal
                if ag < 1e-300 or (abs(app) + ag == abs(app) and abs(aqq) + ag == abs(aqq)):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                ph = g / ag
                theta = (aqq - app) / (2.0 * ag)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # J = diag(1, conj(ph)) @ [[c, s], [-s, c]] acting on (p, q)
                jpp = c
                jpq = s
                jqp = -s * np.conj(ph)
                jqq = c * np.conj(ph)
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = akp * jpp + akq * jqp
                    a[k, q] = akp * jpq + akq * jqq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = np.conj(jpp) * apk + np.conj(jqp) * aqk
                    a[q, k] = np.conj(jpq) * apk + np.conj(jqq) * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = vkp * jpp + vkq * jqp
                    v[k, q] = vkp * jpq + vkq * jqq
        if _off_norm(a) <= target:
            return np.real(np.diag(a)).copy(), v, sweep
    return np.real(np.diag(a)).copy(), v, -1
