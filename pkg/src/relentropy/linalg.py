"""Dense Hermitian linear algebra with deterministic spectral decompositions.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  Positive
semidefinite inputs are validated on entry; projectors and partial isometries
are arrays too, with :func:`is_projector` / :func:`is_partial_isometry` as the
checks.

Eigenvectors inside a (numerically) degenerate eigenvalue cluster are not
unique, so :func:`ordered_eig` re-selects them with a fixed rule: the
coordinate vectors ``e_0, e_1, ...`` are projected onto what is left of the
eigenspace, the first projection that does not vanish is normalized and
taken, and the eigenspace is deflated by it.  Applied to one-dimensional
clusters the same rule fixes the phase of each eigenvector.  As a result two
calls on bitwise-equal input give bitwise-equal output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _jacobi
from .config import Tolerances, resolve
from .errors import (
    DegeneratePolar,
    DimensionMismatch,
    NoConvergence,
    NonHermitian,
    NotPositive,
    ZeroOperator,
)

__all__ = [
    "EigenSystem",
    "as_matrix",
    "as_hermitian",
    "as_psd",
    "ordered_eig",
    "ordered_basis",
    "numerical_rank",
    "spectral_projector_top",
    "support_projector",
    "support_contained",
    "log_on_support",
    "psd_sqrt",
    "compress",
    "polar_partial_isometry",
    "norms",
    "trace_norm",
    "operator_norm",
    "is_projector",
    "is_partial_isometry",
    "projector_rank",
    "dagger",
]


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def as_matrix(a, *, square: bool = False) -> np.ndarray:
    """Return ``a`` as a 2-D complex array, rejecting NaN/Inf entries."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got array of shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionMismatch("matrix dimensions must be positive")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def as_hermitian(a, tol: Tolerances | None = None) -> np.ndarray:
    """Validate Hermiticity and return the exactly Hermitian part."""
    tol = resolve(tol)
    m = as_matrix(a, square=True)
    dev = np.max(np.abs(m - dagger(m)))
    if dev > tol.hermitian_tol * (1.0 + np.max(np.abs(m))):
        raise NonHermitian(f"max |A - A^H| = {dev:.3e} exceeds tolerance")
    return 0.5 * (m + dagger(m))


def as_psd(a, tol: Tolerances | None = None) -> np.ndarray:
    """Validate that ``a`` is a positive semidefinite operator."""
    h = as_hermitian(a, tol)
    ordered_eig(h, tol)
    return h


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Non-increasing eigenvalues with matching orthonormal eigenvector columns.

    ``vectors`` follow the coordinate tie-break rule inside near-degenerate
    clusters and define spectral projectors.  ``exact_vectors`` are the
    solver's own eigenvectors in the same order; inside a cluster whose
    eigenvalues differ slightly they diagonalize the input more accurately,
    so matrix functions are evaluated with them.  Both span the same
    subspace for every cluster.
    """

    values: np.ndarray
    vectors: np.ndarray
    raw_vectors: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @property
    def exact_vectors(self) -> np.ndarray:
        return self.vectors if self.raw_vectors is None else self.raw_vectors

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ dagger(self.vectors)

    def apply_function(self, fn) -> np.ndarray:
        """``sum_i fn(lambda_i) |v_i><v_i|`` over the exact eigenvectors."""
        v = self.exact_vectors
        out = (v * fn(self.values)) @ dagger(v)
        return 0.5 * (out + dagger(out))


def ordered_basis(basis: np.ndarray, nonzero_tol: float = 1e-10) -> np.ndarray:
    """Re-select an orthonormal basis of ``span(basis)`` by the coordinate rule.

    ``basis`` holds orthonormal columns.  Coordinate vectors are scanned in
    order; each one whose projection onto the remaining subspace has norm
    above ``nonzero_tol`` contributes that normalized projection, after which
    the subspace is deflated.
    """
    dim, r = basis.shape
    out = np.empty((dim, r), dtype=np.complex128)
    current = basis
    k = 0
    for i in range(dim):
        if k == r:
            break
        coeff = current[i, :].conj()
        nrm = np.linalg.norm(coeff)
        if nrm <= nonzero_tol:
            continue
        u = coeff / nrm
        out[:, k] = current @ u
        k += 1
        if k < r:
            # orthonormal complement of u inside the coefficient space
            q, _ = np.linalg.qr(np.column_stack([u, np.eye(current.shape[1])]), mode="complete")
            current = current @ q[:, 1:]
    if k < r:
        raise NoConvergence("coordinate scan did not exhaust the subspace")
    return out


def _clusters(values: np.ndarray, rel_tol: float, cut: int | None = None):
    """Runs of eigenvalues with consecutive gaps below ``rel_tol * max|lambda|``.

    No run crosses index ``cut`` (the support boundary).
    """
    scale = np.max(np.abs(values)) if values.size else 0.0
    start = 0
    for i in range(1, values.shape[0] + 1):
        if i == values.shape[0] or i == cut or values[i - 1] - values[i] >= rel_tol * scale:
            yield start, i
            start = i


def ordered_eig(a, tol: Tolerances | None = None, *, psd: bool = True) -> EigenSystem:
    """Deterministic spectral decomposition of a Hermitian (by default PSD) matrix.

    Raises
    ------
    NonHermitian
        If ``a`` is not Hermitian within ``hermitian_tol``.
    NotPositive
        If ``psd`` and an eigenvalue is below ``-psd_slack``.
    NoConvergence
        If the Jacobi sweeps do not converge within ``max_sweeps``.
    """
    tol = resolve(tol)
    h = as_hermitian(a, tol)
    w, v, sweeps = _jacobi.cyclic_jacobi(h, tol.off_diag_tol, int(tol.max_sweeps))
    if sweeps < 0:
        raise NoConvergence(f"Jacobi did not converge in {tol.max_sweeps} sweeps")
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    if psd and w.size and w[-1] < -tol.psd_slack * max(1.0, w[0]):
        raise NotPositive(f"smallest eigenvalue {w[-1]:.3e} is below -psd_slack")
    raw = v.copy()
    cut = _support_count(w, tol) if psd else None
    singles = []
    for lo, hi in _clusters(w, tol.degeneracy_tol, cut):
        if hi - lo == 1:
            singles.append(lo)
        else:
            v[:, lo:hi] = ordered_basis(v[:, lo:hi], tol.nonzero_tol)
    if singles:
        # the coordinate rule on a single vector: make its first entry above
        # nonzero_tol real and positive
        cols = v[:, singles]
        first = np.argmax(np.abs(cols) > tol.nonzero_tol, axis=0)
        pivot = cols[first, np.arange(len(singles))]
        v[:, singles] = cols * (pivot.conj() / np.abs(pivot))
    for a in (w, v, raw):
        a.setflags(write=False)
    return EigenSystem(w, v, raw)


def _support_count(values: np.ndarray, tol: Tolerances) -> int:
    lmax = values[0] if values.size else 0.0
    if lmax <= 0.0:
        return 0
    return int(np.count_nonzero(values > tol.rank_rel_tol * lmax))


def numerical_rank(a, tol: Tolerances | None = None) -> int:
    """Number of eigenvalues above ``rank_rel_tol * lambda_max``."""
    tol = resolve(tol)
    es = a if isinstance(a, EigenSystem) else ordered_eig(a, tol)
    return _support_count(es.values, tol)


def _projector_from(vectors: np.ndarray, k: int) -> np.ndarray:
    b = vectors[:, :k]
    p = b @ dagger(b)
    return 0.5 * (p + dagger(p))


def spectral_projector_top(sigma, m: int, tol: Tolerances | None = None) -> np.ndarray:
    """Projector onto the first ``min(m, rank)`` ordered eigenvectors of ``sigma``.

    ``m = 0`` gives the zero projector and ``m`` beyond the rank gives the
    support projector.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    tol = resolve(tol)
    es = sigma if isinstance(sigma, EigenSystem) else ordered_eig(sigma, tol)
    return _projector_from(es.vectors, min(m, _support_count(es.values, tol)))


def support_projector(rho, tol: Tolerances | None = None) -> np.ndarray:
    tol = resolve(tol)
    es = rho if isinstance(rho, EigenSystem) else ordered_eig(rho, tol)
    return _projector_from(es.vectors, _support_count(es.values, tol))


def compress(x: np.ndarray, q: np.ndarray, tol: Tolerances | None = None) -> np.ndarray:
    """``Q X Q`` (Hermitian part), set to exactly zero when every entry is below
    ``rank_rel_tol`` times the largest entry of ``X``.

    A compression onto the kernel of ``X`` is zero in exact arithmetic but
    carries round-off; the parent's rank cut decides it.
    """
    tol = resolve(tol)
    y = q @ x @ q
    y = 0.5 * (y + dagger(y))
    if np.max(np.abs(y)) <= tol.rank_rel_tol * np.max(np.abs(x)):
        return np.zeros_like(y)
    return y


def trace_norm(a) -> float:
    return float(np.sum(np.linalg.svd(as_matrix(a), compute_uv=False)))


def operator_norm(a) -> float:
    return float(np.linalg.svd(as_matrix(a), compute_uv=False)[0])


def norms(a) -> tuple[float, float]:
    """``(trace_norm, operator_norm)`` of an arbitrary matrix."""
    s = np.linalg.svd(as_matrix(a), compute_uv=False)
    return float(np.sum(s)), float(s[0])


def support_contained(rho, sigma, tol: Tolerances | None = None) -> bool:
    """Whether the support of ``rho`` lies in the support of ``sigma``.

    Decided by the trace norm of the part of ``rho`` living on the kernel of
    ``sigma``, relative to ``Tr rho``.  ``sigma`` may be given as an
    :class:`EigenSystem`.
    """
    tol = resolve(tol)
    rho = as_hermitian(rho, tol)
    es = sigma if isinstance(sigma, EigenSystem) else ordered_eig(sigma, tol)
    if rho.shape[0] != es.dim:
        raise DimensionMismatch(f"dimensions {rho.shape[0]} and {es.dim} differ")
    kernel = es.vectors[:, _support_count(es.values, tol):]
    # compression of a PSD operator is PSD, so its trace norm is its trace
    leak = float(np.real(np.sum(kernel.conj() * (rho @ kernel))))
    scale = max(float(np.trace(rho).real), np.finfo(float).tiny)
    return leak <= tol.containment_tol * scale


def log_on_support(sigma, tol: Tolerances | None = None) -> np.ndarray:
    """Matrix logarithm on the support of ``sigma``, zero on its kernel."""
    tol = resolve(tol)
    es = sigma if isinstance(sigma, EigenSystem) else ordered_eig(sigma, tol)
    k = _support_count(es.values, tol)
    if k == 0:
        raise ZeroOperator("logarithm of the zero operator")
    b = es.exact_vectors[:, :k]
    out = (b * np.log(es.values[:k])) @ dagger(b)
    return 0.5 * (out + dagger(out))


def psd_sqrt(a, tol: Tolerances | None = None) -> np.ndarray:
    es = ordered_eig(a, tol)
    return es.apply_function(lambda x: np.sqrt(np.clip(x, 0.0, None)))


def is_projector(p, tol: Tolerances | None = None) -> bool:
    tol = resolve(tol)
    p = np.asarray(p, dtype=np.complex128)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        return False
    if np.max(np.abs(p - dagger(p))) > tol.idem_tol:
        return False
    return bool(np.max(np.abs(p @ p - p)) <= tol.idem_tol)


def projector_rank(p) -> int:
    return int(round(float(np.trace(p).real)))


def is_partial_isometry(w, tol: Tolerances | None = None) -> bool:
    w = np.asarray(w, dtype=np.complex128)
    return is_projector(dagger(w) @ w, tol) and is_projector(w @ dagger(w), tol)


def polar_partial_isometry(p, q, tol: Tolerances | None = None, *, require_full: bool = False):
    """Partial isometry ``W`` from the polar decomposition ``PQ = W sqrt(QPQ)``.

    ``W W^H`` projects onto the range of ``PQ`` and ``W^H W`` onto the range
    of ``QPQ``.  When ``||P - Q|| < 1`` these are ``P`` and ``Q`` themselves.
    With ``require_full=True`` a :class:`DegeneratePolar` is raised unless
    that is the case numerically.
    """
    tol = resolve(tol)
    p = as_matrix(p, square=True)
    q = as_matrix(q, square=True)
    if p.shape != q.shape:
        raise DimensionMismatch(f"shapes {p.shape} and {q.shape} differ")
    pq = p @ q
    x, s, yh = np.linalg.svd(pq)
    cut = tol.rank_rel_tol * max(s[0], 1.0) if s.size else 0.0
    r = int(np.count_nonzero(s > cut))
    w = x[:, :r] @ yh[:r, :]
    if require_full and (r != projector_rank(p) or r != projector_rank(q)):
        raise DegeneratePolar(
            f"PQ has rank {r}, projectors have ranks {projector_rank(p)} and {projector_rank(q)}"
        )
    return w
