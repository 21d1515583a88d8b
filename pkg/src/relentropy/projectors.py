"""Projector families attached to operator sequences and the tail criterion.

An operator sequence is stored as terms ``0..N_max`` where term ``0`` is the
limit.  A projector family ``(n, m) -> P^n_m`` is evaluated lazily.  The tail
criterion compresses ``rho_n`` and ``sigma_n`` with ``Q = I - P^n_m`` and
takes the supremum over ``n`` of ``D(Q rho_n Q || Q sigma_n Q)``; finite data
replace the supremum over all ``n >= n0`` by one over the stored range.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .config import Tolerances, resolve
from .entropy import relative_entropy
from .errors import DimensionMismatch, MTooSmall, ZeroSigma
from .linalg import (
    EigenSystem,
    _support_count,
    as_hermitian,
    compress,
    dagger,
    numerical_rank,
    operator_norm,
    ordered_eig,
    spectral_projector_top,
    trace_norm,
)

# operator inequality slack for P_m <= P_{m+1}
MONOTONE_TOL = 1e-9


class OperatorSequence:
    """PSD terms ``0..N_max`` of a common dimension; term ``0`` is the limit.

    Eigen-decompositions are computed once and cached.  ``distances`` holds
    ``||term(n) - term(0)||_1`` and ``decreasing_on_average`` flags whether
    the second half of those distances averages below the first half.
    """

    def __init__(self, terms, tol: Tolerances | None = None):
        self.tol = resolve(tol)
        self.terms = tuple(as_hermitian(t, self.tol) for t in terms)
        if len(self.terms) < 2:
            raise ValueError("a sequence needs the limit and at least one term")
        if len({t.shape for t in self.terms}) != 1:
            raise DimensionMismatch("sequence terms have different dimensions")
        self._eig = [ordered_eig(t, self.tol) for t in self.terms]
        self._distances = None

    @property
    def dim(self) -> int:
        return self.terms[0].shape[0]

    @property
    def n_max(self) -> int:
        return len(self.terms) - 1

    @property
    def limit(self) -> np.ndarray:
        return self.terms[0]

    def __len__(self) -> int:
        return len(self.terms)

    def __getitem__(self, n):
        return self.terms[n]

    def __iter__(self):
        return iter(self.terms)

    def eig(self, n: int) -> EigenSystem:
        return self._eig[n]

    @property
    def distances(self) -> np.ndarray:
        if self._distances is None:
            self._distances = np.array([trace_norm(t - self.terms[0]) for t in self.terms])
        return self._distances

    @property
    def decreasing_on_average(self) -> bool:
        d = self.distances[1:]
        if d.size < 2:
            return True
        half = d.size // 2
        return bool(np.mean(d[half:]) <= np.mean(d[:half]) + 1e-15)

    def map(self, fn) -> "OperatorSequence":
        return OperatorSequence([fn(t) for t in self.terms], self.tol)


def as_sequence(x, tol: Tolerances | None = None) -> OperatorSequence:
    return x if isinstance(x, OperatorSequence) else OperatorSequence(x, tol)


class ProjectorFamily:
    """Lazily evaluated, memoized double sequence ``(n, m) -> P^n_m``."""

    def __init__(self, fn, m_min: int, m_max: int, n_max: int):
        if m_max < m_min:
            raise ValueError("m_max must be at least m_min")
        self._fn = fn
        self.m_min = int(m_min)
        self.m_max = int(m_max)
        self.n_max = int(n_max)
        self._cache = {}

    def at(self, n: int, m: int) -> np.ndarray:
        key = (int(n), int(m))
        if key not in self._cache:
            p = np.asarray(self._fn(*key), dtype=np.complex128)
            p.setflags(write=False)
            self._cache[key] = p
        return self._cache[key]

    @property
    def ms(self) -> range:
        return range(self.m_min, self.m_max + 1)


def build_strongly_consistent(sigmas, m_min: int = 0, m_max: int | None = None,
                              tol: Tolerances | None = None) -> ProjectorFamily:
    """Spectral family ``P^n_m`` = projector on the top ``min(m, rank sigma_n)``
    ordered eigenvectors of ``sigma_n``."""
    seq = as_sequence(sigmas, tol)
    m_max = seq.dim if m_max is None else m_max
    return ProjectorFamily(lambda n, m: spectral_projector_top(seq.eig(n), m, seq.tol),
                           m_min, m_max, seq.n_max)


def constant_family(sigma, m_min: int = 0, m_max: int | None = None, n_max: int = 0,
                    tol: Tolerances | None = None) -> ProjectorFamily:
    """Single-operator spectral family ``P_m``, independent of ``n``."""
    tol = resolve(tol)
    es = sigma if isinstance(sigma, EigenSystem) else ordered_eig(sigma, tol)
    m_max = es.dim if m_max is None else m_max
    return ProjectorFamily(lambda n, m: spectral_projector_top(es, m, tol), m_min, m_max, n_max)


def geometric_samples(n_max: int) -> list:
    """``1, 2, 4, ...`` up to ``n_max``, with ``n_max`` always included."""
    out, n = [], 1
    while n < n_max:
        out.append(n)
        n *= 2
    if n_max >= 1:
        out.append(n_max)
    return out


def _min_eig(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (a + dagger(a)))[0])


@dataclass
class ConsistencyReport:
    max_rank: dict = field(default_factory=dict)
    monotone_violations: list = field(default_factory=list)
    coverage_deficit: float = 0.0
    coverage_ok: bool = True
    convergence: dict = field(default_factory=dict)  # m -> distances on geometric samples
    convergence_ok: bool = True
    commutation_max: float | None = None
    rank_violations: list = field(default_factory=list)
    strong: bool = False

    @property
    def monotone_ok(self) -> bool:
        return not self.monotone_violations

    @property
    def commutation_ok(self) -> bool:
        return self.commutation_max is None or self.commutation_max <= 1e-9

    @property
    def passed(self) -> bool:
        ok = self.monotone_ok and self.coverage_ok and self.convergence_ok
        if self.strong:
            ok = ok and self.commutation_ok and not self.rank_violations
        return ok


def _check(family: ProjectorFamily, sigmas, tol, strong: bool) -> ConsistencyReport:
    tol = resolve(tol)
    seq = as_sequence(sigmas, tol)
    if family.at(0, family.m_min).shape[0] != seq.dim:
        raise DimensionMismatch("family and sequence dimensions differ")
    rep = ConsistencyReport(strong=strong)
    ns = range(seq.n_max + 1)
    for m in family.ms:
        rep.max_rank[m] = max(int(round(np.trace(family.at(n, m)).real)) for n in ns)
    for n in ns:
        for m in range(family.m_min, family.m_max):
            if _min_eig(family.at(n, m + 1) - family.at(n, m)) < -MONOTONE_TOL:
                rep.monotone_violations.append((n, m))
    deficits = []
    for n in ns:
        tr = float(np.trace(seq[n]).real)
        covered = float(np.trace(family.at(n, family.m_max) @ seq[n]).real)
        deficits.append(tr - covered - tol.cover_tol * tr)
    rep.coverage_deficit = max(deficits)
    rep.coverage_ok = rep.coverage_deficit <= 0.0
    samples = geometric_samples(seq.n_max)
    for m in family.ms:
        p0 = family.at(0, m)
        dist = [operator_norm(family.at(n, m) - p0) for n in samples]
        rep.convergence[m] = dist
        # finite surrogate: final distance below 1 and no growth over the samples
        if not (dist[-1] < 1.0 and dist[-1] <= dist[0] + MONOTONE_TOL):
            rep.convergence_ok = False
    if strong:
        comm = 0.0
        for n in ns:
            for m in family.ms:
                p = family.at(n, m)
                comm = max(comm, operator_norm(p @ seq[n] - seq[n] @ p))
                rank_p = int(round(np.trace(p).real))
                if numerical_rank(p @ seq[n] @ p, tol) != rank_p:
                    rep.rank_violations.append((n, m))
        rep.commutation_max = comm
    return rep


def check_consistent(family: ProjectorFamily, sigmas, tol: Tolerances | None = None) -> ConsistencyReport:
    """Rank bound, monotonicity in ``m``, coverage at ``m_max`` and convergence in ``n``."""
    return _check(family, sigmas, tol, strong=False)


def check_strongly_consistent(family: ProjectorFamily, sigmas, tol: Tolerances | None = None) -> ConsistencyReport:
    """:func:`check_consistent` plus commutation with ``sigma_n`` and ``rank P sigma P = rank P``."""
    return _check(family, sigmas, tol, strong=True)


def tail_mass(sigmas, family: ProjectorFamily, m: int) -> float:
    """``max_n Tr (I - P^n_m) sigma_n``."""
    seq = as_sequence(sigmas)
    return max(
        float(np.trace(seq[n]).real - np.trace(family.at(n, m) @ seq[n]).real)
        for n in range(seq.n_max + 1)
    )


def dini_tail_sup(table, limits) -> np.ndarray:
    """Per-row ``sup_n |a_n - a^m_n|`` for a table with rows indexed by ``m``."""
    table = np.asarray(table, dtype=float)
    limits = np.asarray(limits, dtype=float)
    if table.ndim != 2 or table.shape[1] != limits.shape[0]:
        raise DimensionMismatch("table columns must match the limit values")
    return np.max(np.abs(table - limits[None, :]), axis=1)


@dataclass
class CriterionProfile:
    ms: list
    sup_d: list
    argmax_n: list
    boundary: list
    n0: int
    n_max: int
    table: np.ndarray  # rows m, columns n = 0..n_max
    d_full: np.ndarray  # D(rho_n || sigma_n) for n = 0..n_max
    witness: tuple | None = None
    eps: float | None = None

    @property
    def b_direction_n0(self) -> int | None:
        """Smallest ``n`` with ``D(rho_n || sigma_n)`` finite."""
        finite = np.flatnonzero(np.isfinite(self.d_full))
        return int(finite[0]) if finite.size else None

    @property
    def d_at_m_max(self) -> np.ndarray:
        return self.table[-1]

    def value(self, m: int) -> float:
        return self.sup_d[self.ms.index(m)]

    def non_increasing(self, slack: float = 1e-9) -> bool:
        v = np.asarray(self.sup_d, dtype=float)
        return bool(np.all(v[1:] <= v[:-1] + slack))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "sup_D", "argmax_n", "boundary_flag"])
        for m, s, a, b in zip(self.ms, self.sup_d, self.argmax_n, self.boundary):
            w.writerow([m, "inf" if math.isinf(s) else repr(float(s)), a, int(b)])
        return buf.getvalue()


def weak_witness(table: np.ndarray, ms, eps: float):
    """Lexicographically smallest ``(m, n0)`` with ``sup_{n >= n0} table[m, n] < eps``."""
    for row, m in zip(table, ms):
        tail_sup = np.maximum.accumulate(row[::-1])[::-1]
        hits = np.flatnonzero(tail_sup < eps)
        if hits.size:
            return int(m), int(hits[0])
    return None


def criterion_profile(rhos, sigmas, family: ProjectorFamily, n0: int = 0,
                      eps: float | None = None, tol: Tolerances | None = None) -> CriterionProfile:
    """Tail relative entropies ``sup_{n0 <= n <= N} D(Q rho_n Q || Q sigma_n Q)``, ``Q = I - P^n_m``.

    The boundary flag marks rows whose maximum sits at ``n = N_max``.  When
    ``eps`` is given the weak-form witness is searched over the whole table.
    """
    tol = resolve(tol)
    rs = as_sequence(rhos, tol)
    ss = as_sequence(sigmas, tol)
    if rs.dim != ss.dim or rs.n_max != ss.n_max:
        raise DimensionMismatch("rho and sigma sequences differ in dimension or length")
    if not 0 <= n0 <= rs.n_max:
        raise ValueError("n0 must lie in [0, N_max]")
    eye = np.eye(rs.dim)
    ms = list(family.ms)
    table = np.empty((len(ms), rs.n_max + 1))
    for i, m in enumerate(ms):
        for n in range(rs.n_max + 1):
            q = eye - family.at(n, m)
            table[i, n] = relative_entropy(compress(rs[n], q, tol), compress(ss[n], q, tol), tol)
    d_full = np.array([relative_entropy(rs[n], ss[n], tol) for n in range(rs.n_max + 1)])
    window = table[:, n0:]
    arg = np.argmax(window, axis=1) + n0
    sup_d = [float(table[i, a]) for i, a in enumerate(arg)]
    prof = CriterionProfile(
        ms=ms,
        sup_d=sup_d,
        argmax_n=[int(a) for a in arg],
        boundary=[bool(a == rs.n_max) for a in arg],
        n0=n0,
        n_max=rs.n_max,
        table=table,
        d_full=d_full,
        eps=eps,
    )
    if eps is not None:
        prof.witness = weak_witness(table, ms, eps)
    return prof


def dominated_tail_bound(rhos, sigmas, family: ProjectorFamily, c: float) -> np.ndarray:
    """Per-``m`` bound ``sup_n [Tr Q sigma_n - ln c Tr Q rho_n]`` valid when ``c rho_n <= sigma_n``
    and ``P^n_m`` commutes with ``sigma_n``."""
    rs, ss = as_sequence(rhos), as_sequence(sigmas)
    eye = np.eye(rs.dim)
    out = []
    for m in family.ms:
        vals = []
        for n in range(rs.n_max + 1):
            q = eye - family.at(n, m)
            vals.append(np.trace(q @ ss[n]).real - math.log(c) * np.trace(q @ rs[n]).real)
        out.append(max(vals))
    return np.array(out)


@dataclass
class SingleSigmaResult:
    found: bool
    m: int | None
    n0: int | None
    profile: CriterionProfile


def single_sigma_criterion(rhos, sigma, eps: float, m_max: int | None = None,
                           tol: Tolerances | None = None) -> SingleSigmaResult:
    """Tail criterion against a fixed ``sigma`` with its spectral family ``P_m``.

    Raises
    ------
    ZeroSigma
        If ``sigma`` is the zero operator.
    """
    tol = resolve(tol)
    rs = as_sequence(rhos, tol)
    es = ordered_eig(sigma, tol)
    if _support_count(es.values, tol) == 0:
        raise ZeroSigma("sigma is the zero operator")
    fam = constant_family(es, 0, rs.dim if m_max is None else m_max, rs.n_max, tol)
    sig = es.reconstruct()
    prof = criterion_profile(rs, OperatorSequence([sig] * len(rs), tol), fam, 0, eps, tol)
    if prof.witness is None:
        return SingleSigmaResult(False, None, None, prof)
    return SingleSigmaResult(True, prof.witness[0], prof.witness[1], prof)


def gap_positions(sigma0, tol: Tolerances | None = None) -> list:
    """1-based indices ``i`` with ``lambda_{i+1} < lambda_i`` (``lambda_{d+1} = 0``)."""
    tol = resolve(tol)
    es = sigma0 if isinstance(sigma0, EigenSystem) else ordered_eig(sigma0, tol)
    r = _support_count(es.values, tol)
    if r == 0:
        raise ZeroSigma("sigma_0 is the zero operator")
    lam = np.concatenate([es.values[:r], [0.0]])
    gap = tol.degeneracy_tol * lam[0]
    return [i + 1 for i in range(r) if lam[i] - lam[i + 1] >= gap]


def gap_aligned_rank(sigma0, m: int, tol: Tolerances | None = None) -> int:
    """Largest spectral-gap position of ``sigma0`` not exceeding ``m``.

    Raises
    ------
    ZeroSigma
        If ``sigma0`` is zero.
    MTooSmall
        If ``m`` is below the multiplicity of the top eigenvalue.
    """
    gaps = gap_positions(sigma0, tol)
    below = [i for i in gaps if i <= m]
    if not below:
        raise MTooSmall(f"m = {m} is below the top multiplicity {gaps[0]}")
    return below[-1]


def gap_aligned_family(sigmas, m_min: int | None = None, m_max: int | None = None,
                       tol: Tolerances | None = None) -> ProjectorFamily:
    """Spectral family of ``sigma_n`` evaluated at the gap-aligned rank of the limit."""
    seq = as_sequence(sigmas, tol)
    gaps = gap_positions(seq.eig(0), seq.tol)
    m_min = gaps[0] if m_min is None else m_min
    m_max = seq.dim if m_max is None else m_max
    return ProjectorFamily(
        lambda n, m: spectral_projector_top(seq.eig(n), gap_aligned_rank(seq.eig(0), m, seq.tol), seq.tol),
        m_min, m_max, seq.n_max,
    )
