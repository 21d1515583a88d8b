"""Seeded scenario generators and the experiments run on them.

Generators return :class:`~relentropy.projectors.OperatorSequence` objects
whose term ``0`` is the limit.  Experiments return :class:`ExperimentReport`
values that serialize to JSON plus a CSV with one row per ``n``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .config import Tolerances, resolve
from .cpmaps import KrausMap, apply
from .entropy import h2, relative_entropy
from .errors import BlockOverflow, DimensionMismatch, EnergyTooSmall, ImagesNotConverging, InvalidWeights
from .linalg import dagger, ordered_eig, psd_sqrt, trace_norm
from .projectors import OperatorSequence, as_sequence, build_strongly_consistent, criterion_profile
from .randmat import random_hermitian, random_unitary


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _geometric_spectrum(rng, d: int, ratio: float = 0.5) -> np.ndarray:
    w = ratio ** np.arange(d) * rng.uniform(0.75, 1.0, d)
    return w / w.sum()


def _wiggle(rng, base: np.ndarray, t: float) -> np.ndarray:
    """``(1 - t) A + t A^{1/2} X A^{1/2}`` with ``0 <= X = I + H``, ``||H|| <= 1``.

    Stays PSD with the support of ``A`` and lies within ``2 t Tr A`` of ``A``
    in trace norm.
    """
    h = random_hermitian(rng, base.shape[0])
    h /= max(np.linalg.norm(h, 2), 1e-300)
    root = psd_sqrt(base)
    x = np.eye(base.shape[0]) + h
    out = (1.0 - t) * base + t * (root @ x @ root)
    return 0.5 * (out + dagger(out))


def _converging(rng, limit: np.ndarray, n_max: int, t0: float, decay: float) -> list:
    return [limit] + [_wiggle(rng, limit, t0 * decay**n) for n in range(1, n_max + 1)]


def dominated_sequences(rhos, etas, c: float, tol: Tolerances | None = None):
    """``sigma_n = c rho_n + eta_n`` together with the domination check.

    Returns ``(rhos, sigmas, margin)`` where ``margin`` is the smallest
    eigenvalue of ``sigma_n - c rho_n`` over ``n``.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    tol = resolve(tol)
    rs = as_sequence(rhos, tol)
    es = as_sequence(etas, tol)
    if rs.dim != es.dim or rs.n_max != es.n_max:
        raise DimensionMismatch("rho and eta sequences differ in shape")
    sigmas = OperatorSequence([c * r + e for r, e in zip(rs, es)], tol)
    margin = min(float(np.linalg.eigvalsh(s - c * r)[0]) for r, s in zip(rs, sigmas))
    return rs, sigmas, margin


def gen_dominated(seed: int, d: int, n_max: int, c: float, t0: float = 0.5, decay: float = 0.5,
                  tol: Tolerances | None = None):
    """Converging ``rho_n`` and ``sigma_n = c rho_n + eta_n`` with ``c rho_n <= sigma_n``.

    ``rho_0`` and ``eta_0`` have geometrically decaying spectra in independent
    Haar-random bases, and the ``n``-th term sits ``O(t0 decay^n)`` away from
    the limit.  Returns ``(rhos, sigmas, margin)``.
    """
    rng = np.random.default_rng(seed)
    u_rho, u_eta = random_unitary(rng, d), random_unitary(rng, d)
    rho0 = (u_rho * _geometric_spectrum(rng, d)) @ dagger(u_rho)
    eta0 = (u_eta * _geometric_spectrum(rng, d)) @ dagger(u_eta)
    rhos = _converging(rng, 0.5 * (rho0 + dagger(rho0)), n_max, t0, decay)
    etas = _converging(rng, 0.5 * (eta0 + dagger(eta0)), n_max, t0, decay)
    return dominated_sequences(rhos, etas, c, tol)


@dataclass
class BlockScenario:
    rhos: list  # K sequences
    sigmas: list
    rho_sum: OperatorSequence
    sigma_sum: OperatorSequence
    masses: np.ndarray
    blocks: list  # coordinate slices


def gen_block_sums(seed: int, d: int, n_max: int, k: int, block_dim: int = 2, t0: float = 0.5,
                   decay: float = 0.5, tol: Tolerances | None = None) -> BlockScenario:
    """``K`` converging pairs on disjoint coordinate blocks with masses ``2^{-k}`` and their sums.

    Raises
    ------
    BlockOverflow
        If ``k * block_dim > d``.
    """
    if k * block_dim > d:
        raise BlockOverflow(f"{k} blocks of size {block_dim} do not fit in dimension {d}")
    tol = resolve(tol)
    rng = np.random.default_rng(seed)
    masses = 0.5 ** np.arange(k)
    rhos, sigmas, blocks = [], [], []
    for j in range(k):
        sl = slice(j * block_dim, (j + 1) * block_dim)
        blocks.append(sl)
        pair = []
        for _ in range(2):
            u = random_unitary(rng, block_dim)
            small = (u * _geometric_spectrum(rng, block_dim)) @ dagger(u) * masses[j]
            terms = []
            for x in _converging(rng, 0.5 * (small + dagger(small)), n_max, t0, decay):
                big = np.zeros((d, d), dtype=np.complex128)
                big[sl, sl] = x
                terms.append(big)
            pair.append(OperatorSequence(terms, tol))
        rhos.append(pair[0])
        sigmas.append(pair[1])
    rho_sum = OperatorSequence([sum(s[n] for s in rhos) for n in range(n_max + 1)], tol)
    sigma_sum = OperatorSequence([sum(s[n] for s in sigmas) for n in range(n_max + 1)], tol)
    return BlockScenario(rhos, sigmas, rho_sum, sigma_sum, masses, blocks)


@dataclass(frozen=True)
class GibbsModel:
    """Hamiltonian ``sum_k E_k |k><k|`` truncated to ``d`` levels at inverse temperature ``beta``."""

    beta: float
    energies: tuple

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if e.ndim != 1 or e.size < 1:
            raise ValueError("energies must be a nonempty list")
        if np.any(e < 0) or np.any(np.diff(e) < 0):
            raise ValueError("energies must be nonnegative and non-decreasing")
        object.__setattr__(self, "energies", tuple(float(x) for x in e))

    @classmethod
    def oscillator(cls, d: int = 64, beta: float = 1.0) -> "GibbsModel":
        return cls(beta, tuple(float(k) for k in range(d)))

    @property
    def d(self) -> int:
        return len(self.energies)

    @property
    def hamiltonian(self) -> np.ndarray:
        return np.diag(np.asarray(self.energies)).astype(np.complex128)

    def partition_sum(self) -> float:
        return float(math.fsum(math.exp(-self.beta * e) for e in self.energies))


def gibbs_state(model: GibbsModel) -> np.ndarray:
    """``diag(exp(-beta E_k)) / C_beta`` in the energy basis."""
    e = np.asarray(model.energies)
    w = np.exp(-model.beta * (e - e[0]))
    return np.diag(w / math.fsum(w)).astype(np.complex128)


def gibbs_tolerances(model: GibbsModel, tol: Tolerances | None = None) -> Tolerances:
    """Tolerances whose rank cut lies below the smallest Boltzmann weight.

    The truncated Gibbs state is full rank by construction, but its weights
    span ``exp(-beta (E_max - E_0))``, which can be far below the default
    relative rank cut.  Its eigenvalues are exact diagonal entries, so the
    cut is lowered to a thousandth of the smallest weight ratio.
    """
    tol = resolve(tol)
    e = np.asarray(model.energies)
    ratio = math.exp(-model.beta * (e[-1] - e[0]))
    if ratio == 0.0:
        raise ValueError("Boltzmann weights underflow; lower beta or the truncation")
    return tol.replace(rank_rel_tol=min(tol.rank_rel_tol, 1e-3 * ratio))


def counterexample_closed_form(model: GibbsModel, e_n: float) -> float:
    """``beta (E_0 (1 - 1/E_n) + 1) + ln C_beta - h2(1/E_n)``."""
    e0 = model.energies[0]
    return model.beta * (e0 * (1.0 - 1.0 / e_n) + 1.0) + math.log(model.partition_sum()) - h2(1.0 / e_n)


@dataclass
class CounterexampleReport:
    ns: list
    energies: list
    d_computed: list
    d_closed: list
    residuals: list
    mean_energy: list
    d_limit: float
    d_limit_closed: float
    gaps: list
    gaps_closed: list

    @property
    def max_residual(self) -> float:
        return max(abs(r) for r in self.residuals)


def gen_counterexample(model: GibbsModel, n_max: int, n_start: int = 2, tol: Tolerances | None = None):
    """States ``(1 - 1/E_n)|0><0| + (1/E_n)|n><n|`` whose mean energy stays bounded
    while ``D(rho_n || gamma_beta)`` does not converge to ``D(rho_0 || gamma_beta)``.

    Returns ``(rhos, report)`` with ``rhos[0] = |0><0|`` and ``rhos[i]`` the
    state for ``n = n_start + i - 1``.

    Raises
    ------
    EnergyTooSmall
        If some ``E_n <= 1`` in ``n_start..n_max``.
    """
    tol = gibbs_tolerances(model, tol)
    if n_max >= model.d:
        raise ValueError(f"n_max must be below the truncation dimension {model.d}")
    gamma = gibbs_state(model)
    h = model.hamiltonian
    d = model.d
    rho0 = np.zeros((d, d), dtype=np.complex128)
    rho0[0, 0] = 1.0
    terms, ns, energies = [rho0], [], []
    d_comp, d_closed, res, mean_e = [], [], [], []
    d_lim = relative_entropy(rho0, gamma, tol)
    d_lim_closed = model.beta * model.energies[0] + math.log(model.partition_sum())
    for n in range(n_start, n_max + 1):
        e_n = model.energies[n]
        if e_n <= 1.0:
            raise EnergyTooSmall(f"E_{n} = {e_n} is not above 1")
        rho = np.zeros((d, d), dtype=np.complex128)
        rho[0, 0] = 1.0 - 1.0 / e_n
        rho[n, n] = 1.0 / e_n
        terms.append(rho)
        val = relative_entropy(rho, gamma, tol)
        cf = counterexample_closed_form(model, e_n)
        ns.append(n)
        energies.append(e_n)
        d_comp.append(val)
        d_closed.append(cf)
        res.append(val - cf)
        mean_e.append(float(np.trace(h @ rho).real))
    gaps = [v - d_lim for v in d_comp]
    e0 = model.energies[0]
    gaps_closed = [model.beta * (1.0 - e0 / e) - h2(1.0 / e) for e in energies]
    report = CounterexampleReport(ns, energies, d_comp, d_closed, res, mean_e, d_lim, d_lim_closed,
                                  gaps, gaps_closed)
    return OperatorSequence(terms, tol), report


def moment_bounded_sequence(model: GibbsModel, n_max: int, alpha: float = 3.0, n_start: int = 2,
                            tol: Tolerances | None = None) -> OperatorSequence:
    """Like the counterexample but with weight ``E_n^{-alpha}`` on level ``n``.

    For ``alpha > 2`` the second energy moment stays bounded, so the energy
    tail condition holds with ``c_k = E_k + 1``.
    """
    tol = gibbs_tolerances(model, tol)
    d = model.d
    rho0 = np.zeros((d, d), dtype=np.complex128)
    rho0[0, 0] = 1.0
    terms = [rho0]
    for n in range(n_start, n_max + 1):
        a = model.energies[n] ** (-alpha)
        rho = np.zeros((d, d), dtype=np.complex128)
        rho[0, 0] = 1.0 - a
        rho[n, n] = a
        terms.append(rho)
    return OperatorSequence(terms, tol)


@dataclass
class GibbsTailReport:
    energy_bound: float  # sup_n Tr H_c rho_n
    tails: np.ndarray  # rows n, columns m: sum_{k >= m} E_k <k|rho_n|k>
    tail_bounds: np.ndarray  # B / c_m per m
    tail_ok: bool
    d_values: list
    d_limit: float
    gap: float
    converged: bool


def gibbs_tail_check(model: GibbsModel, rhos, c, n0: int = 0, gap_tol: float = 1e-3,
                     tol: Tolerances | None = None) -> GibbsTailReport:
    """Energy-tail bound ``sum_{k >= m} E_k <k|rho_n|k> <= B / c_m`` with
    ``B = sup_n Tr H_c rho_n``, and the relative-entropy gap to the Gibbs state at ``N_max``.

    Raises
    ------
    InvalidWeights
        If ``c`` is not positive and non-decreasing with ``c_last > c_0``.
    """
    c = np.asarray(c, dtype=float)
    if c.shape != (model.d,) or np.any(c <= 0) or np.any(np.diff(c) < 0) or not c[-1] > c[0]:
        raise InvalidWeights("c_k must be positive, non-decreasing and grow over the truncation")
    tol = gibbs_tolerances(model, tol)
    rs = as_sequence(rhos, tol)
    e = np.asarray(model.energies)
    diag = np.array([np.real(np.diag(r)) for r in rs])[n0:]
    weighted = diag * e[None, :]
    bound = float(np.max(weighted @ c))
    tails = np.cumsum(weighted[:, ::-1], axis=1)[:, ::-1]
    tail_bounds = bound / c
    tail_ok = bool(np.all(tails <= tail_bounds[None, :] + 1e-9))
    gamma = gibbs_state(model)
    d_vals = [relative_entropy(r, gamma, tol) for r in rs]
    gap = abs(d_vals[-1] - d_vals[0])
    return GibbsTailReport(bound, tails, tail_bounds, tail_ok, d_vals, d_vals[0], gap, gap <= gap_tol)


def converges(gaps, tol: float) -> bool:
    """All of the last quarter of the recorded gaps are at most ``tol``."""
    g = np.abs(np.asarray(gaps, dtype=float))
    if g.size == 0:
        return False
    q = max(1, g.size // 4)
    return bool(np.all(g[-q:] <= tol))


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf"
    return repr(float(x))


@dataclass
class ExperimentReport:
    """Per-``n`` relative entropies before and after a map plus verdicts."""

    kind: str
    d_in: list
    d_out: list
    d_in_limit: float
    d_out_limit: float
    hypothesis_met: bool
    conclusion_holds: bool | None
    monotone_ok: bool | None
    seed: int | None = None
    config: dict = field(default_factory=dict)
    profile_in: list | None = None
    profile_out: list | None = None
    extra: dict = field(default_factory=dict)
    runtime_s: float = 0.0

    @property
    def gap_in(self) -> list:
        return [abs(v - self.d_in_limit) for v in self.d_in]

    @property
    def gap_out(self) -> list:
        return [abs(v - self.d_out_limit) for v in self.d_out]

    @property
    def passed(self) -> bool:
        return self.conclusion_holds is not False and self.monotone_ok is not False

    def to_dict(self) -> dict:
        """Serializable form; runtime is left out so repeated runs compare equal."""
        return {
            "kind": self.kind,
            "seed": self.seed,
            "config": self.config,
            "config_hash": config_hash(self.config),
            "d_in_limit": _fmt(self.d_in_limit),
            "d_out_limit": _fmt(self.d_out_limit),
            "gap_in_final": _fmt(self.gap_in[-1]),
            "gap_out_final": _fmt(self.gap_out[-1]),
            "hypothesis_met": self.hypothesis_met,
            "conclusion_holds": self.conclusion_holds,
            "monotone_ok": self.monotone_ok,
            "profile_in": None if self.profile_in is None else [_fmt(x) for x in self.profile_in],
            "profile_out": None if self.profile_out is None else [_fmt(x) for x in self.profile_out],
            "extra": self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "D_in", "D_out", "gap_in", "gap_out"])
        for n, (a, b, ga, gb) in enumerate(zip(self.d_in, self.d_out, self.gap_in, self.gap_out)):
            w.writerow([n, _fmt(a), _fmt(b), _fmt(ga), _fmt(gb)])
        return buf.getvalue()


def cp_preservation_experiment(rhos, sigmas, phi: KrausMap, in_tol: float = 1e-8, out_tol: float = 1e-6,
                               profiles: bool = False, seed: int | None = None, config: dict | None = None,
                               tol: Tolerances | None = None) -> ExperimentReport:
    """Push a converging pair through ``Phi`` and compare the relative-entropy gaps at ``N_max``.

    The conclusion (output gap at most ``out_tol``) is only asserted when the
    hypothesis (input gap at most ``in_tol``) holds; otherwise it is ``None``.
    ``monotone_ok`` records ``D(Phi rho_n || Phi sigma_n) <= D(rho_n || sigma_n) + 1e-9``
    for every ``n`` and is ``None`` for maps that are not operations.
    """
    start = time.perf_counter()
    tol = resolve(tol)
    rs, ss = as_sequence(rhos, tol), as_sequence(sigmas, tol)
    if rs.dim != phi.dim_in or ss.dim != phi.dim_in:
        raise DimensionMismatch(f"map input dimension {phi.dim_in}, sequences have {rs.dim}")
    img_r = OperatorSequence([apply(phi, r) for r in rs], tol)
    img_s = OperatorSequence([apply(phi, s) for s in ss], tol)
    rep = _compare_sequences("cp-preserve", rs, ss, img_r, img_s, in_tol, out_tol, profiles, tol)
    if phi.kind != "general":
        rep.monotone_ok = bool(all(
            math.isinf(a) or b <= a + 1e-9 for a, b in zip(rep.d_in, rep.d_out)
        ))
    rep.seed = seed
    rep.config = config or {}
    rep.runtime_s = time.perf_counter() - start
    return rep


def _compare_sequences(kind, rs, ss, img_r, img_s, in_tol, out_tol, profiles, tol) -> ExperimentReport:
    d_in = [relative_entropy(r, s, tol) for r, s in zip(rs, ss)]
    d_out = [relative_entropy(r, s, tol) for r, s in zip(img_r, img_s)]
    gap_in = abs(d_in[-1] - d_in[0]) if math.isfinite(d_in[0]) else math.inf
    gap_out = abs(d_out[-1] - d_out[0]) if math.isfinite(d_out[0]) else math.inf
    hyp = bool(gap_in <= in_tol)
    concl = bool(gap_out <= out_tol) if hyp else None
    rep = ExperimentReport(kind, d_in, d_out, d_in[0], d_out[0], hyp, concl, None)
    if profiles:
        rep.profile_in = criterion_profile(rs, ss, build_strongly_consistent(ss), 0, tol=tol).sup_d
        rep.profile_out = criterion_profile(img_r, img_s, build_strongly_consistent(img_s), 0, tol=tol).sup_d
    return rep


def images_converge(images: OperatorSequence, limit) -> tuple:
    """Trend test on ``||image_n - limit||_1``: the last quarter must fall to half the
    first quarter, or everything must already be below 1e-9.  Returns ``(ok, distances)``."""
    dist = np.array([trace_norm(x - limit) for x in images.terms[1:]])
    q = max(1, dist.size // 4)
    ok = bool(np.max(dist) <= 1e-9 or np.max(dist[-q:]) <= 0.5 * np.max(dist[:q]))
    return ok, dist


def varying_map_experiment(rhos, sigmas, phis, limit_map: KrausMap | None = None, in_tol: float = 1e-8,
                           out_tol: float = 1e-6, profiles: bool = False, seed: int | None = None,
                           config: dict | None = None, tol: Tolerances | None = None) -> ExperimentReport:
    """Apply ``Phi_n`` to the ``n``-th terms and compare gaps at ``N_max``.

    ``phis[n]`` acts on term ``n`` for ``n >= 1``.  The limit images use
    ``limit_map`` when it is given (recording the strong-convergence residual
    of ``phis`` against it) and ``phis[0]`` otherwise.

    Raises
    ------
    ImagesNotConverging
        If either image sequence fails the trend test of :func:`images_converge`;
        the exception carries the partial report.
    """
    from .cpmaps import strong_convergence_residual

    start = time.perf_counter()
    tol = resolve(tol)
    rs, ss = as_sequence(rhos, tol), as_sequence(sigmas, tol)
    if len(phis) != len(rs):
        raise DimensionMismatch("need one map per sequence term")
    lim = phis[0] if limit_map is None else limit_map
    img_r = OperatorSequence([apply(lim, rs[0])] + [apply(phis[n], rs[n]) for n in range(1, len(rs))], tol)
    img_s = OperatorSequence([apply(lim, ss[0])] + [apply(phis[n], ss[n]) for n in range(1, len(ss))], tol)
    ok_r, dist_r = images_converge(img_r, img_r[0])
    ok_s, dist_s = images_converge(img_s, img_s[0])
    extra = {"image_distance_rho_final": _fmt(dist_r[-1]), "image_distance_sigma_final": _fmt(dist_s[-1])}
    if limit_map is not None:
        resid = strong_convergence_residual([limit_map] + list(phis[1:]))
        extra["strong_residual_final"] = _fmt(resid.primal[-1])
        extra["dual_residual_final"] = _fmt(resid.dual[-1])
    if not (ok_r and ok_s):
        raise ImagesNotConverging("image sequences do not converge", report=extra)
    rep = _compare_sequences("varying-maps", rs, ss, img_r, img_s, in_tol, out_tol, profiles, tol)
    rep.extra = extra
    rep.seed = seed
    rep.config = config or {}
    rep.runtime_s = time.perf_counter() - start
    return rep


def rotation_channels(base: KrausMap, n_max: int, scale: float = 1.0, seed: int = 0) -> list:
    """``Phi_n = U_n Phi(.) U_n^H`` with ``U_n = exp(-i H / n)`` for a fixed unit-norm
    Hermitian ``H``; ``Phi_0 = Phi``."""
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, base.dim_out)
    es = ordered_eig(h, psd=False)
    out = [base]
    for n in range(1, n_max + 1):
        u = (es.vectors * np.exp(-1j * es.values * scale / (n * np.abs(es.values).max()))) @ dagger(es.vectors)
        out.append(KrausMap(tuple(u @ v for v in base.kraus_ops), base.dim_in, base.dim_out, base.kind))
    return out


def identity_instance(rng: np.random.Generator, d: int, orthogonal: bool = False):
    """Random ``(rho, sigma, omega, theta)`` for the identity suite.

    With ``orthogonal=True`` the pair ``rho, omega`` lives on a random
    subspace and ``sigma, theta`` on its complement, so the direct-sum
    equality applies.  Otherwise ranks are drawn at random, which also
    produces support violations and infinite values.
    """
    from .randmat import random_psd

    def psd(rank, trace):
        return random_psd(rng, d, rank, trace)

    if not orthogonal:
        ranks = np.full(4, d)
        ranks[0] = rng.integers(1, d + 1)
        # occasional rank-deficient references exercise the infinite branch
        ranks[1:][rng.uniform(size=3) < 0.1] = d - 1
        traces = rng.uniform(0.2, 2.0, size=4)
        return tuple(psd(int(r), float(t)) for r, t in zip(ranks, traces))
    u = random_unitary(rng, d)
    k = int(rng.integers(1, d))
    a, b = u[:, :k], u[:, k:]

    def on(basis):
        g = rng.standard_normal((basis.shape[1],) * 2) + 1j * rng.standard_normal((basis.shape[1],) * 2)
        x = basis @ (g @ dagger(g)) @ dagger(basis)
        x = 0.5 * (x + dagger(x))
        return x * (rng.uniform(0.2, 2.0) / np.trace(x).real)

    rho, omega = on(a), on(a)
    sigma, theta = on(b), on(b)
    return rho, sigma, omega, theta


def identity_suite(seed: int, d: int, instances: int, c: float = 2.0, orthogonal_every: int = 4,
                   tol: Tolerances | None = None) -> list:
    """Run the identity checks on seeded random tuples; every ``orthogonal_every``-th
    tuple uses orthogonal blocks.  Returns a list of reports."""
    from .entropy import check_identities

    rng = np.random.default_rng(seed)
    out = []
    for i in range(instances):
        orth = orthogonal_every > 0 and i % orthogonal_every == orthogonal_every - 1
        rho, sigma, omega, theta = identity_instance(rng, d, orth)
        out.append(check_identities(rho, sigma, omega, theta, c, tol))
    return out
