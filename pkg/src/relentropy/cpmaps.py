"""Completely positive maps in Kraus form and the dilations built from them.

A :class:`KrausMap` holds a finite list of ``dim_out x dim_in`` matrices
``V_k`` and acts as ``rho -> sum_k V_k rho V_k^H``.  Sums over the Kraus index
always run in list order so results are bitwise reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import Tolerances, resolve
from .errors import (
    DimensionMismatch,
    NotAChannel,
    NotAContraction,
    NotAnOperation,
    ShapeMismatch,
    ZeroLimit,
)
from .linalg import (
    _support_count,
    as_hermitian,
    as_matrix,
    dagger,
    operator_norm,
    ordered_eig,
    psd_sqrt,
    trace_norm,
)
from .randmat import random_contraction, random_hermitian, random_isometry, random_state

KINDS = ("channel", "operation", "general")

# validation slack for the Kraus completeness relations
KRAUS_TOL = 1e-9


def _kraus_gram(ops) -> np.ndarray:
    g = np.zeros((ops[0].shape[1], ops[0].shape[1]), dtype=np.complex128)
    for v in ops:
        g += dagger(v) @ v
    return 0.5 * (g + dagger(g))


@dataclass(frozen=True, eq=False)
class KrausMap:
    """Finite Kraus representation tagged as channel, operation or general CP map.

    Raises
    ------
    NotAChannel
        ``kind="channel"`` and ``sum V^H V`` differs from ``I`` by more than 1e-9.
    NotAnOperation
        ``kind="operation"`` and ``sum V^H V`` exceeds ``I`` by more than 1e-9.
    """

    kraus_ops: tuple
    dim_in: int
    dim_out: int
    kind: str = "general"
    norm: float = field(init=False, repr=False)

    def __post_init__(self):
        ops = tuple(as_matrix(v) for v in self.kraus_ops)
        if not ops:
            raise ValueError("a Kraus map needs at least one operator")
        for v in ops:
            if v.shape != (self.dim_out, self.dim_in):
                raise DimensionMismatch(
                    f"Kraus operator of shape {v.shape}, expected {(self.dim_out, self.dim_in)}"
                )
            v.setflags(write=False)
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        object.__setattr__(self, "kraus_ops", ops)
        gram = _kraus_gram(ops)
        eye = np.eye(self.dim_in)
        if self.kind == "channel" and operator_norm(gram - eye) > KRAUS_TOL:
            raise NotAChannel("Kraus operators are not trace preserving")
        if self.kind == "operation" and np.linalg.eigvalsh(gram - eye)[-1] > KRAUS_TOL:
            raise NotAnOperation("Kraus operators increase the trace")
        object.__setattr__(self, "norm", operator_norm(gram))

    @classmethod
    def from_ops(cls, ops, kind: str = "general") -> "KrausMap":
        ops = [as_matrix(v) for v in ops]
        return cls(tuple(ops), ops[0].shape[1], ops[0].shape[0], kind)

    @property
    def n_kraus(self) -> int:
        return len(self.kraus_ops)

    def gram(self) -> np.ndarray:
        """``sum_k V_k^H V_k = Phi^*(I)``."""
        return _kraus_gram(self.kraus_ops)

    def __call__(self, rho) -> np.ndarray:
        return apply(self, rho)


def identity_channel(d: int) -> KrausMap:
    return KrausMap((np.eye(d, dtype=np.complex128),), d, d, "channel")


def unitary_channel(u) -> KrausMap:
    u = as_matrix(u, square=True)
    return KrausMap((u,), u.shape[0], u.shape[0], "channel")


def apply(phi: KrausMap, rho) -> np.ndarray:
    """``sum_k V_k rho V_k^H``."""
    rho = as_hermitian(rho)
    if rho.shape[0] != phi.dim_in:
        raise DimensionMismatch(f"map acts on dimension {phi.dim_in}, got {rho.shape[0]}")
    out = np.zeros((phi.dim_out, phi.dim_out), dtype=np.complex128)
    for v in phi.kraus_ops:
        out += v @ rho @ dagger(v)
    return 0.5 * (out + dagger(out))


def dual_apply(phi: KrausMap, b) -> np.ndarray:
    """Heisenberg-picture map ``B -> sum_k V_k^H B V_k``."""
    b = as_matrix(b, square=True)
    if b.shape[0] != phi.dim_out:
        raise DimensionMismatch(f"dual map acts on dimension {phi.dim_out}, got {b.shape[0]}")
    out = np.zeros((phi.dim_in, phi.dim_in), dtype=np.complex128)
    for v in phi.kraus_ops:
        out += dagger(v) @ b @ v
    return out


def partial_trace_E(rho, dim_b: int, dim_e: int) -> np.ndarray:
    """Trace out the second factor of a ``dim_b * dim_e`` operator (B-major order)."""
    rho = as_matrix(rho, square=True)
    if dim_b < 1 or dim_e < 1 or rho.shape[0] != dim_b * dim_e:
        raise ShapeMismatch(f"dimension {rho.shape[0]} is not {dim_b} x {dim_e}")
    return np.einsum("aebe->ab", rho.reshape(dim_b, dim_e, dim_b, dim_e))


def dilate_operation_to_channel(phi: KrausMap, tau_index: int | None = None):
    """Extend an operation to a channel on ``dim_out + 1`` dimensions.

    The channel is ``rho -> Phi(rho) (+) Tr[(I - Phi^*(I)) rho] |t><t|`` with
    ``t`` the appended basis vector.  Returns the channel and the projector
    ``P_B`` onto the original output space, so ``P_B Phi~(rho) P_B = Phi(rho)``.

    Raises
    ------
    NotAnOperation
        If ``Phi`` increases the trace of some input.
    """
    if phi.kind == "general" and np.linalg.eigvalsh(phi.gram() - np.eye(phi.dim_in))[-1] > KRAUS_TOL:
        raise NotAnOperation("map increases the trace")
    d_out = phi.dim_out + 1
    t = phi.dim_out if tau_index is None else tau_index
    deficit = np.eye(phi.dim_in) - phi.gram()
    root = psd_sqrt(deficit, Tolerances(psd_slack=KRAUS_TOL))
    ops = []
    for v in phi.kraus_ops:
        big = np.zeros((d_out, phi.dim_in), dtype=np.complex128)
        big[: phi.dim_out, :] = v
        ops.append(big)
    # |t><j| sqrt(Delta) for each input basis vector j
    for j in range(phi.dim_in):
        extra = np.zeros((d_out, phi.dim_in), dtype=np.complex128)
        extra[t, :] = root[j, :]
        ops.append(extra)
    p_b = np.zeros((d_out, d_out), dtype=np.complex128)
    p_b[: phi.dim_out, : phi.dim_out] = np.eye(phi.dim_out)
    return KrausMap(tuple(ops), phi.dim_in, d_out, "channel"), p_b


def stinespring_isometry(phi: KrausMap):
    """Isometry ``V|x> = sum_k V_k|x> (x) |k>`` and the environment size.

    Rows are indexed ``b * K + k`` (system index major).  Returns ``(V, dim_b, dim_e)``.

    Raises
    ------
    NotAChannel
        If the Kraus operators are not trace preserving.
    """
    if operator_norm(phi.gram() - np.eye(phi.dim_in)) > KRAUS_TOL:
        raise NotAChannel("Stinespring isometry needs a channel")
    k = phi.n_kraus
    stacked = np.stack(phi.kraus_ops, axis=1)  # (dim_out, K, dim_in)
    return stacked.reshape(phi.dim_out * k, phi.dim_in), phi.dim_out, k


def contraction_dilation(v) -> np.ndarray:
    """``[V; sqrt(I - V^H V)]``, an isometry whose top block is ``V``.

    Raises
    ------
    NotAContraction
        If ``||V|| > 1 + 1e-12``.
    """
    v = as_matrix(v)
    if operator_norm(v) > 1.0 + 1e-12:
        raise NotAContraction(f"operator norm {operator_norm(v):.15g} exceeds 1")
    defect = np.eye(v.shape[1]) - dagger(v) @ v
    root = psd_sqrt(0.5 * (defect + dagger(defect)), Tolerances(psd_slack=1e-11))
    return np.vstack([v, root])


def tail_map(phi: KrausMap, j: int) -> KrausMap:
    """Operation built from the Kraus operators with (1-based) index above ``j``."""
    if not 0 <= j <= phi.n_kraus:
        raise ValueError(f"j must lie in [0, {phi.n_kraus}]")
    kind = "general" if phi.kind == "general" else "operation"
    if j == 0:
        return phi
    if j == phi.n_kraus:
        zero = np.zeros((phi.dim_out, phi.dim_in), dtype=np.complex128)
        return KrausMap((zero,), phi.dim_in, phi.dim_out, kind)
    return KrausMap(phi.kraus_ops[j:], phi.dim_in, phi.dim_out, kind)


def head_map(phi: KrausMap, j: int) -> KrausMap:
    """Complement of :func:`tail_map`: Kraus operators with index at most ``j``."""
    if not 0 <= j <= phi.n_kraus:
        raise ValueError(f"j must lie in [0, {phi.n_kraus}]")
    kind = "general" if phi.kind == "general" else "operation"
    if j == 0:
        zero = np.zeros((phi.dim_out, phi.dim_in), dtype=np.complex128)
        return KrausMap((zero,), phi.dim_in, phi.dim_out, kind)
    return KrausMap(phi.kraus_ops[:j], phi.dim_in, phi.dim_out, kind)


def _block_bounds(values: np.ndarray, tol: Tolerances):
    """Cumulative multiplicity boundaries of the distinct positive eigenvalues."""
    r = _support_count(values, tol)
    scale = values[0]
    bounds = [0]
    for i in range(1, r):
        if values[i - 1] - values[i] >= tol.degeneracy_tol * scale:
            bounds.append(i)
    bounds.append(r)
    return bounds


def support_alignment_isometry(sigmas, n: int, tol: Tolerances | None = None) -> np.ndarray:
    """Partial isometry ``W_n`` carrying the spectral blocks of ``sigma_0`` onto those of ``sigma_n``.

    ``sigma_0`` is split into its distinct-eigenvalue blocks with multiplicities
    ``m_1, m_2, ...``.  Block ``k`` of ``sigma_n`` is spanned by its ordered
    eigenvectors ``m_1 + ... + m_{k-1}`` to ``m_1 + ... + m_k - 1``, kernel
    vectors included when ``sigma_n`` has lower rank.  Each block pair is joined
    by the unitary factor of the polar decomposition of the overlap, so that
    ``W_n^H W_n = R_0`` (support projector of ``sigma_0``) and
    ``W_n^H sigma_n W_n`` is diagonal in the eigenbasis of ``sigma_0`` with the
    leading eigenvalues of ``sigma_n``.

    Raises
    ------
    ZeroLimit
        If ``sigma_0`` is the zero operator.
    """
    tol = resolve(tol)
    es0 = ordered_eig(sigmas[0], tol)
    if _support_count(es0.values, tol) == 0:
        raise ZeroLimit("sigma_0 is the zero operator")
    esn = ordered_eig(sigmas[n], tol)
    if esn.dim != es0.dim:
        raise DimensionMismatch("sequence terms have different dimensions")
    bounds = _block_bounds(es0.values, tol)
    w = np.zeros((es0.dim, es0.dim), dtype=np.complex128)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        b0 = es0.vectors[:, lo:hi]
        bn = esn.vectors[:, lo:hi]
        x, _, yh = np.linalg.svd(dagger(bn) @ b0)
        w += bn @ (x @ yh) @ dagger(b0)
    return w


def default_probes(d: int, seed: int = 0, n_random: int = 8) -> list:
    """Coordinate pure states, the maximally mixed state and seeded random states."""
    rng = np.random.default_rng(seed)
    probes = []
    for i in range(d):
        e = np.zeros((d, d), dtype=np.complex128)
        e[i, i] = 1.0
        probes.append(e)
    probes.append(np.eye(d, dtype=np.complex128) / d)
    probes.extend(random_state(rng, d) for _ in range(n_random))
    return probes


def default_observables(d: int, seed: int = 0, n_random: int = 8) -> list:
    """Coordinate projectors and seeded random Hermitian matrices of unit norm."""
    rng = np.random.default_rng(seed + 1)
    obs = []
    for i in range(d):
        e = np.zeros((d, d), dtype=np.complex128)
        e[i, i] = 1.0
        obs.append(e)
    for _ in range(n_random):
        h = random_hermitian(rng, d)
        obs.append(h / operator_norm(h))
    return obs


@dataclass
class StrongConvergenceResidual:
    primal: np.ndarray  # index n - 1 holds max_rho ||Phi_n(rho) - Phi_0(rho)||_1
    dual: np.ndarray  # index n - 1 holds max_{rho, B} |Tr rho (Phi_n^*(B) - Phi_0^*(B))|


def strong_convergence_residual(phis, probes=None, observables=None, seed: int = 0) -> StrongConvergenceResidual:
    """Probe-set residuals of ``Phi_n -> Phi_0`` (``phis[0]`` is the limit)."""
    limit = phis[0]
    for phi in phis:
        if (phi.dim_in, phi.dim_out) != (limit.dim_in, limit.dim_out):
            raise DimensionMismatch("maps in the sequence have different dimensions")
    probes = default_probes(limit.dim_in, seed) if probes is None else probes
    observables = default_observables(limit.dim_out, seed) if observables is None else observables
    ref_img = [apply(limit, r) for r in probes]
    ref_dual = [dual_apply(limit, b) for b in observables]
    primal, dual = [], []
    for phi in phis[1:]:
        primal.append(max(trace_norm(apply(phi, r) - ri) for r, ri in zip(probes, ref_img)))
        diffs = [dual_apply(phi, b) - bd for b, bd in zip(observables, ref_dual)]
        dual.append(max(abs(np.trace(r @ df)) for r in probes for df in diffs))
    return StrongConvergenceResidual(np.array(primal), np.array(dual))


def random_channel(rng: np.random.Generator, d_in: int, d_out: int | None = None, n_kraus: int = 3) -> KrausMap:
    """Channel from a Haar-random isometry ``C^{d_in} -> C^{d_out} (x) C^K``.

    Needs ``d_out * n_kraus >= d_in`` for the isometry to exist.
    """
    d_out = d_in if d_out is None else d_out
    if d_out * n_kraus < d_in:
        raise ValueError(f"{n_kraus} Kraus operators of shape {d_out}x{d_in} cannot be trace preserving")
    v = random_isometry(rng, d_out * n_kraus, d_in)
    ops = v.reshape(d_out, n_kraus, d_in).transpose(1, 0, 2)
    return KrausMap(tuple(np.ascontiguousarray(o) for o in ops), d_in, d_out, "channel")


def random_operation(rng: np.random.Generator, d_in: int, d_out: int | None = None, n_kraus: int = 3) -> KrausMap:
    """Random channel followed by a random contraction on its output."""
    d_out = d_in if d_out is None else d_out
    ch = random_channel(rng, d_in, d_out, n_kraus)
    c = random_contraction(rng, d_out, d_out)
    return KrausMap(tuple(c @ v for v in ch.kraus_ops), d_in, d_out, "operation")
