"""Entropies and Lindblad's relative entropy on the positive cone.

Values of the relative entropy are plain floats; ``math.inf`` stands for
``+infinity`` and propagates through sums the usual way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import Tolerances, resolve
from .errors import BothZero, DimensionMismatch, NegativeInput, NonCommuting, NotPositive
from .linalg import (
    EigenSystem,
    as_hermitian,
    compress,
    log_on_support,
    operator_norm,
    ordered_eig,
    support_contained,
)

INF = math.inf


def ext_real(x: float, tol: Tolerances | None = None) -> float:
    """Validate a value of an entropic quantity: ``+inf`` or finite and
    not below ``-ext_slack``."""
    tol = resolve(tol)
    if math.isnan(x):
        raise ValueError("entropic quantity is NaN")
    if x < -tol.ext_slack:
        raise NotPositive(f"entropic quantity {x:.3e} is negative beyond slack")
    return float(x)


def eta(x: float) -> float:
    """``-x ln x`` with ``eta(0) = 0``."""
    if x < 0:
        raise NegativeInput(f"eta is defined on [0, inf), got {x}")
    if x == 0:
        return 0.0
    return -x * math.log(x)


def _eta_sum(values: np.ndarray) -> float:
    pos = values[values > 0]
    return float(-np.sum(pos * np.log(pos)))


def _eigvals(rho, tol) -> np.ndarray:
    es = rho if isinstance(rho, EigenSystem) else ordered_eig(rho, tol)
    return np.clip(es.values, 0.0, None)


def von_neumann_entropy_ext(rho, tol: Tolerances | None = None) -> float:
    """Homogeneous extension ``Tr eta(rho) - eta(Tr rho)``; zero at ``rho = 0``."""
    tol = resolve(tol)
    lam = _eigvals(rho, tol)
    total = float(np.sum(lam))
    if total <= 0.0:
        return 0.0
    return _eta_sum(lam) - eta(total)


def binary_entropy_ext(a: float, b: float) -> float:
    """``eta(a) + eta(b) - eta(a + b)`` for nonnegative ``a, b``, not both zero."""
    if a < 0 or b < 0:
        raise NegativeInput("binary entropy needs nonnegative arguments")
    if a == 0 and b == 0:
        raise BothZero("binary entropy of (0, 0) is undefined")
    return eta(a) + eta(b) - eta(a + b)


def h2(p: float) -> float:
    return eta(p) + eta(1.0 - p)


def scalar_relative_entropy(x: float, y: float) -> float:
    """``x ln(x/y) + y - x`` between nonnegative numbers."""
    if x < 0 or y < 0:
        raise NegativeInput("relative entropy of negative numbers")
    if x == 0:
        return float(y)
    if y == 0:
        return INF
    return x * math.log(x / y) + y - x


def relative_entropy(rho, sigma, tol: Tolerances | None = None) -> float:
    """Lindblad's relative entropy ``D(rho || sigma)`` of two PSD operators.

    ``D(0 || sigma) = Tr sigma`` and ``D = +inf`` when the support of ``rho``
    is not inside the support of ``sigma``.  Otherwise

        D = Tr rho ln rho - Tr rho ln sigma + Tr sigma - Tr rho.
    """
    tol = resolve(tol)
    rho = as_hermitian(rho, tol)
    sigma = as_hermitian(sigma, tol)
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"shapes {rho.shape} and {sigma.shape} differ")
    es_rho = ordered_eig(rho, tol)
    tr_sigma = float(np.trace(sigma).real)
    lam = np.clip(es_rho.values, 0.0, None)
    if lam.size == 0 or lam[0] <= 0.0:
        ordered_eig(sigma, tol)
        return ext_real(tr_sigma, tol)
    es_sigma = ordered_eig(sigma, tol)
    if es_sigma.values[0] <= 0.0 or not support_contained(rho, es_sigma, tol):
        return INF
    tr_rho = float(np.trace(rho).real)
    log_sigma = log_on_support(es_sigma, tol)
    cross = float(np.real(np.sum(rho * log_sigma.T)))
    value = -_eta_sum(lam) - cross + tr_sigma - tr_rho
    return ext_real(value, tol)


def _finite(*xs) -> bool:
    return all(math.isfinite(x) for x in xs)


@dataclass
class IdentityResult:
    name: str
    kind: str  # "eq" or "le"
    lhs: float
    rhs: float
    residual: float | None
    scale: float
    passed: bool
    applicable: bool = True


def _compare(name, kind, lhs, rhs, extras, tol) -> IdentityResult:
    finite = [abs(x) for x in (lhs, rhs, *extras) if math.isfinite(x)]
    scale = 1.0 + (max(finite) if finite else 0.0)
    slack = tol.identity_tol * scale
    if _finite(lhs, rhs):
        res = lhs - rhs
        ok = abs(res) <= slack if kind == "eq" else res <= slack
        return IdentityResult(name, kind, lhs, rhs, res, scale, bool(ok))
    if kind == "eq":
        ok = math.isinf(lhs) and math.isinf(rhs)
    else:
        ok = math.isinf(rhs)
    return IdentityResult(name, kind, lhs, rhs, None, scale, bool(ok))


@dataclass
class IdentityReport:
    results: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results if r.applicable)

    def __getitem__(self, name) -> IdentityResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)


def _mutually_orthogonal(rho, sigma, omega, theta, tol) -> bool:
    pairs = [(rho, sigma), (rho, theta), (sigma, omega), (omega, theta)]
    scale = 1.0 + max(np.max(np.abs(x)) for x in (rho, sigma, omega, theta))
    return all(np.max(np.abs(a @ b)) <= tol.identity_tol * scale for a, b in pairs)


def check_identities(rho, sigma, omega, theta, c: float, tol: Tolerances | None = None) -> IdentityReport:
    """Evaluate the scaling, sub/superadditivity and direct-sum relations.

    Every relation is reported with its signed residual ``lhs - rhs`` (only
    when both sides are finite).  The direct-sum equality is marked
    inapplicable unless ``rho sigma = rho theta = sigma omega = omega theta = 0``.
    """
    tol = resolve(tol)
    ops = [as_hermitian(x, tol) for x in (rho, sigma, omega, theta)]
    if len({x.shape for x in ops}) != 1:
        raise DimensionMismatch("all operators must have the same dimension")
    if not c > 0:
        raise ValueError("c must be positive")
    rho, sigma, omega, theta = ops
    D = lambda a, b: relative_entropy(a, b, tol)  # noqa: E731
    tr = lambda a: float(np.trace(a).real)  # noqa: E731

    d_rs = D(rho, sigma)
    d_ro = D(rho, omega)
    d_so = D(sigma, omega)
    d_st = D(sigma, theta)
    tr_rho, tr_sigma, tr_omega = tr(rho), tr(sigma), tr(omega)
    out = IdentityReport()

    lhs = D(c * rho, c * sigma)
    out.results.append(_compare("D-mul", "eq", lhs, c * d_rs, (d_rs,), tol))

    lhs = D(rho, c * sigma)
    rhs = d_rs - tr_rho * math.log(c) + (c - 1.0) * tr_sigma
    out.results.append(_compare("D-c-id", "eq", lhs, rhs, (d_rs, tr_rho, tr_sigma), tol))

    lhs = D(rho, sigma + omega)
    out.results.append(_compare("re-ineq", "le", lhs, d_rs + tr_omega, (d_rs, tr_omega), tol))

    d_sum = D(rho + sigma, omega)
    rhs = d_ro + d_so - tr_omega
    # lower bound: flip to rhs <= lhs
    out.results.append(_compare("re-2-ineq-conc", "le", rhs, d_sum, (d_ro, d_so, tr_omega), tol))

    if tr_rho + tr_sigma > 0:
        hbin = binary_entropy_ext(max(tr_rho, 0.0), max(tr_sigma, 0.0))
    else:
        hbin = 0.0
    rhs = d_ro + d_so + hbin - tr_omega
    out.results.append(_compare("re-2-ineq-conv", "le", d_sum, rhs, (d_ro, d_so, hbin, tr_omega), tol))

    lhs = D(rho + sigma, omega + theta)
    out.results.append(_compare("D-sum-g", "le", lhs, d_ro + d_st, (d_ro, d_st), tol))

    eq = _compare("D-sum", "eq", lhs, d_ro + d_st, (d_ro, d_st), tol)
    eq.applicable = _mutually_orthogonal(rho, sigma, omega, theta, tol)
    out.results.append(eq)
    return out


@dataclass
class PinchingReport:
    d_full: float
    upper_rhs: float
    lower_lhs: float
    upper_passed: bool
    lower_passed: bool

    @property
    def passed(self) -> bool:
        return self.upper_passed and self.lower_passed


def pinching_bound_check(rho, sigma, p, tol: Tolerances | None = None) -> PinchingReport:
    """Check the two-block bounds for a projector ``P`` commuting with ``sigma``.

    Upper:  D(rho||sigma) <= D(P rho P||P sigma) + D(Q rho Q||Q sigma) + Tr rho ln 2
    Lower:  D(P rho P||P sigma P) + D(Q rho Q||Q sigma Q) <= D(rho||sigma)
    with ``Q = I - P``.
    """
    tol = resolve(tol)
    rho = as_hermitian(rho, tol)
    sigma = as_hermitian(sigma, tol)
    p = as_hermitian(p, tol)
    if not rho.shape == sigma.shape == p.shape:
        raise DimensionMismatch("rho, sigma and P must share a dimension")
    if operator_norm(p @ sigma - sigma @ p) > tol.commute_tol:
        raise NonCommuting("P does not commute with sigma")
    q = np.eye(p.shape[0]) - p
    D = lambda a, b: relative_entropy(a, b, tol)  # noqa: E731
    d_full = D(rho, sigma)
    d_p = D(compress(rho, p, tol), compress(sigma, p, tol))
    d_q = D(compress(rho, q, tol), compress(sigma, q, tol))
    tr_rho = float(np.trace(rho).real)
    upper_rhs = d_p + d_q + tr_rho * math.log(2.0)
    lower_lhs = d_p + d_q
    up = _compare("pinch-upper", "le", d_full, upper_rhs, (d_p, d_q), tol)
    lo = _compare("pinch-lower", "le", lower_lhs, d_full, (d_p, d_q), tol)
    return PinchingReport(d_full, upper_rhs, lower_lhs, up.passed, lo.passed)
