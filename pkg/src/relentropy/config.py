"""Numerical tolerances shared by every module.

All thresholds live in one immutable record so that a run can be reproduced
from its configuration alone.  Functions take an optional ``tol`` argument and
fall back to :data:`DEFAULT` when it is omitted.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # operator validation
    hermitian_tol: float = 1e-10
    psd_slack: float = 1e-10
    # spectral decomposition
    off_diag_tol: float = 1e-13
    max_sweeps: int = 100
    ortho_tol: float = 1e-10
    rank_rel_tol: float = 1e-12
    degeneracy_tol: float = 1e-8
    nonzero_tol: float = 1e-10
    # projectors and supports
    idem_tol: float = 1e-10
    containment_tol: float = 1e-9
    commute_tol: float = 1e-9
    cover_tol: float = 1e-8
    # entropic quantities
    ext_slack: float = 1e-9
    identity_tol: float = 1e-9

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if not value > 0:
                raise ValueError(f"tolerance {f.name} must be strictly positive, got {value!r}")

    def replace(self, **changes) -> "Tolerances":
        unknown = set(changes) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise ValueError(f"unknown tolerance(s): {', '.join(sorted(unknown))}")
        coerced = {}
        for name, value in changes.items():
            kind = type(getattr(self, name))
            coerced[name] = kind(value)
        return dataclasses.replace(self, **coerced)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


DEFAULT = Tolerances()


def resolve(tol: Tolerances | None) -> Tolerances:
    return DEFAULT if tol is None else tol
