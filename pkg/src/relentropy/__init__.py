"""Lindblad's extended relative entropy on finite-dimensional positive operators,
convergence diagnostics for operator sequences, and completely positive maps."""

from .config import DEFAULT, Tolerances
from .cpmaps import KrausMap, apply, dual_apply
from .entropy import (
    binary_entropy_ext,
    check_identities,
    eta,
    relative_entropy,
    scalar_relative_entropy,
    von_neumann_entropy_ext,
)
from .linalg import EigenSystem, ordered_eig

__all__ = [
    "DEFAULT",
    "Tolerances",
    "KrausMap",
    "apply",
    "dual_apply",
    "binary_entropy_ext",
    "check_identities",
    "eta",
    "relative_entropy",
    "scalar_relative_entropy",
    "von_neumann_entropy_ext",
    "EigenSystem",
    "ordered_eig",
]
