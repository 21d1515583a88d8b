"""Seeded random matrices.  Every function takes a ``numpy.random.Generator``."""

from __future__ import annotations

import numpy as np

from .linalg import dagger


def ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    """Haar-distributed unitary via QR with the phase correction."""
    q, r = np.linalg.qr(ginibre(rng, d, d))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_isometry(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    q, r = np.linalg.qr(ginibre(rng, rows, cols))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_hermitian(rng: np.random.Generator, d: int) -> np.ndarray:
    g = ginibre(rng, d, d)
    return 0.5 * (g + dagger(g))


def random_psd(rng: np.random.Generator, d: int, rank: int | None = None, trace: float | None = None) -> np.ndarray:
    g = ginibre(rng, d, d if rank is None else rank)
    a = g @ dagger(g)
    a = 0.5 * (a + dagger(a))
    if trace is not None:
        a *= trace / np.trace(a).real
    return a


def random_state(rng: np.random.Generator, d: int, rank: int | None = None) -> np.ndarray:
    return random_psd(rng, d, rank, trace=1.0)


def with_spectrum(rng: np.random.Generator, values) -> np.ndarray:
    """``U diag(values) U^H`` for a Haar unitary ``U``."""
    values = np.asarray(values, dtype=float)
    u = random_unitary(rng, values.shape[0])
    a = (u * values) @ dagger(u)
    return 0.5 * (a + dagger(a))


def random_contraction(rng: np.random.Generator, rows: int, cols: int, norm: float | None = None) -> np.ndarray:
    """Matrix with operator norm ``norm`` (uniform in (0, 1] when omitted)."""
    g = ginibre(rng, rows, cols)
    target = rng.uniform(0.05, 1.0) if norm is None else norm
    return g * (target / np.linalg.svd(g, compute_uv=False)[0])
