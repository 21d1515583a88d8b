import numpy as np
import pytest

from relentropy.entropy import scalar_relative_entropy
from relentropy.errors import DimensionMismatch, MTooSmall, ZeroSigma
from relentropy.linalg import spectral_projector_top
from relentropy.projectors import (
    OperatorSequence,
    ProjectorFamily,
    build_strongly_consistent,
    check_consistent,
    check_strongly_consistent,
    constant_family,
    criterion_profile,
    dini_tail_sup,
    dominated_tail_bound,
    gap_aligned_family,
    gap_aligned_rank,
    gap_positions,
    geometric_samples,
    single_sigma_criterion,
    tail_mass,
    weak_witness,
)
from relentropy.randmat import random_hermitian, random_psd, random_state
from relentropy.scenarios import gen_dominated


def converging(rng, d, n_max, rank=None):
    base = random_psd(rng, d, rank)
    base /= np.trace(base).real
    terms = [base]
    for n in range(1, n_max + 1):
        h = random_hermitian(rng, d)
        x = base + 0.5**n * 0.1 * (h @ h.conj().T) / d
        terms.append(0.5 * (x + x.conj().T))
    return OperatorSequence(terms)


def test_operator_sequence_basics(rng):
    seq = converging(rng, 4, 6)
    assert seq.dim == 4 and seq.n_max == 6 and len(seq) == 7
    assert seq.distances[0] == 0.0
    assert seq.decreasing_on_average
    with pytest.raises(DimensionMismatch):
        OperatorSequence([np.eye(2), np.eye(3)])
    with pytest.raises(ValueError):
        OperatorSequence([np.eye(2)])


def test_constant_family_is_consistent():
    sigma = np.diag([0.5, 0.3, 0.2])
    seq = OperatorSequence([sigma] * 4)
    rep = check_consistent(constant_family(sigma, 0, 3, 3), seq)
    assert rep.passed
    assert rep.max_rank == {0: 0, 1: 1, 2: 2, 3: 3}


def test_monotonicity_violation_flagged():
    sigma = np.diag([0.5, 0.3, 0.2])
    seq = OperatorSequence([sigma] * 3)

    def fn(n, m):
        if n == 1 and m == 1:
            return np.diag([0.0, 0.0, 1.0])
        return spectral_projector_top(sigma, m)

    rep = check_consistent(ProjectorFamily(fn, 0, 3, 2), seq)
    assert (1, 1) in rep.monotone_violations
    assert not rep.passed


def test_builder_output_strongly_consistent(rng):
    seq = converging(rng, 5, 8)
    fam = build_strongly_consistent(seq)
    assert check_consistent(fam, seq).passed
    rep = check_strongly_consistent(fam, seq)
    assert rep.passed
    assert rep.commutation_max <= 1e-9
    for m in fam.ms:
        d = rep.convergence[m]
        assert d[-1] <= d[0] + 1e-12


def test_builder_constant_and_low_rank():
    seq = OperatorSequence([np.diag([3.0, 2, 1])] * 3)
    fam = build_strongly_consistent(seq)
    assert all(np.allclose(fam.at(n, 2), np.diag([1, 1, 0])) for n in range(3))
    low = OperatorSequence([np.diag([1.0, 0, 0])] * 3)
    fam = build_strongly_consistent(low)
    assert np.allclose(fam.at(1, 3), np.diag([1, 0, 0]))
    assert check_strongly_consistent(fam, low).passed


def test_coordinate_family_fails_commutation():
    sigma = np.array([[0.6, 0.2], [0.2, 0.4]])
    seq = OperatorSequence([sigma] * 2)
    fam = ProjectorFamily(lambda n, m: np.diag([1.0] * m + [0.0] * (2 - m)), 0, 2, 1)
    rep = check_strongly_consistent(fam, seq)
    assert not rep.commutation_ok
    assert not rep.passed


def test_tail_mass_examples(rng):
    sigma = np.diag([0.5, 0.25, 0.25])
    seq = OperatorSequence([sigma] * 3)
    fam = build_strongly_consistent(seq)
    assert np.isclose(tail_mass(seq, fam, 1), 0.5)
    assert np.isclose(tail_mass(seq, fam, 3), 0.0)
    full = random_state(rng, 4)
    fseq = OperatorSequence([full] * 2)
    assert np.isclose(tail_mass(fseq, build_strongly_consistent(fseq), 3), np.linalg.eigvalsh(full)[0])


def test_dini_tail_sup_examples():
    a = np.array([0.3, 0.2, 0.1])
    assert np.allclose(dini_tail_sup(np.tile(a, (3, 1)), a), 0)
    table = np.array([a - 1.0 / m for m in (1, 2, 4)])
    assert np.allclose(dini_tail_sup(table, a), [1, 0.5, 0.25])
    with pytest.raises(DimensionMismatch):
        dini_tail_sup(table, a[:2])


def test_dini_classical_tails(rng):
    n_max, d = 6, 8
    a = rng.uniform(0, 1, (n_max + 1, d)) * 0.5 ** np.arange(d)
    limits = a.sum(axis=1)
    table = np.array([a[:, :m].sum(axis=1) for m in range(d + 1)])
    prof = dini_tail_sup(table, limits)
    assert np.all(np.diff(prof) <= 1e-15)
    assert prof[-1] == 0


def test_criterion_equal_sequences_zero(rng):
    seq = converging(rng, 4, 5)
    prof = criterion_profile(seq, seq, build_strongly_consistent(seq), 0)
    assert np.allclose(prof.sup_d, 0, atol=1e-12)


def test_criterion_diagonal_matches_classical(rng):
    d, n_max = 6, 4
    q = np.sort(rng.uniform(0.1, 1, d))[::-1]
    ps = [rng.uniform(0.1, 1, d) for _ in range(n_max + 1)]
    rhos = OperatorSequence([np.diag(p) for p in ps])
    sigmas = OperatorSequence([np.diag(q)] * (n_max + 1))
    prof = criterion_profile(rhos, sigmas, build_strongly_consistent(sigmas), 1)
    a = np.array([[scalar_relative_entropy(p[i], q[i]) for i in range(d)] for p in ps])
    classical = [a[1:, m:].sum(axis=1).max() for m in range(d + 1)]
    assert np.allclose(prof.sup_d, classical, atol=1e-9)
    assert prof.non_increasing()
    assert prof.n0 == 1 and prof.b_direction_n0 == 0


def test_criterion_example1_bound():
    rhos, sigmas, margin = gen_dominated(3, 6, 8, 0.5)
    assert margin >= -1e-10
    fam = build_strongly_consistent(sigmas)
    prof = criterion_profile(rhos, sigmas, fam, 0, eps=1e-3)
    bound = dominated_tail_bound(rhos, sigmas, fam, 0.5)
    assert np.all(np.asarray(prof.sup_d) <= bound + 1e-9)
    assert prof.witness is not None
    csv = prof.to_csv().splitlines()
    assert csv[0] == "m,sup_D,argmax_n,boundary_flag"
    assert len(csv) == 8


def test_criterion_boundary_flag():
    # tails grow with n, so the maximum sits at N_max
    d, n_max = 3, 4
    sigmas = OperatorSequence([np.diag([0.6, 0.3, 0.1])] * (n_max + 1))
    rhos = OperatorSequence([np.diag([0.6, 0.3, 0.1 + 0.05 * n]) for n in range(n_max + 1)])
    prof = criterion_profile(rhos, sigmas, build_strongly_consistent(sigmas), 0)
    assert prof.boundary[0] and prof.argmax_n[0] == n_max
    del d


def test_criterion_infinite_entries():
    rhos = OperatorSequence([np.diag([0.5, 0.5]), np.diag([0.5, 0.5]), np.diag([1.0, 0.0])])
    sigmas = OperatorSequence([np.diag([1.0, 1.0]), np.diag([1.0, 0.0]), np.diag([1.0, 1.0])])
    prof = criterion_profile(rhos, sigmas, build_strongly_consistent(sigmas), 0)
    assert np.isinf(prof.sup_d[0])
    assert prof.b_direction_n0 == 0
    assert "inf" in prof.to_csv()


def test_weak_witness_lexicographic():
    table = np.array([[1.0, 1.0, 1.0], [0.5, 0.01, 0.02], [0.001, 0.0, 0.0]])
    assert weak_witness(table, [0, 1, 2], 0.1) == (1, 1)
    assert weak_witness(table, [0, 1, 2], 1e-4) == (2, 1)
    assert weak_witness(table, [0, 1, 2], 0.0) is None


def test_criterion_rejects_bad_n0(rng):
    seq = converging(rng, 3, 2)
    with pytest.raises(ValueError):
        criterion_profile(seq, seq, build_strongly_consistent(seq), 5)


def test_single_sigma_examples(rng):
    sigma = random_state(rng, 4, rank=2)
    rho0 = sigma.copy()
    res = single_sigma_criterion([rho0, rho0, rho0], sigma, 1e-9)
    assert res.found and res.m == 0
    u = spectral_projector_top(sigma, 2)
    rhos = [u @ random_state(rng, 4) @ u for _ in range(3)]
    res = single_sigma_criterion(rhos, sigma, 1e-9)
    assert res.found and res.m <= 2
    with pytest.raises(ZeroSigma):
        single_sigma_criterion(rhos, np.zeros((4, 4)), 0.1)


def test_gap_aligned_rank_examples():
    assert gap_aligned_rank(np.diag([3.0, 2, 1]), 2) == 2
    with pytest.raises(MTooSmall):
        gap_aligned_rank(np.diag([2.0, 2, 1]), 1)
    assert gap_aligned_rank(np.diag([2.0, 2, 1, 1]), 3) == 2
    assert gap_positions(np.diag([2.0, 2, 1, 1])) == [2, 4]
    assert gap_positions(np.diag([2.0, 1, 0])) == [1, 2]
    with pytest.raises(ZeroSigma):
        gap_aligned_rank(np.zeros((2, 2)), 1)


def test_gap_aligned_family(rng):
    base = np.diag([0.4, 0.4, 0.2])
    seq = OperatorSequence([base, base + 1e-3 * np.diag([1.0, -1.0, 0.0])])
    fam = gap_aligned_family(seq)
    assert fam.m_min == 2
    assert np.allclose(fam.at(1, 2), np.diag([1, 1, 0]))
    assert np.allclose(fam.at(1, 1 + 1), fam.at(0, 2))


def test_geometric_samples():
    assert geometric_samples(10) == [1, 2, 4, 8, 10]
    assert geometric_samples(8) == [1, 2, 4, 8]
    assert geometric_samples(1) == [1]
