import json
import math

import numpy as np
import pytest

from relentropy.cpmaps import identity_channel, random_channel, unitary_channel
from relentropy.entropy import relative_entropy
from relentropy.errors import (
    BlockOverflow,
    DimensionMismatch,
    EnergyTooSmall,
    ImagesNotConverging,
    InvalidWeights,
)
from relentropy.linalg import dagger
from relentropy.randmat import random_unitary
from relentropy.scenarios import (
    GibbsModel,
    config_hash,
    converges,
    counterexample_closed_form,
    cp_preservation_experiment,
    gen_block_sums,
    gen_counterexample,
    gen_dominated,
    gibbs_state,
    gibbs_tail_check,
    gibbs_tolerances,
    identity_suite,
    moment_bounded_sequence,
    rotation_channels,
    varying_map_experiment,
)

# mpmath at 30 digits, sum over k < 64 of exp(-k)
C_BETA_64 = 1.5819767068693264244
D_COUNTER_48 = 1.3574103278202899949
GAP_COUNTER_48 = 0.89873518243320810386


def test_gibbs_partition_sum():
    model = GibbsModel.oscillator(64, 1.0)
    assert np.isclose(model.partition_sum(), C_BETA_64, rtol=0, atol=1e-14)
    gamma = gibbs_state(model)
    assert np.isclose(np.trace(gamma).real, 1.0)
    assert np.isclose(gamma[1, 1].real / gamma[0, 0].real, math.exp(-1))


def test_gibbs_model_validation():
    with pytest.raises(ValueError):
        GibbsModel(0.0, (0.0, 1.0))
    with pytest.raises(ValueError):
        GibbsModel(1.0, (1.0, 0.5))
    with pytest.raises(ValueError):
        GibbsModel(1.0, ())


def test_gibbs_tolerances_lower_rank_cut():
    model = GibbsModel.oscillator(64, 1.0)
    tol = gibbs_tolerances(model)
    assert tol.rank_rel_tol <= 1e-3 * math.exp(-63)


def test_counterexample_values():
    model = GibbsModel.oscillator(64, 1.0)
    seq, rep = gen_counterexample(model, 48)
    assert rep.ns == list(range(2, 49))
    assert rep.max_residual <= 1e-8
    assert np.isclose(rep.d_computed[-1], D_COUNTER_48, rtol=0, atol=1e-10)
    assert np.isclose(rep.gaps[-1], GAP_COUNTER_48, rtol=0, atol=1e-10)
    assert np.isclose(rep.d_limit, math.log(C_BETA_64), atol=1e-12)
    assert np.allclose(rep.mean_energy, 1.0)
    # the gap does not vanish
    assert min(rep.gaps) > 0.1
    assert np.allclose(rep.gaps, rep.gaps_closed, atol=1e-8)
    assert seq.n_max == len(rep.ns)


def test_counterexample_closed_form_small():
    model = GibbsModel(1.0, (0.0, 2.0, 4.0))
    rho = np.diag([0.5, 0.5, 0.0])
    d = relative_entropy(rho, gibbs_state(model), gibbs_tolerances(model))
    assert np.isclose(d, counterexample_closed_form(model, 2.0))


def test_counterexample_energy_too_small():
    model = GibbsModel(1.0, (0.0, 0.5, 0.9, 3.0))
    with pytest.raises(EnergyTooSmall):
        gen_counterexample(model, 3)
    with pytest.raises(ValueError):
        gen_counterexample(GibbsModel.oscillator(8), 8)


def test_gibbs_tail_moment_bounded():
    model = GibbsModel.oscillator(64, 1.0)
    rhos = moment_bounded_sequence(model, 48, alpha=3.0)
    c = np.array(model.energies) + 1.0
    rep = gibbs_tail_check(model, rhos, c)
    assert rep.tail_ok
    assert rep.converged
    assert rep.gap <= 1e-3


def test_gibbs_tail_counterexample_not_converged():
    model = GibbsModel.oscillator(64, 1.0)
    rhos, _ = gen_counterexample(model, 48)
    rep = gibbs_tail_check(model, rhos, np.array(model.energies) + 1.0)
    assert not rep.converged


def test_gibbs_tail_invalid_weights():
    model = GibbsModel.oscillator(8)
    rhos = moment_bounded_sequence(model, 6)
    with pytest.raises(InvalidWeights):
        gibbs_tail_check(model, rhos, np.ones(8))
    with pytest.raises(InvalidWeights):
        gibbs_tail_check(model, rhos, np.arange(8.0))
    with pytest.raises(InvalidWeights):
        gibbs_tail_check(model, rhos, np.arange(8.0)[::-1] + 1)


def test_gen_dominated_properties():
    rs, ss, margin = gen_dominated(3, 5, 40, 2.0)
    assert margin >= -1e-12
    assert rs.n_max == ss.n_max == 40
    assert np.isclose(np.trace(rs[0]).real, 1.0)
    d = [relative_entropy(r, s) for r, s in zip(rs, ss)]
    assert abs(d[-1] - d[0]) <= 1e-8
    again = gen_dominated(3, 5, 40, 2.0)
    assert all(np.array_equal(a, b) for a, b in zip(rs, again[0]))


def test_block_sums_additivity():
    sc = gen_block_sums(7, 8, 10, 4)
    for n in (0, 5, 10):
        total = relative_entropy(sc.rho_sum[n], sc.sigma_sum[n])
        parts = sum(relative_entropy(r[n], s[n]) for r, s in zip(sc.rhos, sc.sigmas))
        assert abs(total - parts) <= 1e-9
    assert np.allclose(sc.masses, [1, 0.5, 0.25, 0.125])


def test_block_overflow():
    with pytest.raises(BlockOverflow):
        gen_block_sums(0, 6, 4, 4)


def test_cp_identity_map_reproduces_input():
    rs, ss, _ = gen_dominated(1, 4, 40, 2.0)
    rep = cp_preservation_experiment(rs, ss, identity_channel(4))
    assert rep.hypothesis_met and rep.conclusion_holds and rep.monotone_ok
    assert np.allclose(rep.d_in, rep.d_out)


def test_cp_random_channel_is_monotone():
    rng = np.random.default_rng(5)
    rs, ss, _ = gen_dominated(2, 4, 40, 2.0)
    rep = cp_preservation_experiment(rs, ss, random_channel(rng, 4, 3, 3))
    assert rep.monotone_ok
    assert rep.conclusion_holds


def test_cp_hypothesis_not_met():
    model = GibbsModel.oscillator(16)
    rhos, _ = gen_counterexample(model, 12)
    gamma = gibbs_state(model)
    sig = [gamma] * (rhos.n_max + 1)
    rep = cp_preservation_experiment(rhos, sig, identity_channel(16), tol=gibbs_tolerances(model))
    assert rep.hypothesis_met is False
    assert rep.conclusion_holds is None


def test_cp_dimension_mismatch():
    rs, ss, _ = gen_dominated(1, 4, 4, 2.0)
    with pytest.raises(DimensionMismatch):
        cp_preservation_experiment(rs, ss, identity_channel(3))


def test_report_serialization_is_deterministic():
    a = cp_preservation_experiment(*gen_dominated(9, 3, 8, 2.0)[:2], identity_channel(3), seed=9,
                                   config={"d": 3})
    b = cp_preservation_experiment(*gen_dominated(9, 3, 8, 2.0)[:2], identity_channel(3), seed=9,
                                   config={"d": 3})
    assert a.to_json() == b.to_json()
    assert a.to_csv() == b.to_csv()
    doc = json.loads(a.to_json())
    assert doc["config_hash"] == config_hash({"d": 3})
    assert "runtime_s" not in doc
    assert a.to_csv().splitlines()[0] == "n,D_in,D_out,gap_in,gap_out"


def test_varying_maps_rotation():
    rng = np.random.default_rng(4)
    base = random_channel(rng, 3, 3, 2)
    rs, ss, _ = gen_dominated(4, 3, 24, 2.0)
    phis = rotation_channels(base, 24, seed=1)
    rep = varying_map_experiment(rs, ss, phis, limit_map=base)
    assert "strong_residual_final" in rep.extra
    assert rep.hypothesis_met


def test_varying_maps_not_converging():
    rng = np.random.default_rng(8)
    rs, ss, _ = gen_dominated(4, 3, 12, 2.0)
    u = random_unitary(rng, 3)
    phis = [identity_channel(3) if n % 2 == 0 else unitary_channel(u) for n in range(13)]
    with pytest.raises(ImagesNotConverging) as info:
        varying_map_experiment(rs, ss, phis)
    assert "image_distance_rho_final" in info.value.report


def test_varying_maps_length_mismatch():
    rs, ss, _ = gen_dominated(4, 3, 5, 2.0)
    with pytest.raises(DimensionMismatch):
        varying_map_experiment(rs, ss, [identity_channel(3)] * 3)


def test_rotation_channels_are_channels():
    base = identity_channel(3)
    phis = rotation_channels(base, 5)
    for phi in phis:
        g = phi.gram()
        assert np.allclose(g, np.eye(3))
    u = phis[5].kraus_ops[0]
    assert np.allclose(u @ dagger(u), np.eye(3))


def test_converges():
    assert converges([1.0, 0.5, 1e-9, 1e-10], 1e-8)
    assert not converges([1.0, 0.5, 1e-9, 1e-3], 1e-8)
    assert not converges([], 1.0)


def test_identity_suite_small():
    reports = identity_suite(0, 4, 12)
    assert all(r.passed for r in reports)
    assert sum(r["D-sum"].applicable for r in reports) >= 3
