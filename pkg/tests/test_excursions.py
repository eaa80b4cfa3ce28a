"""Excursion hitting laws: analytic oracles and the killed-path sampler."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from gffforge.errors import DomainError
from gffforge.excursions import (
    ExcursionHitRecord,
    ExcursionSample,
    arc_mass,
    continue_paths,
    hit_functional,
    hitting_cdf,
    hitting_density,
    sample_excursion_hits,
    total_mass,
    weighted_ks_distance,
)
from gffforge.geometry import gauss_legendre

TARGET = 4.0 / np.pi


# ---------------------------------------------------------------------------
# analytic laws
# ---------------------------------------------------------------------------


def test_total_mass_values():
    assert abs(total_mass(1.0) - TARGET) < 1e-15
    assert abs(total_mass(2.0) - 2.0 / np.pi) < 1e-15
    with pytest.raises(DomainError):
        total_mass(0.0)


def test_hitting_density_values():
    assert abs(hitting_density(1.0, np.pi / 2.0) - 2.0 / np.pi) < 1e-15
    assert hitting_density(1.0, 0.0) == 0.0
    assert abs(hitting_density(1.0, np.pi)) < 1e-15
    with pytest.raises(DomainError):
        hitting_density(1.0, -0.1)
    with pytest.raises(DomainError):
        hitting_density(-1.0, 0.5)


def test_hitting_density_integrates_to_total_mass():
    for r in (0.5, 1.0, 2.0):
        t, w = gauss_legendre(64, 0.0, np.pi)
        quad = np.sum(w * hitting_density(r, t))
        assert abs(quad - total_mass(r)) < 1e-12


def test_hitting_cdf_values():
    assert hitting_cdf(0.0) == 0.0
    assert abs(hitting_cdf(np.pi) - 1.0) < 1e-15
    assert abs(hitting_cdf(np.pi / 2.0) - 0.5) < 1e-15
    t = np.linspace(0.0, np.pi, 100)
    assert np.all(np.diff(hitting_cdf(t)) >= 0)


def test_arc_mass_values():
    assert abs(arc_mass(1.0, 0.0, np.pi / 2.0) - 2.0 / np.pi) < 1e-15
    assert arc_mass(1.0, 0.7, 0.7) == 0.0
    for r in (0.5, 1.0, 3.0):
        assert abs(arc_mass(r, 0.0, np.pi) - total_mass(r)) < 1e-14
    with pytest.raises(DomainError):
        arc_mass(1.0, 0.5, 0.2)
    with pytest.raises(DomainError):
        arc_mass(1.0, -0.1, 0.2)


@settings(max_examples=100, deadline=None)
@given(
    r=st.floats(min_value=0.1, max_value=10.0),
    cuts=st.tuples(
        st.floats(min_value=0.0, max_value=np.pi),
        st.floats(min_value=0.0, max_value=np.pi),
        st.floats(min_value=0.0, max_value=np.pi),
    ),
)
def test_arc_mass_additive(r, cuts):
    a, b, c = sorted(cuts)
    whole = arc_mass(r, a, c)
    split = arc_mass(r, a, b) + arc_mass(r, b, c)
    assert abs(whole - split) < 1e-12 * max(1.0, abs(whole))


def test_hit_record_invariant():
    ExcursionHitRecord(True, 1.0, 1e-3)
    ExcursionHitRecord(False, None, 1e-3)
    with pytest.raises(DomainError):
        ExcursionHitRecord(True, None, 1e-3)
    with pytest.raises(DomainError):
        ExcursionHitRecord(False, 1.0, 1e-3)


# ---------------------------------------------------------------------------
# sampler
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def base_sample():
    return sample_excursion_hits(1.0, 5e-3, 25000, seed=101)


def test_mass_estimate(base_sample):
    s = base_sample
    assert abs(s.mass_estimate - TARGET) < 4.0 * s.mass_stderr()
    assert s.mass_stderr() > 0


def test_hit_angle_law(base_sample):
    s = base_sample
    assert len(s.angles) >= 10000
    assert weighted_ks_distance(s.angles, s.weights) < 0.02


def test_hit_functional_imaginary_part(base_sample):
    # sum_hits w Im(hit) / (n eps) estimates (2/pi) int sin^2 = 1
    val = hit_functional(base_sample, lambda z: z.imag)
    assert abs(val - 1.0) < 0.05


def test_hit_functional_of_one_is_mass(base_sample):
    val = hit_functional(base_sample, lambda z: np.ones_like(z, dtype=float))
    assert abs(val - base_sample.mass_estimate) < 1e-12


def test_markov_continuation(base_sample):
    # excursions reaching radius 1 continued to radius 2 reproduce the
    # radius-2 hit ensemble: correct mass and (1/2) sin(theta) angles
    s = base_sample
    pts = 1.0 * np.exp(1j * s.angles)
    mask, ang2 = continue_paths(pts, 2.0, seed=103)
    w2 = s.weights[mask]
    mass2 = w2.sum() / (s.n_paths * s.eps)
    assert abs(mass2 - total_mass(2.0)) < 0.05 * total_mass(2.0)
    assert weighted_ks_distance(ang2[mask], w2) < 0.03


def test_markov_continuation_matches_fresh_start(base_sample):
    # fresh Brownian motion launched from analytically drawn hit points
    # must land on radius 2 with the same angle law
    s = base_sample
    pts = 1.0 * np.exp(1j * s.angles)
    mask_a, ang_a = continue_paths(pts, 2.0, seed=107)
    w_a = s.weights[mask_a]

    rng = np.random.default_rng(109)
    theta = np.arccos(1.0 - 2.0 * rng.uniform(size=4000))  # inverse cdf of (1/2) sin
    mask_b, ang_b = continue_paths(np.exp(1j * theta), 2.0, seed=113)

    grid = np.linspace(0.0, np.pi, 400)
    ecdf_a = np.array([w_a[ang_a[mask_a] <= g].sum() for g in grid]) / w_a.sum()
    bb = np.sort(ang_b[mask_b])
    ecdf_b = np.searchsorted(bb, grid, side="right") / len(bb)
    assert np.max(np.abs(ecdf_a - ecdf_b)) < 0.05


def test_split_and_literal_modes_agree():
    split = sample_excursion_hits(1.0, 1e-2, 20000, seed=127)
    literal = sample_excursion_hits(1.0, 1e-2, 60000, seed=131, split=False)
    gap = abs(split.mass_estimate - literal.mass_estimate)
    se = np.hypot(split.mass_stderr(), literal.mass_stderr())
    assert gap < 4.0 * se
    # splitting multiplies the effective hit yield
    assert len(split.angles) / split.n_paths > 3.0 * len(literal.angles) / literal.n_paths


def test_mass_consistent_down_the_eps_ladder():
    # any start-height bias stays below the sampler's own noise floor all
    # the way down the nominal-convergence regime
    for eps, n in ((1e-2, 30000), (1e-3, 20000)):
        s = sample_excursion_hits(1.0, eps, n, seed=137)
        assert abs(s.mass_estimate - TARGET) < 3.0 * s.mass_stderr()


def test_mass_scales_with_radius():
    # r * mass_estimate is the scale-free constant 4/pi
    s = sample_excursion_hits(2.0, 2e-2, 15000, seed=141)
    assert abs(2.0 * s.mass_estimate - TARGET) < 3.0 * 2.0 * s.mass_stderr()


def test_step_size_convergence():
    # halving the adaptive step parameter must not move the estimate
    # beyond joint noise
    a = sample_excursion_hits(1.0, 1e-2, 15000, seed=139, q=0.01)
    b = sample_excursion_hits(1.0, 1e-2, 15000, seed=139, q=0.005)
    gap = abs(a.mass_estimate - b.mass_estimate)
    assert gap < 3.0 * np.hypot(a.mass_stderr(), b.mass_stderr())


def test_sampler_validation():
    with pytest.raises(DomainError):
        sample_excursion_hits(1.0, 0.2, 10, seed=0)
    with pytest.raises(DomainError):
        sample_excursion_hits(-1.0, 1e-3, 10, seed=0)
    with pytest.raises(DomainError):
        sample_excursion_hits(1.0, 1e-3, 0, seed=0)


def test_continue_paths_validation():
    with pytest.raises(DomainError):
        continue_paths(np.array([0.5 - 0.1j]), 2.0, seed=0)
    with pytest.raises(DomainError):
        continue_paths(np.array([3.0 + 1.0j]), 2.0, seed=0)


def test_weighted_ks_validation():
    with pytest.raises(DomainError):
        weighted_ks_distance(np.array([]), np.array([]))


def test_weighted_ks_weight_semantics():
    rng = np.random.default_rng(149)
    v = np.arccos(1.0 - 2.0 * rng.uniform(size=500))
    plain = weighted_ks_distance(v, np.ones_like(v))
    doubled = weighted_ks_distance(np.concatenate([v, v]), np.full(1000, 0.5))
    assert abs(plain - doubled) < 1e-12


def test_weighted_ks_detects_wrong_law():
    rng = np.random.default_rng(151)
    v = rng.uniform(0.0, np.pi, size=2000)  # uniform, not sine
    assert weighted_ks_distance(v, np.ones_like(v)) > 0.1


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def test_records_round_trip_literal(tmp_path):
    s = sample_excursion_hits(1.0, 1e-2, 500, seed=157, split=False)
    f = tmp_path / "hits.csv"
    s.to_csv(f)
    back = s.read_records(f)
    recs = s.records
    assert len(back) == len(recs) == s.n_paths
    for x, y in zip(recs, back):
        assert x.hit == y.hit and x.eps == y.eps and x.weight == y.weight
        if x.hit:
            assert x.angle == y.angle


def test_records_round_trip_split(tmp_path):
    s = sample_excursion_hits(1.0, 1e-2, 300, seed=163)
    f = tmp_path / "hits.csv"
    s.to_csv(f)
    back = s.read_records(f)
    assert len(back) == len(s.angles)
    assert all(rec.hit for rec in back)
    assert_allclose([rec.angle for rec in back], s.angles, rtol=0, atol=0)
    assert_allclose([rec.weight for rec in back], s.weights, rtol=0, atol=0)


def test_read_records_rejects_bad_header(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("nope\n1,0.5,0.001,1\n")
    with pytest.raises(DomainError):
        ExcursionSample.read_records(f)
