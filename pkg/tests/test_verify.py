"""Tests for the statistical battery: report plumbing, the shared
primitives, each single-criterion test against its null and a designated
adversary, and the aggregated path-law characterization."""

import numpy as np
import pytest
from dataclasses import asdict

from gffforge.averaging import ProcessPath
from gffforge.errors import DomainError
from gffforge.fields import sample_sas
from gffforge.geometry import Mobius, Rotation, Scaling, disk_bump
from gffforge.greens import disk_lattice
from gffforge.rng import replica_rng
# the battery functions are reached through the module: their test_ names
# would otherwise be collected as test items here
from gffforge import verify as vfy
from gffforge.verify import (
    CharBMVerdict,
    anderson_darling_p,
    ar1_increment_path,
    characterize_bm,
    compound_poisson_path,
    distance_correlation,
    levy_path,
    sigma_hat,
)

SHORT_GRID = (0.5, 1.0, 2.0, 4.0)
# contains the refinement points 1.025/1.05/1.1 and three dyadic triples
LONG_GRID = (0.5, 1.0, 1.025, 1.05, 1.1, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0)


def bm_path(grid, n, seed, sigma=1.0):
    """Exact Brownian replicas on the grid, the null model for every
    path-law test."""
    g = np.asarray(grid, dtype=float)
    du = np.concatenate([[g[0]], np.diff(g)])
    rng = replica_rng(seed, 0)
    reps = np.cumsum(rng.standard_normal((n, len(g))) * sigma * np.sqrt(du), axis=1)
    return ProcessPath(g, reps, kind="bm", backend="synthetic", seed=seed)


# ---------------------------------------------------------------------------
# TestReport plumbing
# ---------------------------------------------------------------------------


def test_report_invariant_p_value_branch():
    vfy.TestReport("x", 5.0, 0.2, 0.01, True, 100)
    vfy.TestReport("x", 5.0, 0.001, 0.01, False, 100)
    with pytest.raises(DomainError):
        vfy.TestReport("x", 5.0, 0.001, 0.01, True, 100)
    with pytest.raises(DomainError):
        vfy.TestReport("x", 5.0, 0.2, 0.01, False, 100)


def test_report_invariant_tolerance_branch():
    vfy.TestReport("x", 0.5, None, 1.0, True, 100)
    vfy.TestReport("x", -0.5, None, 1.0, True, 100)
    with pytest.raises(DomainError):
        vfy.TestReport("x", 1.5, None, 1.0, True, 100)
    with pytest.raises(DomainError):
        vfy.TestReport("x", 0.5, None, 1.0, False, 100)


def test_report_json_round_trip():
    for r in (
        vfy.TestReport("a", 1.25, 0.42, 0.01, True, 314, notes="hi"),
        vfy.TestReport("b", 0.25, None, 1.0, True, 10),
    ):
        back = vfy.TestReport.from_json(r.to_json())
        assert asdict(back) == asdict(r)


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------


def test_anderson_darling_input_validation():
    with pytest.raises(DomainError):
        anderson_darling_p(np.arange(10.0))
    with pytest.raises(DomainError):
        anderson_darling_p(np.ones(50))


def test_anderson_darling_affine_invariance():
    x = replica_rng(1, 0).standard_normal(400)
    a0, p0 = anderson_darling_p(x)
    a1, p1 = anderson_darling_p(3.0 * x + 7.0)
    assert a1 == pytest.approx(a0, abs=1e-10)
    assert p1 == pytest.approx(p0, abs=1e-10)


def test_anderson_darling_rejects_uniform():
    u = replica_rng(2, 0).uniform(size=2000)
    a, p = anderson_darling_p(u)
    assert p < 0.01


def test_anderson_darling_clamps_huge_statistics():
    # far past the fitted range of the p approximation the quadratic turns
    # back up; the clamp must keep such samples firmly rejected
    x = sample_sas(1.1, 4000, replica_rng(5, 0))
    a, p = anderson_darling_p(x)
    assert a > 13.0
    assert np.isfinite(a)
    assert p == 0.0


def test_distance_correlation_independent_pair():
    rng = replica_rng(7, 0)
    x = rng.standard_normal(500)
    y = rng.standard_normal(500)
    t, p = distance_correlation(x, y, seed=1)
    assert t < 0.15
    assert p >= 0.01


def test_distance_correlation_detects_nonlinear_dependence():
    # y = x^2 has zero Pearson correlation with x but is fully dependent
    x = replica_rng(7, 0).standard_normal(500)
    t, p = distance_correlation(x, x**2, seed=1)
    assert t > 0.3
    assert p < 0.01


def test_distance_correlation_degenerate_input():
    y = replica_rng(8, 0).standard_normal(300)
    assert distance_correlation(np.ones(300), y, seed=1) == (0.0, 1.0)


def test_distance_correlation_caps_large_samples():
    rng = replica_rng(9, 0)
    x = rng.standard_normal(3000)
    t, p = distance_correlation(x, x**2, seed=2, cap=400)
    assert p < 0.01


def test_sigma_hat_recovers_diffusivity():
    Y = bm_path(LONG_GRID, 4000, 21, sigma=2.0)
    assert sigma_hat(Y) == pytest.approx(2.0, rel=0.03)


# ---------------------------------------------------------------------------
# normality and the fourth moment
# ---------------------------------------------------------------------------


def test_normality_gaussian_passes():
    r = vfy.test_normality(replica_rng(30, 0).standard_normal(10_000))
    assert r.passed
    assert r.name == "normality"
    assert r.n_samples == 10_000


def test_normality_rejects_stable():
    x = sample_sas(1.5, 10_000, replica_rng(31, 0))
    assert not vfy.test_normality(x).passed


def test_normality_null_calibration():
    rejections = sum(
        not vfy.test_normality(replica_rng(900 + s, 0).standard_normal(500)).passed
        for s in range(50)
    )
    assert rejections <= 3


def test_wick_fourth_gaussian():
    r = vfy.test_wick_fourth(replica_rng(40, 0).standard_normal(10_000))
    assert r.passed
    assert abs(r.statistic) <= 0.15
    assert "fourth-moment ratio" in r.notes


def test_wick_fourth_validation():
    with pytest.raises(DomainError):
        vfy.test_wick_fourth(np.arange(100.0))
    with pytest.raises(DomainError):
        vfy.test_wick_fourth(np.zeros(2000))


def test_wick_fourth_null_calibration():
    rejections = sum(
        not vfy.test_wick_fourth(replica_rng(950 + s, 0).standard_normal(2000)).passed
        for s in range(50)
    )
    assert rejections <= 3


def test_wick_fourth_rejects_stable_batches():
    rejections = sum(
        not vfy.test_wick_fourth(sample_sas(1.5, 10_000, replica_rng(850 + s, 0))).passed
        for s in range(50)
    )
    assert rejections >= 48


# ---------------------------------------------------------------------------
# scaling
# ---------------------------------------------------------------------------


def test_scaling_brownian_null():
    Y = bm_path(SHORT_GRID, 2000, 81)
    for c in (2.0, 4.0):
        r = vfy.test_brownian_scaling(Y, c)
        assert r.passed
        assert r.p_value >= 0.01
        assert "Bonferroni" in r.notes


def test_scaling_identity_factor_trivially_passes():
    Y = bm_path(SHORT_GRID, 200, 82)
    r = vfy.test_brownian_scaling(Y, 1.0)
    assert r.passed
    assert r.p_value == 1.0


def test_scaling_validation():
    Y = bm_path(SHORT_GRID, 2000, 81)
    with pytest.raises(DomainError):
        vfy.test_brownian_scaling(Y, -2.0)
    with pytest.raises(DomainError):
        vfy.test_brownian_scaling(Y, 3.0)  # no (u, 3u) pair on the grid
    with pytest.raises(DomainError):
        vfy.test_brownian_scaling(bm_path(SHORT_GRID, 60, 81), 2.0)


def test_scaling_rejects_stable_levy():
    # increments scale like du^(1/alpha), off the diffusive root by
    # c^(1/alpha - 1/2) = 4^(1/6) in scale at alpha = 1.5
    for seed in (41, 42):
        L = levy_path(SHORT_GRID, 10_000, seed, alpha=1.5)
        assert not vfy.test_brownian_scaling(L, 4.0).passed


# ---------------------------------------------------------------------------
# increment independence
# ---------------------------------------------------------------------------


def test_independence_brownian_null():
    assert vfy.test_independent_increments(bm_path(LONG_GRID, 3000, 50), seed=3).passed


def test_independence_two_point_grid():
    # reduced case: a single increment tested against Y(u1) only
    r = vfy.test_independent_increments(bm_path((1.0, 2.0), 1000, 83), seed=5)
    assert r.passed


def test_independence_rejects_ar1_increments():
    for n in (1000, 10_000):
        A = ar1_increment_path(SHORT_GRID, n, 51, rho=0.3)
        r = vfy.test_independent_increments(A, seed=3)
        assert not r.passed
        assert "rho" in r.notes


def test_independence_validation():
    with pytest.raises(DomainError):
        vfy.test_independent_increments(bm_path((1.0,), 500, 52))
    with pytest.raises(DomainError):
        vfy.test_independent_increments(bm_path(SHORT_GRID, 60, 52))
    with pytest.raises(DomainError):
        ar1_increment_path(SHORT_GRID, 10, 1, rho=1.5)


# ---------------------------------------------------------------------------
# harness residual
# ---------------------------------------------------------------------------


def test_harness_brownian_null():
    Y = bm_path(SHORT_GRID, 5000, 60)
    r = vfy.test_harness(Y, 1.0, 2.0, 4.0, seed=3)
    assert r.passed
    # the bridge target (u-s)(r-u)/(r-s) = 2/3 lands in the notes
    assert "Var(R)" in r.notes
    R = Y.column(2.0) - (1.0 / 3.0) * Y.column(4.0) - (2.0 / 3.0) * Y.column(1.0)
    assert np.var(R) == pytest.approx(2.0 / 3.0, rel=0.1)


def test_harness_degenerate_interpolation():
    Y = bm_path(SHORT_GRID, 300, 61)
    r = vfy.test_harness(Y, 1.0, 1.0, 4.0)
    assert r.passed
    assert r.statistic == 0.0
    assert "degenerate" in r.notes


def test_harness_validation():
    Y = bm_path(SHORT_GRID, 300, 61)
    with pytest.raises(DomainError):
        vfy.test_harness(Y, 2.0, 1.0, 4.0)
    with pytest.raises(DomainError):
        vfy.test_harness(Y, 1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        vfy.test_harness(Y, 1.0, 2.0, 8.0)  # off the grid range


def test_harness_rejects_compound_poisson():
    # jumps leave the residual dependent on the endpoints even though the
    # Pearson correlation and the bridge variance both match Brownian values
    for n in (1000, 10_000):
        C = compound_poisson_path(SHORT_GRID, n, 61, rate=1.0)
        assert not vfy.test_harness(C, 1.0, 2.0, 4.0, seed=3).passed


# ---------------------------------------------------------------------------
# moment bootstrap
# ---------------------------------------------------------------------------


def test_moment_bootstrap_brownian_null():
    Y = bm_path(SHORT_GRID, 4000, 71)
    r = vfy.test_moment_bootstrap(Y)
    assert r.passed
    Z = Y.column(1.0) - Y.column(2.0) / 2.0
    assert np.var(Z) == pytest.approx(0.5, rel=0.1)
    assert abs(np.corrcoef(Z, Y.column(2.0))[0, 1]) < 4.0 / np.sqrt(4000)


def test_moment_bootstrap_identity_is_law_free():
    # Y(1)(Y(2)-Y(1)) = Y(2)^2/4 - Z^2 is a polynomial identity, so it
    # holds replica-wise for an arbitrary path law
    L = levy_path(SHORT_GRID, 2000, 72, alpha=1.5)
    y1, y2 = L.column(1.0), L.column(2.0)
    Z = y1 - y2 / 2.0
    resid = np.max(np.abs(y1 * (y2 - y1) - (y2 * y2 / 4.0 - Z * Z)))
    assert resid <= 1e-10 * max(1.0, np.max(np.abs(y2)) ** 2)


def test_moment_bootstrap_flags_heavy_tails():
    r = vfy.test_moment_bootstrap(levy_path(SHORT_GRID, 4000, 72, alpha=1.5))
    assert not r.passed
    assert "heavy tails" in r.notes


def test_moment_bootstrap_grid_coverage():
    with pytest.raises(DomainError):
        vfy.test_moment_bootstrap(bm_path((0.5, 1.0, 1.5), 500, 73))


# ---------------------------------------------------------------------------
# conformal invariance
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def lat48():
    return disk_lattice(48)


def test_conformal_rotation_gff(lat48):
    phi = disk_bump(0.3 + 0.0j, 0.25)
    r = vfy.test_conformal_invariance("gff", Rotation(np.pi / 3), phi, 800, 11, lattice_src=lat48)
    assert r.passed
    assert r.n_samples == 800


def test_conformal_scaling_gff(lat48):
    phi = disk_bump(0.3 + 0.0j, 0.25)
    r = vfy.test_conformal_invariance("gff", Scaling(2.0), phi, 800, 12, lattice_src=lat48)
    assert r.passed
    assert "O(spacing) bias" in r.notes


def test_conformal_scaling_stable_notes_discriminating_axiom(lat48):
    # the linear stable construction is scale-covariant, so the KS check
    # can pass; the report must say which axiom tells the laws apart
    phi = disk_bump(0.3 + 0.0j, 0.25)
    r = vfy.test_conformal_invariance(
        "stable", Scaling(2.0), phi, 800, 13, lattice_src=lat48, alpha=1.5
    )
    assert "Gaussianity of averages" in r.notes


def test_conformal_validation(lat48):
    phi = disk_bump(0.3 + 0.0j, 0.25)
    with pytest.raises(DomainError):
        vfy.test_conformal_invariance("cauchy", Rotation(0.1), phi, 100, 1, lattice_src=lat48)
    with pytest.raises(DomainError):
        # a translation has no derivable image lattice
        vfy.test_conformal_invariance("gff", Mobius(1, 0.2, 0, 1), phi, 100, 1, lattice_src=lat48)


# ---------------------------------------------------------------------------
# aggregated characterization
# ---------------------------------------------------------------------------


def test_characterize_brownian_consistent():
    for seed in (31, 32, 33):
        v = characterize_bm(bm_path(LONG_GRID, 3000, seed), seed=seed)
        assert v.consistent
        assert v.overall == "consistent-with-BM"
        assert v.sigma_hat == pytest.approx(1.0, rel=0.05)


def test_characterize_report_inventory():
    v = characterize_bm(bm_path(LONG_GRID, 2000, 34), seed=34)
    keys = set(v.reports)
    assert {"continuity", "scaling[c=2]", "scaling[c=4]",
            "independent_increments", "moment_bootstrap", "normality"} <= keys
    assert sum(k.startswith("harness[") for k in keys) == 3


def test_characterize_without_refinement_points():
    v = characterize_bm(bm_path(SHORT_GRID, 2000, 85), seed=85)
    assert v.consistent
    assert "not exercised" in v.reports["continuity"].notes


def test_characterize_rejects_levy_on_scaling():
    v = characterize_bm(levy_path(LONG_GRID, 3000, 91, alpha=1.5), seed=91)
    assert not v.consistent
    assert v.overall.startswith("rejected(")
    assert "scaling" in v.overall


def test_characterize_rejects_ar1_on_independence():
    v = characterize_bm(ar1_increment_path(LONG_GRID, 3000, 92, rho=0.3), seed=91)
    assert not v.consistent
    assert "independent_increments" in v.overall


def test_characterize_rejects_compound_poisson_on_normality():
    v = characterize_bm(compound_poisson_path(LONG_GRID, 3000, 93), seed=91)
    assert not v.consistent
    assert "normality" in v.overall


def test_characterize_zero_path_degenerate():
    Z = ProcessPath(
        np.asarray(SHORT_GRID), np.zeros((50, 4)), kind="zero", backend="synthetic", seed=0
    )
    v = characterize_bm(Z)
    assert v.consistent
    assert v.sigma_hat == 0.0
    assert "degenerate" in v.reports


def test_characterize_grid_validation():
    with pytest.raises(DomainError):
        characterize_bm(bm_path((1.0, 2.0, 4.0), 500, 1))
    with pytest.raises(DomainError):
        characterize_bm(bm_path((1.0, 1.1, 1.2, 1.3), 500, 1))


def test_verdict_json_round_trip():
    v = characterize_bm(bm_path(SHORT_GRID, 500, 86), seed=86)
    back = CharBMVerdict.from_json(v.to_json())
    assert back.overall == v.overall
    assert back.sigma_hat == v.sigma_hat
    assert {k: asdict(r) for k, r in back.reports.items()} == {
        k: asdict(r) for k, r in v.reports.items()
    }


def test_verdict_invariant_enforced():
    v = characterize_bm(bm_path(SHORT_GRID, 500, 86), seed=86)
    assert v.consistent
    with pytest.raises(DomainError):
        CharBMVerdict(reports=v.reports, sigma_hat=v.sigma_hat, overall="rejected(normality)")
