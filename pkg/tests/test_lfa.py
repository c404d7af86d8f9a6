from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stokeslfa import lfa
from stokeslfa import symbols as sym
from stokeslfa.relaxation import RelaxScheme

POSD = sym.Discretization("posd")
PRSD = sym.Discretization("prsd")
Q2Q1 = sym.Discretization("q2q1")


def test_two_grid_spec_validation():
    with pytest.raises(ValueError):
        lfa.TwoGridSpec(0, 0)
    with pytest.raises(ValueError):
        lfa.TwoGridSpec(1, -1)
    with pytest.raises(ValueError):
        lfa.TwoGridSpec(1, 0, "algebraic")
    with pytest.raises(ValueError):
        lfa.TwoGridSpec(1, 0, samples=30)


def test_velocity_jacobi_optimum():
    assert lfa.velocity_smoothing_factor(8 / 9) == pytest.approx(1 / 3, abs=1e-12)
    assert lfa.velocity_smoothing_factor(1.0) > 1 / 3


def test_smoothing_examples():
    dwj = RelaxScheme("dwj1", alpha1=1.451, alpha2=1.0, omega=1.290)
    assert lfa.smoothing_factor(dwj, POSD).factor == pytest.approx(0.618, abs=5e-3)
    bsr = RelaxScheme("bsr", alpha=1.0, omega=8 / 9)
    for disc in (POSD, PRSD):
        assert lfa.smoothing_factor(bsr, disc).factor == pytest.approx(1 / 3, abs=5e-3)
    dwj2 = RelaxScheme("dwj2", alpha1=1.5, omega_j=1.0, omega=4 / 3)
    assert lfa.smoothing_factor(dwj2, PRSD).factor == pytest.approx(1 / 3, abs=5e-3)


def test_smoothing_argmax_is_sampled_high_frequency():
    res = lfa.smoothing_factor(RelaxScheme("bsr", alpha=1.0, omega=8 / 9), POSD, 32)
    t1, t2 = sym.high_frequencies(32)
    assert not res.argmax_theta.is_low
    assert np.min(np.hypot(t1 - res.argmax_theta.theta1, t2 - res.argmax_theta.theta2)) < 1e-12


def test_sampled_smoothing_never_exceeds_finer_sampling():
    # the N=32 high frequencies are a subset of the N=128 ones
    s = RelaxScheme("dwj1", alpha1=1.451, alpha2=1.0, omega=1.290)
    assert lfa.smoothing_factor(s, POSD, 32).factor <= lfa.smoothing_factor(s, POSD, 128).factor + 1e-15


@pytest.mark.parametrize(
    "kind,scheme,mu",
    [
        ("posd", "dwj1", Fraction(55, 89)),
        ("prsd", "dwj1", Fraction(65, 97)),
        ("posd", "dwj2", Fraction(1, 3)),
        ("prsd", "dwj2", Fraction(1, 3)),
        ("posd", "bsr", Fraction(1, 3)),
        ("prsd", "bsr", Fraction(1, 3)),
    ],
)
def test_theorem_optima(kind, scheme, mu):
    opt = lfa.theorem_optima(kind, scheme)
    assert opt.mu == mu
    measured = lfa.smoothing_factor(opt.scheme, sym.Discretization(kind)).factor
    assert measured == pytest.approx(float(mu), abs=5e-3)
    assert measured <= float(mu) + 1e-12


def test_theorem_constraint_text():
    assert "459/356" in lfa.theorem_optima("posd", "dwj1").constraints
    assert "136/267" in lfa.theorem_optima("posd", "dwj1").constraints
    assert "108/97" in lfa.theorem_optima("prsd", "dwj1").constraints
    assert "8/9" in lfa.theorem_optima(POSD, RelaxScheme("bsr")).constraints


def test_theorem_optima_rejections():
    with pytest.raises(ValueError):
        lfa.theorem_optima("q2q1", "bsr")
    with pytest.raises(ValueError):
        lfa.theorem_optima("posd", "uzawa-diag")


def test_dwj2_region():
    assert lfa.dwj2_region_contains("prsd", 1.5, 4 / 3, 1.0)
    assert not lfa.dwj2_region_contains("prsd", 1.0, 4 / 3, 1.0)
    assert not lfa.dwj2_region_contains("posd", 1.5, 4 / 3, 0.1)


def test_dwj2_region_points_attain_one_third():
    lo, hi = (float(v) for v in lfa.y2_extremes("posd"))
    omega_j = 2 / (lo + hi)
    alpha1 = 1.5
    omega = 8 * alpha1 / 9
    assert lfa.dwj2_region_contains("posd", alpha1, omega, omega_j)
    s = RelaxScheme("dwj2", alpha1=alpha1, omega_j=omega_j, omega=omega)
    assert lfa.smoothing_factor(s, POSD).factor == pytest.approx(1 / 3, abs=5e-3)


def test_two_grid_examples():
    dwj = RelaxScheme("dwj1", alpha1=1.451, alpha2=1.0, omega=1.290)
    assert lfa.two_grid_factor(dwj, POSD, lfa.TwoGridSpec(1, 1)).factor == pytest.approx(0.382, abs=2e-3)
    bsr = RelaxScheme("bsr", alpha=1.0, omega=8 / 9)
    assert lfa.two_grid_factor(bsr, POSD, lfa.TwoGridSpec(1, 1)).factor == pytest.approx(0.111, abs=2e-3)


def test_two_grid_q2q1_bsr():
    bsr = RelaxScheme("bsr", alpha=1.1, omega=1.05)
    assert lfa.two_grid_factor(bsr, Q2Q1, lfa.TwoGridSpec(1, 1)).factor == pytest.approx(0.249, abs=2e-3)


@settings(max_examples=10)
@given(
    st.sampled_from(["dwj1", "bsr", "ibsr", "uzawa-diag"]),
    st.sampled_from(["posd", "prsd"]),
    st.integers(0, 2),
    st.integers(1, 2),
    st.sampled_from(["redisc", "galerkin"]),
)
def test_two_grid_symmetric_in_sweeps(scheme, kind, nu1, nu2, coarsening):
    s = RelaxScheme(scheme, alpha=1.1, omega=0.8, sigma=0.3, alpha1=1.3)
    disc = sym.Discretization(kind)
    a = lfa.two_grid_factor(s, disc, lfa.TwoGridSpec(nu1, nu2, coarsening, 16)).factor
    b = lfa.two_grid_factor(s, disc, lfa.TwoGridSpec(nu2, nu1, coarsening, 16)).factor
    assert a == pytest.approx(b, rel=1e-8, abs=1e-10)


@pytest.mark.parametrize("kind", ["posd", "prsd", "q2q1"])
def test_galerkin_coarse_correction_is_idempotent(kind):
    _, _, M = lfa.coarse_grid_correction(sym.Discretization(kind), 32, "galerkin")
    assert np.abs(M @ M - M).max() < 1e-9


def test_rediscretized_correction_not_idempotent_for_posd():
    _, _, M = lfa.coarse_grid_correction(POSD, 32, "redisc")
    assert np.abs(M @ M - M).max() > 1e-6


def test_only_constant_quadruple_skipped():
    res = lfa.two_grid_factor(RelaxScheme("bsr", omega=8 / 9), POSD, lfa.TwoGridSpec(1, 1, samples=32))
    assert res.skipped == 1
    assert res.argmax_theta.is_low


def test_two_grid_spectrum_shape():
    t1, t2, eig = lfa.two_grid_spectrum(RelaxScheme("bsr", omega=8 / 9), POSD, lfa.TwoGridSpec(1, 0, samples=16))
    assert eig.shape == (t1.size, 12)
    rho = lfa.two_grid_factor(RelaxScheme("bsr", omega=8 / 9), POSD, lfa.TwoGridSpec(1, 0, samples=16)).factor
    assert np.abs(eig).max() == pytest.approx(rho)


@pytest.mark.parametrize(
    "scheme",
    [
        RelaxScheme("dwj1", alpha1=1.451, alpha2=1.0, omega=1.290),
        RelaxScheme("bsr", alpha=1.0, omega=8 / 9),
        RelaxScheme("ibsr", alpha=1.1, omega=1.0, omega_j=1.0),
    ],
)
def test_sampling_convergence(scheme):
    for tg in (lfa.TwoGridSpec(1, 0, samples=64), lfa.TwoGridSpec(1, 1, samples=64)):
        coarse = lfa.two_grid_factor(scheme, POSD, tg).factor
        fine = lfa.two_grid_factor(scheme, POSD, lfa.TwoGridSpec(tg.nu1, tg.nu2, samples=128)).factor
        assert abs(coarse - fine) < 5e-3
    assert abs(lfa.smoothing_factor(scheme, POSD, 64).factor - lfa.smoothing_factor(scheme, POSD, 128).factor) < 5e-3


# --------------------------------------------------------------------------
# optimization and sweeps


def test_optimize_rejects_empty_grid():
    with pytest.raises(ValueError):
        lfa.optimize_params(RelaxScheme("bsr"), POSD, "smoothing", {})
    with pytest.raises(ValueError):
        lfa.optimize_params(RelaxScheme("bsr"), POSD, "smoothing", {"alpha": []})


def test_optimize_tie_breaks_lexicographically():
    # with omega = 0.8 only alpha = 0.9 satisfies omega/alpha = 8/9
    res = lfa.optimize_params(RelaxScheme("bsr", omega=0.8), POSD, "smoothing", {"alpha": [1.2, 0.9, 1.0]}, N=32)
    assert res.params.alpha == 0.9
    # bsr ignores sigma, so every entry ties
    flat = {"sigma": [0.5, 0.2, 0.3]}
    res = lfa.optimize_params(RelaxScheme("bsr", alpha=1.0, omega=8 / 9), POSD, "smoothing", flat, N=32)
    assert res.params.sigma == 0.2


def test_optimize_ibsr_two_sweeps():
    grid = {"alpha": [1.0, 1.1, 1.2], "omega": [0.9, 1.0, 1.1], "omega_j": [0.9, 1.0, 1.1]}
    res = lfa.optimize_params(RelaxScheme("ibsr", sweeps=2), POSD, lfa.TwoGridSpec(1, 0), grid, N=128, search_N=32)
    assert res.factor == pytest.approx(0.366, abs=5e-3)
    assert (res.params.alpha, res.params.omega, res.params.omega_j) == (1.1, 1.0, 1.0)


def test_optimize_with_refinement_improves_or_keeps():
    grid = {"alpha": [0.8, 1.2], "omega": [0.8, 1.2]}
    plain = lfa.optimize_params(RelaxScheme("bsr"), POSD, "smoothing", grid, N=32)
    refined = lfa.optimize_params(RelaxScheme("bsr"), POSD, "smoothing", grid, N=32, refine_step=0.05, refine_radius=2)
    assert refined.factor <= plain.factor + 1e-12


def test_parameter_sweep_constant_axis():
    s = RelaxScheme("bsr", alpha=1.0, omega=8 / 9)
    out = lfa.parameter_sweep(s, POSD, lfa.TwoGridSpec(1, 1), {"alpha": [1.0, 1.0], "omega": [8 / 9] * 3}, N=16)
    assert out.shape == (2, 3)
    assert np.ptp(out) == 0


def test_parameter_sweep_errors():
    s = RelaxScheme("bsr")
    with pytest.raises(ValueError):
        lfa.parameter_sweep(s, POSD, "smoothing", {"alpha": [1.0]})
    with pytest.raises(ValueError):
        lfa.parameter_sweep(s, POSD, "smoothing", {"alpha": [1.0], "gamma": [1.0]})


def test_bsr_sweep_matches_squared_smoothing_on_interior():
    s = RelaxScheme("bsr")
    for alpha in (0.9, 1.0, 1.1, 1.2):
        rho = lfa.two_grid_factor(s.with_params(alpha=alpha, omega=8 * alpha / 9), POSD, lfa.TwoGridSpec(1, 1, samples=64))
        assert rho.factor == pytest.approx(1 / 9, abs=2e-3)


def test_dwj_sweep_sensitive_to_small_alphas():
    s = RelaxScheme("dwj1", alpha1=1.451, alpha2=1.0, omega=459 / 356)
    out = lfa.parameter_sweep(s, POSD, lfa.TwoGridSpec(1, 1), {"alpha1": [0.7, 1.451], "alpha2": [0.7, 1.0]}, N=32)
    assert out[1, 1] < 0.4
    assert out[0, 0] > 1 and out[1, 0] > 1 and out[0, 1] > 1


def test_default_grid_and_samples():
    grid = lfa.default_grid("uzawa-diag")
    assert set(grid) == {"alpha", "omega", "sigma"}
    assert grid["omega"][0] == 0.1 and grid["omega"][-1] == 2.0
    assert lfa.default_search_samples("q2q1") == 16
    assert lfa.frange(0.5, 1.0, 0.1) == [0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
