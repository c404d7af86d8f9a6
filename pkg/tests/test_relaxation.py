import math
import zlib

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from stokeslfa import lfa
from stokeslfa import relaxation as rx
from stokeslfa import symbols as sym

# a parameter choice per scheme away from the optima, so nothing degenerates
SAMPLE_SCHEMES = {
    "dwj1": rx.RelaxScheme("dwj1", alpha1=1.3, alpha2=0.9, omega=1.1),
    "dwj2": rx.RelaxScheme("dwj2", alpha1=1.4, omega_j=0.9, omega=1.2),
    "bsr": rx.RelaxScheme("bsr", alpha=1.1, omega=0.95),
    "ibsr": rx.RelaxScheme("ibsr", alpha=1.1, omega=1.0, omega_j=1.0, sweeps=2),
    "ibsr1": rx.RelaxScheme("ibsr", alpha=1.2, omega=0.9, omega_j=0.8, sweeps=1),
    "uzawa-schur": rx.RelaxScheme("uzawa-schur", alpha=1.0, omega=0.8),
    "uzawa-mass": rx.RelaxScheme("uzawa-mass", alpha=1.2, omega=1.1, delta=0.6),
    "uzawa-diag": rx.RelaxScheme("uzawa-diag", alpha=1.1, omega=0.7, sigma=0.2),
}


def random_frequencies(count, seed):
    rng = np.random.default_rng(seed)
    t = sym.frequency_samples(128)
    t1 = rng.choice(t, count)
    t2 = rng.choice(t, count)
    # keep away from the constant mode
    zero = (np.abs(t1) < 1e-12) & (np.abs(t2) < 1e-12)
    t1[zero] = t[1]
    return t1, t2


def matched_distance(a, b):
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return cost[rows, cols].max()


@pytest.mark.parametrize("kind", ["posd", "prsd"])
@pytest.mark.parametrize("name", list(SAMPLE_SCHEMES))
def test_closed_forms_match_dense_eigenvalues(name, kind):
    scheme = SAMPLE_SCHEMES[name]
    disc = sym.Discretization(kind, h=1.0 / 64)
    t1, t2 = random_frequencies(20, seed=zlib.crc32(f"{name}-{kind}".encode()))
    dense = np.linalg.eigvals(rx.smoother_symbol(scheme, disc, t1, t2))
    closed = rx.closed_form_eigs(scheme, disc, t1, t2).smoother
    for k in range(t1.size):
        assert matched_distance(dense[k], closed[k]) < 1e-9


def test_dwj1_eigenvalues_at_pi_pi():
    s = SAMPLE_SCHEMES["dwj1"]
    disc = sym.Discretization("posd", h=1.0)
    cf = rx.closed_form_eigs(s, disc, math.pi, math.pi)
    expected = np.array([1 - s.omega / s.alpha1 * cf.y1] * 2 + [1 - s.omega / s.alpha2 * cf.y2])
    dense = np.linalg.eigvals(rx.smoother_symbol(s, disc, math.pi, math.pi))
    assert matched_distance(dense, expected) < 1e-12
    # y1 = 3a/8 with a = 8/3 at (pi, pi)
    assert cf.y1 == pytest.approx(1.0)


@pytest.mark.parametrize("name", ["bsr", "ibsr", "ibsr1"])
def test_block_determinant_factorization(name):
    scheme = SAMPLE_SCHEMES[name]
    disc = sym.Discretization("posd", h=1.0)
    t1, t2 = random_frequencies(5, seed=7)
    for a, b in zip(t1, t2):
        L = sym.system_symbol(disc, a, b)
        M, _ = rx.preconditioner_symbol(scheme, disc, a, b)
        for lam in (-0.4, 0.3, 1.7):
            assert np.linalg.det(L - lam * M) == pytest.approx(rx.bsr_determinant(scheme, disc, a, b, lam), abs=1e-12)


def test_determinant_rejects_other_schemes():
    with pytest.raises(ValueError):
        rx.bsr_determinant(SAMPLE_SCHEMES["dwj1"], sym.Discretization("posd"), 0.5, 0.5, 0.1)


def test_closed_forms_reject_q2q1():
    with pytest.raises(ValueError):
        rx.closed_form_eigs(SAMPLE_SCHEMES["bsr"], sym.Discretization("q2q1"), 0.5, 0.5)


@pytest.mark.parametrize("kind,extra", [("posd", 8 / 3), ("prsd", 14 / 3)])
@pytest.mark.parametrize("alpha,omega_j", [(1.0, 1.0), (1.2, 0.8), (0.9, 1.1)])
def test_ibsr_gamma(kind, extra, alpha, omega_j):
    h = 1.0 / 32
    disc = sym.Discretization(kind, h=h)
    s = rx.RelaxScheme("ibsr", alpha=alpha, omega_j=omega_j)
    gamma = rx.ibsr_schur_symbols(s, disc, 0.3, 1.9)[1]
    assert gamma == pytest.approx(-(h**2 / (24 * omega_j)) * (9 / (2 * alpha) + extra), rel=1e-12)


@given(st.floats(-math.pi / 2, 3 * math.pi / 2, exclude_max=True), st.floats(-math.pi / 2, 3 * math.pi / 2, exclude_max=True))
def test_schur_symbol_matches_stencil(t1, t2):
    # varsigma = 3b/(8 alpha) against the 25-point stencil evaluated as a Fourier sum
    alpha, h = 1.3, 1.0
    disc = sym.Discretization("posd", h=h)
    s = rx.RelaxScheme("ibsr", alpha=alpha)
    varsigma = rx.ibsr_schur_symbols(s, disc, t1, t2)[0]
    _, _, b1, b2 = sym.q1_scalar_symbols(t1, t2, h)
    b = (-(b1 * b1 + b2 * b2)).real
    assert varsigma == pytest.approx(3 * b / (8 * alpha), abs=1e-14)
    r, q, e = 1 / 192, 1 / 48, 1 / 24
    rows = [[-r, -q, -e, -q, -r], [-q, 0, e, 0, -q], [-e, e, 3 / 16, e, -e], [-q, 0, e, 0, -q], [-r, -q, -e, -q, -r]]
    total = sum(
        rows[2 - dy][dx + 2] * np.exp(1j * (t1 * dx + t2 * dy)) for dx in range(-2, 3) for dy in range(-2, 3)
    )
    assert varsigma == pytest.approx((h**2 / alpha * total).real, abs=1e-13)
    assert abs(total.imag) < 1e-13


def test_schur_symbol_zero_at_constant_mode():
    disc = sym.Discretization("posd", h=1.0)
    assert rx.ibsr_schur_symbols(SAMPLE_SCHEMES["ibsr"], disc, 0.0, 0.0)[0] == 0.0


@pytest.mark.parametrize("kind", ["posd", "prsd"])
def test_two_sweeps_improve_schur_approximation(kind):
    disc = sym.Discretization(kind, h=1.0)
    t1, t2 = random_frequencies(10, seed=3)
    one = rx.RelaxScheme("ibsr", alpha=1.0, omega_j=1.0, sweeps=1)
    two = one.with_params(sweeps=2)
    varsigma, _, tau, eta1 = rx.ibsr_schur_symbols(one, disc, t1, t2)
    _, _, _, eta2 = rx.ibsr_schur_symbols(two, disc, t1, t2)
    # eta = varsigma - S_hat, with S_hat the Jacobi approximation of tau
    err1 = np.abs(1 - tau / (varsigma - eta1))
    err2 = np.abs(1 - tau / (varsigma - eta2))
    assert np.all(err1 < 1)
    assert np.all(err2 <= err1 + 1e-14)


@pytest.mark.parametrize("kind", ["posd", "prsd"])
@pytest.mark.parametrize("alpha", [0.75, 1.0, 1.25, 1.5])
def test_bsr_lambda3_bound(kind, alpha):
    s = rx.RelaxScheme("bsr", alpha=alpha, omega=8 * alpha / 9)
    disc = sym.Discretization(kind, h=1.0 / 128)
    t1, t2 = sym.high_frequencies(64)
    lam3 = s.omega * rx.closed_form_eigs(s, disc, t1, t2).lambda3
    assert lam3.min() >= 2 / 3 - 1e-12
    assert lam3.max() <= 4 / 3 + 1e-12


@pytest.mark.parametrize("kind", ["posd", "prsd"])
def test_dwj2_shares_velocity_eigenvalue(kind):
    disc = sym.Discretization(kind, h=1.0)
    t1, t2 = random_frequencies(20, seed=11)
    d1 = rx.RelaxScheme("dwj1", alpha1=1.4, alpha2=1.0, omega=1.2)
    d2 = rx.RelaxScheme("dwj2", alpha1=1.4, omega_j=0.9, omega=1.2)
    vel = 1 - 1.2 / 1.4 * 3 * sym.q1_scalar_symbols(t1, t2, 1.0)[0] / 8
    for s in (d1, d2):
        eig = np.linalg.eigvals(rx.smoother_symbol(s, disc, t1, t2))
        assert np.all(np.abs(eig - vel[:, None]).min(axis=1) < 1e-10)


@pytest.mark.parametrize("name", list(SAMPLE_SCHEMES))
@pytest.mark.parametrize("kind", ["posd", "prsd", "q2q1"])
def test_zero_weight_gives_identity(name, kind):
    s = SAMPLE_SCHEMES[name].with_params(omega=0.0)
    disc = sym.Discretization(kind)
    t1, t2 = random_frequencies(4, seed=1)
    S = rx.smoother_symbol(s, disc, t1, t2)
    assert np.array_equal(S, np.broadcast_to(np.eye(disc.dim), S.shape))


@pytest.mark.parametrize("kind", ["posd", "prsd"])
def test_dwj2_zero_jacobi_weight_keeps_pressure_error(kind):
    s = rx.RelaxScheme("dwj2", alpha1=1.5, omega_j=0.0, omega=4 / 3)
    disc = sym.Discretization(kind, h=1.0)
    t1, t2 = random_frequencies(10, seed=5)
    cf = rx.closed_form_eigs(s, disc, t1, t2)
    assert np.all(cf.y3 == 0)
    dense = np.linalg.eigvals(rx.smoother_symbol(s, disc, t1, t2))
    for k in range(t1.size):
        assert matched_distance(dense[k], cf.smoother[k]) < 1e-12


def test_y2_extremes_posd():
    disc = sym.Discretization("posd", h=1.0)
    s = SAMPLE_SCHEMES["dwj1"]
    y2 = lambda c1, c2: rx.closed_form_eigs(s, disc, math.acos(c1), math.acos(c2)).y2  # noqa: E731
    assert y2(-1, -1) == pytest.approx(8 / 27, abs=1e-12)
    assert y2(8 / 17, 0) == pytest.approx(64 / 51, abs=1e-12)
    t1, t2 = sym.high_frequencies(128)
    vals = rx.closed_form_eigs(s, disc, t1, t2).y2
    assert vals.min() >= 8 / 27 - 1e-12 and vals.max() <= 64 / 51 + 1e-12


def test_y2_extremes_prsd():
    disc = sym.Discretization("prsd", h=1.0)
    s = SAMPLE_SCHEMES["dwj1"]
    y2 = rx.closed_form_eigs(s, disc, math.acos(-0.5), 0.0).y2
    assert y2 == pytest.approx(1.5, abs=1e-12)
    t1, t2 = sym.high_frequencies(128)
    vals = rx.closed_form_eigs(s, disc, t1, t2).y2
    assert vals.max() <= 1.5 + 1e-12
    assert vals.min() == pytest.approx(float(lfa.y2_extremes("prsd")[0]), abs=1e-12)


def test_y3_formula():
    disc = sym.Discretization("posd", h=1.0)
    s = SAMPLE_SCHEMES["dwj2"]
    cf = rx.closed_form_eigs(s, disc, 2.0, 0.5)
    assert cf.y3 == pytest.approx(s.omega_j * cf.y2 * (2 - s.omega_j * cf.y2))


def test_q2q1_smoother_shapes():
    disc = sym.Discretization("q2q1")
    for s in SAMPLE_SCHEMES.values():
        S = rx.smoother_symbol(s, disc, np.array([0.5, 2.0]), np.array([1.0, -0.3]))
        assert S.shape == (2, 9, 9)
        assert np.all(np.isfinite(S))


def test_scheme_validation():
    with pytest.raises(ValueError):
        rx.RelaxScheme("gauss-seidel")
    with pytest.raises(ValueError):
        rx.RelaxScheme("bsr", omega=-1.0)
    with pytest.raises(ValueError):
        rx.RelaxScheme("bsr", alpha=0.0)
    with pytest.raises(ValueError):
        rx.RelaxScheme("ibsr", sweeps=0)
    with pytest.raises(ValueError):
        rx.RelaxScheme("ibsr", inner_cycles=-1)
    # parameters a scheme does not read are not validated
    rx.RelaxScheme("bsr", sigma=0.0)


def test_scheme_params():
    assert rx.RelaxScheme("uzawa-mass", delta=0.6).params() == {"alpha": 1.0, "omega": 1.0, "delta": 0.6}
    p = rx.RelaxScheme("ibsr", sweeps=3, inner_cycles=2).params()
    assert p["sweeps"] == 3 and p["inner_cycles"] == 2
