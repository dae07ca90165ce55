import numpy as np
import pytest
from hypothesis import given, strategies as st

from ddg2d.flux import (
    Burgers, FluxParams, Linear, Sine, Zero, alpha_slope, ddg_diffusion_flux, gamma_of_beta1, godunov,
)


def gamma_oracle(k, beta1):
    """sup over v in P^{k-1} of 2 (v(1) - 2 beta1 v'(1))^2 / ||v||^2 via monomials.

    Independent of the Legendre closed form: a rank-one generalized
    eigenproblem on the monomial Gram matrix.
    """
    j = np.arange(k)
    ell = 1.0 - 2.0 * beta1 * j                   # s^j at 1 minus 2 beta1 (s^j)' at 1
    p = j[:, None] + j[None, :]
    G = np.where(p % 2 == 0, 2.0 / (p + 1), 0.0)
    return 2.0 * ell @ np.linalg.solve(G, ell)


def rayleigh(k, beta1, a):
    v = np.polynomial.Legendre(a)
    x, w = np.polynomial.legendre.leggauss(k + 2)
    return 2 * (v(1.0) - 2 * beta1 * v.deriv()(1.0)) ** 2 / np.sum(w * v(x) ** 2)


@pytest.mark.parametrize("k,beta1,expected", [(1, 0.3, 1.0), (2, 1 / 12, 37 / 12), (2, 0.0, 4.0)])
def test_gamma_examples(k, beta1, expected):
    assert gamma_of_beta1(k, beta1) == pytest.approx(expected, abs=1e-14)


def test_gamma_matches_maximization_oracle():
    worst = 0.0
    for k in range(1, 5):
        for beta1 in np.linspace(-0.2, 0.5, 20):
            g, ref = gamma_of_beta1(k, beta1), gamma_oracle(k, beta1)
            worst = max(worst, abs(g - ref) / ref)
    assert worst <= 1e-9


def test_gamma_bounds_random_quotients():
    rng = np.random.default_rng(0)
    for k in (2, 3, 4):
        beta1 = 1 / (2 * k * (k + 1))
        g = gamma_of_beta1(k, beta1)
        q = [rayleigh(k, beta1, rng.standard_normal(k)) for _ in range(2000)]
        assert max(q) <= g * (1 + 1e-12)
        # the maximizer a_m = (2m+1) d_m attains it
        m = np.arange(k)
        assert rayleigh(k, beta1, (2 * m + 1) * (1 - beta1 * m * (m + 1))) == pytest.approx(g, rel=1e-12)


def test_gamma_rejects_k0():
    with pytest.raises(ValueError):
        gamma_of_beta1(0, 0.1)


@pytest.mark.parametrize("a,b,expected", [(-1.0, 1.0, 0.0), (1.0, -1.0, 0.5), (0.3, 0.3, 0.045)])
def test_godunov_burgers_examples(a, b, expected):
    assert godunov(Burgers(), a, b) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("flux", [Burgers(), Sine(), Linear(-0.7)])
def test_godunov_matches_grid_oracle(flux):
    rng = np.random.default_rng(5)
    for a, b in rng.uniform(-4, 4, size=(200, 2)):
        grid = flux.f(np.linspace(min(a, b), max(a, b), 4001))
        ref = grid.min() if a <= b else grid.max()
        assert godunov(flux, a, b) == pytest.approx(ref, abs=1e-5)
        assert (godunov(flux, a, b) <= ref + 1e-14) if a <= b else (godunov(flux, a, b) >= ref - 1e-14)


@pytest.mark.parametrize("flux", [Burgers(), Sine()])
def test_e_flux_inequality(flux):
    rng = np.random.default_rng(6)
    a, b = rng.uniform(-5, 5, size=(2, 10_000))
    fh = godunov(flux, a, b)
    s = rng.uniform(size=(100, 1))
    u = a + s * (b - a)
    viol = np.sign(b - a) * (fh - flux.f(u))
    assert viol.max() <= 1e-12


@given(st.floats(-10, 10), st.floats(-1e-3, 1e-3))
def test_godunov_consistency_and_continuity(u, du):
    for flux in (Burgers(), Sine()):
        assert godunov(flux, u, u) == pytest.approx(flux.f(u), abs=1e-14)
        assert abs(godunov(flux, u, u + du) - flux.f(u)) <= 10.5 * abs(du) + 1e-14


@pytest.mark.parametrize("flux", [Burgers(), Sine(), Linear(2.0)])
def test_flux_derivatives_match_finite_differences(flux):
    u = np.random.default_rng(7).uniform(-3, 3, 50)
    eps = 1e-6
    for n in range(3):
        fd = (flux.deriv(n, u + eps) - flux.deriv(n, u - eps)) / (2 * eps)
        assert np.allclose(fd, flux.deriv(n + 1, u), rtol=1e-6, atol=1e-6)


def test_zero_flux():
    assert np.all(Zero().f(np.arange(3.0)) == 0)


def test_diffusion_flux_examples():
    p = FluxParams(12.0, 1 / 12)
    assert ddg_diffusion_flux(0.0, 2.5, 0.0, 0.3, p) == pytest.approx(2.5)
    h = np.pi / 8
    assert ddg_diffusion_flux(0.1, 1.0, 2.0, h, p) == pytest.approx(12 * 0.1 / h + 1 + h * 2 / 12)
    with pytest.raises(ValueError):
        ddg_diffusion_flux(0.1, 1.0, 2.0, 0.0, p)


def test_flux_params():
    p = FluxParams.auto(2)
    assert p.beta1 == pytest.approx(1 / 12) and p.beta0 == 12
    with pytest.raises(ValueError):
        FluxParams(-1.0, 0.1)
    with pytest.raises(ValueError):
        FluxParams(1.0, 0.1, convection="lax")


def test_flux_params_warns_below_gamma(caplog):
    FluxParams(1.0, 0.0, k=3)
    assert "Gamma" in caplog.text


def test_alpha_examples():
    f = Burgers()
    assert alpha_slope(f, 0.5, 0.5, 0.5) == 0.0
    assert alpha_slope(f, 1.0, -1.0, 0.0) == pytest.approx(-0.25)
    assert alpha_slope(f, -1.0, 1.0, 0.0) == pytest.approx(0.0)
