import numpy as np
import pytest

from ddg2d.flux import FluxParams
from ddg2d.mesh import CallableField, DecayingSine, DGField, Mesh1D, build_mesh, l2_project, uniform_1d
from ddg2d.poly1d import legendre_table
from ddg2d.projections import (
    CirculantBlockSystem, CirculantSolveError, DirectionalProjector, TensorProjector,
    interpolate_I_directional, interpolate_I_h, project_P_directional, project_Pi_h,
    project_Q_directional, solve_circulant,
)

U = DecayingSine()


def l2_dist(a: DGField, u, t=0.0):
    """||u - a||_0 measured against a high-order L2 projection of u."""
    ref = l2_project(u, t, a.mesh, a.k + 4)
    ref.coeffs[..., : a.k + 1, : a.k + 1] -= a.coeffs
    return ref.l2_norm()


def slopes(errs):
    e = np.asarray(errs)
    return np.log2(e[:-1] / e[1:])


# ---- circulant solver --------------------------------------------------------

def test_identity_system():
    b = np.random.default_rng(0).standard_normal((5, 2, 3))
    sys = CirculantBlockSystem(np.eye(2), np.zeros((2, 2)), 5, b)
    assert np.allclose(solve_circulant(sys), b, atol=1e-15)


def test_two_cell_system_matches_dense_oracle():
    rng = np.random.default_rng(1)
    A, B = rng.standard_normal((2, 2)) + 3 * np.eye(2), rng.standard_normal((2, 2))
    b = rng.standard_normal((2, 2))
    # periodic N=2: both block rows couple to the other cell through B
    M = np.block([[A, B], [B, A]])
    ref = np.linalg.solve(M, b.ravel()).reshape(2, 2)
    got = CirculantBlockSystem(A, B, 2).solve(b)
    assert np.allclose(got, ref, atol=1e-12)
    assert np.array_equal(CirculantBlockSystem(A, B, 2).matrix(), M)


def test_singular_system_reported():
    sys = CirculantBlockSystem(np.eye(2), -np.eye(2), 4, np.ones((4, 2)))
    with pytest.raises(CirculantSolveError, match="cond"):
        sys.solve()
    with pytest.raises(ValueError):
        CirculantBlockSystem(np.eye(2), np.eye(2), 1).solve(np.ones((1, 2)))


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_projection_system_is_well_posed(k):
    dp = DirectionalProjector(uniform_1d(16), k, FluxParams.auto(k))
    rhs = np.random.default_rng(2).standard_normal((16, 2))
    c = dp.system.solve(rhs)
    assert np.abs(dp.system.matrix() @ c.ravel() - rhs.ravel()).max() < 1e-10 * np.abs(rhs).max()
    assert dp.system.condition < 1e8


# ---- directional P -----------------------------------------------------------

def sin1(x):
    return np.sin(x) + 0.3 * np.cos(2 * x)


def dsin1(x):
    return np.cos(x) - 0.6 * np.sin(2 * x)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_P_of_constant_is_exact(k):
    mesh = uniform_1d(6)
    c = project_P_directional(lambda x: 2.5 + 0 * x, lambda x: 0 * x, "x", mesh, k, FluxParams.auto(k))
    expected = np.zeros((6, k + 1))
    expected[:, 0] = 2.5
    assert np.allclose(c, expected, atol=1e-13)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
@pytest.mark.parametrize("beta1", [None, 0.25])
def test_P_defining_conditions(k, beta1):
    # non-uniform mesh exercises the general edge rows
    nodes = np.sort(np.concatenate([[0, 2 * np.pi], np.random.default_rng(k).uniform(0.1, 6.2, 9)]))
    params = FluxParams.auto(k) if beta1 is None else FluxParams(12.0, beta1)
    dp = DirectionalProjector(Mesh1D(nodes), k, params)
    x, xr = dp.points(), dp.mesh.nodes[1:]
    mom, val, der = dp.moments(sin1(x)), sin1(xr), dsin1(xr)
    c = dp.P_from_data(mom, val, der, verify=False)
    res = dp.P_residuals(c, mom, val, der)
    assert max(res.values()) <= 1e-9
    bad = c.copy()
    bad[3, k] += 1e-6
    assert max(dp.P_residuals(bad, mom, val, der).values()) > 1e-9


def test_P_verification_raises_on_inconsistent_data(monkeypatch):
    dp = DirectionalProjector(uniform_1d(6), 2, FluxParams.auto(2))
    monkeypatch.setattr(dp, "solve_top", lambda low, a, f: np.zeros((6, 3)))
    with pytest.raises(AssertionError, match="defining conditions"):
        dp.P_of(sin1, dsin1, verify=True)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_P_error_rate(k):
    errs = []
    for n in (8, 16, 32):
        dp = DirectionalProjector(uniform_1d(n), k, FluxParams.auto(k))
        c = dp.P_of(sin1, dsin1)
        s, w = np.polynomial.legendre.leggauss(k + 6)
        x = dp.mesh.points(s)
        e = sin1(x) - c @ legendre_table(k, s)
        errs.append(np.sqrt(np.sum(e**2 * w * dp.h[:, None] / 2)))
    assert np.all(slopes(errs) > k + 0.8)


# ---- Q and I -------------------------------------------------------------------

def piecewise_poly_data(dp, rng):
    """Random piecewise P_k data: coefficients, moments, endpoint values, derivative moments."""
    k, n = dp.k, dp.mesh.n
    c = rng.standard_normal((n, k + 1))
    m = np.arange(k + 1)
    moments = c * dp.h[:, None] / (2 * m + 1)
    ends = c @ legendre_table(k, np.array([-1.0, 1.0]))
    dvals = (c @ legendre_table(k, dp.nodes, 1)) * (2 / dp.h[:, None])
    dmom = dp.moments(dvals, upto=k)[:, 1:]
    return c, moments, ends, dmom


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_Q_and_I_reproduce_piecewise_polynomials(k):
    rng = np.random.default_rng(20 + k)
    dp = DirectionalProjector(uniform_1d(5), k)
    c, moments, ends, dmom = piecewise_poly_data(dp, rng)
    q = dp.Q_from_data(moments[:, : k - 1], ends[:, 0], ends[:, 1])
    i = dp.lobatto_to_modal(dp.I_lobatto_from_data(ends[:, 0], ends[:, 1], dmom))
    assert np.allclose(q, c, atol=1e-12)
    assert np.allclose(i, c, atol=1e-12)
    assert np.allclose(q, i, atol=1e-11)


def test_Q_endpoint_exactness_and_rate():
    errs = []
    for n in (8, 16, 32):
        mesh = uniform_1d(n)
        c = project_Q_directional(np.sin, "x", mesh, 2)
        ends = c @ legendre_table(2, np.array([-1.0, 1.0]))
        assert np.abs(ends[:, 0] - np.sin(mesh.nodes[:-1])).max() <= 1e-12
        assert np.abs(ends[:, 1] - np.sin(mesh.nodes[1:])).max() <= 1e-12
        s, w = np.polynomial.legendre.leggauss(8)
        e = np.sin(mesh.points(s)) - c @ legendre_table(2, s)
        errs.append(np.sqrt(np.sum(e**2 * w * mesh.widths[:, None] / 2)))
    assert np.all(np.abs(slopes(errs) - 3) < 0.2)


def test_I_of_linear_function():
    mesh = uniform_1d(4)
    a = interpolate_I_directional(lambda x: 2 * x - 1, lambda x: 2 + 0 * x, "x", mesh, 3, lobatto=True)
    assert np.allclose(a[:, 0], 2 * mesh.nodes[:-1] - 1)
    assert np.allclose(a[:, 1], 2 * mesh.nodes[1:] - 1)
    assert np.allclose(a[:, 2:], 0.0, atol=1e-13)


# ---- tensor operators ------------------------------------------------------------

def test_Pi_h_of_constant():
    mesh = build_mesh(4, 4)
    zero = lambda x, y, t: np.zeros(np.broadcast_shapes(np.shape(x), np.shape(y)))
    const = CallableField({(0, 0, 0): lambda x, y, t: 1.0 + zero(x, y, t),
                           (1, 0, 0): zero, (0, 1, 0): zero, (1, 1, 0): zero})
    v = project_Pi_h(const, 0.0, mesh, 2, FluxParams.auto(2))
    expected = np.zeros_like(v.coeffs)
    expected[..., 0, 0] = 1.0
    assert np.allclose(v.coeffs, expected, atol=1e-13)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_Pi_h_optimal_rate(k):
    errs = [l2_dist(project_Pi_h(U, 0.0, build_mesh(n, n), k, FluxParams.auto(k)), U) for n in (8, 16, 32)]
    assert slopes(errs)[-1] >= k + 0.8


@pytest.mark.parametrize("k", [2, 3])
def test_Pi_h_minus_I_h_superclose(k):
    errs = []
    for n in (8, 16, 32):
        mesh = build_mesh(n, n)
        d = project_Pi_h(U, 0.0, mesh, k, FluxParams.auto(k)).coeffs - interpolate_I_h(U, 0.0, mesh, k).coeffs
        errs.append(DGField(mesh, k, d).l2_norm())
    assert slopes(errs)[-1] >= k + 1.7


def test_Pi_h_minus_I_h_loses_order_for_other_beta1():
    errs = []
    for n in (8, 16, 32):
        mesh = build_mesh(n, n)
        d = project_Pi_h(U, 0.0, mesh, 2, FluxParams(12.0, 0.25)).coeffs - interpolate_I_h(U, 0.0, mesh, 2).coeffs
        errs.append(DGField(mesh, 2, d).l2_norm())
    assert slopes(errs)[-1] < 3.5


def test_I_h_reproduces_tensor_polynomials():
    # a global trig-free Q_2 polynomial in x, y is not periodic, but I_h only
    # reads node values and derivative moments cell by cell
    f = {
        (0, 0, 0): lambda x, y, t: (x**2 - 3 * x) * (2 * y**2 + y + 1),
        (1, 0, 0): lambda x, y, t: (2 * x - 3) * (2 * y**2 + y + 1),
        (0, 1, 0): lambda x, y, t: (x**2 - 3 * x) * (4 * y + 1),
        (1, 1, 0): lambda x, y, t: (2 * x - 3) * (4 * y + 1),
    }
    u = CallableField(f)
    mesh = build_mesh(3, 4)
    v = interpolate_I_h(u, 0.0, mesh, 2)
    ref = l2_project(f[(0, 0, 0)], 0.0, mesh, 2)
    assert np.allclose(v.coeffs, ref.coeffs, atol=1e-10)


def test_tensor_projector_matches_function_api():
    mesh = build_mesh(6, 4)
    tp = TensorProjector(mesh, 2, FluxParams.auto(2))
    a = tp.Pi_h(U, 0.2).coeffs
    b = project_Pi_h(U, 0.2, mesh, 2, FluxParams.auto(2)).coeffs
    assert np.array_equal(a, b)
