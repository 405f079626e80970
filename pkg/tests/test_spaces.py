import numpy as np
import pytest

from fsicontact.patchmesh import FLUID, SOLID, build_patch_mesh, subdivide, flat_interface
from fsicontact.spaces import (
    QUAD, quad_shape, quad_shape_grad, tri_grads, tri_bary_coords,
    DofHandler, State, SpaceConfigError, interpolate, project_velocity, dof,
    U1, P, D1, D2, DD1, DD2, NFIELDS,
)
from fsicontact.forms import scalar_mass


def test_quadrature_weights_positive():
    assert (QUAD.quad_w > 0).all()
    assert (QUAD.tri_w > 0).all()
    assert (QUAD.edge_w > 0).all()


@pytest.mark.parametrize("px,py", [(0, 0), (2, 1), (1, 3), (4, 0), (0, 4), (2, 2)])
def test_quad_rule_exactness(px, py):
    # int over [0,1]^2 of x^px y^py = 1/((px+1)(py+1))
    vals = QUAD.quad_xi[:, 0] ** px * QUAD.quad_xi[:, 1] ** py
    approx = np.dot(QUAD.quad_w, vals)
    assert np.isclose(approx, 1.0 / ((px + 1) * (py + 1)), atol=1e-13)


@pytest.mark.parametrize("px,py", [(0, 0), (1, 1), (2, 2), (4, 0), (3, 2), (1, 4)])
def test_tri_rule_exactness(px, py):
    # reference triangle (0,0),(1,0),(0,1); weights sum to 1, scale by area 1/2
    from math import factorial
    pts = QUAD.tri_bary @ np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    vals = pts[:, 0] ** px * pts[:, 1] ** py
    approx = 0.5 * np.dot(QUAD.tri_w, vals)
    exact = factorial(px) * factorial(py) / factorial(px + py + 2)
    assert np.isclose(approx, exact, atol=1e-13)


@pytest.mark.parametrize("p", [0, 1, 2, 3, 4, 5])
def test_edge_rule_exactness(p):
    approx = np.dot(QUAD.edge_w, QUAD.edge_xi ** p)
    assert np.isclose(approx, 1.0 / (p + 1), atol=1e-14)


def test_partition_of_unity():
    assert np.allclose(quad_shape(QUAD.quad_xi).sum(axis=1), 1.0, atol=1e-14)
    assert np.allclose(np.asarray(QUAD.tri_bary).sum(axis=1), 1.0, atol=1e-14)


def test_quad_gradients_match_fd():
    xi = np.array([[0.3, 0.7]])
    eps = 1e-7
    g = quad_shape_grad(xi)[0]
    for d, dv in enumerate(np.eye(2)):
        fd = (quad_shape(xi + eps * dv) - quad_shape(xi - eps * dv)) / (2 * eps)
        assert np.allclose(g[:, d], fd[0], atol=1e-6)


def test_tri_grads_reproduce_linear():
    rng = np.random.default_rng(3)
    pts = np.tile(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), (20, 1, 1))
    pts += rng.uniform(-0.2, 0.2, (20, 3, 2))
    g, area = tri_grads(pts)
    assert (area > 0).all()
    # gradient of f(x,y)=a.x recovered from nodal values
    a = np.array([0.7, -1.3])
    nodal = pts @ a
    grad = np.einsum("nad,na->nd", g, nodal)
    assert np.allclose(grad, a, atol=1e-12)
    lam = tri_bary_coords(pts, pts.mean(axis=1))
    assert np.allclose(lam, 1.0 / 3.0, atol=1e-12)


def mesh_with_iface(nx=8, ny=6):
    m = build_patch_mesh(nx, ny, (0.0, 0.0, 1.0, 0.6))
    return subdivide(m, flat_interface(m, 0.35))


def test_dof_layout_and_activity():
    sm = mesh_with_iface()
    h = DofHandler(sm)
    assert h.ndof == NFIELDS * sm.patch.n_vertices
    # fluid fields active strictly below the interface, solid strictly above
    v = sm.verts
    below = v[:, 1] < 0.35 - 1e-9
    above = v[:, 1] > 0.35 + 1e-9
    assert h.active[dof(np.flatnonzero(below), U1)].all()
    assert not h.active[dof(np.flatnonzero(below), D1)].any()
    assert h.active[dof(np.flatnonzero(above), D1)].all()
    assert not h.active[dof(np.flatnonzero(above), P)].any()
    # interface vertices carry both
    on = np.flatnonzero(np.abs(v[:, 1] - 0.35) < 1e-9)
    assert h.active[dof(on, U1)].all() and h.active[dof(on, D1)].all()


def test_state_rejects_nonfinite():
    with pytest.raises(SpaceConfigError):
        State(np.array([1.0, np.nan]))


def test_interpolate_reproduces_linears():
    sm = mesh_with_iface()
    frag = interpolate(lambda x, y: 2.0 * x - y, sm)
    assert np.allclose(frag, 2.0 * sm.verts[:, 0] - sm.verts[:, 1], atol=1e-14)
    zero = interpolate(lambda x, y: 0.0 * x, sm)
    assert np.allclose(zero, 0.0)


def test_interpolation_order_for_smooth_field():
    errs = []
    for n in (4, 8, 16):
        m = build_patch_mesh(n, n, (0.0, 0.0, 1.0, 1.0))
        sm = subdivide(m, None)
        frag = interpolate(lambda x, y: np.sin(np.pi * x), sm)
        # L2 error by dense sampling along x
        xs = np.linspace(0, 1, 2049)
        exact = np.sin(np.pi * xs)
        approx = np.interp(xs, sm.verts[: 2 * n + 1, 0], frag[: 2 * n + 1])
        errs.append(np.sqrt(np.trapezoid((approx - exact) ** 2, xs)))
    assert errs[0] / errs[1] > 3.7
    assert errs[1] / errs[2] > 3.7


def test_project_velocity_trivial_and_constant():
    sm = mesh_with_iface()
    nv = sm.patch.n_vertices
    d = np.zeros((nv, 2))
    out = project_velocity(d, d, 1e-3, sm)
    assert np.allclose(out, 0.0)
    c = np.array([0.3, -0.8])
    d_new = d + 1e-3 * c
    out = project_velocity(d_new, d, 1e-3, sm)
    act = scalar_mass(sm, (SOLID,)).diagonal() > 0
    assert np.allclose(out[act], c, atol=1e-9)
    assert np.allclose(out[~act], 0.0)


def test_project_velocity_matches_dense_oracle():
    sm = mesh_with_iface(4, 6)
    nv = sm.patch.n_vertices
    rng = np.random.default_rng(5)
    d_new = rng.normal(size=(nv, 2))
    d_old = rng.normal(size=(nv, 2))
    dt = 2e-4
    out = project_velocity(d_new, d_old, dt, sm)
    M = scalar_mass(sm, (SOLID,)).toarray()
    act = np.flatnonzero(M.diagonal() > 0)
    for k in range(2):
        rhs = (M @ ((d_new[:, k] - d_old[:, k]) / dt))[act]
        expect = np.linalg.solve(M[np.ix_(act, act)], rhs)
        assert np.allclose(out[act, k], expect, atol=1e-10)


def test_project_velocity_empty_solid_errors():
    m = build_patch_mesh(4, 4, (0.0, 0.0, 1.0, 1.0))
    sm = subdivide(m, None, default_tag=FLUID)
    nv = sm.patch.n_vertices
    with pytest.raises(SpaceConfigError):
        project_velocity(np.zeros((nv, 2)), np.zeros((nv, 2)), 1e-3, sm)


def test_projection_idempotent_on_discrete_field():
    sm = mesh_with_iface()
    nv = sm.patch.n_vertices
    rng = np.random.default_rng(6)
    dd = rng.normal(size=(nv, 2))
    d_old = rng.normal(size=(nv, 2))
    dt = 1e-4
    out = project_velocity(d_old + dt * dd, d_old, dt, sm)
    act = scalar_mass(sm, (SOLID,)).diagonal() > 0
    assert np.allclose(out[act], dd[act], atol=1e-9)
