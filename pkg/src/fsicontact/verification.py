"""Manufactured-solution convergence checks (needs sympy for the forcing).

Stationary Stokes and stationary elasticity on fitted all-quad meshes; the
forcing is derived symbolically from the manufactured fields, solved with
the same assembly routines as the time stepper, and errors are integrated
with the assembly quadrature.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .patchmesh import FLUID, SOLID, build_patch_mesh, subdivide
from .spaces import NFIELDS, U1, U2, P, D1, D2, DD1, DD2, DofHandler, dof
from .forms import (
    Accumulator, StepContext, MaterialParams, NitscheParams,
    assemble_bulk, assemble_pressure_stab,
)
from .functionals import fit_rate


def solve_constrained(J, c, handler):
    """Solve J s + c = 0 with Dirichlet/inactive rows replaced by s = value."""
    cons = handler.constrained
    s = np.zeros(handler.ndof)
    s[cons] = handler.dirichlet_values[cons]
    R = J @ s + c
    R[cons] = 0.0
    Jbc = (sp.diags((~cons).astype(float)) @ J + sp.diags(cons.astype(float))).tocsc()
    return s + spla.splu(Jbc).solve(-R)


def _boundary_vertices(mesh):
    v = mesh.verts
    x0, y0, x1, y1 = mesh.patch.box
    tol = 1e-12
    return np.flatnonzero(
        (np.abs(v[:, 0] - x0) < tol) | (np.abs(v[:, 0] - x1) < tol)
        | (np.abs(v[:, 1] - y0) < tol) | (np.abs(v[:, 1] - y1) < tol))


def _field_errors(ctx, state, exact, dexact, fields):
    """(L2, H1-semi) errors of a vector field against callables
    exact(x, y) -> (2,) values and dexact(x, y) -> (2, 2) jacobian."""
    l2 = 0.0
    h1 = 0.0
    for g in ctx.groups.values():
        pts = g.points()
        W = g.W
        for ci, f in enumerate(fields):
            coef = state[dof(g.verts, f)]
            vals = np.einsum("qa,na->nq", g.N, coef)
            ex = exact(pts[..., 0], pts[..., 1])[ci]
            l2 += np.sum(W * (vals - ex) ** 2)
            gr = np.einsum("nqad,na->nqd", g.G, coef)
            dex = dexact(pts[..., 0], pts[..., 1])[ci]
            for dcomp in range(2):
                h1 += np.sum(W * (gr[..., dcomp] - dex[dcomp]) ** 2)
    return np.sqrt(l2), np.sqrt(h1)


def _sympy_fields(kind):
    import sympy as sy

    x, y = sy.symbols("x y")
    if kind == "stokes":
        psi = (sy.sin(sy.pi * x) * sy.sin(sy.pi * y)) ** 2
        u1 = sy.diff(psi, y)
        u2 = -sy.diff(psi, x)
        p = sy.sin(2 * sy.pi * x) * sy.cos(sy.pi * y)
        return x, y, (u1, u2), p
    d1 = sy.sin(sy.pi * x) * sy.sin(sy.pi * y) / 10
    d2 = sy.sin(2 * sy.pi * x) * sy.sin(sy.pi * y) / 10
    return x, y, (d1, d2), None


def _lambdify_vec(x, y, exprs):
    import sympy as sy

    fns = [sy.lambdify((x, y), e, "numpy") for e in exprs]

    def call(px, py):
        return [np.broadcast_to(f(px, py), np.shape(px)) for f in fns]

    return call


def stokes_mms(levels=(6, 12, 24), nu=1.0, gamma_cip=1.0e-2):
    """Stationary Stokes with symbolic forcing on fitted meshes.

    Returns dict with mesh sizes, velocity L2/H1 errors and fitted rates.
    """
    import sympy as sy

    x, y, (u1, u2), p = _sympy_fields("stokes")
    sig = [[nu * 2 * sy.diff(u1, x) - p, nu * (sy.diff(u1, y) + sy.diff(u2, x))],
           [nu * (sy.diff(u2, x) + sy.diff(u1, y)), nu * 2 * sy.diff(u2, y) - p]]
    f1 = -(sy.diff(sig[0][0], x) + sy.diff(sig[0][1], y))
    f2 = -(sy.diff(sig[1][0], x) + sy.diff(sig[1][1], y))
    f = _lambdify_vec(x, y, (sy.simplify(f1), sy.simplify(f2)))
    uex = _lambdify_vec(x, y, (u1, u2))
    duex = _lambdify_vec(x, y, (sy.diff(u1, x), sy.diff(u1, y),
                                sy.diff(u2, x), sy.diff(u2, y)))
    pex = _lambdify_vec(x, y, (p,))

    def dex(px, py):
        g = duex(px, py)
        return [(g[0], g[1]), (g[2], g[3])]

    hs, el2, eh1, epl2 = [], [], [], []
    for n in levels:
        mesh = build_patch_mesh(n, n, (0.0, 0.0, 1.0, 1.0))
        sm = subdivide(mesh, None, default_tag=FLUID)
        handler = DofHandler(sm)
        bnd = _boundary_vertices(sm)
        vals = uex(sm.verts[bnd, 0], sm.verts[bnd, 1])
        handler.constrain(bnd, U1, vals[0])
        handler.constrain(bnd, U2, vals[1])
        # pressure level fixed at one vertex (traction-free formulation not used)
        handler.constrain(np.array([0]), P, pex(sm.verts[0, 0], sm.verts[0, 1])[0])
        ctx = StepContext(sm, handler)
        mat = MaterialParams(nu_f=nu, f_f=lambda px, py: f(px, py))
        nit = NitscheParams(gamma_cip=gamma_cip, h=1.0 / n)
        acc = Accumulator(handler.ndof)
        assemble_bulk(acc, ctx, None, None, mat, nit, time_terms=False)
        assemble_pressure_stab(acc, ctx, None, mat, nit, time_terms=False)
        s = solve_constrained(acc.matrix(), acc.const, handler)
        l2, h1 = _field_errors(ctx, s, uex, dex, (U1, U2))
        perr, _ = _field_errors(ctx, s, lambda px, py: [pex(px, py)[0]],
                                lambda px, py: [(0 * px, 0 * px)], (P,))
        hs.append(1.0 / (2 * n))
        el2.append(l2)
        eh1.append(h1)
        epl2.append(perr)
    return dict(h=np.array(hs), u_l2=np.array(el2), u_h1=np.array(eh1),
                p_l2=np.array(epl2),
                rate_l2=fit_rate(hs, el2), rate_h1=fit_rate(hs, eh1))


def elasticity_mms(levels=(6, 12, 24), mu_s=2.0e6, lam_s=2.0e6):
    """Stationary linear elasticity with symbolic forcing on fitted meshes."""
    import sympy as sy

    x, y, (d1, d2), _ = _sympy_fields("elasticity")
    exx = sy.diff(d1, x)
    eyy = sy.diff(d2, y)
    exy = (sy.diff(d1, y) + sy.diff(d2, x)) / 2
    tr = exx + eyy
    sig = [[2 * mu_s * exx + lam_s * tr, 2 * mu_s * exy],
           [2 * mu_s * exy, 2 * mu_s * eyy + lam_s * tr]]
    f1 = -(sy.diff(sig[0][0], x) + sy.diff(sig[0][1], y))
    f2 = -(sy.diff(sig[1][0], x) + sy.diff(sig[1][1], y))
    f = _lambdify_vec(x, y, (sy.simplify(f1), sy.simplify(f2)))
    dex_ = _lambdify_vec(x, y, (d1, d2))
    ddex = _lambdify_vec(x, y, (sy.diff(d1, x), sy.diff(d1, y),
                                sy.diff(d2, x), sy.diff(d2, y)))

    def djac(px, py):
        g = ddex(px, py)
        return [(g[0], g[1]), (g[2], g[3])]

    hs, el2, eh1 = [], [], []
    for n in levels:
        mesh = build_patch_mesh(n, n, (0.0, 0.0, 1.0, 1.0))
        sm = subdivide(mesh, None, default_tag=SOLID)
        handler = DofHandler(sm)
        bnd = _boundary_vertices(sm)
        vals = dex_(sm.verts[bnd, 0], sm.verts[bnd, 1])
        handler.constrain(bnd, D1, vals[0])
        handler.constrain(bnd, D2, vals[1])
        # no velocity-projection rows in a stationary solve
        handler.constrain(np.arange(sm.patch.n_vertices), (DD1, DD2))
        ctx = StepContext(sm, handler)
        mat = MaterialParams(mu_s=mu_s, lam_s=lam_s, f_s=lambda px, py: f(px, py))
        nit = NitscheParams(h=1.0 / n)
        acc = Accumulator(handler.ndof)
        assemble_bulk(acc, ctx, None, None, mat, nit, time_terms=False)
        s = solve_constrained(acc.matrix(), acc.const, handler)
        l2, h1 = _field_errors(ctx, s, dex_, djac, (D1, D2))
        hs.append(1.0 / (2 * n))
        el2.append(l2)
        eh1.append(h1)
    return dict(h=np.array(hs), d_l2=np.array(el2), d_h1=np.array(eh1),
                rate_l2=fit_rate(hs, el2), rate_h1=fit_rate(hs, eh1))
