"""Residual and Jacobian contributions of the monolithic FSI system.

All bulk forms are linear in the state, so a time step assembles one sparse
operator J plus an affine vector c with R_lin(s) = J s + c; only the contact
terms (see ``contact``) are reassembled inside Newton.  A ``StepContext``
snapshots the frozen step geometry: cell quadrature data, interface edge
traces, stabilisation edges and boundary edges.

Sign conventions follow the weak form
    (sigma_f, grad v) + (div u, q) + S(p, q) + solid terms
    - (T_f, w - v)_Gamma - (ddot - u, sigma_f(v, -q) n)_Gamma = (f, v) + tractions
with sigma_f(u, p) = nu (grad u + grad u^T) - p I and
T_f = sigma_f n - gamma_fsi (ddot - u).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .patchmesh import FLUID, SOLID, ARTIFICIAL
from .spaces import (
    NFIELDS, U1, U2, P, D1, D2, DD1, DD2,
    QUAD, quad_shape, quad_shape_grad, tri_grads, tri_bary_coords, dof,
)

FLUIDISH = (FLUID, ARTIFICIAL)


@dataclass
class MaterialParams:
    """Fluid viscosity, Lame parameters and body forces."""

    nu_f: float = 1.0
    mu_s: float = 2.0e6
    lam_s: float = 2.0e6
    f_f: callable = None
    f_s: callable = None

    def __post_init__(self):
        if self.nu_f <= 0 or self.mu_s <= 0 or self.lam_s <= 0:
            raise ValueError("material parameters must be positive")


@dataclass
class NitscheParams:
    """Dimensionless penalty constants; absolute values derive from h."""

    gamma_fsi0: float = 1.0e3
    gamma_pt: float = 1.0e-2
    gamma_cip: float = 1.0e-2
    gamma_a0: float = 0.0
    h: float = None  # parameter scale: vertical patch spacing of the lattice

    def __post_init__(self):
        if min(self.gamma_fsi0, self.gamma_pt, self.gamma_cip, self.gamma_a0) < 0:
            raise ValueError("penalty constants must be >= 0")

    def gamma_fsi(self, nu_f):
        return self.gamma_fsi0 * nu_f / self.h

    def gamma_a(self):
        return self.gamma_a0 / self.h ** 2


class Accumulator:
    """COO triplets for the operator J plus the affine vector c of
    R_lin(s) = J s + c."""

    def __init__(self, ndof):
        self.ndof = ndof
        self._rows = []
        self._cols = []
        self._vals = []
        self.const = np.zeros(ndof)

    def add(self, rows, cols, vals):
        self._rows.append(np.asarray(rows).ravel())
        self._cols.append(np.asarray(cols).ravel())
        self._vals.append(np.asarray(vals, dtype=float).ravel())

    def add_const(self, rows, vals):
        np.add.at(self.const, np.asarray(rows).ravel(), np.asarray(vals, dtype=float).ravel())

    def matrix(self):
        if not self._rows:
            return sp.csr_matrix((self.ndof, self.ndof))
        r = np.concatenate(self._rows)
        c = np.concatenate(self._cols)
        v = np.concatenate(self._vals)
        return sp.coo_matrix((v, (r, c)), shape=(self.ndof, self.ndof)).tocsr()


# ---------------------------------------------------------------------------
# cell groups


class CellGroup:
    """Quadrature-ready view of one cell family (rects or triangles)."""

    def __init__(self, verts, tags, N, G, W, origin=None, scale=None, coords=None):
        self.verts = verts      # (n, k)
        self.tags = tags
        self.N = N              # (nq, k)
        self.G = G              # (n, nq, k, 2), broadcastable
        self.W = W              # (n, nq)
        self.origin = origin    # rects: (n, 2) lower-left corner
        self.scale = scale      # rects: (hx, hy)
        self.coords = coords    # tris: (n, 3, 2)

    @property
    def n(self):
        return len(self.verts)

    @property
    def k(self):
        return self.verts.shape[1]

    def points(self):
        """Physical quadrature points (n, nq, 2)."""
        if self.origin is not None:
            ref = QUAD.quad_xi * np.asarray(self.scale)
            return self.origin[:, None, :] + ref[None, :, :]
        return np.einsum("qa,nad->nqd", QUAD.tri_bary, self.coords)


def build_cell_groups(mesh):
    hx = mesh.patch.pw / 2.0
    hy = mesh.patch.ph / 2.0
    groups = {}
    if mesh.n_quads:
        N = quad_shape(QUAD.quad_xi)                      # (nq, 4)
        Gref = quad_shape_grad(QUAD.quad_xi)              # (nq, 4, 2)
        G = Gref / np.array([hx, hy])
        W = np.broadcast_to(QUAD.quad_w * hx * hy, (mesh.n_quads, len(QUAD.quad_w)))
        origin = mesh.verts[mesh.quads[:, 0]]
        groups["rect"] = CellGroup(
            mesh.quads, mesh.quad_tags, N,
            np.broadcast_to(G, (mesh.n_quads,) + G.shape), W,
            origin=origin, scale=(hx, hy),
        )
    if mesh.n_tris:
        coords = mesh.verts[mesh.tris]
        Gc, area = tri_grads(coords)
        if np.any(area <= 0):
            raise ValueError("negatively oriented triangle in subdivision")
        N = np.asarray(QUAD.tri_bary)                     # (nq, 3)
        G = np.broadcast_to(Gc[:, None, :, :], (mesh.n_tris, len(QUAD.tri_w), 3, 2))
        W = area[:, None] * QUAD.tri_w
        groups["tri"] = CellGroup(mesh.tris, mesh.tri_tags, N, G, W, coords=coords)
    return groups


def _pair_dofs(verts, fields):
    """Local dof matrix (n, k*len(fields)) ordered field-major."""
    return np.concatenate([dof(verts, f) for f in fields], axis=1)


def _scatter(acc, rdofs, cdofs, local):
    n, kr, kc = local.shape
    rows = np.repeat(rdofs[:, :, None], kc, axis=2)
    cols = np.repeat(cdofs[:, None, :], kr, axis=1)
    acc.add(rows, cols, local)


def _mass_local(g, sel):
    """(n, k, k) mass matrices for selected cells."""
    return np.einsum("nq,qa,qb->nab", g.W[sel], g.N, g.N)


def _vector_epsilon_local(g, sel, two_mu, lam):
    """(n, 2k, 2k) local matrices of int 2*mu eps(u):eps(v) + lam div u div v.

    Row/col layout is field-major: [comp1 x k, comp2 x k].
    """
    G = g.G[sel]
    W = g.W[sel]
    k = g.k
    gg = np.einsum("nq,nqad,nqbd->nab", W, G, G)       # grad N_a . grad N_b
    gij = np.einsum("nq,nqai,nqbj->nabij", W, G, G)    # d_i N_a d_j N_b
    n = gg.shape[0]
    out = np.zeros((n, 2 * k, 2 * k))
    mu = two_mu / 2.0
    for i in range(2):
        for j in range(2):
            blk = mu * gij[:, :, :, j, i] + lam * gij[:, :, :, i, j]
            if i == j:
                blk = blk + mu * gg
            out[:, i * k:(i + 1) * k, j * k:(j + 1) * k] = blk
    return out


def _div_coupling_local(g, sel):
    """(n, 2k, k): entries int N_b * d_i N_a for test gradient row (i,a),
    scalar column b (used as -(p, div v) and its transpose (div u, q))."""
    G = g.G[sel]
    W = g.W[sel]
    k = g.k
    m = np.einsum("nq,nqai,qb->naib", W, G, g.N)
    n = m.shape[0]
    return m.transpose(0, 2, 1, 3).reshape(n, 2 * k, k)


def scalar_mass(mesh, tags):
    """Global scalar vertex mass matrix over cells with the given tags."""
    nv = mesh.patch.n_vertices
    rows, cols, vals = [], [], []
    for g in build_cell_groups(mesh).values():
        sel = np.flatnonzero(np.isin(g.tags, tags))
        if len(sel) == 0:
            continue
        local = _mass_local(g, sel)
        v = g.verts[sel]
        rows.append(np.repeat(v[:, :, None], g.k, axis=2).ravel())
        cols.append(np.repeat(v[:, None, :], g.k, axis=1).ravel())
        vals.append(local.ravel())
    if not rows:
        return sp.csr_matrix((nv, nv))
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nv, nv),
    ).tocsr()


# ---------------------------------------------------------------------------
# edge trace records (interface / boundary)


class EdgeTrace:
    """Shape values and gradients of both side cells at edge quadrature points."""

    __slots__ = ("xq", "w", "n", "tau", "length",
                 "vF", "NF", "GF", "vS", "NS", "GS", "col", "tag_other")

    def __init__(self):
        pass


def cell_trace(mesh, handle, xq):
    """(verts, N, G) of one cell at given physical points xq (m, 2)."""
    hx = mesh.patch.pw / 2.0
    hy = mesh.patch.ph / 2.0
    if handle < mesh.n_quads:
        verts = mesh.quads[handle]
        o = mesh.verts[verts[0]]
        xi = (xq - o) / np.array([hx, hy])
        N = quad_shape(xi)
        G = quad_shape_grad(xi) / np.array([hx, hy])
        return verts, N, G
    tri = mesh.tris[handle - mesh.n_quads]
    coords = mesh.verts[tri][None, :, :]
    N = tri_bary_coords(np.broadcast_to(coords, (len(xq), 3, 2)), xq)
    Gc, _ = tri_grads(coords)
    G = np.broadcast_to(Gc, (len(xq), 3, 2))
    return tri, N, G


def build_interface_traces(mesh):
    """Per interface edge: quadrature, frames and both-side traces."""
    out = []
    ife = mesh.iface
    for e in range(ife.n):
        rec = EdgeTrace()
        p0 = mesh.verts[ife.v0[e]]
        p1 = mesh.verts[ife.v1[e]]
        rec.length = ife.length[e]
        rec.xq = p0 + np.outer(QUAD.edge_xi, p1 - p0)
        rec.w = QUAD.edge_w * rec.length
        rec.n = ife.normal[e]
        rec.tau = ife.tangent[e]
        rec.col = ife.col[e]
        rec.vS, rec.NS, rec.GS = cell_trace(mesh, ife.cell_solid[e], rec.xq)
        rec.vF, rec.NF, rec.GF = cell_trace(mesh, ife.cell_other[e], rec.xq)
        rec.tag_other = mesh.cell_tag(ife.cell_other[e])
        out.append(rec)
    return out


@dataclass
class StepContext:
    """Frozen-geometry assembly context for one time step."""

    mesh: object
    handler: object
    groups: dict = None
    itraces: list = None
    cip: sp.csr_matrix = None          # CIP operator on p dofs (ndof space)
    penalty_mass: sp.csr_matrix = None

    def __post_init__(self):
        if self.groups is None:
            self.groups = build_cell_groups(self.mesh)
        if self.itraces is None:
            self.itraces = build_interface_traces(self.mesh)


# ---------------------------------------------------------------------------
# bulk forms


def assemble_bulk(acc, ctx, state_old, dt, mat, nit, penalty_below=None,
                  fluid_tags=FLUIDISH, time_terms=True):
    """Stokes + elasticity + velocity projection rows (all linear).

    ``penalty_below``: optional height; fluid cells with centroid below it get
    the artificial velocity penalty gamma_a (volume penalty variant).  Cells
    tagged ARTIFICIAL always get it when gamma_a0 > 0.
    """
    mesh = ctx.mesh
    nu = mat.nu_f
    for g in ctx.groups.values():
        flu = np.flatnonzero(np.isin(g.tags, fluid_tags))
        sol = np.flatnonzero(g.tags == SOLID)
        k = g.k
        if len(flu):
            du = _pair_dofs(g.verts[flu], (U1, U2))
            dp = _pair_dofs(g.verts[flu], (P,))
            visc = _vector_epsilon_local(g, flu, two_mu=2.0 * nu, lam=0.0)
            divb = _div_coupling_local(g, flu)
            _scatter(acc, du, du, visc)
            _scatter(acc, du, dp, -divb)
            _scatter(acc, dp, du, divb.transpose(0, 2, 1))
            if time_terms:
                m = _mass_local(g, flu) / dt
                z = np.zeros_like(m)
                mvec = np.block([[m, z], [z, m]])
                _scatter(acc, du, du, mvec)
                uold = np.stack([state_old[dof(g.verts[flu], U1)],
                                 state_old[dof(g.verts[flu], U2)]], axis=1)
                rhs = -np.einsum("nab,nib->nia", m, uold)
                acc.add_const(du, rhs.reshape(len(flu), -1))
            if mat.f_f is not None:
                _body_force(acc, g, flu, mat.f_f, (U1, U2))
        if nit.gamma_a0 > 0:
            pen = g.tags == ARTIFICIAL
            if penalty_below is not None:
                cents = (g.origin + 0.5 * np.asarray(g.scale)
                         if g.origin is not None else g.coords.mean(axis=1))
                pen = pen | ((g.tags == FLUID) & (cents[:, 1] < penalty_below))
            pen = np.flatnonzero(pen)
            if len(pen):
                du = _pair_dofs(g.verts[pen], (U1, U2))
                m = nit.gamma_a() * _mass_local(g, pen)
                z = np.zeros_like(m)
                _scatter(acc, du, du, np.block([[m, z], [z, m]]))
        if len(sol):
            dd = _pair_dofs(g.verts[sol], (D1, D2))
            dv = _pair_dofs(g.verts[sol], (DD1, DD2))
            el = _vector_epsilon_local(g, sol, two_mu=2.0 * mat.mu_s, lam=mat.lam_s)
            _scatter(acc, dd, dd, el)
            m = _mass_local(g, sol)
            z = np.zeros_like(m)
            mvec = np.block([[m, z], [z, m]])
            if time_terms:
                # solid momentum: (1/dt) M (ddot - ddot_old) tested with w
                _scatter(acc, dd, dv, mvec / dt)
                vold = np.stack([state_old[dof(g.verts[sol], DD1)],
                                 state_old[dof(g.verts[sol], DD2)]], axis=1)
                acc.add_const(dd, -np.einsum("nab,nib->nia", m / dt, vold).reshape(len(sol), -1))
                # velocity projection: (1/dt) M (d - d_old) - M ddot, tested with z
                _scatter(acc, dv, dd, mvec / dt)
                _scatter(acc, dv, dv, -mvec)
                dold = np.stack([state_old[dof(g.verts[sol], D1)],
                                 state_old[dof(g.verts[sol], D2)]], axis=1)
                acc.add_const(dv, -np.einsum("nab,nib->nia", m / dt, dold).reshape(len(sol), -1))
            if mat.f_s is not None:
                _body_force(acc, g, sol, mat.f_s, (D1, D2))


def _body_force(acc, g, sel, f, fields):
    pts = g.points()[sel]
    fx, fy = f(pts[..., 0], pts[..., 1])
    load = np.einsum("nq,qa,nq->na", g.W[sel], g.N, np.broadcast_to(fx, pts.shape[:2]))
    acc.add_const(dof(g.verts[sel], fields[0]), -load)
    load = np.einsum("nq,qa,nq->na", g.W[sel], g.N, np.broadcast_to(fy, pts.shape[:2]))
    acc.add_const(dof(g.verts[sel], fields[1]), -load)


# ---------------------------------------------------------------------------
# interface (Nitsche) coupling


def _edge_ops(rec, q, nu):
    """Affine operators at one edge quadrature point.

    Returns a dict of (rows over the combined local dof vector) for the fluid
    and solid traces; layout [u1,u2,p | d1,d2,dd1,dd2] blocks of sizes
    (kF,kF,kF | kS,kS,kS,kS).
    """
    kF = len(rec.vF)
    kS = len(rec.vS)
    nfl = 3 * kF
    ntot = nfl + 4 * kS
    NF = rec.NF[q]
    GF = rec.GF[q]
    NS = rec.NS[q]
    GS = rec.GS[q]
    n = rec.n

    op_u = np.zeros((2, ntot))
    op_u[0, 0:kF] = NF
    op_u[1, kF:2 * kF] = NF
    op_p = np.zeros(ntot)
    op_p[2 * kF:3 * kF] = NF
    op_dd = np.zeros((2, ntot))
    op_dd[0, nfl + 2 * kS:nfl + 3 * kS] = NS
    op_dd[1, nfl + 3 * kS:nfl + 4 * kS] = NS
    op_d = np.zeros((2, ntot))
    op_d[0, nfl:nfl + kS] = NS
    op_d[1, nfl + kS:nfl + 2 * kS] = NS

    gn_F = GF @ n                      # (kF,)
    # sigma_f(u,p) n = nu (grad u + grad u^T) n - p n
    op_sfn = np.zeros((2, ntot))
    for i in range(2):
        op_sfn[i, i * kF:(i + 1) * kF] += nu * gn_F
        for j in range(2):
            op_sfn[i, j * kF:(j + 1) * kF] += nu * GF[:, i] * n[j]
        op_sfn[i, 2 * kF:3 * kF] += -NF * n[i]

    return dict(kF=kF, kS=kS, nfl=nfl, ntot=ntot, NF=NF, GF=GF, NS=NS, GS=GS,
                u=op_u, p=op_p, d=op_d, dd=op_dd, sfn=op_sfn, gnF=gn_F)


def solid_stress_normal_op(rec, q, mu_s, lam_s, direction=None):
    """Rows of sigma_s(d) n (2, ntot) at one edge point; optionally contracted
    with a direction vector to give one row."""
    kF = len(rec.vF)
    kS = len(rec.vS)
    nfl = 3 * kF
    ntot = nfl + 4 * kS
    GS = rec.GS[q]
    n = rec.n
    gn_S = GS @ n
    op = np.zeros((2, ntot))
    for i in range(2):
        op[i, nfl + i * kS:nfl + (i + 1) * kS] += mu_s * gn_S
        for j in range(2):
            op[i, nfl + j * kS:nfl + (j + 1) * kS] += mu_s * GS[:, i] * n[j]
            # lam tr(eps) n_i picks d_j N * delta... div d = sum_j d_j N_{,j}
        op[i, nfl:nfl + kS] += lam_s * GS[:, 0] * n[i]
        op[i, nfl + kS:nfl + 2 * kS] += lam_s * GS[:, 1] * n[i]
    if direction is None:
        return op
    return direction @ op


def edge_dof_vector(rec):
    """Combined local dof indices [u1,u2,p | d1,d2,dd1,dd2]."""
    return np.concatenate([
        dof(rec.vF, U1), dof(rec.vF, U2), dof(rec.vF, P),
        dof(rec.vS, D1), dof(rec.vS, D2), dof(rec.vS, DD1), dof(rec.vS, DD2),
    ])


def assemble_nitsche(acc, ctx, mat, nit, mode, edge_mask=None):
    """Nitsche FSI coupling terms, no-slip ('noslip') or slip ('slip').

    edge_mask: optional per-(edge, qp) boolean, True where the coupling is
    assembled (the explicit ad-hoc split restricts it).
    """
    nu = mat.nu_f
    gamma = nit.gamma_fsi(nu)
    for e, rec in enumerate(ctx.itraces):
        dofs = edge_dof_vector(rec)
        ntot = len(dofs)
        J = np.zeros((ntot, ntot))
        for q in range(len(rec.w)):
            if edge_mask is not None and not edge_mask[e][q]:
                continue
            w = rec.w[q]
            ops = _edge_ops(rec, q, nu)
            n = rec.n
            # test-side sigma_f(v,-q) n rows: flip the pressure part
            sfn_test = ops["sfn"].copy()
            kF = ops["kF"]
            for i in range(2):
                sfn_test[i, 2 * kF:3 * kF] *= -1.0
            jump = ops["dd"] - ops["u"]          # (ddot - u)
            tf = ops["sfn"] - gamma * jump       # T_f rows
            if mode == "noslip":
                wv = ops["d"] - ops["u"]         # (w - v) test rows
                # -(T_f, w - v): J[test, trial]
                J -= w * (wv.T @ tf)
                # -(ddot - u, sigma_f(v,-q) n)
                J -= w * (sfn_test.T @ jump)
            elif mode == "slip":
                tfn = n @ tf                     # scalar row
                wvn = n @ (ops["d"] - ops["u"])
                J -= w * np.outer(wvn, tfn)
                jn = n @ jump
                stn = n @ sfn_test
                J -= w * np.outer(stn, jn)
            else:
                raise ValueError(f"unknown interface mode {mode!r}")
        _scatter_edge(acc, dofs, J)


def _scatter_edge(acc, dofs, J):
    nz = np.nonzero(J)
    if len(nz[0]):
        acc.add(dofs[nz[0]], dofs[nz[1]], J[nz])


def assemble_pressure_stab(acc, ctx, state_old, mat, nit, fluid_tags=FLUIDISH,
                           time_terms=True):
    """CIP pressure stabilisation plus the temporal interface term.

    Keeps the assembled CIP operator on the context so S_p(p,p) can be
    monitored.
    """
    cip = _cip_matrix(ctx.mesh, mat.nu_f, nit.gamma_cip, fluid_tags)
    ctx.cip = cip
    coo = cip.tocoo()
    if coo.nnz:
        acc.add(coo.row, coo.col, coo.data)
    if time_terms and nit.gamma_pt > 0:
        # S_pt(p, q) = gamma_pt * h * (p^m - p^{m-1}, q)_Gamma
        fac = nit.gamma_pt * nit.h
        for rec in ctx.itraces:
            dp = dof(rec.vF, P)
            m = fac * np.einsum("q,qa,qb->ab", rec.w, rec.NF, rec.NF)
            acc.add(np.repeat(dp, len(dp)), np.tile(dp, len(dp)), m)
            acc.add_const(dp, -(m @ state_old[dp]))


def _cip_matrix(mesh, nu, gamma_cip, fluid_tags):
    """gamma_cip / nu * sum_e h_n^3 (jump dn p, jump dn q)_e over interior
    fluid edges, with h_n the directional cell extent across the edge."""
    ndof = NFIELDS * mesh.patch.n_vertices
    va, vb, ca, cb = mesh.interior_edges()
    tags = mesh.cell_tags_all()
    keep = np.isin(tags[ca], fluid_tags) & np.isin(tags[cb], fluid_tags)
    va, vb, ca, cb = va[keep], vb[keep], ca[keep], cb[keep]
    if len(va) == 0:
        return sp.csr_matrix((ndof, ndof))
    p0 = mesh.verts[va]
    p1 = mesh.verts[vb]
    tvec = p1 - p0
    ln = np.hypot(tvec[:, 0], tvec[:, 1])
    nvec = np.column_stack([tvec[:, 1], -tvec[:, 0]]) / ln[:, None]

    hx = mesh.patch.pw / 2.0
    hy = mesh.patch.ph / 2.0
    areas = np.concatenate([mesh.quad_areas(), mesh.tri_areas()])

    def extent(cells):
        ext = np.where(cells < mesh.n_quads,
                       np.abs(nvec[:, 0]) * hx + np.abs(nvec[:, 1]) * hy,
                       2.0 * areas[cells] / ln)
        return ext

    hn = 0.5 * (extent(ca) + extent(cb))
    coef = (gamma_cip / nu) * hn ** 3

    rows_all, cols_all, vals_all = [], [], []
    xq = p0[:, None, :] + QUAD.edge_xi[None, :, None] * tvec[:, None, :]  # (ne, q, 2)
    wq = QUAD.edge_w[None, :] * ln[:, None]

    def side_rows(cells):
        """Normal-gradient rows (ne, q, 4) and vertex ids (ne, 4); triangles
        padded with a repeated vertex and zero weight."""
        ne = len(cells)
        rows = np.zeros((ne, len(QUAD.edge_xi), 4))
        vids = np.zeros((ne, 4), dtype=np.int64)
        isq = cells < mesh.n_quads
        if np.any(isq):
            qc = cells[isq]
            o = mesh.verts[mesh.quads[qc, 0]]
            xi = (xq[isq] - o[:, None, :]) / np.array([hx, hy])
            Gr = quad_shape_grad(xi) / np.array([hx, hy])     # (m, q, 4, 2)
            rows[isq] = np.einsum("mqad,md->mqa", Gr, nvec[isq])
            vids[isq] = mesh.quads[qc]
        ist = ~isq
        if np.any(ist):
            tc = cells[ist] - mesh.n_quads
            Gc, _ = tri_grads(mesh.verts[mesh.tris[tc]])
            r3 = np.einsum("mad,md->ma", Gc, nvec[ist])       # (m, 3)
            rows[ist, :, :3] = r3[:, None, :]
            vids[ist, :3] = mesh.tris[tc]
            vids[ist, 3] = mesh.tris[tc][:, 0]
        return rows, vids

    ra, ia = side_rows(ca)
    rb, ib = side_rows(cb)
    jump = np.concatenate([ra, -rb], axis=2)                  # (ne, q, 8)
    vids = np.concatenate([ia, ib], axis=1)                   # (ne, 8)
    local = np.einsum("e,eq,eqa,eqb->eab", coef, wq, jump, jump)
    dp = dof(vids, P)
    rows = np.repeat(dp[:, :, None], 8, axis=2)
    cols = np.repeat(dp[:, None, :], 8, axis=1)
    return sp.coo_matrix(
        (local.ravel(), (rows.ravel(), cols.ravel())), shape=(ndof, ndof)
    ).tocsr()


def assemble_traction(acc, ctx, pbar, sides=("left", "right"), tags=(FLUID,),
                      suction=True):
    """Constant-normal-traction boundary term realising the pressure mean.

    suction=True applies sigma n = +pbar*n_out (interior pressure ~ -pbar),
    which pulls the structure toward the obstacle in the benchmarks.
    """
    if pbar == 0.0:
        return
    mesh = ctx.mesh
    sgn = 1.0 if suction else -1.0
    for side in sides:
        v0, v1, cells = mesh.boundary_edges(side)
        tagsel = np.array([mesh.cell_tag(c) for c in cells])
        pick = np.isin(tagsel, tags)
        nrm = {"left": (-1.0, 0.0), "right": (1.0, 0.0),
               "bottom": (0.0, -1.0), "top": (0.0, 1.0)}[side]
        for a, b in zip(v0[pick], v1[pick]):
            p0, p1 = mesh.verts[a], mesh.verts[b]
            ln = np.hypot(*(p1 - p0))
            # trace of v on the edge involves only its endpoint vertices:
            # int N ds = ln/2 for each endpoint shape
            for i, ni in enumerate(nrm):
                if ni == 0.0:
                    continue
                rows = [dof(a, (U1, U2)[i]), dof(b, (U1, U2)[i])]
                acc.add_const(rows, [-sgn * pbar * ni * ln / 2.0] * 2)
