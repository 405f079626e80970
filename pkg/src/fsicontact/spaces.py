"""Equal-order vertex finite element spaces on a subdivided patch mesh.

All seven scalar fields (u1, u2, p, d1, d2, dd1, dd2 with dd the solid
velocity) share one continuous piecewise (bi)linear space on the fine vertex
lattice.  Fields are restricted to their physical sub-domain purely through
assembly: degrees of freedom with no supporting cell of the right tag are
pinned to zero.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .patchmesh import FLUID, SOLID, ARTIFICIAL

# field slots per vertex
U1, U2, P, D1, D2, DD1, DD2 = range(7)
NFIELDS = 7
FLUID_FIELDS = (U1, U2, P)
SOLID_FIELDS = (D1, D2, DD1, DD2)

FIELD_NAMES = {U1: "u1", U2: "u2", P: "p", D1: "d1", D2: "d2", DD1: "dd1", DD2: "dd2"}


class SpaceConfigError(ValueError):
    pass


def dof(vertex, fld):
    return 7 * np.asarray(vertex) + fld


# ---------------------------------------------------------------------------
# quadrature

_GAUSS3 = (
    np.array([0.5 - np.sqrt(15) / 10, 0.5, 0.5 + np.sqrt(15) / 10]),
    np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0]),
)

# 7-point symmetric triangle rule, degree 5 (barycentric)
_TRI7_W = np.array(
    [0.225]
    + [(155.0 - np.sqrt(15)) / 1200.0] * 3
    + [(155.0 + np.sqrt(15)) / 1200.0] * 3
)
_a1 = (6.0 - np.sqrt(15)) / 21.0
_a2 = (6.0 + np.sqrt(15)) / 21.0
_TRI7_B = np.array(
    [[1.0 / 3.0] * 3,
     [1 - 2 * _a1, _a1, _a1], [_a1, 1 - 2 * _a1, _a1], [_a1, _a1, 1 - 2 * _a1],
     [1 - 2 * _a2, _a2, _a2], [_a2, 1 - 2 * _a2, _a2], [_a2, _a2, 1 - 2 * _a2]]
)


@dataclass
class Quadrature:
    """Reference-cell quadrature: 3x3 Gauss on quads, 7-point on triangles,
    3-point Gauss on edges.  Exact for polynomials up to degree 5/5/5."""

    quad_xi: np.ndarray = None
    quad_w: np.ndarray = None
    tri_bary: np.ndarray = None
    tri_w: np.ndarray = None
    edge_xi: np.ndarray = None
    edge_w: np.ndarray = None

    def __post_init__(self):
        g, w = _GAUSS3
        xi, eta = np.meshgrid(g, g, indexing="ij")
        self.quad_xi = np.column_stack([xi.ravel(), eta.ravel()])
        self.quad_w = np.outer(w, w).ravel()
        self.tri_bary = _TRI7_B
        self.tri_w = _TRI7_W  # weights on the unit reference triangle sum to 1/2 after scaling
        self.edge_xi = g.copy()
        self.edge_w = w.copy()


QUAD = Quadrature()


def quad_shape(xi):
    """Bilinear shapes on [0,1]^2 for vertex order (00, 10, 11, 01)."""
    x, e = xi[..., 0], xi[..., 1]
    return np.stack([(1 - x) * (1 - e), x * (1 - e), x * e, (1 - x) * e], axis=-1)


def quad_shape_grad(xi):
    x, e = xi[..., 0], xi[..., 1]
    gx = np.stack([-(1 - e), (1 - e), e, -e], axis=-1)
    ge = np.stack([-(1 - x), -x, x, (1 - x)], axis=-1)
    return np.stack([gx, ge], axis=-1)  # (..., 4, 2)


def tri_grads(pts):
    """Constant P1 gradients for triangles given vertex coords (n, 3, 2).

    Returns (n, 3, 2) gradients and (n,) signed areas (positive for ccw).
    """
    p0, p1, p2 = pts[:, 0], pts[:, 1], pts[:, 2]
    det = ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
           - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))
    area = 0.5 * det
    g = np.empty((len(pts), 3, 2))
    g[:, 0, 0] = (p1[:, 1] - p2[:, 1]) / det
    g[:, 0, 1] = (p2[:, 0] - p1[:, 0]) / det
    g[:, 1, 0] = (p2[:, 1] - p0[:, 1]) / det
    g[:, 1, 1] = (p0[:, 0] - p2[:, 0]) / det
    g[:, 2, 0] = (p0[:, 1] - p1[:, 1]) / det
    g[:, 2, 1] = (p1[:, 0] - p0[:, 0]) / det
    return g, area


def tri_bary_coords(pts, x):
    """Barycentric coordinates of points x (n, 2) in triangles pts (n, 3, 2)."""
    p0, p1, p2 = pts[:, 0], pts[:, 1], pts[:, 2]
    det = ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
           - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))
    l1 = ((x[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
          - (p2[:, 0] - p0[:, 0]) * (x[:, 1] - p0[:, 1])) / det
    l2 = ((p1[:, 0] - p0[:, 0]) * (x[:, 1] - p0[:, 1])
          - (x[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1])) / det
    return np.stack([1.0 - l1 - l2, l1, l2], axis=-1)


# ---------------------------------------------------------------------------
# dof handler


@dataclass
class DofHandler:
    """Monolithic vertex-interleaved layout (u1,u2,p,d1,d2,dd1,dd2 per vertex)."""

    mesh: object
    active: np.ndarray = None          # (ndof,) bool
    dirichlet: np.ndarray = None       # (ndof,) bool
    dirichlet_values: np.ndarray = None

    def __post_init__(self):
        nv = self.mesh.patch.n_vertices
        self.ndof = NFIELDS * nv
        if self.active is None:
            self.active = np.zeros(self.ndof, dtype=bool)
            fluidish_verts = self._verts_touching((FLUID, ARTIFICIAL))
            solid_verts = self._verts_touching((SOLID,))
            for f in FLUID_FIELDS:
                self.active[dof(fluidish_verts, f)] = True
            for f in SOLID_FIELDS:
                self.active[dof(solid_verts, f)] = True
        if self.dirichlet is None:
            self.dirichlet = np.zeros(self.ndof, dtype=bool)
            self.dirichlet_values = np.zeros(self.ndof)

    def _verts_touching(self, tags):
        m = self.mesh
        mask = np.zeros(m.patch.n_vertices, dtype=bool)
        if m.n_quads:
            pick = np.isin(m.quad_tags, tags)
            mask[np.unique(m.quads[pick])] = True
        if m.n_tris:
            pick = np.isin(m.tri_tags, tags)
            mask[np.unique(m.tris[pick])] = True
        return np.flatnonzero(mask)

    def constrain(self, vertices, fields, values=0.0):
        """Mark Dirichlet dofs (row elimination at solve time)."""
        vertices = np.asarray(vertices)
        values = np.broadcast_to(np.asarray(values, dtype=float), vertices.shape)
        for f in np.atleast_1d(fields):
            idx = dof(vertices, int(f))
            self.dirichlet[idx] = True
            self.dirichlet_values[idx] = values

    @property
    def constrained(self):
        return self.dirichlet | ~self.active

    @property
    def free(self):
        return ~self.constrained

    def n_active(self):
        return int(self.active.sum())


@dataclass
class State:
    """Monolithic coefficient vector with a time stamp."""

    vec: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.vec = np.asarray(self.vec, dtype=float)
        if not np.all(np.isfinite(self.vec)):
            raise SpaceConfigError("non-finite entries in state vector")

    def field(self, fld):
        return self.vec[fld::NFIELDS]

    def copy(self):
        return State(self.vec.copy(), self.time)


def zero_state(handler, time=0.0):
    return State(np.zeros(handler.ndof), time)


def interpolate(f, mesh, fld=None):
    """Vertex interpolant of an analytic field.

    ``f(x, y)`` is evaluated on the current vertex positions; returns the
    fragment array over vertices (scalar f) or an (nv, k) array if f returns
    tuples.  ``fld`` is accepted for symmetry with the monolithic layout but
    only affects where callers scatter the fragment.
    """
    xy = mesh.verts
    vals = f(xy[:, 0], xy[:, 1])
    return np.asarray(vals, dtype=float).T if isinstance(vals, tuple) else np.asarray(vals, dtype=float)


def solid_mass_matrix(mesh):
    """Scalar mass matrix restricted to solid-tagged cells."""
    from .forms import scalar_mass  # local import to avoid a cycle
    return scalar_mass(mesh, tags=(SOLID,))


def project_velocity(d_new, d_old, dt, mesh):
    """L2 projection defining the solid velocity from a displacement update.

    Solves (ddot, z) = ((d_new - d_old)/dt, z) over the solid sub-domain for
    each displacement component; dofs outside the solid come back as zero.
    """
    if dt <= 0:
        raise SpaceConfigError("dt must be positive")
    M = solid_mass_matrix(mesh)
    nv = mesh.patch.n_vertices
    act = np.flatnonzero(M.diagonal() > 0)
    if len(act) == 0:
        raise SpaceConfigError("empty solid domain: singular solid mass matrix")
    d_new = np.asarray(d_new, dtype=float).reshape(nv, -1)
    d_old = np.asarray(d_old, dtype=float).reshape(nv, -1)
    rhs = M @ ((d_new - d_old) / dt)
    Mred = M[np.ix_(act, act)].tocsc()
    out = np.zeros_like(d_new)
    lu = spla.splu(Mred)
    for k in range(d_new.shape[1]):
        out[act, k] = lu.solve(rhs[act, k])
    return out.reshape(np.asarray(d_new).shape)
