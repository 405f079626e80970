"""Patch meshes and interface-resolving subdivision.

The domain is covered by a fixed Cartesian grid of quadrilateral "patches".
Each patch owns a 3x3 sub-lattice of vertices (corners, edge midpoints,
center), so the global vertex lattice has (2*nx+1) x (2*ny+1) nodes and never
changes.  A moving interface, stored as a height graph over x, is resolved
each step by moving the interior nodes of the patches it crosses and splitting
those patches into eight triangles; untouched patches keep their four
axis-aligned sub-quadrilaterals.  The reported element count is therefore
always 4*nx*ny.
"""

from dataclasses import dataclass, field

import numpy as np

# sub-cell domain tags
FLUID = 0
SOLID = 1
ARTIFICIAL = 2
DEAD = 3

TAG_NAMES = {FLUID: "fluid", SOLID: "solid", ARTIFICIAL: "artificial", DEAD: "dead"}


class MeshConfigError(ValueError):
    pass


class TopologyError(RuntimeError):
    """Interface states the subdivision does not support (non-graph, out of box)."""


@dataclass
class PatchMesh:
    """Fixed coarse patch grid on a rectangular box."""

    nx: int
    ny: int
    box: tuple  # (x_lo, y_lo, x_hi, y_hi)

    def __post_init__(self):
        x0, y0, x1, y1 = self.box
        self.pw = (x1 - x0) / self.nx  # patch width
        self.ph = (y1 - y0) / self.ny  # patch height
        self.mx = 2 * self.nx + 1      # fine lattice size
        self.my = 2 * self.ny + 1
        self.n_vertices = self.mx * self.my
        ix, iy = np.meshgrid(np.arange(self.mx), np.arange(self.my), indexing="xy")
        self.ref_verts = np.column_stack(
            [x0 + ix.ravel() * self.pw / 2.0, y0 + iy.ravel() * self.ph / 2.0]
        )

    @property
    def n_elements(self):
        """Sub-element count convention: four quads per patch."""
        return 4 * self.nx * self.ny

    @property
    def n_patches(self):
        return self.nx * self.ny

    def vid(self, ix, iy):
        """Global vertex id on the fine lattice."""
        return iy * self.mx + ix

    def patch_x(self, i):
        x0 = self.box[0]
        return x0 + i * self.pw, x0 + (i + 1) * self.pw

    def patch_y(self, j):
        y0 = self.box[1]
        return y0 + j * self.ph, y0 + (j + 1) * self.ph

    def patch_nodes(self, i, j):
        """The nine lattice nodes of patch (i, j).

        Order: c00, c10, c11, c01 (corners, ccw), B, R, T, L (edge nodes),
        M (center).
        """
        ix, iy = 2 * i, 2 * j
        v = self.vid
        return dict(
            c00=v(ix, iy), c10=v(ix + 2, iy), c11=v(ix + 2, iy + 2), c01=v(ix, iy + 2),
            B=v(ix + 1, iy), R=v(ix + 2, iy + 1), T=v(ix + 1, iy + 2), L=v(ix, iy + 1),
            M=v(ix + 1, iy + 1),
        )

    def patch_quads(self, i, j):
        """The default four sub-quads of patch (i, j), each ccw."""
        n = self.patch_nodes(i, j)
        return [
            [n["c00"], n["B"], n["M"], n["L"]],
            [n["B"], n["c10"], n["R"], n["M"]],
            [n["M"], n["R"], n["c11"], n["T"]],
            [n["L"], n["M"], n["T"], n["c01"]],
        ]


def build_patch_mesh(nx, ny, box=(0.0, 0.0, 1.0, 0.6)):
    """Build the uniform patch grid; total sub-element count is 4*nx*ny."""
    if nx < 1 or ny < 1:
        raise MeshConfigError(f"patch counts must be >= 1, got nx={nx}, ny={ny}")
    x0, y0, x1, y1 = box
    if not (x1 > x0 and y1 > y0):
        raise MeshConfigError(f"degenerate box {box}")
    return PatchMesh(nx, ny, tuple(float(b) for b in box))


@dataclass
class InterfaceGraph:
    """Interface height graph sampled at patch-edge abscissae.

    ``height`` is the current interface position, ``ref_height`` the initial
    one (used for gap bookkeeping).  ``wall_y`` is the fixed lower wall, if
    any; its normal is the constant n_w = (0, -1) and tangent (1, 0).
    """

    x: np.ndarray
    height: np.ndarray
    ref_height: np.ndarray = None
    wall_y: float = None

    wall_normal: tuple = (0.0, -1.0)
    wall_tangent: tuple = (1.0, 0.0)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.height = np.asarray(self.height, dtype=float)
        if self.ref_height is None:
            self.ref_height = self.height.copy()
        self.ref_height = np.asarray(self.ref_height, dtype=float)
        if not np.all(np.isfinite(self.height)):
            raise TopologyError("non-finite interface heights")

    def segment_frames(self):
        """Per-segment unit tangent and unit normal (pointing out of the solid,
        i.e. downward into the fluid for a solid lying above the graph)."""
        dx = np.diff(self.x)
        dg = np.diff(self.height)
        ln = np.hypot(dx, dg)
        tau = np.column_stack([dx / ln, dg / ln])
        nrm = np.column_stack([tau[:, 1], -tau[:, 0]])
        return tau, nrm

    def value(self, xq):
        """Piecewise-linear interface height at abscissae xq."""
        return np.interp(xq, self.x, self.height)

    def polyline_length(self):
        return float(np.sum(np.hypot(np.diff(self.x), np.diff(self.height))))


def flat_interface(mesh, y, wall_y=None):
    x = mesh.box[0] + np.arange(mesh.nx + 1) * mesh.pw
    h = np.full(mesh.nx + 1, float(y))
    return InterfaceGraph(x=x, height=h, wall_y=wall_y)


# quadrant definitions on the 9-node patch: (vertex keys ccw), and which
# diagonal resolves a chord between two of its nodes
_QUADRANTS = {
    "SW": ("c00", "B", "M", "L"),
    "SE": ("B", "c10", "R", "M"),
    "NE": ("M", "R", "c11", "T"),
    "NW": ("L", "M", "T", "c01"),
}
# adjacent-edge cut -> quadrant whose diagonal is the chord
_ADJ_QUADRANT = {
    frozenset(("L", "B")): "SW",
    frozenset(("B", "R")): "SE",
    frozenset(("R", "T")): "NE",
    frozenset(("T", "L")): "NW",
}
# corner endpoint -> quadrant whose corner-to-center diagonal is forced
_CORNER_QUADRANT = {"c00": "SW", "c10": "SE", "c11": "NE", "c01": "NW"}

_EDGE_KINDS = ("L", "R", "B", "T")


@dataclass
class InterfaceEdges:
    """Struct-of-arrays view of the discrete interface Gamma_h."""

    v0: np.ndarray = None
    v1: np.ndarray = None
    normal: np.ndarray = None   # unit, out of the solid
    tangent: np.ndarray = None
    length: np.ndarray = None
    cell_solid: np.ndarray = None   # global cell handles (quads first, then tris)
    cell_other: np.ndarray = None   # fluid / artificial / dead side
    col: np.ndarray = None          # patch column index

    @property
    def n(self):
        return 0 if self.v0 is None else len(self.v0)


@dataclass
class SubdividedMesh:
    """Interface-fitted subdivision of a PatchMesh for one time step."""

    patch: PatchMesh
    verts: np.ndarray
    quads: np.ndarray          # (nq, 4) vertex ids, ccw
    quad_tags: np.ndarray
    quad_patch: np.ndarray     # (nq, 2) owning patch (i, j)
    tris: np.ndarray           # (nt, 3) vertex ids, ccw
    tri_tags: np.ndarray
    tri_patch: np.ndarray
    iface: InterfaceEdges
    patch_cut: np.ndarray
    wall: tuple = None         # (mode, y) or None
    iface_vertex: np.ndarray = None  # vertex id at each graph abscissa
    _edge_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_quads(self):
        return len(self.quads)

    @property
    def n_tris(self):
        return len(self.tris)

    @property
    def n_cells(self):
        return self.n_quads + self.n_tris

    def cell_vertices(self, handle):
        """Vertex ids of a cell handle (quads first, then triangles)."""
        if handle < self.n_quads:
            return self.quads[handle]
        return self.tris[handle - self.n_quads]

    def cell_tag(self, handle):
        if handle < self.n_quads:
            return self.quad_tags[handle]
        return self.tri_tags[handle - self.n_quads]

    def cell_tags_all(self):
        return np.concatenate([self.quad_tags, self.tri_tags]) if self.n_tris \
            else self.quad_tags.copy()

    def quad_areas(self):
        return np.full(self.n_quads, (self.patch.pw / 2.0) * (self.patch.ph / 2.0))

    def tri_areas(self):
        if self.n_tris == 0:
            return np.zeros(0)
        p = self.verts[self.tris]
        return 0.5 * np.abs(
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
        )

    def centroids(self):
        cq = self.verts[self.quads].mean(axis=1) if self.n_quads else np.zeros((0, 2))
        ct = self.verts[self.tris].mean(axis=1) if self.n_tris else np.zeros((0, 2))
        return np.vstack([cq, ct])

    def interior_edges(self):
        """Unique interior edges: (va, vb, cell_a, cell_b) arrays.

        Cached; cell handles are global (quads first).
        """
        if "interior" in self._edge_cache:
            return self._edge_cache["interior"]
        chunks = []
        owner = []
        if self.n_quads:
            q = self.quads
            e = np.concatenate([q[:, [0, 1]], q[:, [1, 2]], q[:, [2, 3]], q[:, [3, 0]]])
            chunks.append(e)
            owner.append(np.tile(np.arange(self.n_quads), 4))
        if self.n_tris:
            t = self.tris
            e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
            chunks.append(e)
            owner.append(np.tile(np.arange(self.n_tris), 3) + self.n_quads)
        edges = np.concatenate(chunks)
        owner = np.concatenate(owner)
        key = (np.minimum(edges[:, 0], edges[:, 1]).astype(np.int64) * self.patch.n_vertices
               + np.maximum(edges[:, 0], edges[:, 1]))
        order = np.argsort(key, kind="stable")
        key_s, owner_s, edges_s = key[order], owner[order], edges[order]
        is_first = np.ones(len(key_s), dtype=bool)
        is_first[1:] = key_s[1:] != key_s[:-1]
        first_idx = np.flatnonzero(is_first)
        counts = np.diff(np.append(first_idx, len(key_s)))
        shared = first_idx[counts == 2]
        va = edges_s[shared, 0]
        vb = edges_s[shared, 1]
        ca = owner_s[shared]
        cb = owner_s[shared + 1]
        out = (va, vb, ca, cb)
        self._edge_cache["interior"] = out
        return out

    def boundary_edges(self, side):
        """Fine boundary edges on one box side ('left'|'right'|'bottom'|'top').

        Returns (v0, v1, cell) with the adjacent cell handle; the outward
        normal is implied by the side.
        """
        x0, y0, x1, y1 = self.patch.box
        coord, val = {"left": (0, x0), "right": (0, x1),
                      "bottom": (1, y0), "top": (1, y1)}[side]
        chunks, owner = [], []
        if self.n_quads:
            q = self.quads
            e = np.concatenate([q[:, [0, 1]], q[:, [1, 2]], q[:, [2, 3]], q[:, [3, 0]]])
            chunks.append(e)
            owner.append(np.tile(np.arange(self.n_quads), 4))
        if self.n_tris:
            t = self.tris
            e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
            chunks.append(e)
            owner.append(np.tile(np.arange(self.n_tris), 3) + self.n_quads)
        edges = np.concatenate(chunks)
        owner = np.concatenate(owner)
        on = (np.abs(self.verts[edges[:, 0], coord] - val) < 1e-12) & \
             (np.abs(self.verts[edges[:, 1], coord] - val) < 1e-12)
        return edges[on, 0], edges[on, 1], owner[on]

    def dump(self, path):
        """Plain-text cell dump (tag then vertex coordinates), for eyeballing."""
        with open(path, "w") as fh:
            fh.write("# tag x0 y0 x1 y1 x2 y2 [x3 y3]\n")
            for q, tag in zip(self.quads, self.quad_tags):
                pts = self.verts[q].ravel()
                fh.write(TAG_NAMES[int(tag)] + " " + " ".join(f"{v:.9g}" for v in pts) + "\n")
            for t, tag in zip(self.tris, self.tri_tags):
                pts = self.verts[t].ravel()
                fh.write(TAG_NAMES[int(tag)] + " " + " ".join(f"{v:.9g}" for v in pts) + "\n")


def _tri_max_angle(p0, p1, p2):
    a = np.linalg.norm(p1 - p0)
    b = np.linalg.norm(p2 - p1)
    c = np.linalg.norm(p0 - p2)
    angles = []
    for (u, v, w) in ((a, b, c), (b, c, a), (c, a, b)):
        cosx = (v * v + w * w - u * u) / (2 * v * w)
        angles.append(np.arccos(np.clip(cosx, -1.0, 1.0)))
    return max(angles)


def _signed_area(p0, p1, p2):
    return 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))


def _split_quadrant(keys, pos, forced_diag=None):
    """Split quadrant quad (a,b,c,d) into two ccw triangles.

    forced_diag is a frozenset of two vertex keys that must become an edge;
    otherwise the diagonal with the smaller maximum angle wins.
    """
    a, b, c, d = keys
    options = {frozenset((a, c)): ((a, b, c), (a, c, d)),
               frozenset((b, d)): ((a, b, d), (b, c, d))}
    if forced_diag is not None:
        tris = options[forced_diag]
        for t in tris:
            if _signed_area(pos[t[0]], pos[t[1]], pos[t[2]]) <= 0:
                raise TopologyError("degenerate forced split in cut patch")
        return tris
    best, best_ang = None, np.inf
    for tris in options.values():
        areas = [_signed_area(pos[t[0]], pos[t[1]], pos[t[2]]) for t in tris]
        if min(areas) <= 0:
            continue
        ang = max(_tri_max_angle(pos[t[0]], pos[t[1]], pos[t[2]]) for t in tris)
        if ang < best_ang:
            best, best_ang = tris, ang
    if best is None:
        raise TopologyError("no valid diagonal for quadrant split")
    return best


def _clip_column_segment(Xa, Xb, ga, gb, Ya, Yb):
    """Clip the column interface segment to a patch's y-band.

    Returns None (no interior crossing) or (P0, kind0, P1, kind1) with x(P0)
    <= x(P1) and kinds in {'L','R','B','T','c00','c10','c11','c01'}.
    """
    if ga == gb:
        if not (Ya < ga < Yb):
            return None
        return (np.array([Xa, ga]), "L", np.array([Xb, gb]), "R")
    lo, hi = (ga, gb) if ga < gb else (gb, ga)
    c0, c1 = max(lo, Ya), min(hi, Yb)
    if c1 <= c0:
        return None
    # t-parameter along (Xa,ga)->(Xb,gb)
    t0 = (c0 - ga) / (gb - ga)
    t1 = (c1 - ga) / (gb - ga)
    ta, tb = (t0, t1) if t0 < t1 else (t1, t0)

    eps_t = 1e-12
    eps_y = 1e-12 * (Yb - Ya)

    def point_kind(t):
        x = Xa + t * (Xb - Xa)
        y = ga + t * (gb - ga)
        onL = t <= eps_t
        onR = t >= 1.0 - eps_t
        onB = y <= Ya + eps_y
        onT = y >= Yb - eps_y
        if onB:
            y = Ya
        if onT:
            y = Yb
        if onL and onB:
            return np.array([Xa, Ya]), "c00"
        if onR and onB:
            return np.array([Xb, Ya]), "c10"
        if onR and onT:
            return np.array([Xb, Yb]), "c11"
        if onL and onT:
            return np.array([Xa, Yb]), "c01"
        if onL:
            return np.array([Xa, y]), "L"
        if onR:
            return np.array([Xb, y]), "R"
        if onB:
            return np.array([x, Ya]), "B"
        if onT:
            return np.array([x, Yb]), "T"
        raise TopologyError("interface endpoint strictly inside a patch")

    P0, k0 = point_kind(ta)
    P1, k1 = point_kind(tb)
    if k0 == k1:
        return None
    both_corner = k0.startswith("c") and k1.startswith("c")
    if both_corner:
        # corner-to-adjacent-corner along an edge is a fitted run, not a cut
        share_x = P0[0] == P1[0]
        share_y = P0[1] == P1[1]
        if share_x or share_y:
            return None
    return (P0, k0, P1, k1)


def subdivide(mesh, iface, wall=None, snap_rel=1e-3, default_tag=FLUID):
    """Subdivide a PatchMesh so the interface polyline becomes mesh lines.

    Parameters
    ----------
    mesh : PatchMesh
    iface : InterfaceGraph or None
        None gives the uncut all-quad mesh, every cell tagged ``default_tag``.
    wall : None or (mode, y_w)
        mode 'artificial' tags cells below y_w as ARTIFICIAL, 'dead' as DEAD.
        y_w must lie on the patch lattice.
    snap_rel : float
        Interface samples closer than snap_rel * patch height to a lattice
        line are snapped onto it (sliver/conditioning control).
    """
    x0, y0, x1, y1 = mesh.box
    nq_template = 4 * mesh.n_patches

    if iface is None:
        quads = np.array(
            [q for j in range(mesh.ny) for i in range(mesh.nx) for q in mesh.patch_quads(i, j)],
            dtype=np.int64,
        )
        qp = np.array(
            [(i, j) for j in range(mesh.ny) for i in range(mesh.nx) for _ in range(4)],
            dtype=np.int64,
        )
        return SubdividedMesh(
            patch=mesh, verts=mesh.ref_verts.copy(),
            quads=quads, quad_tags=np.full(nq_template, default_tag, dtype=np.int8),
            quad_patch=qp,
            tris=np.zeros((0, 3), dtype=np.int64), tri_tags=np.zeros(0, dtype=np.int8),
            tri_patch=np.zeros((0, 2), dtype=np.int64),
            iface=InterfaceEdges(), patch_cut=np.zeros(mesh.n_patches, dtype=bool),
            wall=wall,
        )

    g = iface.height.copy()
    if np.any(g <= y0) or np.any(g >= y1):
        raise TopologyError("interface height leaves the domain box")
    # snap samples onto lattice rows
    rows = np.round((g - y0) / mesh.ph)
    lattice = y0 + rows * mesh.ph
    snap = np.abs(g - lattice) < snap_rel * mesh.ph
    g[snap] = lattice[snap]

    wall_mode, wall_y = (None, None)
    if wall is not None:
        wall_mode, wall_y = wall
        if wall_mode not in ("artificial", "dead"):
            raise MeshConfigError(f"unknown wall mode {wall_mode!r}")
        jw = (wall_y - y0) / mesh.ph
        if abs(jw - round(jw)) > 1e-9:
            raise MeshConfigError("wall height must lie on the patch lattice")

    verts = mesh.ref_verts.copy()
    patch_cut = np.zeros(mesh.n_patches, dtype=bool)
    tris = []
    tri_patch = []
    iface_local = []   # (v0, v1, tri_below_local_idx, tri_above_local_idx, col)
    fitted_cols = []   # (col, lattice row j) for runs lying on a mesh line

    for i in range(mesh.nx):
        Xa, Xb = mesh.patch_x(i)
        ga, gb = g[i], g[i + 1]
        r = (ga - y0) / mesh.ph
        if ga == gb and abs(r - round(r)) < 1e-12:
            fitted_cols.append((i, int(round(r))))
            continue
        jlo = int(np.floor((min(ga, gb) - y0) / mesh.ph))
        jhi = int(np.floor((max(ga, gb) - y0) / mesh.ph - 1e-12))
        jlo = max(jlo, 0)
        jhi = min(jhi, mesh.ny - 1)
        for j in range(jlo, jhi + 1):
            Ya, Yb = mesh.patch_y(j)
            clip = _clip_column_segment(Xa, Xb, ga, gb, Ya, Yb)
            if clip is None:
                continue
            P0, k0, P1, k1 = clip
            pid = j * mesh.nx + i
            if patch_cut[pid]:
                raise TopologyError(f"patch {(i, j)} cut more than once")
            patch_cut[pid] = True
            nodes = mesh.patch_nodes(i, j)
            pos = {k: verts[v] for k, v in nodes.items()}

            forced = {}
            adj = frozenset((k0, k1))
            if k0 in _EDGE_KINDS and k1 in _EDGE_KINDS and adj in _ADJ_QUADRANT:
                # adjacent-edge cut: keep the center node and make the chord a
                # quadrant diagonal, unless the chord runs close to the center
                # (the kept-center triangle would degenerate); then the center
                # node moves onto the chord and the chord becomes two spokes
                for k, P in ((k0, P0), (k1, P1)):
                    verts[nodes[k]] = P
                    pos[k] = P
                C0 = pos["M"]
                seg = P1 - P0
                t_foot = float(np.dot(C0 - P0, seg) / np.dot(seg, seg))
                foot = P0 + t_foot * seg
                dist = float(np.hypot(*(C0 - foot)))
                if 0.05 <= t_foot <= 0.95 and dist <= 0.25 * min(mesh.pw, mesh.ph):
                    verts[nodes["M"]] = foot
                    pos["M"] = foot
                    chain = [k0, "M", k1]
                else:
                    forced[_ADJ_QUADRANT[adj]] = adj
                    chain = [k0, k1]
            else:
                # chord through the (moved) center node
                for k, P in ((k0, P0), (k1, P1)):
                    if k in _EDGE_KINDS:
                        verts[nodes[k]] = P
                        pos[k] = P
                mid = 0.5 * (P0 + P1)
                verts[nodes["M"]] = mid
                pos["M"] = mid
                for k in (k0, k1):
                    if k in _CORNER_QUADRANT:
                        qd = _CORNER_QUADRANT[k]
                        forced[qd] = frozenset((k, "M"))
                chain = [k0, "M", k1]

            local_tris = []
            for qd, keys in _QUADRANTS.items():
                local_tris.extend(_split_quadrant(keys, pos, forced.get(qd)))

            # map chord edges to their two adjacent triangles (below/above)
            base = len(tris)
            for ka, kb in zip(chain[:-1], chain[1:]):
                ek = {ka, kb}
                owners = [idx for idx, t in enumerate(local_tris) if ek <= set(t)]
                if len(owners) != 2:
                    raise TopologyError("interface edge not shared by two sub-cells")
                # chord is oriented +x, so a positive cross product means the
                # triangle centroid lies above the chord (solid side)
                pa, pb = pos[ka], pos[kb]
                sides = []
                for idx in owners:
                    c = (pos[local_tris[idx][0]] + pos[local_tris[idx][1]]
                         + pos[local_tris[idx][2]]) / 3.0
                    sides.append((pb[0] - pa[0]) * (c[1] - pa[1])
                                 - (pb[1] - pa[1]) * (c[0] - pa[0]))
                if sides[0] == 0.0 or sides[1] == 0.0 or (sides[0] > 0) == (sides[1] > 0):
                    raise TopologyError("could not orient interface edge neighbours")
                lo_i, hi_i = (owners[0], owners[1]) if sides[0] < 0 else (owners[1], owners[0])
                iface_local.append((nodes[ka], nodes[kb], base + lo_i, base + hi_i, i))

            for t in local_tris:
                tris.append([nodes[t[0]], nodes[t[1]], nodes[t[2]]])
                tri_patch.append((i, j))

    # quads of uncut patches
    quad_list = []
    quad_patch = []
    quad_index = {}  # (patch id, k) -> quad idx
    for j in range(mesh.ny):
        for i in range(mesh.nx):
            pid = j * mesh.nx + i
            if patch_cut[pid]:
                continue
            for k, qd in enumerate(mesh.patch_quads(i, j)):
                quad_index[(pid, k)] = len(quad_list)
                quad_list.append(qd)
                quad_patch.append((i, j))
    quads = np.asarray(quad_list, dtype=np.int64).reshape(-1, 4)
    quad_patch = np.asarray(quad_patch, dtype=np.int64).reshape(-1, 2)
    tris = np.asarray(tris, dtype=np.int64).reshape(-1, 3)
    tri_patch = np.asarray(tri_patch, dtype=np.int64).reshape(-1, 2)
    nq = len(quads)

    # tags by centroid against the (snapped) graph and the wall
    def tag_points(pts):
        col = np.clip(((pts[:, 0] - x0) / mesh.pw).astype(int), 0, mesh.nx - 1)
        Xa = x0 + col * mesh.pw
        gval = g[col] + (g[col + 1] - g[col]) * (pts[:, 0] - Xa) / mesh.pw
        tags = np.where(pts[:, 1] > gval, SOLID, FLUID).astype(np.int8)
        if wall_mode is not None:
            below = (pts[:, 1] < wall_y) & (tags == FLUID)
            tags[below] = ARTIFICIAL if wall_mode == "artificial" else DEAD
        return tags

    quad_tags = tag_points(verts[quads].mean(axis=1)) if nq else np.zeros(0, np.int8)
    tri_tags = tag_points(verts[tris].mean(axis=1)) if len(tris) else np.zeros(0, np.int8)

    # interface edge arrays (cut patches), then fitted runs on lattice lines
    ev0, ev1, ecs, eco, ecol = [], [], [], [], []
    for v0, v1, lo_t, hi_t, coli in iface_local:
        ev0.append(v0)
        ev1.append(v1)
        ecs.append(nq + hi_t)   # above the graph = solid side
        eco.append(nq + lo_t)
        ecol.append(coli)
    for (i, j) in fitted_cols:
        if j <= 0 or j >= mesh.ny:
            raise TopologyError("fitted interface on the domain boundary")
        pid_above = j * mesh.nx + i
        pid_below = (j - 1) * mesh.nx + i
        # sub-quads: 0=SW,1=SE,2=NE,3=NW; above side touches with SW/SE,
        # below side with NW/NE
        n_above = mesh.patch_nodes(i, j)
        pairs = [
            (n_above["c00"], n_above["B"], (pid_above, 0), (pid_below, 3)),
            (n_above["B"], n_above["c10"], (pid_above, 1), (pid_below, 2)),
        ]
        for v0, v1, key_up, key_dn in pairs:
            up = quad_index.get(key_up)
            dn = quad_index.get(key_dn)
            if up is None or dn is None:
                raise TopologyError("fitted interface next to a cut patch edge")
            ev0.append(v0)
            ev1.append(v1)
            ecs.append(up)
            eco.append(dn)
            ecol.append(i)

    iface_edges = InterfaceEdges()
    if ev0:
        v0 = np.asarray(ev0, dtype=np.int64)
        v1 = np.asarray(ev1, dtype=np.int64)
        p0 = verts[v0]
        p1 = verts[v1]
        dvec = p1 - p0
        ln = np.hypot(dvec[:, 0], dvec[:, 1])
        tau = dvec / ln[:, None]
        nrm = np.column_stack([tau[:, 1], -tau[:, 0]])
        # orient out of the solid: must point away from the solid cell centroid
        cs = np.asarray(ecs)
        cents = np.array([verts[tris[c - nq]].mean(axis=0) if c >= nq
                          else verts[quads[c]].mean(axis=0) for c in cs])
        mids = 0.5 * (p0 + p1)
        flip = np.einsum("ij,ij->i", nrm, cents - mids) > 0
        nrm[flip] *= -1.0
        tau[flip] *= -1.0
        iface_edges = InterfaceEdges(
            v0=v0, v1=v1, normal=nrm, tangent=tau, length=ln,
            cell_solid=np.asarray(ecs, dtype=np.int64),
            cell_other=np.asarray(eco, dtype=np.int64),
            col=np.asarray(ecol, dtype=np.int64),
        )

    # the vertex sitting exactly on the interface at each abscissa: a lattice
    # corner when the (snapped) sample lies on a row line, else the moved
    # vertical-edge node of the cut patch row
    iface_vertex = np.empty(mesh.nx + 1, dtype=np.int64)
    for k in range(mesh.nx + 1):
        r = (g[k] - y0) / mesh.ph
        if abs(r - round(r)) < 1e-12:
            iy = 2 * int(round(r))
        else:
            iy = 2 * int(np.floor(r)) + 1
        iface_vertex[k] = mesh.vid(2 * k, iy)

    sm = SubdividedMesh(
        patch=mesh, verts=verts, quads=quads, quad_tags=quad_tags,
        quad_patch=quad_patch, tris=tris, tri_tags=tri_tags, tri_patch=tri_patch,
        iface=iface_edges, patch_cut=patch_cut, wall=wall, iface_vertex=iface_vertex,
    )
    return sm
