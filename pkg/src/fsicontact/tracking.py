"""Eulerian interface tracking for graph interfaces.

The interface is a material surface; with the solid description being
Eulerian, its current position satisfies gamma(x) = gamma_0(x) + d2 at the
material point now sitting on the interface.  For the horizontal-strip
benchmarks the graph samples act as marker particles and horizontal transport
is negligible (laterally clamped strip), so the update evaluates the total
vertical displacement at the previous marker position.
"""

import numpy as np

from .patchmesh import InterfaceGraph, TopologyError
from .spaces import NFIELDS, D2


class FoldOverError(TopologyError):
    pass


def advance_interface(iface, d_total, mesh, max_slope=3.0):
    """New interface graph from the total displacement field.

    ``d_total`` is the monolithic state vector or an (nv, 2) displacement
    array.  The mesh is the subdivision the displacement was solved on; its
    interface vertices are the marker particles, so the update reads exact
    nodal values.  Raises FoldOverError when the image stops being a usable
    graph.
    """
    d_total = np.asarray(d_total)
    if d_total.ndim == 1 and d_total.size == NFIELDS * mesh.patch.n_vertices:
        d2 = d_total[D2::NFIELDS]
    else:
        d2 = d_total.reshape(mesh.patch.n_vertices, -1)[:, 1]
    if mesh.iface_vertex is None:
        raise FoldOverError("mesh was built without an interface")
    disp = d2[mesh.iface_vertex]
    new_h = iface.ref_height + disp
    if not np.all(np.isfinite(new_h)):
        raise FoldOverError("non-finite interface update")
    y0, y1 = mesh.patch.box[1], mesh.patch.box[3]
    if np.any(new_h <= y0) or np.any(new_h >= y1):
        raise FoldOverError("interface left the domain box")
    if np.max(np.abs(np.diff(new_h))) > max_slope * mesh.patch.pw:
        raise FoldOverError("interface slope exceeds the graph limit")
    return InterfaceGraph(x=iface.x.copy(), height=new_h,
                          ref_height=iface.ref_height.copy(), wall_y=iface.wall_y)


def gap_function(iface, obstacle_y, alpha=0.0):
    """Initial distance of the interface to the obstacle, relaxed by alpha.

    Returns g_alpha(x) sampled at the graph abscissae; spatially constant for
    the flat benchmark interfaces.
    """
    return (iface.ref_height - obstacle_y) - alpha


def minimal_distance(iface, obstacle_y):
    """min over the interface polyline of the vertical distance to the
    obstacle line; negative on overlap."""
    return float(np.min(iface.height) - obstacle_y)
