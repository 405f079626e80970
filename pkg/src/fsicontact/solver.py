"""dG(0) time loop with a semismooth Newton solve per step.

Each step freezes the geometry at the start-of-step interface, assembles the
linear operator once (bulk + Nitsche + stabilisation + boundary data) and
iterates Newton on the contact terms only.  Out of contact the residual is
affine and Newton converges in one iteration.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .patchmesh import FLUID, SOLID, ARTIFICIAL, build_patch_mesh, subdivide, flat_interface
from .spaces import NFIELDS, U1, U2, P, D1, D2, DD1, DD2, DofHandler, State, dof
from .forms import (
    Accumulator, StepContext, assemble_bulk, assemble_nitsche,
    assemble_pressure_stab, assemble_traction,
)
from .contact import assemble_contact, assemble_adhoc, ContactTrace, N_WALL
from .tracking import advance_interface
from . import functionals as fns


class StepFailure(RuntimeError):
    def __init__(self, msg, time=None, residual_history=None, active_history=None):
        super().__init__(msg)
        self.time = time
        self.residual_history = residual_history or []
        self.active_history = active_history or []


@dataclass
class SolverConfig:
    dt: float = 1.0e-5
    t_end: float = 3.0e-3
    newton_rtol: float = 1.0e-7
    newton_max_iter: int = 25
    newton_abs_floor: float = 1.0e-14
    damping_max_halvings: int = 4
    kink_guard: float = 0.0
    record_every: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0 < self.newton_rtol < 1:
            raise ValueError("newton_rtol must lie in (0, 1)")


def _bc_matrix(J, handler):
    free = handler.free.astype(float)
    return (sp.diags(free) @ J + sp.diags(1.0 - free)).tocsc()


def newton_solve(guess, linear, nonlinear, handler, config, time=None):
    """Semismooth Newton for R(s) = J_lin s + c + R_nl(s).

    ``nonlinear(s)`` returns (R_nl, (rows, cols, vals), trace) or None for an
    affine problem.  Returns (state vector, iterations, info dict).
    """
    J_lin, c = linear
    cons = handler.constrained
    vals = handler.dirichlet_values

    def residual(s, nl):
        R = J_lin @ s + c
        if nl is not None:
            R = R + nl[0]
        R[cons] = s[cons] - vals[cons]
        return R

    s = guess.copy()
    nl = nonlinear(s) if nonlinear else None
    R = residual(s, nl)
    rnorm0 = np.linalg.norm(R)
    history = [rnorm0]
    active_hist = [nl[2].n_active if nl else 0]
    info = {"residual_history": history, "active_history": active_hist}
    if rnorm0 < config.newton_abs_floor:
        info["trace"] = nl[2] if nl else None
        return s, 0, info
    rnorm = rnorm0
    for it in range(1, config.newton_max_iter + 1):
        J = J_lin
        if nl is not None:
            rows, cols, vv = nl[1]
            if len(rows):
                J = J + sp.coo_matrix((vv, (rows, cols)), shape=J.shape).tocsr()
        lu = spla.splu(_bc_matrix(J, handler))
        delta = lu.solve(-R)
        step = 1.0
        for _ in range(config.damping_max_halvings + 1):
            s_new = s + step * delta
            nl_new = nonlinear(s_new) if nonlinear else None
            R_new = residual(s_new, nl_new)
            rnorm_new = np.linalg.norm(R_new)
            if rnorm_new <= rnorm or step <= 2.0 ** -config.damping_max_halvings:
                break
            step *= 0.5
        s, nl, R, rnorm = s_new, nl_new, R_new, rnorm_new
        history.append(rnorm)
        active_hist.append(nl[2].n_active if nl else 0)
        if rnorm <= config.newton_rtol * rnorm0 or rnorm < config.newton_abs_floor:
            info["trace"] = nl[2] if nl else None
            return s, it, info
    raise StepFailure(
        f"Newton did not converge in {config.newton_max_iter} iterations",
        time=time, residual_history=history, active_history=active_hist,
    )


def extend_state(state, mesh):
    """Constant vertical extension of each field across its inactive band.

    Newly activated vertices near the moving interface must carry the
    material history of their neighbourhood, not stale zeros: the solid
    fields are extended downward from the lowest solid-supported row of each
    lattice column (and upward above the solid), the fluid fields upward from
    the highest fluid-supported row (and downward below).  Active dofs are
    untouched; the result feeds both the inactive-dof hold values and the
    time-derivative history of the next step.
    """
    m = mesh.patch
    nv = m.n_vertices
    solid_mask = np.zeros(nv, dtype=bool)
    fluid_mask = np.zeros(nv, dtype=bool)
    if mesh.n_quads:
        pick = mesh.quad_tags == SOLID
        solid_mask[np.unique(mesh.quads[pick])] = True
        pick = np.isin(mesh.quad_tags, (FLUID, ARTIFICIAL))
        fluid_mask[np.unique(mesh.quads[pick])] = True
    if mesh.n_tris:
        pick = mesh.tri_tags == SOLID
        solid_mask[np.unique(mesh.tris[pick])] = True
        pick = np.isin(mesh.tri_tags, (FLUID, ARTIFICIAL))
        fluid_mask[np.unique(mesh.tris[pick])] = True
    out = state.copy()
    for mask, fields in ((solid_mask, (D1, D2, DD1, DD2)),
                         (fluid_mask, (U1, U2, P))):
        grid = mask.reshape(m.my, m.mx)
        cols = grid.any(axis=0)
        lo = np.where(cols, np.argmax(grid, axis=0), 0)
        hi = np.where(cols, m.my - 1 - np.argmax(grid[::-1], axis=0), m.my - 1)
        iy = np.arange(m.my)[:, None]
        src = np.clip(iy, lo[None, :], hi[None, :])
        vid_src = (src * m.mx + np.arange(m.mx)[None, :]).ravel()
        vid_dst = (iy * m.mx + np.arange(m.mx)[None, :] * np.ones((m.my, 1), dtype=int)).ravel()
        for f in fields:
            vals = out[NFIELDS * vid_src + f]
            idx = NFIELDS * vid_dst + f
            out[idx] = np.where(mask[vid_dst], out[idx], vals)
    return out


def make_handler(mesh, scn):
    """DofHandler with the scenario's boundary conditions applied."""
    handler = DofHandler(mesh)
    v = mesh.verts
    x0, y0, x1, y1 = mesh.patch.box
    tol = 1e-12
    on_left = np.abs(v[:, 0] - x0) < tol
    on_right = np.abs(v[:, 0] - x1) < tol
    on_bottom = np.abs(v[:, 1] - y0) < tol

    # solid clamped on the lateral strip edges
    lat_solid = np.flatnonzero((on_left | on_right) & (v[:, 1] >= scn.interface_y0 - tol))
    handler.constrain(lat_solid, (D1, D2, DD1, DD2))

    if scn.wall is None:
        handler.constrain(np.flatnonzero(on_bottom), (U1, U2))
    elif scn.wall[0] == "artificial":
        handler.constrain(np.flatnonzero(on_bottom), (U1, U2))
        lat_art = np.flatnonzero((on_left | on_right) & (v[:, 1] <= scn.wall[1] + tol))
        handler.constrain(lat_art, (U1, U2))
    else:  # dead region below the wall: the wall is the fluid's bottom boundary
        on_wall = np.flatnonzero(np.abs(v[:, 1] - scn.wall[1]) < tol)
        if scn.contact.wall_condition == "noslip":
            handler.constrain(on_wall, (U1, U2))
        else:
            handler.constrain(on_wall, (U2,))
    return handler


@dataclass
class RunResult:
    scenario: object
    series: dict
    energy: dict
    meta: dict = field(default_factory=dict)

    def col(self, name):
        return np.asarray(self.series[name])


def run(scn, config=None, progress=None):
    """Advance the scenario from rest to t_end; returns the recorded series.

    Step failures propagate as StepFailure carrying the partial records on
    the exception (``partial`` attribute).
    """
    config = config or SolverConfig(dt=scn.dt, t_end=scn.t_end)
    mesh = build_patch_mesh(scn.nx, scn.ny, scn.box)
    iface = flat_interface(mesh, scn.interface_y0,
                           wall_y=None if scn.wall is None else scn.wall[1])
    nv = mesh.n_vertices
    state = np.zeros(NFIELDS * nv)
    series = {k: [] for k in fns.SERIES_COLUMNS}
    energy = {k: [] for k in fns.ENERGY_COLUMNS}
    g_alpha = scn.interface_y0 - scn.contact.obstacle_y - scn.contact.alpha
    g0 = scn.interface_y0 - scn.contact.obstacle_y
    n_steps = int(round(config.t_end / config.dt))
    adhoc = scn.contact.formulation == "adhoc"

    prev_state = state
    for m in range(1, n_steps + 1):
        t = m * config.dt
        sm = subdivide(mesh, iface, wall=scn.wall)
        handler = make_handler(sm, scn)
        # inactive dofs hold the extended previous state rather than zero, so
        # vertices entering a sub-domain carry consistent material history
        hold = ~handler.active & ~handler.dirichlet
        handler.dirichlet_values[hold] = state[hold]
        ctx = StepContext(sm, handler)
        acc = Accumulator(handler.ndof)
        assemble_bulk(acc, ctx, state, config.dt, scn.mat, scn.nit,
                      penalty_below=scn.penalty_below, fluid_tags=scn.fluid_tags)
        assemble_pressure_stab(acc, ctx, state, scn.mat, scn.nit,
                               fluid_tags=scn.fluid_tags)
        if adhoc:
            mask = assemble_adhoc(acc, ctx, state, scn.contact, scn.mat, scn.nit,
                                  scn.nit.h, g0)
            assemble_nitsche(acc, ctx, scn.mat, scn.nit, mode=scn.contact.interface,
                             edge_mask=mask)
            nonlinear = None
        else:
            assemble_nitsche(acc, ctx, scn.mat, scn.nit, mode=scn.contact.interface)
            state_old_step = state

            def nonlinear(s, _ctx=ctx, _old=state_old_step):
                R, jac, tr = assemble_contact(
                    s, _ctx, scn.contact, scn.mat, scn.nit, scn.nit.h, g_alpha,
                    kink_guard=config.kink_guard,
                    state_old_vec=_old if scn.contact.theta > 0 else None,
                    dt=config.dt)
                return R, jac, tr
        assemble_traction(acc, ctx, scn.pressure_at(t), sides=("left", "right"),
                          tags=(FLUID,))
        J_lin = acc.matrix()
        c = acc.const
        try:
            s_new, iters, info = newton_solve(state, (J_lin, c), nonlinear,
                                              handler, config, time=t)
        except StepFailure as exc:
            exc.partial = RunResult(scn, series, energy,
                                    {"failed_at": t, "steps_done": m - 1})
            raise
        trace = info.get("trace")
        if trace is None:
            trace = fns.adhoc_trace(ctx, s_new, scn.contact, scn.mat, scn.nit.h, g0)
        iface_new = advance_interface(iface, s_new, sm)

        if m % config.record_every == 0 or m == n_steps:
            row = fns.step_row(t, ctx, s_new, iface_new, trace, scn, iters)
            for k, val in row.items():
                series[k].append(val)
            erow = fns.energy_terms(ctx, s_new, trace, scn)
            for k, val in erow.items():
                energy[k].append(val)
        state = extend_state(s_new, sm)
        iface = iface_new
        if progress is not None:
            progress(m, n_steps, t, series)
    fns.normalize_series(series)
    return RunResult(scn, {k: np.asarray(vv) for k, vv in series.items()},
                     {k: np.asarray(vv) for k, vv in energy.items()},
                     {"n_steps": n_steps, "dt": config.dt})
