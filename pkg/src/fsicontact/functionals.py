"""Quantities of interest evaluated per time step, plus CSV output.

The series columns are fixed (documented in the README); J_contact and
J_vel_fsi are stored both raw and normalized.  Within a single run the
normalization averages are taken over [0, 0.004] of the run itself; sweep
post-processing can renormalize against the finest level via
``renormalize``.
"""

import numpy as np

from .patchmesh import FLUID, SOLID, ARTIFICIAL
from .spaces import NFIELDS, U1, U2, P, D1, D2, DD1, DD2, dof
from .forms import _edge_ops, solid_stress_normal_op, edge_dof_vector
from .contact import ContactTrace, N_WALL

NORMALIZATION_WINDOW = 0.004

SERIES_COLUMNS = [
    "time", "d_min", "J_p", "J_Pgamma", "J_contact", "J_vel_fsi", "J_vel_C",
    "J_sigma_sn", "p_mid_norm", "newton_iters", "active_size",
    "J_contact_raw", "lambda_norm", "J_vel_fsi_raw", "un_norm", "ddn_norm",
    "len_fsi", "len_C",
]

ENERGY_COLUMNS = [
    "time", "u_l2sq", "ddot_l2sq", "d_h1sq", "visc_diss", "sp_diss",
    "penalty_diss", "nitsche_diss", "contact_energy",
]


def d_min(iface, obstacle_y):
    """Minimal vertical distance of the interface polyline to the obstacle
    line; negative on overlap."""
    return float(np.min(iface.height) - obstacle_y)


def interface_point_values(ctx, state_vec, mat):
    """Pointwise traces on Gamma_h: p, u.n, ddot.n, (ddot-u).n, sigma_{s,n},
    each (n_edges, n_qp), plus the weights."""
    ne = len(ctx.itraces)
    nq = len(ctx.itraces[0].w) if ne else 0
    out = {k: np.zeros((ne, nq)) for k in
           ("w", "p", "un", "ddn", "jumpn", "ssn", "u_tau", "dd_tau")}
    for e, rec in enumerate(ctx.itraces):
        loc = state_vec[edge_dof_vector(rec)]
        out["w"][e] = rec.w
        for q in range(nq):
            ops = _edge_ops(rec, q, mat.nu_f)
            n = rec.n
            uvec = ops["u"] @ loc
            ddvec = ops["dd"] @ loc
            out["p"][e, q] = ops["p"] @ loc
            out["un"][e, q] = n @ uvec
            out["ddn"][e, q] = n @ ddvec
            out["jumpn"][e, q] = n @ (ddvec - uvec)
            out["ssn"][e, q] = N_WALL @ (
                solid_stress_normal_op(rec, q, mat.mu_s, mat.lam_s) @ loc)
            out["u_tau"][e, q] = rec.tau @ uvec
            out["dd_tau"][e, q] = rec.tau @ ddvec
    return out


def contact_functionals(trace, point_vals):
    """The reported contact quantities from pointwise traces.

    Gamma_fsi is the pointwise set {P_gamma <= 0}, Gamma_C its complement
    (the active set); their measures add up to |Gamma| exactly.
    """
    w = trace.w
    gC = trace.gamma_C
    br = trace.bracket()
    J_Pgamma = float(np.sum(w * gC * br))
    cnum = np.sqrt(gC) * br + trace.lam / np.sqrt(gC)
    J_contact_raw = float(np.sqrt(np.sum(w * cnum ** 2)))
    lambda_norm = float(np.sqrt(np.sum(w * trace.lam ** 2)))
    fsi = ~trace.active
    C = trace.active
    jn = point_vals["jumpn"]
    J_vel_fsi_raw = float(np.sqrt(np.sum(w * fsi * jn ** 2)))
    un_norm = float(np.sqrt(np.sum(w * fsi * point_vals["un"] ** 2)))
    ddn_norm = float(np.sqrt(np.sum(w * fsi * point_vals["ddn"] ** 2)))
    J_vel_C = float(np.sum(w * C * jn))
    J_sigma_sn = float(np.sum(w * point_vals["ssn"]))
    return dict(
        J_Pgamma=J_Pgamma, J_contact_raw=J_contact_raw, lambda_norm=lambda_norm,
        J_vel_fsi_raw=J_vel_fsi_raw, un_norm=un_norm, ddn_norm=ddn_norm,
        J_vel_C=J_vel_C, J_sigma_sn=J_sigma_sn,
        len_fsi=float(np.sum(w * fsi)), len_C=float(np.sum(w * C)),
    )


def _cells_in_mid(g, x_lo=0.4, x_hi=0.6):
    """Cell mask for the mid window; exact because the window boundaries are
    patch lines for every benchmark lattice."""
    if g.origin is not None:
        cx = g.origin[:, 0] + 0.5 * g.scale[0]
    else:
        cx = g.coords[:, :, 0].mean(axis=1)
    return (cx > x_lo) & (cx < x_hi)


def p_mid_norm(ctx, state_vec, x_lo=0.4, x_hi=0.6):
    """L2 norm of the pressure over the physical fluid cells with
    x in [x_lo, x_hi]."""
    total = 0.0
    for g in ctx.groups.values():
        sel = (g.tags == FLUID) & _cells_in_mid(g, x_lo, x_hi)
        sel = np.flatnonzero(sel)
        if len(sel) == 0:
            continue
        pvals = state_vec[dof(g.verts[sel], P)]
        at_q = np.einsum("qa,na->nq", g.N, pvals)
        total += float(np.sum(g.W[sel] * at_q ** 2))
    return np.sqrt(total)


def step_row(t, ctx, state_vec, iface_new, trace, scn, iters):
    pv = interface_point_values(ctx, state_vec, scn.mat)
    row = dict(time=t)
    row["d_min"] = d_min(iface_new, scn.contact.obstacle_y)
    row["J_p"] = float(abs(np.sum(pv["w"] * pv["p"])))
    row.update(contact_functionals(trace, pv))
    row["p_mid_norm"] = p_mid_norm(ctx, state_vec)
    row["newton_iters"] = iters
    row["active_size"] = trace.n_active
    row["J_contact"] = np.nan  # filled by normalize_series
    row["J_vel_fsi"] = np.nan
    return row


def normalize_series(series):
    """Fill the normalized J_contact / J_vel_fsi columns using temporal
    averages over [0, NORMALIZATION_WINDOW] of this run; falls back to the
    raw values (flagged by a zero denominator) when the averages vanish."""
    t = np.asarray(series["time"])
    if len(t) == 0:
        return
    win = t <= NORMALIZATION_WINDOW + 1e-15
    if not win.any():
        win = np.ones_like(t, dtype=bool)
    lam_avg = float(np.mean(np.asarray(series["lambda_norm"])[win]))
    vel_avg = float(np.mean(np.asarray(series["un_norm"])[win])
                    + np.mean(np.asarray(series["ddn_norm"])[win]))
    series["J_contact"] = [
        (c / lam_avg if lam_avg > 0 else c)
        for c in series["J_contact_raw"]]
    series["J_vel_fsi"] = [
        (v / vel_avg if vel_avg > 0 else v)
        for v in series["J_vel_fsi_raw"]]


def renormalize(series, reference_series):
    """Sweep-level normalization: divide the raw norms by the temporal
    averages of the reference (finest) run, per the reported definitions."""
    t = np.asarray(reference_series["time"])
    win = t <= NORMALIZATION_WINDOW + 1e-15
    lam_avg = float(np.mean(np.asarray(reference_series["lambda_norm"])[win]))
    vel_avg = float(np.mean(np.asarray(reference_series["un_norm"])[win])
                    + np.mean(np.asarray(reference_series["ddn_norm"])[win]))
    out = dict(series)
    out["J_contact"] = np.asarray(series["J_contact_raw"]) / lam_avg
    out["J_vel_fsi"] = np.asarray(series["J_vel_fsi_raw"]) / vel_avg
    return out


def adhoc_trace(ctx, state_vec, cfg, mat, h, g0):
    """Reporting-only trace for the explicit baseline: lambda is the solid
    normal stress and the active flag marks a closed gap."""
    ne = len(ctx.itraces)
    nq = len(ctx.itraces[0].w) if ne else 0
    gamma_C = cfg.gamma_C(mat.mu_s, h)
    tr = ContactTrace(w=np.zeros((ne, nq)), gap=np.zeros((ne, nq)),
                      lam=np.zeros((ne, nq)), p_gamma=np.zeros((ne, nq)),
                      active=np.zeros((ne, nq), dtype=bool), gamma_C=gamma_C)
    for e, rec in enumerate(ctx.itraces):
        loc = state_vec[edge_dof_vector(rec)]
        tr.w[e] = rec.w
        for q in range(nq):
            ops = _edge_ops(rec, q, mat.nu_f)
            gap = float((N_WALL @ ops["d"]) @ loc) - g0
            lam = float((N_WALL @ solid_stress_normal_op(rec, q, mat.mu_s, mat.lam_s)) @ loc)
            tr.gap[e, q] = gap
            tr.lam[e, q] = lam
            tr.p_gamma[e, q] = gap - lam / gamma_C
            tr.active[e, q] = gap >= 0.0
    return tr


# ---------------------------------------------------------------------------
# energies


def _vec_l2sq(g, sel, state_vec, fields):
    vals = 0.0
    for f in fields:
        coef = state_vec[dof(g.verts[sel], f)]
        at_q = np.einsum("qa,na->nq", g.N, coef)
        vals += np.sum(g.W[sel] * at_q ** 2)
    return float(vals)


def _grad_l2sq(g, sel, state_vec, fields):
    vals = 0.0
    G = g.G[sel]
    for f in fields:
        coef = state_vec[dof(g.verts[sel], f)]
        at_q = np.einsum("nqad,na->nqd", G, coef)
        vals += np.sum(g.W[sel][:, :, None] * at_q ** 2)
    return float(vals)


def energy_terms(ctx, state_vec, trace, scn):
    """The monitored stability quantities: kinetic/elastic magnitudes and the
    nonnegative dissipation terms of the discrete energy estimate."""
    mat, nit = scn.mat, scn.nit
    out = dict.fromkeys(ENERGY_COLUMNS, 0.0)
    fluidish = scn.fluid_tags
    for g in ctx.groups.values():
        flu = np.flatnonzero(np.isin(g.tags, fluidish))
        sol = np.flatnonzero(g.tags == SOLID)
        if len(flu):
            out["u_l2sq"] += _vec_l2sq(g, flu, state_vec, (U1, U2))
            out["visc_diss"] += mat.nu_f * _grad_l2sq(g, flu, state_vec, (U1, U2))
        if len(sol):
            out["ddot_l2sq"] += _vec_l2sq(g, sol, state_vec, (DD1, DD2))
            out["d_h1sq"] += (_vec_l2sq(g, sol, state_vec, (D1, D2))
                              + _grad_l2sq(g, sol, state_vec, (D1, D2)))
        if nit.gamma_a0 > 0:
            pen = g.tags == ARTIFICIAL
            if scn.penalty_below is not None:
                if g.origin is not None:
                    cy = g.origin[:, 1] + 0.5 * g.scale[1]
                else:
                    cy = g.coords[:, :, 1].mean(axis=1)
                pen = pen | ((g.tags == FLUID) & (cy < scn.penalty_below))
            pen = np.flatnonzero(pen)
            if len(pen):
                out["penalty_diss"] += nit.gamma_a() * _vec_l2sq(g, pen, state_vec, (U1, U2))
    # pressure stabilisation form S_p(p, p)
    if ctx.cip is not None:
        out["sp_diss"] = float(state_vec @ (ctx.cip @ state_vec))
    # interface dissipation
    gamma_fsi = nit.gamma_fsi(mat.nu_f)
    total = 0.0
    for rec in ctx.itraces:
        loc = state_vec[edge_dof_vector(rec)]
        for q in range(len(rec.w)):
            ops = _edge_ops(rec, q, mat.nu_f)
            diff = (ops["dd"] - ops["u"]) @ loc
            if scn.contact.interface == "slip":
                total += rec.w[q] * float(rec.n @ diff) ** 2
            else:
                total += rec.w[q] * float(diff @ diff)
    out["nitsche_diss"] = gamma_fsi * total
    gC = trace.gamma_C
    cnum = np.sqrt(gC) * trace.bracket() + trace.lam / np.sqrt(gC)
    out["contact_energy"] = float(np.sum(trace.w * cnum ** 2))
    return out


# ---------------------------------------------------------------------------
# CSV emission


def write_series_csv(path, series, columns=SERIES_COLUMNS):
    _write_csv(path, series, columns)


def write_energy_csv(path, energy, columns=ENERGY_COLUMNS):
    _write_csv(path, energy, columns)


def _write_csv(path, table, columns):
    rows = len(next(iter(table.values()))) if table else 0
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for i in range(rows):
            fh.write(",".join(_fmt(np.asarray(table[c])[i]) for c in columns) + "\n")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.12e}"


def read_series_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = [[] for _ in header]
        for line in fh:
            if not line.strip():
                continue
            for k, tok in enumerate(line.strip().split(",")):
                data[k].append(float(tok))
    return {h: np.asarray(col) for h, col in zip(header, data)}


# ---------------------------------------------------------------------------
# series analysis helpers (impact timing, chattering)


def first_contact_time(series):
    """Time of the first step with a nonempty contact active set."""
    act = np.asarray(series["active_size"])
    t = np.asarray(series["time"])
    idx = np.flatnonzero(act > 0)
    return float(t[idx[0]]) if len(idx) else None


def contact_mask(series):
    return np.asarray(series["active_size"]) > 0


def release_count(series, window=None):
    """Number of contact -> no-contact transitions, optionally restricted to
    a (t_lo, t_hi) window."""
    m = contact_mask(series)
    t = np.asarray(series["time"])
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        m = m[sel]
    releases = np.sum(m[:-1] & ~m[1:])
    return int(releases)


def sign_changes(values, window_mask=None):
    v = np.asarray(values)
    if window_mask is not None:
        v = v[window_mask]
    s = np.sign(v)
    s = s[s != 0]
    return int(np.sum(s[:-1] != s[1:]))


def fit_rate(hs, errs):
    """Least-squares slope of log(err) against log(h)."""
    hs = np.asarray(hs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    A = np.vstack([np.log(hs), np.ones_like(hs)]).T
    slope, _ = np.linalg.lstsq(A, np.log(errs), rcond=None)[0]
    return float(slope)
