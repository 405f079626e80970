"""Max-bracket contact operator, contact-force flux variants and assembly.

The contact surface force lambda is eliminated through either the physical
stress jump or the numerical (Nitsche) stress jump; the complementarity
system is equivalent to lambda = -gamma_C [P_gamma]_+ with
P_gamma = d.n_w - g_alpha - lambda / gamma_C, which enters the residual as
the consistent term gamma_C ([P_gamma]_+, w . n_w)_Gamma.  The semismooth
Newton derivative uses H(x) = 1 for x > 0 and H(0) = 0.
"""

from dataclasses import dataclass

import numpy as np

from .patchmesh import FLUID, ARTIFICIAL
from .forms import _edge_ops, solid_stress_normal_op, edge_dof_vector

N_WALL = np.array([0.0, -1.0])
TAU_WALL = np.array([1.0, 0.0])

FORMULATIONS = ("virtual-obstacle", "relaxed", "artificial", "adhoc")
FLUX_VARIANTS = ("physical-stress", "numerical-stress",
                 "slip-physical", "slip-numerical", "slip-extended")


class ContactConfigError(ValueError):
    pass


@dataclass
class ContactConfig:
    """Contact formulation switchboard.

    flux is given in interface-agnostic form ('physical' | 'numerical' |
    'extended'); the slip variants are selected through ``interface``.
    """

    formulation: str = "virtual-obstacle"
    flux: str = "numerical"
    interface: str = "noslip"       # 'noslip' | 'slip'
    gamma_C0: float = 1.0e3
    theta: float = 0.0
    obstacle_y: float = 0.25
    alpha: float = 0.0              # gap relaxation (relaxed: epsilon(h))
    wall_condition: str = "noslip"  # fluid b.c. on the lower wall

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise ContactConfigError(f"unknown formulation {self.formulation!r}")
        if self.interface not in ("noslip", "slip"):
            raise ContactConfigError(f"unknown interface mode {self.interface!r}")
        if self.flux not in ("physical", "numerical", "extended"):
            raise ContactConfigError(f"unknown flux {self.flux!r}")
        if self.flux == "extended" and self.interface != "slip":
            raise ContactConfigError("extended flux requires slip interface")
        if not 0.0 <= self.theta <= 1.0:
            raise ContactConfigError("theta must lie in [0, 1]")

    def flux_variant(self):
        if self.interface == "slip":
            return {"physical": "slip-physical", "numerical": "slip-numerical",
                    "extended": "slip-extended"}[self.flux]
        return {"physical": "physical-stress", "numerical": "numerical-stress"}[self.flux]

    def gamma_C(self, mu_s, h):
        return self.gamma_C0 * mu_s / h


def p_gamma(gap, lam, gamma_C):
    """P_gamma = gap - lambda / gamma_C (bracket applied by callers)."""
    gamma_C = np.asarray(gamma_C, dtype=float)
    if np.any(gamma_C <= 0.0):
        raise ContactConfigError("gamma_C must be positive")
    return np.asarray(gap, dtype=float) - np.asarray(lam, dtype=float) / gamma_C


def kkt_residual(gap, lam):
    """Max violation of the complementarity system
    gap <= 0, lambda <= 0, gap * lambda = 0 (brute-force oracle)."""
    gap = np.asarray(gap, dtype=float)
    lam = np.asarray(lam, dtype=float)
    return np.maximum.reduce([gap, lam, np.abs(gap * lam)])


def lambda_row(rec, q, variant, mat, gamma_fsi, ops=None):
    """Affine coefficients of the contact force lambda over the combined
    local dof vector of one interface edge quadrature point."""
    if ops is None:
        ops = _edge_ops(rec, q, mat.nu_f)
    ssn = solid_stress_normal_op(rec, q, mat.mu_s, mat.lam_s)  # sigma_s(d) n rows
    n = rec.n
    tau = rec.tau
    if variant == "physical-stress":
        return N_WALL @ (ssn - ops["sfn"])
    if variant == "numerical-stress":
        tf = ops["sfn"] - gamma_fsi * (ops["dd"] - ops["u"])
        return N_WALL @ ssn - N_WALL @ tf
    n_nw = float(n @ N_WALL)
    if variant == "slip-physical":
        return (n @ (ssn - ops["sfn"])) * n_nw
    if variant == "slip-numerical":
        tf = ops["sfn"] - gamma_fsi * (ops["dd"] - ops["u"])
        return (n @ ssn - n @ tf) * n_nw
    if variant == "slip-extended":
        tf = ops["sfn"] - gamma_fsi * (ops["dd"] - ops["u"])
        base = (n @ ssn - n @ tf) * n_nw
        return base + (tau @ ssn) * float(tau @ N_WALL)
    raise ContactConfigError(f"unknown flux variant {variant!r}")


def lambda_flux(state_vec, ctx, cfg, mat, nit):
    """Per interface quadrature point value of lambda for the configured
    variant; returns an (n_edges, n_qp) array."""
    variant = cfg.flux_variant()
    gamma_fsi = nit.gamma_fsi(mat.nu_f)
    out = np.zeros((len(ctx.itraces), len(ctx.itraces[0].w))) if ctx.itraces else np.zeros((0, 0))
    for e, rec in enumerate(ctx.itraces):
        loc = state_vec[edge_dof_vector(rec)]
        for q in range(len(rec.w)):
            out[e, q] = lambda_row(rec, q, variant, mat, gamma_fsi) @ loc
    return out


@dataclass
class ContactTrace:
    """Pointwise contact quantities on Gamma_h at one state."""

    w: np.ndarray = None          # quadrature weights (ne, nq)
    gap: np.ndarray = None        # d.n_w - g_alpha
    lam: np.ndarray = None
    p_gamma: np.ndarray = None
    active: np.ndarray = None
    gamma_C: float = 0.0

    @property
    def n_active(self):
        return 0 if self.active is None else int(self.active.sum())

    def bracket(self):
        return np.where(self.active, self.p_gamma, 0.0)


def assemble_contact(state_vec, ctx, cfg, mat, nit, h, g_alpha,
                     kink_guard=0.0, state_old_vec=None, dt=None):
    """Residual vector, Jacobian triplets and traces of the contact terms.

    ``g_alpha`` is the (spatially constant) relaxed gap reference of the flat
    benchmark interfaces.  Covers the implicit max-bracket term for all
    formulations except the explicit ad-hoc baseline (see ``assemble_adhoc``),
    plus the theta-generalised consistency terms when cfg.theta > 0 (assembly
    only; a converging nonlinear solver for theta > 0 is not provided).
    """
    ndof = ctx.handler.ndof
    R = np.zeros(ndof)
    jr, jc, jv = [], [], []
    gamma_C = cfg.gamma_C(mat.mu_s, h)
    gamma_fsi = nit.gamma_fsi(mat.nu_f)
    variant = cfg.flux_variant()

    ne = len(ctx.itraces)
    nq = len(ctx.itraces[0].w) if ne else 0
    tr = ContactTrace(
        w=np.zeros((ne, nq)), gap=np.zeros((ne, nq)), lam=np.zeros((ne, nq)),
        p_gamma=np.zeros((ne, nq)), active=np.zeros((ne, nq), dtype=bool),
        gamma_C=gamma_C,
    )

    theta = cfg.theta
    for e, rec in enumerate(ctx.itraces):
        dofs = edge_dof_vector(rec)
        loc = state_vec[dofs]
        loc_old = state_old_vec[dofs] if state_old_vec is not None else None
        ntot = len(dofs)
        Jloc = np.zeros((ntot, ntot))
        Rloc = np.zeros(ntot)
        for q in range(len(rec.w)):
            w = rec.w[q]
            ops = _edge_ops(rec, q, mat.nu_f)
            lam_r = lambda_row(rec, q, variant, mat, gamma_fsi, ops)
            dnw_r = N_WALL @ ops["d"]
            pg_r = dnw_r - lam_r / gamma_C
            lam_v = float(lam_r @ loc)
            gap_v = float(dnw_r @ loc) - g_alpha
            pg_v = gap_v - lam_v / gamma_C
            act = pg_v > kink_guard
            tr.w[e, q] = w
            tr.gap[e, q] = gap_v
            tr.lam[e, q] = lam_v
            tr.p_gamma[e, q] = pg_v
            tr.active[e, q] = act
            wn_test = dnw_r  # w . n_w test rows equal the trial rows
            if act:
                Rloc += w * gamma_C * pg_v * wn_test
                Jloc += w * gamma_C * np.outer(wn_test, pg_r)
            if theta > 0.0:
                lam_s_r = _lambda_s_row(rec, q, cfg, mat)
                lam_f_r = _lambda_f_row(rec, q, cfg, mat, gamma_fsi, ops)
                v1_r = (gamma_C * pg_r if act else np.zeros(ntot)) + lam_r
                v1_v = gamma_C * (pg_v if act else 0.0) + lam_v
                Rloc -= theta * w * v1_v * lam_s_r
                Jloc -= theta * w * np.outer(lam_s_r, v1_r)
                if loc_old is not None and dt is not None:
                    lam_old = float(lam_r @ loc_old)
                    gap_old = float(dnw_r @ loc_old) - g_alpha
                    pg_old = gap_old - lam_old / gamma_C
                    v1_old = gamma_C * max(pg_old, 0.0) + lam_old
                    dv1dt = (v1_v - v1_old) / dt
                    Rloc -= theta * w * dv1dt * lam_f_r
                    Jloc -= (theta * w / dt) * np.outer(lam_f_r, v1_r)
        np.add.at(R, dofs, Rloc)
        nz = np.nonzero(Jloc)
        if len(nz[0]):
            jr.append(dofs[nz[0]])
            jc.append(dofs[nz[1]])
            jv.append(Jloc[nz])
    if jr:
        jac = (np.concatenate(jr), np.concatenate(jc), np.concatenate(jv))
    else:
        jac = (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0))
    return R, jac, tr


def _lambda_s_row(rec, q, cfg, mat):
    ssn = solid_stress_normal_op(rec, q, mat.mu_s, mat.lam_s)
    if cfg.interface == "slip":
        return (rec.n @ ssn) * float(rec.n @ N_WALL)
    return N_WALL @ ssn


def _lambda_f_row(rec, q, cfg, mat, gamma_fsi, ops):
    sfn = ops["sfn"]
    if cfg.flux == "physical":
        base = sfn
        if cfg.interface == "slip":
            return (rec.n @ base) * float(rec.n @ N_WALL)
        return N_WALL @ base
    tf = sfn - gamma_fsi * (ops["d"] - ops["u"])  # test triple (v, q, w)
    if cfg.interface == "slip":
        return (rec.n @ tf) * float(rec.n @ N_WALL)
    return N_WALL @ tf


def assemble_adhoc(acc, ctx, state_old_vec, cfg, mat, nit, h, g0):
    """Explicit split baseline: FSI Nitsche terms only where the previous
    step had a positive gap, pure-solid contact term elsewhere.

    Everything is linear; assembled into the step operator.  Returns the
    per-(edge, qp) Gamma_fsi mask so the caller can restrict the Nitsche
    assembly to it.
    """
    gamma_C = cfg.gamma_C(mat.mu_s, h)
    mask = []
    for rec in ctx.itraces:
        dofs = edge_dof_vector(rec)
        loc_old = state_old_vec[dofs]
        ntot = len(dofs)
        Jloc = np.zeros((ntot, ntot))
        closed = np.zeros(ntot)
        emask = []
        for q in range(len(rec.w)):
            ops = _edge_ops(rec, q, mat.nu_f)
            dnw_r = N_WALL @ ops["d"]
            prev_gap = g0 - float(dnw_r @ loc_old)
            fluid_gone = rec.tag_other not in (FLUID, ARTIFICIAL)
            on_contact = prev_gap <= 0.0 or fluid_gone
            emask.append(not on_contact)
            if on_contact:
                w = rec.w[q]
                ssn_nw = N_WALL @ solid_stress_normal_op(rec, q, mat.mu_s, mat.lam_s)
                pgs_r = dnw_r - ssn_nw / gamma_C
                Jloc += w * gamma_C * np.outer(dnw_r, pgs_r)
                closed += w * gamma_C * (-g0) * dnw_r
        acc.add_const(dofs, closed)
        nz = np.nonzero(Jloc)
        if len(nz[0]):
            acc.add(dofs[nz[0]], dofs[nz[1]], Jloc[nz])
        mask.append(emask)
    return mask
