"""Constrained minimization workhorses.

``solve_box_qp`` is a projected conjugate gradient method with
proportioning and expansion steps for convex bound-constrained quadratic
programs.  ``kinematic_substep`` minimizes the (bulk + adhesive) energy
over the interface displacements and plastic slip with damage frozen,
turning the L1 slip-increment term into a smooth QP by positive-part
splitting.  ``damage_substep`` minimizes over damage with the kinematics
frozen: element-wise closed form without the gradient term, a box QP with
it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adhesive import AdhesiveParams, consistent_mass, gradient_pairs
from .mesh import InterfacePairing


@dataclass
class BoxQP:
    """min 0.5 x' Q x + b' x subject to lower <= x <= upper.

    ``Q`` must be symmetric and positive semidefinite on the feasible
    set; infinite bounds mark free variables.
    """

    Q: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.Q = np.asarray(self.Q, float)
        self.b = np.asarray(self.b, float)
        n = self.b.size
        self.lower = np.full(n, -np.inf) if self.lower is None \
            else np.asarray(self.lower, float)
        self.upper = np.full(n, np.inf) if self.upper is None \
            else np.asarray(self.upper, float)
        if self.Q.shape != (n, n):
            raise ValueError("Q/b size mismatch")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    def objective(self, x) -> float:
        return float(0.5 * x @ (self.Q @ x) + self.b @ x)


@dataclass
class QPResult:
    x: np.ndarray
    iterations: int
    converged: bool
    projected_gradient_norm: float
    complementarity: float


def _projected_gradient(g, x, lower, upper):
    """Free + chopped gradient of the box-constrained problem."""
    at_lo = x <= lower
    at_up = x >= upper
    free = ~(at_lo | at_up)
    phi = np.where(free, g, 0.0)
    beta = np.where(at_lo, np.minimum(g, 0.0), 0.0) \
        + np.where(at_up, np.maximum(g, 0.0), 0.0)
    return phi, beta


def solve_box_qp(problem: BoxQP, x0=None, tol: float = 1e-8,
                 max_iter: int | None = None, debug: bool = False) -> QPResult:
    """Projected CG with proportioning for a convex box QP.

    Stops when the projected gradient norm falls below
    ``tol * (1 + ||b||)``.  Active-set changes restart the CG direction;
    expansion steps use the fixed steplength 1/||Q||.  Raises on detected
    indefiniteness; returns the flagged best iterate when the iteration
    budget runs out.
    """
    Q, b, lo, up = problem.Q, problem.b, problem.lower, problem.upper
    n = b.size
    if max_iter is None:
        max_iter = 50 * max(n, 1)
    if n == 0:
        return QPResult(np.zeros(0), 0, True, 0.0, 0.0)
    if debug:
        rng = np.random.default_rng(0)
        for _ in range(8):
            d = rng.standard_normal(n)
            ray = d @ (Q @ d)
            if ray < -1e-10 * (d @ d) * max(np.abs(Q).max(), 1.0):
                raise ValueError("Q fails the Rayleigh positive-semidefinite check")

    norm_q = max(float(np.abs(Q).sum(axis=0).max()), 1e-300)
    alpha_bar = 1.0 / norm_q
    scale = 1.0 + float(np.linalg.norm(b))
    tiny = 1e-14 * norm_q

    x = np.clip(np.zeros(n) if x0 is None else np.asarray(x0, float), lo, up)
    g = Q @ x + b
    phi, beta = _projected_gradient(g, x, lo, up)
    p = phi.copy()
    it = 0
    while it < max_iter:
        nu = np.linalg.norm(phi + beta)
        if nu <= tol * scale:
            break
        it += 1
        if beta @ beta <= phi @ phi:
            qp = Q @ p
            pqp = p @ qp
            if pqp < -1e-12 * norm_q * (p @ p):
                raise ValueError("quadratic form is indefinite along a CG direction")
            if pqp > tiny * (p @ p):
                alpha_cg = (g @ p) / pqp
                with np.errstate(divide="ignore", invalid="ignore"):
                    steps = np.where(p > 0, (x - lo) / p,
                                     np.where(p < 0, (x - up) / p, np.inf))
                alpha_f = float(np.min(steps))
                if alpha_cg <= alpha_f:
                    x = x - alpha_cg * p
                    g = g - alpha_cg * qp
                    phi, beta = _projected_gradient(g, x, lo, up)
                    p = phi - ((phi @ qp) / pqp) * p
                    continue
                x = np.clip(x - alpha_f * p, lo, up)
                g = Q @ x + b
                phi, _ = _projected_gradient(g, x, lo, up)
            # expansion: fixed-steplength projected free-gradient step
            x = np.clip(x - alpha_bar * phi, lo, up)
            g = Q @ x + b
            phi, beta = _projected_gradient(g, x, lo, up)
            p = phi.copy()
        else:
            d = beta
            qd = Q @ d
            dqd = d @ qd
            if dqd <= tiny * (d @ d):
                # chopped direction has no curvature: plain projected step
                x = np.clip(x - alpha_bar * d, lo, up)
                g = Q @ x + b
            else:
                alpha_cg = (g @ d) / dqd
                x = np.clip(x - alpha_cg * d, lo, up)
                g = Q @ x + b
            phi, beta = _projected_gradient(g, x, lo, up)
            p = phi.copy()

    phi, beta = _projected_gradient(g, x, lo, up)
    nu = float(np.linalg.norm(phi + beta))
    comp = 0.0
    active = (x <= lo) | (x >= up)
    if np.any(active):
        gap = np.minimum(np.abs(x - lo), np.abs(x - up))[active]
        comp = float(np.max(gap * np.abs(g[active])))
    return QPResult(x=x, iterations=it, converged=nu <= tol * scale,
                    projected_gradient_norm=nu, complementarity=comp)


# ---------------------------------------------------------------------------
# kinematic substep (u_C, pi) with damage frozen
# ---------------------------------------------------------------------------

@dataclass
class KinematicModel:
    """Frozen-damage quadratic model over the rotated interface variables.

    ``K``/``f`` give the bulk energy in the geometric variable vector
    ``v`` (interface frame components; the normal jump of entry k sits at
    ``normal_index[k]`` and carries the Signorini lower bound 0, the
    tangential jump at ``tangent_index[k]``).  The adhesive terms are
    assembled from the pairing with the supplied damage factors.
    """

    K: np.ndarray
    f: np.ndarray
    pairing: InterfacePairing
    params: AdhesiveParams
    normal_index: np.ndarray
    tangent_index: np.ndarray
    plasticity_active: bool = True
    signorini_active: bool = True


def kinematic_substep(model: KinematicModel, zeta, pi_prev, v0=None,
                      tol: float = 1e-8, max_iter: int | None = None):
    """Minimize bulk + adhesive energy + slip dissipation at frozen damage.

    Returns ``(v, pi, qp_result)``.  The L1 slip increment is split into
    nonnegative parts; the Signorini constraint is the lower bound 0 on
    the normal-jump variables.
    """
    params = model.params
    pairing = model.pairing
    nv = model.f.size
    m = pairing.n_entries
    zeta = np.asarray(zeta, float)
    pi_prev = np.asarray(pi_prev, float)

    mass_n = consistent_mass(pairing, zeta * params.kappa_n)
    mass_t = consistent_mass(pairing, zeta * params.kappa_t)
    mass_h = consistent_mass(pairing, None) * params.kappa_h

    nw = 2 * m if model.plasticity_active else 0
    ntot = nv + nw
    Q = np.zeros((ntot, ntot))
    b = np.zeros(ntot)
    Q[:nv, :nv] = model.K
    b[:nv] = model.f

    ni, ti = model.normal_index, model.tangent_index
    Q[np.ix_(ni, ni)] += mass_n
    Q[np.ix_(ti, ti)] += mass_t

    b[ti] += -mass_t @ pi_prev
    if model.plasticity_active:
        iw_p = nv + np.arange(m)
        iw_m = nv + m + np.arange(m)
        # pi = pi_prev + w+ - w-
        mt_pp = mass_t + mass_h
        for rows, sa in ((iw_p, 1.0), (iw_m, -1.0)):
            Q[np.ix_(ti, rows)] += -sa * mass_t
            Q[np.ix_(rows, ti)] += -sa * mass_t
            b[rows] += sa * (mt_pp @ pi_prev) \
                + params.yield_stress * pairing.node_weights
        Q[np.ix_(iw_p, iw_p)] += mt_pp
        Q[np.ix_(iw_m, iw_m)] += mt_pp
        Q[np.ix_(iw_p, iw_m)] += -mt_pp
        Q[np.ix_(iw_m, iw_p)] += -mt_pp

    lo = np.full(ntot, -np.inf)
    up = np.full(ntot, np.inf)
    if model.signorini_active:
        lo[ni] = 0.0
    if model.plasticity_active:
        lo[nv:] = 0.0

    x0 = None
    if v0 is not None:
        x0 = np.zeros(ntot)
        x0[:nv] = v0
    res = solve_box_qp(BoxQP(Q, b, lo, up), x0=x0, tol=tol, max_iter=max_iter)
    v = res.x[:nv]
    if model.plasticity_active:
        pi = pi_prev + res.x[nv:nv + m] - res.x[nv + m:]
    else:
        pi = pi_prev.copy()
    return v, pi, res


# ---------------------------------------------------------------------------
# damage substep with kinematics frozen
# ---------------------------------------------------------------------------

def damage_substep(params: AdhesiveParams, pairing: InterfacePairing,
                   energy_density, zeta_prev, tol: float = 1e-10):
    """Minimize over damage at frozen kinematics, subject to
    0 <= zeta <= zeta_prev.

    Without the gradient term the objective is linear and element-wise:
    keep the previous damage when the stored energy density stays below
    g1c, drop to zero when it exceeds it (ties keep the previous value,
    the dissipation-minimal choice).  With the gradient term the coupled
    box QP is solved.
    """
    e = np.asarray(energy_density, float)
    zeta_prev = np.asarray(zeta_prev, float)
    if params.kappa_grad == 0.0:
        return np.where(e > params.g1c, 0.0, zeta_prev)

    lengths = pairing.element_lengths
    n = e.size
    Q = np.zeros((n, n))
    for i, j, d in gradient_pairs(pairing):
        w = params.kappa_grad / d
        Q[i, i] += w
        Q[j, j] += w
        Q[i, j] -= w
        Q[j, i] -= w
    b = lengths * (e - params.g1c)
    res = solve_box_qp(BoxQP(Q, b, np.zeros(n), zeta_prev), x0=zeta_prev, tol=tol)
    return res.x
