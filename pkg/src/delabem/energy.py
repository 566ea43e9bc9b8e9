"""Pure-boundary energy forms and the two-sided power integrals.

All energies are per unit thickness: with the mm/N/MPa unit system a
line-integrated energy in N equals J/m.  The bulk potential of a domain
is evaluated through the condensed operator blocks; the power integrals
are the exact end-point expressions for piecewise-constant-in-time
interpolants, with the simplified two-term forms used whenever the
Neumann data vanishes identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import CondensedOperator
from .mesh import DomainMesh


@dataclass
class EnergyBreakdown:
    """Energies of one accepted step (J/m per unit thickness)."""

    bulk: float                   # elastic strain energy of the domains
    adhesive: float               # stored adhesive energy
    neumann_potential: float      # -int_N u . p_N (0 under hard-device load)
    dissipated_step: float
    dissipated_cumulative: float
    total: float                  # bulk + adhesive + neumann_potential
    lower_bound_lhs: float        # power integral evaluated at the new state
    upper_bound_rhs: float        # power integral evaluated at the old state
    adhesive_normal: float = 0.0
    adhesive_tangential: float = 0.0


def bulk_energy_boundary(u, p, mesh: DomainMesh) -> float:
    """Strain energy 0.5 int_Gamma u . p dS from full boundary fields.

    ``u`` is nodal (n, 2); ``p`` per traction dof (m, 2); products of the
    linear interpolants are integrated exactly.
    """
    u = np.asarray(u, float).reshape(mesh.n_nodes, 2)
    p = np.asarray(p, float).reshape(mesh.n_traction_dofs, 2)
    total = 0.0
    for e in range(mesh.n_elements):
        L = mesh.lengths[e]
        ua, ub = u[mesh.elements[e, 0]], u[mesh.elements[e, 1]]
        pa = p[mesh.traction_dof_of_slot[e, 0]]
        pb = p[mesh.traction_dof_of_slot[e, 1]]
        total += L * ((ua @ pa + ub @ pb) / 3.0 + (ua @ pb + ub @ pa) / 6.0)
    return 0.5 * float(total)


def neumann_work(u, p_n, condensed: CondensedOperator) -> float:
    """int_{Gamma_N} u . p_N dS for the full nodal field ``u``."""
    return float(np.ravel(u) @ (condensed.w_n_full @ np.ravel(p_n)))


def condensed_potential(condensed: CondensedOperator, u_c, u_d, p_n) -> float:
    """Bulk total potential energy of one domain as the condensed
    quadratic in the contact trace."""
    uc = np.ravel(u_c)
    k = condensed.contact_stiffness
    return float(0.5 * uc @ (k @ uc) + condensed.contact_load_vector(u_d, p_n) @ uc
                 + condensed.load_constant(u_d, p_n))


def _has_neumann_load(*p_ns) -> bool:
    return any(np.any(np.ravel(p) != 0.0) for p in p_ns)


def power_integral(condensed: CondensedOperator, u_c_eval,
                   u_d_old, u_d_new, p_n_old, p_n_new) -> float:
    """Work of the external load over one step with the contact trace
    held at ``u_c_eval``.

    Evaluating at the new step's trace gives the lower bound of the
    two-sided energy test, at the old step's trace the upper bound.
    """
    uc = np.ravel(u_c_eval)
    ud0, ud1 = np.ravel(u_d_old), np.ravel(u_d_new)
    pn0, pn1 = np.ravel(p_n_old), np.ravel(p_n_new)
    c = condensed

    if not _has_neumann_load(pn0, pn1):
        # homogeneous-Neumann two-term form
        val = uc @ (c.w_c @ (c.m_cd @ (ud1 - ud0)))
        val += 0.5 * (ud1 - ud0) @ (c.w_d @ (c.m_dd @ (ud1 + ud0)))
        return float(val)

    val = uc @ (c.w_c @ (c.m_cd @ (ud1 - ud0) + c.m_cn @ (pn1 - pn0)))
    val += 0.5 * (ud1 @ (c.w_d @ (c.m_dd @ ud1)) - ud0 @ (c.w_d @ (c.m_dd @ ud0)))
    val += 0.5 * (ud1 @ (c.w_d @ (c.m_dn @ pn1)) - ud0 @ (c.w_d @ (c.m_dn @ pn0)))
    val -= 0.5 * ((c.m_nd @ ud1) @ (c.w_n @ pn1) - (c.m_nd @ ud0) @ (c.w_n @ pn0))
    val -= 0.5 * ((c.m_nn @ pn1) @ (c.w_n @ pn1) - (c.m_nn @ pn0) @ (c.w_n @ pn0))
    return float(val)


def power_integral_lower(condensed, u_c_new, u_d_old, u_d_new, p_n_old, p_n_new):
    """Lower bound of the two-sided test: load power at the new trace."""
    return power_integral(condensed, u_c_new, u_d_old, u_d_new, p_n_old, p_n_new)


def power_integral_upper(condensed, u_c_old, u_d_old, u_d_new, p_n_old, p_n_new):
    """Upper bound of the two-sided test: load power at the old trace."""
    return power_integral(condensed, u_c_old, u_d_old, u_d_new, p_n_old, p_n_new)


def balance_report(records) -> dict:
    """Discrete energy balance over a run.

    The change of total energy plus dissipation must match the
    accumulated load work; the two-sided integrals bracket it, so half
    the accumulated bracket width bounds the residual.
    """
    lower = float(sum(r.lower_bound_lhs for r in records[1:]))
    upper = float(sum(r.upper_bound_rhs for r in records[1:]))
    change = (records[-1].total + records[-1].dissipated_cumulative
              - records[0].total - records[0].dissipated_cumulative)
    work = 0.5 * (lower + upper)
    peak = max(abs(r.total) + r.dissipated_cumulative for r in records)
    return {
        "energy_change_plus_dissipation": float(change),
        "work_lower": lower,
        "work_upper": upper,
        "residual": float(abs(change - work)),
        "bracket_width": float(upper - lower),
        "peak_total_energy": float(peak),
    }
