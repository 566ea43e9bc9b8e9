"""Interface constitutive model: adhesive stored energy, dissipation,
activation criteria and the mixed-mode toughness curve.

The adhesive is a continuous distribution of springs with normal and
tangential stiffnesses, degraded by a per-element damage factor in [0, 1]
(1 bonded, 0 debonded, no healing) and carrying a nodal plastic
tangential slip with kinematic hardening.  Breaking a unit interface area
dissipates at least the mode-I fracture energy; tangential slip
dissipates the yield stress times the slip path.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .mesh import InterfacePairing


@dataclass(frozen=True)
class AdhesiveParams:
    """Adhesive layer parameters (mm / N / MPa unit system).

    ``kappa_n``/``kappa_t``: normal/tangential spring stiffness (MPa/mm);
    ``kappa_h``: kinematic hardening modulus (MPa/mm); ``g1c``: mode-I
    fracture energy (N/mm); ``yield_stress``: tangential yield stress
    (MPa); ``kappa_grad``: damage-gradient factor (N), quadratic gradient
    only (``grad_exponent`` fixed at 2).
    """

    kappa_n: float
    kappa_t: float
    kappa_h: float
    g1c: float
    yield_stress: float
    kappa_grad: float = 0.0
    grad_exponent: float = 2.0

    def __post_init__(self):
        for name in ("kappa_n", "kappa_t", "g1c", "yield_stress"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.kappa_h < 0.0 or self.kappa_grad < 0.0:
            raise ValueError("kappa_h and kappa_grad must be nonnegative")
        if self.grad_exponent != 2.0:
            raise ValueError("only the quadratic damage-gradient term is supported")
        lo = 0.5 * self.sigma_t_crit
        if not lo < self.yield_stress <= self.sigma_t_crit:
            warnings.warn(
                f"yield stress {self.yield_stress} outside the window "
                f"({lo:.6g}, {self.sigma_t_crit:.6g}]: plastic slip may not "
                f"precede debonding (or may continue on debonded points)",
                stacklevel=2)

    @property
    def sigma_n_crit(self) -> float:
        """Pure-opening critical stress sqrt(2 kappa_n G_Ic)."""
        return float(np.sqrt(2.0 * self.kappa_n * self.g1c))

    @property
    def sigma_t_crit(self) -> float:
        """Pure-shear critical stress sqrt(2 kappa_t G_Ic)."""
        return float(np.sqrt(2.0 * self.kappa_t * self.g1c))


@dataclass
class InterfaceState:
    """Damage (per interface element) and plastic slip (per node), with
    the previous accepted step's copies and the running dissipation."""

    zeta: np.ndarray
    pi: np.ndarray
    zeta_prev: np.ndarray
    pi_prev: np.ndarray
    dissipated_cumulative: float = 0.0

    @classmethod
    def initial(cls, pairing: InterfacePairing, zeta0: float = 1.0):
        n_el = pairing.elements.shape[0]
        z = np.full(n_el, float(zeta0))
        p = np.zeros(pairing.n_entries)
        return cls(zeta=z.copy(), pi=p.copy(), zeta_prev=z.copy(), pi_prev=p.copy())

    def copy(self) -> "InterfaceState":
        return InterfaceState(self.zeta.copy(), self.pi.copy(),
                              self.zeta_prev.copy(), self.pi_prev.copy(),
                              self.dissipated_cumulative)


# ---------------------------------------------------------------------------
# interface quadrature helpers
# ---------------------------------------------------------------------------

def consistent_mass(pairing: InterfacePairing, factors=None) -> np.ndarray:
    """Entry-by-entry mass matrix of the interface line integral, each
    element weighted by ``factors`` (per element; default 1)."""
    m = pairing.n_entries
    M = np.zeros((m, m))
    f = np.ones(pairing.elements.shape[0]) if factors is None else np.asarray(factors, float)
    for (a, b), L, fe in zip(pairing.elements, pairing.element_lengths, f):
        blk = fe * L / 6.0
        M[a, a] += 2.0 * blk
        M[b, b] += 2.0 * blk
        M[a, b] += blk
        M[b, a] += blk
    return M


def quadratic_line_integral(pairing, values, factors=None) -> float:
    """Exact integral of the squared linear interpolant of nodal
    ``values``, optionally weighted per element."""
    total = 0.0
    f = np.ones(pairing.elements.shape[0]) if factors is None else np.asarray(factors, float)
    for (a, b), L, fe in zip(pairing.elements, pairing.element_lengths, f):
        va, vb = values[a], values[b]
        total += fe * L / 3.0 * (va * va + va * vb + vb * vb)
    return total


def gradient_pairs(pairing: InterfacePairing):
    """(element i, element j, inter-centroid distance) for consecutive
    interface elements, used by the damage-gradient term."""
    by_node = {}
    for e, (a, b) in enumerate(pairing.elements):
        by_node.setdefault(int(a), []).append(e)
        by_node.setdefault(int(b), []).append(e)
    pairs = []
    for node, elems in sorted(by_node.items()):
        if len(elems) == 2:
            i, j = sorted(elems)
            d = 0.5 * (pairing.element_lengths[i] + pairing.element_lengths[j])
            pairs.append((i, j, float(d)))
    return pairs


# ---------------------------------------------------------------------------
# energy and dissipation
# ---------------------------------------------------------------------------

def adhesive_energy(params: AdhesiveParams, pairing: InterfacePairing,
                    zeta, pi, jumps, feasibility_tol: float | None = None) -> float:
    """Line-integrated stored energy of the adhesive (N/mm), or +inf when
    the state is infeasible (interpenetration or damage outside [0, 1]).

    ``jumps`` is the interleaved (normal, tangential) jump vector of the
    pairing's entries; damage is element-wise constant and the kinematic
    fields nodal-linear, integrated exactly.
    """
    zeta = np.asarray(zeta, float)
    pi = np.asarray(pi, float)
    jumps = np.asarray(jumps, float)
    jn, jt = jumps[0::2], jumps[1::2]
    if feasibility_tol is None:
        feasibility_tol = 1e-10 * float(np.sum(pairing.element_lengths))
    if np.any(jn < -feasibility_tol) or np.any(zeta < -1e-12) or np.any(zeta > 1.0 + 1e-12):
        return np.inf

    e = 0.5 * params.kappa_n * quadratic_line_integral(pairing, jn, zeta)
    e += 0.5 * params.kappa_t * quadratic_line_integral(pairing, jt - pi, zeta)
    e += 0.5 * params.kappa_h * quadratic_line_integral(pairing, pi)
    if params.kappa_grad > 0.0:
        for i, j, d in gradient_pairs(pairing):
            e += 0.5 * params.kappa_grad * (zeta[j] - zeta[i]) ** 2 / d
    return float(e)


def adhesive_energy_split(params, pairing, zeta, pi, jumps):
    """(normal, tangential) stored spring energies, for reporting."""
    jumps = np.asarray(jumps, float)
    e_n = 0.5 * params.kappa_n * quadratic_line_integral(pairing, jumps[0::2], zeta)
    e_t = 0.5 * params.kappa_t * quadratic_line_integral(pairing, jumps[1::2] - pi, zeta)
    return float(e_n), float(e_t)


def dissipation_increment(params: AdhesiveParams, pairing: InterfacePairing,
                          zeta_new, zeta_old, pi_new, pi_old) -> float:
    """Dissipated energy of a state change (N/mm), +inf on healing.

    The damage term integrates exactly; the slip term uses the nodal
    (trapezoid) rule, which coincides with the exact integral whenever
    the slip increment does not change sign inside an element.
    """
    dz = np.asarray(zeta_new, float) - np.asarray(zeta_old, float)
    if np.any(dz > 1e-12):
        return np.inf
    val = params.g1c * float(pairing.element_lengths @ np.abs(dz))
    dp = np.abs(np.asarray(pi_new, float) - np.asarray(pi_old, float))
    val += params.yield_stress * float(pairing.node_weights @ dp)
    return val


def element_energy_density(params: AdhesiveParams, pairing: InterfacePairing,
                           pi, jumps) -> np.ndarray:
    """Per-element stored spring energy density (N/mm), the damage
    driving force compared against g1c."""
    jumps = np.asarray(jumps, float)
    jn, jt = jumps[0::2], jumps[1::2]
    rel = jt - np.asarray(pi, float)
    out = np.empty(pairing.elements.shape[0])
    for e, ((a, b), L) in enumerate(zip(pairing.elements, pairing.element_lengths)):
        qn = (jn[a] ** 2 + jn[a] * jn[b] + jn[b] ** 2) / 3.0
        qt = (rel[a] ** 2 + rel[a] * rel[b] + rel[b] ** 2) / 3.0
        out[e] = 0.5 * (params.kappa_n * qn + params.kappa_t * qt)
    return out


# ---------------------------------------------------------------------------
# pointwise criteria and analysis curves
# ---------------------------------------------------------------------------

def damage_activation(params: AdhesiveParams, jump_n, jump_t, pi):
    """Stored areal energy density and whether it reaches g1c.

    Valid for the non-gradient model (kappa_grad = 0).
    """
    e = 0.5 * (params.kappa_n * np.square(jump_n)
               + params.kappa_t * np.square(np.asarray(jump_t) - np.asarray(pi)))
    return e, e >= params.g1c


def plastic_activation(params: AdhesiveParams, zeta, jump_t, pi):
    """Plastic driving stress |zeta kappa_t (jump_t - pi) - kappa_h pi|
    and whether it reaches the yield stress."""
    s = np.abs(np.asarray(zeta) * params.kappa_t * (np.asarray(jump_t) - np.asarray(pi))
               - params.kappa_h * np.asarray(pi))
    return s, s >= params.yield_stress


def err_with_plasticity(params: AdhesiveParams, jump_n, jump_t, pi):
    """Energy release rate including the slip terms (N/mm)."""
    pi = np.asarray(pi, float)
    return (0.5 * params.kappa_n * np.square(jump_n)
            + 0.5 * params.kappa_t * np.square(np.asarray(jump_t) - pi)
            + params.yield_stress * np.abs(pi)
            + 0.5 * params.kappa_h * np.square(pi))


def mode_mixity_angles(params: AdhesiveParams, jump_n, jump_t):
    """(psi_u, psi_G, psi_sigma) of an elastic interface state, radians."""
    jn = float(jump_n)
    jt = float(jump_t)
    psi_u = np.arctan2(jt, jn)
    psi_g = np.arctan(np.sqrt(params.kappa_t / params.kappa_n) * abs(np.tan(psi_u))) \
        if abs(jn) > 0 else np.pi / 2
    psi_sigma = np.arctan2(params.kappa_t * jt, params.kappa_n * jn)
    return float(psi_u), float(psi_g), float(psi_sigma)


def plastic_mixity_bound(params: AdhesiveParams) -> float:
    """Parametric angle where crack-onset states switch from the elastic
    to the plastic branch: arcsin(yield / sqrt(2 kappa_t g1c))."""
    return float(np.arcsin(min(params.yield_stress / params.sigma_t_crit, 1.0)))


def gc_curve(params: AdhesiveParams, phi: float):
    """Crack-growth-onset state on the mixed-mode envelope.

    ``phi`` in [0, pi/2] parameterizes the onset curve; returns a dict
    with the jumps, the critical energy release rate and the three mode
    mixity angles.  Below the plastic bound the toughness stays at g1c;
    above it the slip terms raise it.
    """
    if not 0.0 <= phi <= np.pi / 2 + 1e-12:
        raise ValueError(f"phi must lie in [0, pi/2], got {phi}")
    phi_star = plastic_mixity_bound(params)
    jn = np.sqrt(2.0 * params.g1c / params.kappa_n) * np.cos(phi)
    if phi <= phi_star:
        jt = np.sqrt(2.0 * params.g1c / params.kappa_t) * np.sin(phi)
        gc = params.g1c
    else:
        if params.kappa_h == 0.0:
            raise ValueError("plastic branch of the toughness curve needs kappa_h > 0")
        jt = (np.sqrt(2.0 * params.g1c / params.kappa_t)
              * (params.kappa_t + params.kappa_h) / params.kappa_h * np.sin(phi)
              - params.yield_stress / params.kappa_h)
        gc = (params.g1c * (1.0 + params.kappa_t / params.kappa_h * np.sin(phi) ** 2)
              - params.yield_stress ** 2 / (2.0 * params.kappa_h))
    psi_u, psi_g, psi_sigma = mode_mixity_angles(params, jn, jt)
    return {"phi": float(phi), "jump_n": float(jn), "jump_t": float(jt),
            "g_c": float(gc), "psi_u": psi_u, "psi_g": psi_g, "psi_sigma": psi_sigma}
