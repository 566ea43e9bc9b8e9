"""Quasistatic evolution driver.

Each time step solves the incremental minimization by alternating two
convex subproblems (kinematics with damage frozen, damage with
kinematics frozen) and accepts the step only when the two-sided energy
inequality holds; on failure the driver backtracks one step, re-solving
it with the newer damage field as initialization.  The accepted sequence
satisfies damage unidirectionality by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import energy as energy_mod
from .adhesive import (AdhesiveParams, InterfaceState, adhesive_energy,
                       adhesive_energy_split, dissipation_increment,
                       element_energy_density)
from .assembly import CondensedOperator
from .mesh import (DIRICHLET, NEUMANN, RIGID_OBSTACLE, DomainMesh,
                   InterfacePairing, jump_operator, stacked_contact_layout)
from .optim import KinematicModel, kinematic_substep


class EvolutionAborted(RuntimeError):
    """Evolution gave up (budget exhausted or infeasible energies); the
    partial record is attached as ``record``."""

    def __init__(self, message, record):
        super().__init__(message)
        self.record = record


@dataclass
class LoadProgram:
    """Time-separable load: Dirichlet data phi(t) * shape, Neumann data
    psi(t) * shape, on an equidistant partition of [0, t_final] (a custom
    strictly increasing ``times`` array may replace it)."""

    phi: Callable[[float], float]
    psi: Callable[[float], float]
    t_final: float
    n_steps: int
    times: np.ndarray | None = None

    def __post_init__(self):
        if self.times is None:
            self.times = np.linspace(0.0, self.t_final, self.n_steps + 1)
        else:
            self.times = np.asarray(self.times, float)
            if self.times.size != self.n_steps + 1 or np.any(np.diff(self.times) <= 0):
                raise ValueError("times must be strictly increasing with n_steps+1 entries")


@dataclass
class DomainData:
    """One domain's time-independent pieces plus its load shapes."""

    mesh: DomainMesh
    condensed: CondensedOperator
    dirichlet_shape: np.ndarray      # (n_D_nodes, 2)
    neumann_shape: np.ndarray        # (m_N_dofs, 2)

    def dirichlet_at(self, phi: float) -> np.ndarray:
        return phi * self.dirichlet_shape

    def neumann_at(self, psi: float) -> np.ndarray:
        return psi * self.neumann_shape


@dataclass
class ContactSpace:
    """Rotated interface variables shared by all domains.

    The geometric vector ``v`` holds (normal, tangential) jump components
    per entry, followed by the obstacle-side trace (x, y) per entry for
    two-domain pairings.  ``z_maps[d]`` maps v to domain d's stacked
    contact displacement vector.
    """

    pairing: InterfacePairing
    z_maps: dict
    n_vars: int
    normal_index: np.ndarray
    tangent_index: np.ndarray

    @classmethod
    def build(cls, pairing: InterfacePairing, meshes):
        layout = stacked_contact_layout(meshes)
        m = pairing.n_entries
        two_dom = pairing.kind != RIGID_OBSTACLE
        n_vars = 4 * m if two_dom else 2 * m
        z = {mesh.domain_id: np.zeros((2 * mesh.contact_nodes.size, n_vars))
             for mesh in meshes}
        offsets = {}
        pos = 0
        for mesh in sorted(meshes, key=lambda mm: mm.domain_id):
            offsets[mesh.domain_id] = pos
            pos += mesh.contact_nodes.size

        def local(key):
            dom, _ = key
            return dom, 2 * (layout[key] - offsets[dom])

        for k, entry in enumerate(pairing.entries):
            rot_t = np.array([[pairing.normals[k, 0], pairing.tangents[k, 0]],
                              [pairing.normals[k, 1], pairing.tangents[k, 1]]])
            if two_dom:
                key_i, key_j = entry
                di, pi_ = local(key_i)
                dj, pj_ = local(key_j)
                z[di][pi_:pi_ + 2, 2 * k:2 * k + 2] = rot_t
                z[di][pi_:pi_ + 2, 2 * m + 2 * k:2 * m + 2 * k + 2] = np.eye(2)
                z[dj][pj_:pj_ + 2, 2 * m + 2 * k:2 * m + 2 * k + 2] = np.eye(2)
            else:
                d, p = local(entry)
                z[d][p:p + 2, 2 * k:2 * k + 2] = rot_t
        idx = np.arange(m)
        return cls(pairing=pairing, z_maps=z, n_vars=n_vars,
                   normal_index=2 * idx, tangent_index=2 * idx + 1)

    def jumps(self, v: np.ndarray) -> np.ndarray:
        return v[:2 * self.pairing.n_entries]


@dataclass
class DelaminationProblem:
    """Everything a run needs: domains, interface, adhesive, load."""

    domains: list
    pairing: InterfacePairing
    params: AdhesiveParams
    load: LoadProgram
    damage_active: bool = True
    plasticity_active: bool = True
    eps_ama: float = 1e-6
    max_ama_iterations: int = 100
    max_backtracks: int = 50
    qp_tol: float = 1e-8
    stop_on_total_debond: bool = True

    def __post_init__(self):
        meshes = [d.mesh for d in self.domains]
        self.space = ContactSpace.build(self.pairing, meshes)
        self.jump_op = jump_operator(self.pairing, meshes)
        k = np.zeros((self.space.n_vars, self.space.n_vars))
        for d in self.domains:
            z = self.space.z_maps[d.mesh.domain_id]
            k += z.T @ d.condensed.contact_stiffness @ z
        self._bulk_stiffness = k

    # -- per-time-step load data -------------------------------------------

    def load_vector(self, t: float) -> np.ndarray:
        phi, psi = self.load.phi(t), self.load.psi(t)
        f = np.zeros(self.space.n_vars)
        for d in self.domains:
            z = self.space.z_maps[d.mesh.domain_id]
            f += z.T @ d.condensed.contact_load_vector(
                d.dirichlet_at(phi), d.neumann_at(psi))
        return f

    def bulk_potential(self, t: float, v: np.ndarray) -> float:
        phi, psi = self.load.phi(t), self.load.psi(t)
        val = 0.5 * v @ (self._bulk_stiffness @ v) + self.load_vector(t) @ v
        for d in self.domains:
            val += d.condensed.load_constant(d.dirichlet_at(phi), d.neumann_at(psi))
        return float(val)

    def total_energy(self, t: float, v: np.ndarray, zeta, pi) -> float:
        return self.bulk_potential(t, v) + adhesive_energy(
            self.params, self.pairing, zeta, pi, self.space.jumps(v))

    def power_bounds(self, t_old: float, t_new: float, v_old, v_new):
        """(lower, upper) two-sided power integrals over one step."""
        lo = up = 0.0
        for d in self.domains:
            z = self.space.z_maps[d.mesh.domain_id]
            args = (d.dirichlet_at(self.load.phi(t_old)),
                    d.dirichlet_at(self.load.phi(t_new)),
                    d.neumann_at(self.load.psi(t_old)),
                    d.neumann_at(self.load.psi(t_new)))
            lo += energy_mod.power_integral_lower(d.condensed, z @ v_new, *args)
            up += energy_mod.power_integral_upper(d.condensed, z @ v_old, *args)
        return lo, up

    def domain_state(self, d: DomainData, t: float, v: np.ndarray):
        """Full boundary (u, p) of domain ``d`` at load time t."""
        z = self.space.z_maps[d.mesh.domain_id]
        return d.condensed.apply(z @ v, d.dirichlet_at(self.load.phi(t)),
                                 d.neumann_at(self.load.psi(t)))


# ---------------------------------------------------------------------------
# alternate minimization
# ---------------------------------------------------------------------------

def ama_step(problem: DelaminationProblem, t: float, zeta_prev, pi_prev,
             zeta_init, v_start=None):
    """One incremental minimization by alternation.

    ``zeta_prev``/``pi_prev`` are the previous accepted step's internal
    variables (irreversibility references); ``zeta_init`` seeds the
    alternation.  Returns ``(v, zeta, pi, iterations, converged)``.
    """
    model = _kinematic_model(problem, t)
    return _alternate(problem, model, zeta_prev, pi_prev, zeta_init, v_start)


def _kinematic_model(problem, t: float) -> KinematicModel:
    space = problem.space
    return KinematicModel(
        K=problem._bulk_stiffness, f=problem.load_vector(t),
        pairing=problem.pairing, params=problem.params,
        normal_index=space.normal_index, tangent_index=space.tangent_index,
        plasticity_active=problem.plasticity_active)


def _alternate(problem, model, zeta_prev, pi_prev, zeta_init, v_start=None):
    zeta_j = np.asarray(zeta_init, float).copy()
    v = v_start
    pi = np.asarray(pi_prev, float).copy()
    for j in range(1, problem.max_ama_iterations + 1):
        v, pi, qp = kinematic_substep(model, zeta_j, pi_prev, v0=v,
                                      tol=problem.qp_tol)
        if not qp.converged:
            raise RuntimeError(
                f"kinematic QP failed to converge (projected gradient "
                f"{qp.projected_gradient_norm:.2e})")
        if not problem.damage_active:
            return v, zeta_j, pi, j, True
        dens = element_energy_density(problem.params, problem.pairing, pi,
                                      problem.space.jumps(v))
        zeta_new = _damage(problem, dens, zeta_prev)
        if np.max(np.abs(zeta_new - zeta_j)) < problem.eps_ama:
            return v, zeta_new, pi, j, True
        zeta_j = zeta_new
    return v, zeta_j, pi, problem.max_ama_iterations, False


def _damage(problem, density, zeta_prev):
    from .optim import damage_substep
    return damage_substep(problem.params, problem.pairing, density, zeta_prev)


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------

@dataclass
class StepRecord:
    index: int
    time: float
    phi: float
    psi: float
    v: np.ndarray
    jumps: np.ndarray
    zeta: np.ndarray
    pi: np.ndarray
    energies: energy_mod.EnergyBreakdown
    force_dirichlet: np.ndarray        # (n_domains, 2), N/mm = kN/m
    force_neumann: np.ndarray
    ama_iterations: int = 0
    backtracks: int = 0


@dataclass
class EvolutionRecord:
    steps: list
    termination: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.steps])


def resultant_force(mesh: DomainMesh, p, part: str) -> np.ndarray:
    """Integral of the traction field over a boundary part (N/mm, which
    is kN/m per unit thickness)."""
    elems = mesh.part_elements(part)
    if elems.size == 0:
        raise ValueError(f"mesh has no {part!r} part")
    p = np.asarray(p, float).reshape(mesh.n_traction_dofs, 2)
    force = np.zeros(2)
    for e in elems:
        d0, d1 = mesh.traction_dof_of_slot[e]
        force += 0.5 * mesh.lengths[e] * (p[d0] + p[d1])
    return force


# ---------------------------------------------------------------------------
# backtracking driver
# ---------------------------------------------------------------------------

# relative slack for the floating-point comparison of the two-sided test
_TEST_SLACK = 1e-9


def run_evolution(problem: DelaminationProblem,
                  state0: InterfaceState | None = None) -> EvolutionRecord:
    """March the incremental minimization through the load program.

    Implements the energy backtracking loop: a step whose two-sided
    energy inequality fails sends the driver one step back, carrying the
    newer damage field as the alternation seed.  Raises
    :class:`EvolutionAborted` (with the partial record attached) when a
    step exhausts its backtrack budget.
    """
    pairing = problem.pairing
    if state0 is None:
        state0 = InterfaceState.initial(pairing)
    times = problem.load.times
    n_steps = problem.load.n_steps

    v0 = _elastic_presolve(problem, times[0], state0)
    states = [None] * (n_steps + 1)
    states[0] = (v0, state0.zeta.copy(), state0.pi.copy())
    bounds = [None] * (n_steps + 1)
    ama_iters = [0] * (n_steps + 1)
    backtracks = np.zeros(n_steps + 1, dtype=int)

    zeta_init = state0.zeta.copy()
    k = 1
    while k <= n_steps:
        v_prev, zeta_prev, pi_prev = states[k - 1]
        try:
            v, zeta, pi, iters, _ = ama_step(problem, times[k], zeta_prev, pi_prev,
                                             zeta_init, v_start=v_prev.copy())
        except RuntimeError as exc:
            raise EvolutionAborted(
                str(exc), _build_record(problem, states[:k], times, bounds,
                                        ama_iters, backtracks, "aborted-solver"))
        zeta_init = zeta.copy()
        ama_iters[k] = iters

        e_new = problem.total_energy(times[k], v, zeta, pi)
        e_old = problem.total_energy(times[k - 1], v_prev, zeta_prev, pi_prev)
        r_step = dissipation_increment(problem.params, pairing, zeta, zeta_prev,
                                       pi, pi_prev)
        if not np.isfinite(e_new) or not np.isfinite(r_step):
            raise EvolutionAborted(
                f"infeasible energy at step {k} (t={times[k]:.6g})",
                _build_record(problem, states[:k], times, bounds,
                              ama_iters, backtracks, "aborted-infeasible"))
        middle = e_new + r_step - e_old
        lower, upper = problem.power_bounds(times[k - 1], times[k], v_prev, v)
        slack = _TEST_SLACK * max(abs(e_new), abs(e_old), abs(lower), abs(upper), 1e-12)

        if lower - slack <= middle <= upper + slack:
            states[k] = (v, zeta, pi)
            bounds[k] = (lower, upper)
            k += 1
            if problem.stop_on_total_debond and problem.damage_active \
                    and np.all(zeta <= 0.0):
                return _build_record(problem, states[:k], times, bounds,
                                     ama_iters, backtracks, "total-debond")
        else:
            backtracks[k] += 1
            if backtracks[k] > problem.max_backtracks:
                raise EvolutionAborted(
                    f"backtrack budget exhausted at step {k} (t={times[k]:.6g}): "
                    f"{lower:.6g} <= {middle:.6g} <= {upper:.6g} fails",
                    _build_record(problem, states[:k], times, bounds,
                                  ama_iters, backtracks, "aborted-budget"))
            k = max(k - 1, 1)

    return _build_record(problem, states, times, bounds, ama_iters,
                         backtracks, "completed")


def _elastic_presolve(problem, t0, state0):
    """Initial kinematic state: minimize at t0 over the displacements
    only, internal variables frozen (zero loads give the zero vector)."""
    if problem.load.phi(t0) == 0.0 and problem.load.psi(t0) == 0.0:
        return np.zeros(problem.space.n_vars)
    model = KinematicModel(
        K=problem._bulk_stiffness, f=problem.load_vector(t0),
        pairing=problem.pairing, params=problem.params,
        normal_index=problem.space.normal_index,
        tangent_index=problem.space.tangent_index,
        plasticity_active=False)
    v, _, _ = kinematic_substep(model, state0.zeta, state0.pi, tol=problem.qp_tol)
    return v


def _build_record(problem, states, times, bounds, ama_iters, backtracks,
                  termination) -> EvolutionRecord:
    pairing = problem.pairing
    steps = []
    dissipated = 0.0
    for k, st in enumerate(states):
        if st is None:
            break
        v, zeta, pi = st
        t = times[k]
        phi, psi = problem.load.phi(t), problem.load.psi(t)
        jumps = problem.space.jumps(v)

        bulk = 0.0
        neumann_pot = 0.0
        f_d = np.zeros((len(problem.domains), 2))
        f_n = np.zeros((len(problem.domains), 2))
        for i, d in enumerate(problem.domains):
            u_full, p_full = problem.domain_state(d, t, v)
            bulk += energy_mod.bulk_energy_boundary(u_full, p_full, d.mesh)
            p_n = d.neumann_at(psi)
            if np.any(p_n):
                neumann_pot -= energy_mod.neumann_work(u_full, p_n, d.condensed)
            if d.mesh.part_elements(DIRICHLET).size:
                f_d[i] = resultant_force(d.mesh, p_full, DIRICHLET)
            if d.mesh.part_elements(NEUMANN).size:
                f_n[i] = resultant_force(d.mesh, p_full, NEUMANN)

        adh = adhesive_energy(problem.params, pairing, zeta, pi, jumps)
        adh_n, adh_t = adhesive_energy_split(problem.params, pairing, zeta, pi, jumps)
        if k == 0:
            r_step = 0.0
        else:
            v_p, z_p, p_p = states[k - 1]
            r_step = dissipation_increment(problem.params, pairing, zeta, z_p, pi, p_p)
        dissipated += r_step
        lo, up = bounds[k] if bounds[k] is not None else (0.0, 0.0)
        steps.append(StepRecord(
            index=k, time=t, phi=phi, psi=psi, v=v.copy(), jumps=jumps.copy(),
            zeta=np.asarray(zeta).copy(), pi=np.asarray(pi).copy(),
            energies=energy_mod.EnergyBreakdown(
                bulk=bulk, adhesive=adh, neumann_potential=neumann_pot,
                dissipated_step=r_step, dissipated_cumulative=dissipated,
                total=bulk + adh + neumann_pot,
                lower_bound_lhs=lo, upper_bound_rhs=up,
                adhesive_normal=adh_n, adhesive_tangential=adh_t),
            force_dirichlet=f_d, force_neumann=f_n,
            ama_iterations=ama_iters[k], backtracks=int(backtracks[k])))

    diag = {
        "total_backtracks": int(backtracks.sum()),
        "max_ama_iterations": int(max(ama_iters)) if ama_iters else 0,
        "asymmetry_norms": {d.mesh.domain_id: d.condensed.asymmetry_norm
                            for d in problem.domains},
    }
    return EvolutionRecord(steps=steps, termination=termination, diagnostics=diag)


# ---------------------------------------------------------------------------
# stability competitor check
# ---------------------------------------------------------------------------

def debond_competitor_margin(problem: DelaminationProblem, t: float,
                             v, zeta, pi, element: int,
                             reminimize: bool = False) -> float:
    """Margin of the stability test against fully debonding one element.

    Returns ``E(competitor) + R(competitor - state) - E(state)`` for the
    competitor that zeroes the damage of ``element``; nonnegative margins
    mean the accepted state is stable against it.  By default the
    competitor keeps the accepted kinematics (the sampled family of the
    stability inequality).  With ``reminimize`` the displacements and
    slip relax under the perturbed damage: a strictly stronger diagnostic
    that the backtracking heuristic does not guarantee near snap events.
    """
    zeta_c = np.asarray(zeta, float).copy()
    zeta_c[element] = 0.0
    if reminimize:
        v_c, pi_c, _ = kinematic_substep(
            _kinematic_model(problem, t), zeta_c, pi,
            v0=np.asarray(v, float).copy(), tol=problem.qp_tol)
    else:
        v_c, pi_c = np.asarray(v, float), np.asarray(pi, float)
    e_state = problem.total_energy(t, v, zeta, pi)
    e_comp = problem.total_energy(t, v_c, zeta_c, pi_c)
    r = dissipation_increment(problem.params, problem.pairing,
                              zeta_c, zeta, pi_c, pi)
    return float(e_comp + r - e_state)
