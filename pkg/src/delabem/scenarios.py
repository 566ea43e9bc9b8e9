"""Built-in experiment configurations and the point constitutive driver.

Three experiment families ship as builtins: a non-monotonically loaded
pull-push strip on a rigid foundation (four dissipation variants), the
same strip under monotonic traction loading with flanking traction-free
strips, and the monotone hard-device application run on three nested
meshes.  Parameters follow the common aluminium/epoxy data set:
E = 70 GPa, nu = 0.35, kappa_n = 18 GPa/mm, kappa_t = kappa_n / 4,
kappa_h = kappa_t / 9, G_Ic = 10 N/mm (0.01 J/mm^2) and yield stress
168 MPa, giving the critical stresses 600 MPa (opening) and 300 MPa
(shear).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .adhesive import AdhesiveParams
from .assembly import assemble, condense
from .evolution import DelaminationProblem, DomainData, LoadProgram
from .kernels import Material
from .mesh import (DIRICHLET, NEUMANN, DomainMesh, build_rectangle,
                   pair_rigid_obstacle)

# shared material / adhesive data set (mm, N, MPa)
BASE_MATERIAL = {"young_modulus": 70000.0, "poisson_ratio": 0.35}
BASE_ADHESIVE = {"kappa_n": 18000.0, "kappa_t": 4500.0, "kappa_h": 500.0,
                 "g1c": 10.0, "yield_stress": 168.0, "kappa_grad": 0.0}

SCHEMA_VERSION = 1


@dataclass
class ScenarioConfig:
    """Complete, serializable description of one run."""

    name: str
    geometry: dict
    material: dict
    adhesive: dict
    load: dict
    flags: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = dict(data)
        version = data.get("schema_version", None)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported config schema_version {version!r}")
        return cls(**data)


def derived_stiffness(young_modulus_adhesive: float, poisson_adhesive: float,
                      thickness: float):
    """Normal and tangential stiffness of a thin elastic layer.

    A glue layer of modulus E_a, Poisson ratio nu_a and thickness h acts
    as springs of stiffness kappa_n = E_a (1 - nu_a) / (h (1 + nu_a)
    (1 - 2 nu_a)) and kappa_t = kappa_n (1 - 2 nu_a) / (2 (1 - nu_a)).
    """
    ea, nua, h = young_modulus_adhesive, poisson_adhesive, thickness
    kn = ea * (1.0 - nua) / (h * (1.0 + nua) * (1.0 - 2.0 * nua))
    kt = kn * (1.0 - 2.0 * nua) / (2.0 * (1.0 - nua))
    return kn, kt


# ---------------------------------------------------------------------------
# time functions
# ---------------------------------------------------------------------------

def time_function(spec: dict):
    kind = spec.get("type", "zero")
    if kind == "zero":
        return lambda t: 0.0
    if kind == "linear":
        rate = float(spec.get("rate", 1.0))
        return lambda t: rate * t
    if kind == "sin":
        omega = float(spec.get("omega", 1.0))
        return lambda t: math.sin(omega * t)
    raise ValueError(f"unknown time function type {kind!r}")


# ---------------------------------------------------------------------------
# builtins
# ---------------------------------------------------------------------------

NONMONOTONIC_CASES = {
    "a": {"damage_active": False, "plasticity_active": False},
    "b": {"damage_active": False, "plasticity_active": True},
    "c": {"damage_active": True, "plasticity_active": False},
    "d": {"damage_active": True, "plasticity_active": True},
}


def scenario_nonmonotonic(case: str = "d", n_steps: int = 140) -> ScenarioConfig:
    """Pull-push strip under the cyclic hard-device load sin(7 t).

    A 250 x 12.5 mm aluminium strip glued to a rigid foundation over the
    first 225 mm of its bottom side, pulled at its right edge by
    u = sin(7 t) (1, 0.6) mm.  Case toggles: (a) elastic contact only,
    (b) interface plasticity, (c) interface damage, (d) both.
    """
    if case not in NONMONOTONIC_CASES:
        raise ValueError(f"case must be one of a, b, c, d; got {case!r}")
    return ScenarioConfig(
        name=f"nonmonotonic-{case}",
        geometry={"length": 250.0, "height": 12.5,
                  "counts": [30, 2, 30, 2],
                  "tags": [NEUMANN, DIRICHLET, NEUMANN, NEUMANN],
                  "contact_span": ["bottom", 0.0, 225.0]},
        material=dict(BASE_MATERIAL),
        adhesive=dict(BASE_ADHESIVE),
        load={"phi": {"type": "sin", "omega": 7.0}, "psi": {"type": "zero"},
              "t_final": 1.0, "n_steps": int(n_steps),
              "dirichlet_motion": [1.0, 0.6], "neumann_traction": {}},
        flags=dict(NONMONOTONIC_CASES[case]),
        solver={},
        output={"interface_probe_x": 208.33, "snapshot_times": [],
                "probe_point": [250.0, 0.0]})


def scenario_traction(p0: float = 1100.0, n_steps: int = 50,
                      contact_elements: int = 48,
                      plasticity_only: bool = False) -> ScenarioConfig:
    """Monotonic traction loading of the strip, left side fixed.

    The 200 mm glued zone sits between two 25 mm traction-free strips;
    uniform horizontal tractions psi(t) p0 pull the right side.  The run
    ends when the whole adhesive layer fails at once.  ``p0`` is a
    required model input (the default makes plastic slip precede the
    total damage).  ``plasticity_only`` disables damage, the variant used
    to study the discrete overshoot at the rightmost glued node.
    """
    if contact_elements == 48:
        geometry = {"length": 250.0, "height": 12.5,
                    "counts": [60, 3, 60, 3],
                    "tags": [NEUMANN, NEUMANN, NEUMANN, DIRICHLET],
                    "contact_span": ["bottom", 25.0, 225.0]}
    else:
        n_c = int(contact_elements)
        n_strip = max(1, round(25.0 / (200.0 / n_c)))
        geometry = {"length": 250.0, "height": 12.5,
                    "counts": [60, 3, 60, 3],
                    "tags": [NEUMANN, NEUMANN, NEUMANN, DIRICHLET],
                    "contact_span": ["bottom", 25.0, 225.0],
                    "span_counts": [n_strip, n_c, n_strip]}
    name = "traction-plastic" if plasticity_only else "traction"
    return ScenarioConfig(
        name=name,
        geometry=geometry,
        material=dict(BASE_MATERIAL),
        adhesive=dict(BASE_ADHESIVE),
        load={"phi": {"type": "zero"}, "psi": {"type": "linear"},
              "t_final": 1.0, "n_steps": int(n_steps),
              "dirichlet_motion": [0.0, 0.0],
              "neumann_traction": {"right": [float(p0), 0.0]}},
        flags={"damage_active": not plasticity_only, "plasticity_active": True},
        solver={},
        output={"interface_probe_x": 225.0, "snapshot_times": [],
                "probe_point": [250.0, 0.0]})


APPLICATION_MESHES = {54: [60, 3, 60, 3], 108: [120, 6, 120, 6],
                      216: [240, 12, 240, 12]}


def scenario_application(mesh_level: int = 54, n_steps: int = 75,
                         t_final: float = 3.0) -> ScenarioConfig:
    """Monotone hard-device run of the pull-push strip to full debonding.

    ``mesh_level`` picks 54, 108 or 216 elements on the glued zone (the
    uniform meshes with 60, 120, 240 elements per horizontal side).  The
    default step 0.04 resolves the linear load path; on the 60-per-side
    mesh the first damage then arrives as an 11-element (45.83 mm) crack.
    The horizon reaches past the late activation cascade whose
    backtracking settles the complete rupture near t = 1, where the run
    terminates by total debond.
    """
    if mesh_level not in APPLICATION_MESHES:
        raise ValueError(f"mesh_level must be one of {sorted(APPLICATION_MESHES)}")
    return ScenarioConfig(
        name=f"application-{mesh_level}",
        geometry={"length": 250.0, "height": 12.5,
                  "counts": APPLICATION_MESHES[mesh_level],
                  "tags": [NEUMANN, DIRICHLET, NEUMANN, NEUMANN],
                  "contact_span": ["bottom", 0.0, 225.0]},
        material=dict(BASE_MATERIAL),
        adhesive=dict(BASE_ADHESIVE),
        load={"phi": {"type": "linear"}, "psi": {"type": "zero"},
              "t_final": float(t_final), "n_steps": int(n_steps),
              "dirichlet_motion": [0.6, 0.36], "neumann_traction": {}},
        flags={"damage_active": True, "plasticity_active": True},
        solver={},
        output={"interface_probe_x": 225.0, "snapshot_times": [0.48],
                "probe_point": [250.0, 0.0]})


def scenario_gc_sweep(n_points: int = 181) -> ScenarioConfig:
    """Mixed-mode toughness sweep over the onset parameter angle."""
    return ScenarioConfig(
        name="gc-sweep",
        geometry={},
        material=dict(BASE_MATERIAL),
        adhesive=dict(BASE_ADHESIVE),
        load={},
        flags={},
        solver={},
        output={"n_points": int(n_points)})


BUILTINS = {
    "nonmonotonic-a": lambda: scenario_nonmonotonic("a"),
    "nonmonotonic-b": lambda: scenario_nonmonotonic("b"),
    "nonmonotonic-c": lambda: scenario_nonmonotonic("c"),
    "nonmonotonic-d": lambda: scenario_nonmonotonic("d"),
    "traction": scenario_traction,
    "traction-plastic": lambda: scenario_traction(plasticity_only=True),
    "application": scenario_application,
    "gc-sweep": scenario_gc_sweep,
}


# ---------------------------------------------------------------------------
# config -> problem
# ---------------------------------------------------------------------------

_SIDE_NORMALS = {"bottom": (0.0, -1.0), "right": (1.0, 0.0),
                 "top": (0.0, 1.0), "left": (-1.0, 0.0)}


def build_mesh(geometry: dict) -> DomainMesh:
    span = geometry.get("contact_span")
    return build_rectangle(
        float(geometry["length"]), float(geometry["height"]),
        list(geometry["counts"]), list(geometry["tags"]),
        contact_span=tuple(span) if span else None,
        span_counts=tuple(geometry["span_counts"]) if geometry.get("span_counts") else None)


def neumann_shape(mesh: DomainMesh, traction_by_side: dict) -> np.ndarray:
    """Per-Neumann-traction-dof load shape from per-side traction vectors."""
    dofs = mesh.part_traction_dofs(NEUMANN)
    shape = np.zeros((dofs.size, 2))
    if not traction_by_side:
        return shape
    side_vec = {s: np.asarray(v, float) for s, v in traction_by_side.items()}
    pos = {int(d): k for k, d in enumerate(dofs)}
    for e in mesh.part_elements(NEUMANN):
        for side, nvec in _SIDE_NORMALS.items():
            if side in side_vec and np.allclose(mesh.normals[e], nvec, atol=1e-12):
                for loc in (0, 1):
                    shape[pos[int(mesh.traction_dof_of_slot[e, loc])]] = side_vec[side]
    return shape


def build_problem(config: ScenarioConfig) -> DelaminationProblem:
    """Assemble, condense and wire a run from its configuration."""
    mesh = build_mesh(config.geometry)
    material = Material(**config.material)
    params = AdhesiveParams(**config.adhesive)
    system = assemble(mesh, material)
    cond = condense(system)
    pairing = pair_rigid_obstacle(mesh)

    load_cfg = config.load
    motion = np.asarray(load_cfg.get("dirichlet_motion", [0.0, 0.0]), float)
    domain = DomainData(
        mesh=mesh, condensed=cond,
        dirichlet_shape=np.tile(motion, (mesh.dirichlet_nodes.size, 1)),
        neumann_shape=neumann_shape(mesh, load_cfg.get("neumann_traction", {})))
    load = LoadProgram(phi=time_function(load_cfg["phi"]),
                       psi=time_function(load_cfg["psi"]),
                       t_final=float(load_cfg["t_final"]),
                       n_steps=int(load_cfg["n_steps"]))
    solver = config.solver or {}
    return DelaminationProblem(
        domains=[domain], pairing=pairing, params=params, load=load,
        damage_active=bool(config.flags.get("damage_active", True)),
        plasticity_active=bool(config.flags.get("plasticity_active", True)),
        **{k: solver[k] for k in
           ("eps_ama", "max_ama_iterations", "max_backtracks", "qp_tol",
            "stop_on_total_debond") if k in solver})


# ---------------------------------------------------------------------------
# single-point constitutive driver
# ---------------------------------------------------------------------------

def point_driver(params: AdhesiveParams, jump_path, damage: bool = True,
                 plasticity: bool = True):
    """Drive one adhesive point through a jump history.

    ``jump_path`` is an (n, 2) array of (normal, tangential) jumps per
    unit interface area.  Each step alternates the slip minimization (a
    two-variable split QP) and the damage rule until stationary, exactly
    the incremental scheme of the full simulator collapsed to one point.
    Returns arrays of damage, slip and the two traction components.
    """
    from .optim import BoxQP, solve_box_qp

    path = np.asarray(jump_path, float).reshape(-1, 2)
    zeta, pi = 1.0, 0.0
    out = {"zeta": [], "pi": [], "t_n": [], "t_t": [], "dissipated": []}
    dissipated = 0.0
    for jn, jt in path:
        zeta_prev, pi_prev = zeta, pi
        for _ in range(20):
            if plasticity:
                stiff = zeta * params.kappa_t + params.kappa_h
                drive = zeta * params.kappa_t * (jt - pi_prev) - params.kappa_h * pi_prev
                q = stiff * np.array([[1.0, -1.0], [-1.0, 1.0]])
                b = np.array([-drive + params.yield_stress,
                              drive + params.yield_stress])
                w = solve_box_qp(BoxQP(q, b, np.zeros(2), None), tol=1e-12).x
                pi = pi_prev + w[0] - w[1]
            if not damage:
                break
            e = 0.5 * (params.kappa_n * jn ** 2 + params.kappa_t * (jt - pi) ** 2)
            zeta_new = 0.0 if e > params.g1c else zeta_prev
            if zeta_new == zeta:
                break
            zeta = zeta_new
        dissipated += params.g1c * abs(zeta - zeta_prev) \
            + params.yield_stress * abs(pi - pi_prev)
        out["zeta"].append(zeta)
        out["pi"].append(pi)
        out["t_n"].append(zeta * params.kappa_n * jn)
        out["t_t"].append(zeta * params.kappa_t * (jt - pi))
        out["dissipated"].append(dissipated)
    return {k: np.asarray(v) for k, v in out.items()}
