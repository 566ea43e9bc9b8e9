"""Shared fixtures: the common material/adhesive data set and cached
evolution runs reused across test modules."""

import numpy as np
import pytest

from delabem.adhesive import AdhesiveParams
from delabem.assembly import assemble, condense
from delabem.evolution import run_evolution
from delabem.kernels import Material
from delabem.mesh import DIRICHLET, NEUMANN, build_rectangle
from delabem.scenarios import build_problem, scenario_nonmonotonic


@pytest.fixture(scope="session")
def material():
    return Material(young_modulus=70000.0, poisson_ratio=0.35)


@pytest.fixture(scope="session")
def adhesive_params():
    return AdhesiveParams(kappa_n=18000.0, kappa_t=4500.0, kappa_h=500.0,
                          g1c=10.0, yield_stress=168.0)


@pytest.fixture(scope="session")
def pull_push_mesh():
    """The 64-element pull-push mesh: 27 glued elements on the bottom."""
    return build_rectangle(250.0, 12.5, (30, 2, 30, 2),
                           (NEUMANN, DIRICHLET, NEUMANN, NEUMANN),
                           contact_span=("bottom", 0.0, 225.0))


@pytest.fixture(scope="session")
def pull_push_condensed(pull_push_mesh, material):
    return condense(assemble(pull_push_mesh, material))


@pytest.fixture(scope="session")
def unit_square_system(material):
    mesh = build_rectangle(1.0, 1.0, (8, 8, 8, 8), (DIRICHLET,) * 4)
    return mesh, assemble(mesh, material)


def _run(config):
    problem = build_problem(config)
    return problem, run_evolution(problem)


@pytest.fixture(scope="session")
def nonmonotonic_runs():
    """Records of the four dissipation variants of the cyclic run."""
    out = {}
    for case in "abcd":
        config = scenario_nonmonotonic(case)
        config.solver["stop_on_total_debond"] = False
        out[case] = _run(config)
    return out


def first_damage_event(record):
    """(step index, time, number of fully broken elements) of the first
    accepted step with damage, or None."""
    for s in record.steps:
        broken = int(np.sum(s.zeta < 0.5))
        if broken:
            return s.index, s.time, broken
    return None
