"""Batch command-line front end.

``delabem run`` executes a built-in or configured scenario and writes
one CSV per figure family (energies, forces, interface histories and
snapshots) plus a YAML run report; ``delabem run --builtin gc-sweep``
writes the mixed-mode toughness sweep.  Outputs are written atomically
and a report is produced even when a run aborts.  Exit codes: 0 on a
completed run, 1 on configuration errors, 2 on a budget abort.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
import time

import numpy as np
import yaml

from . import __version__
from .adhesive import AdhesiveParams, gc_curve
from .evolution import EvolutionAborted, run_evolution
from .mesh import CONTACT, DomainMesh, MeshError
from .scenarios import (BUILTINS, ScenarioConfig, build_problem,
                        scenario_application, scenario_nonmonotonic)

MESH_SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def mesh_to_dict(mesh: DomainMesh) -> dict:
    return {
        "schema_version": MESH_SCHEMA_VERSION,
        "domain_id": int(mesh.domain_id),
        "nodes": [[float(x), float(y)] for x, y in mesh.nodes],
        "elements": [[int(a), int(b)] for a, b in mesh.elements],
        "tags": [str(t) for t in mesh.part_tags],
    }


def mesh_from_dict(data: dict) -> DomainMesh:
    if data.get("schema_version") != MESH_SCHEMA_VERSION:
        raise MeshError(f"unsupported mesh schema_version {data.get('schema_version')!r}")
    return DomainMesh(domain_id=int(data["domain_id"]),
                      nodes=np.asarray(data["nodes"], float),
                      elements=np.asarray(data["elements"], int),
                      part_tags=np.asarray(data["tags"], dtype=object))


def save_config(config: ScenarioConfig, path: str):
    _atomic_write(path, yaml.safe_dump(config.to_dict(), sort_keys=True))


def load_config(path: str) -> ScenarioConfig:
    with open(path) as fh:
        return ScenarioConfig.from_dict(yaml.safe_load(fh))


def _atomic_write(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x) -> str:
    return format(float(x) + 0.0, ".17g")     # +0.0 folds negative zero


def _write_csv(path: str, header_comment: str, columns, rows):
    lines = [f"# {header_comment}", ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# output extraction
# ---------------------------------------------------------------------------

def _contact_dof_of_node(mesh: DomainMesh) -> dict:
    out = {}
    for e in mesh.part_elements(CONTACT):
        for loc in (0, 1):
            out[int(mesh.elements[e, loc])] = int(mesh.traction_dof_of_slot[e, loc])
    return out


def _entry_node(entry, kind) -> int:
    return int(entry[1]) if kind == "rigid-obstacle" else int(entry[0][1])


def _nodal_zeta(pairing, zeta) -> np.ndarray:
    acc = np.zeros(pairing.n_entries)
    cnt = np.zeros(pairing.n_entries)
    for e, (a, b) in enumerate(pairing.elements):
        acc[a] += zeta[e]
        acc[b] += zeta[e]
        cnt[a] += 1
        cnt[b] += 1
    return acc / np.maximum(cnt, 1)


def write_run_outputs(out_dir: str, config: ScenarioConfig, problem, record) -> list:
    """All CSV outputs of one evolution run; returns the file list."""
    os.makedirs(out_dir, exist_ok=True)
    files = []
    steps = record.steps
    dom = problem.domains[0]
    mesh = dom.mesh
    pairing = problem.pairing

    path = os.path.join(out_dir, "energies.csv")
    _write_csv(
        path,
        "energies per accepted step; J/m per unit thickness (1 N = 1 J/m); "
        "bounds are the two-sided power integrals of the step",
        ["t", "phi", "psi", "bulk", "adhesive", "adhesive_normal",
         "adhesive_tangential", "neumann_potential", "dissipated_step",
         "dissipated_cumulative", "total", "lower_bound", "upper_bound",
         "ama_iterations", "backtracks"],
        [[s.time, s.phi, s.psi, s.energies.bulk, s.energies.adhesive,
          s.energies.adhesive_normal, s.energies.adhesive_tangential,
          s.energies.neumann_potential, s.energies.dissipated_step,
          s.energies.dissipated_cumulative, s.energies.total,
          s.energies.lower_bound_lhs, s.energies.upper_bound_rhs,
          s.ama_iterations, s.backtracks] for s in steps])
    files.append(path)

    probe_xy = config.output.get("probe_point")
    probe_node = None
    if probe_xy is not None:
        probe_node = int(np.argmin(np.linalg.norm(mesh.nodes - np.asarray(probe_xy, float),
                                                  axis=1)))
    rows = []
    for s in steps:
        u_full, _ = problem.domain_state(dom, s.time, s.v)
        row = [s.time, s.phi, s.psi,
               s.phi * dom.dirichlet_shape[0, 0] if dom.dirichlet_shape.size else 0.0,
               s.phi * dom.dirichlet_shape[0, 1] if dom.dirichlet_shape.size else 0.0,
               s.force_dirichlet[0, 0], s.force_dirichlet[0, 1],
               s.force_neumann[0, 0], s.force_neumann[0, 1]]
        row += [u_full[probe_node, 0], u_full[probe_node, 1]] if probe_node is not None \
            else [0.0, 0.0]
        rows.append(row)
    path = os.path.join(out_dir, "forces.csv")
    _write_csv(
        path,
        "resultant forces per accepted step; N/mm = kN/m per unit thickness; "
        "dirichlet_u* is the prescribed motion, probe_u* the displacement of "
        "the probe point",
        ["t", "phi", "psi", "dirichlet_ux", "dirichlet_uy", "force_D_x",
         "force_D_y", "force_N_x", "force_N_y", "probe_ux", "probe_uy"],
        rows)
    files.append(path)

    probe_x = config.output.get("interface_probe_x")
    if probe_x is not None and pairing.n_entries:
        entry_nodes = [_entry_node(e, pairing.kind) for e in pairing.entries]
        coords = mesh.nodes[entry_nodes]
        k = int(np.argmin(np.abs(coords[:, 0] - float(probe_x))))
        dof_of_node = _contact_dof_of_node(mesh)
        dof = dof_of_node[entry_nodes[k]]
        rows = []
        for s in steps:
            _, p_full = problem.domain_state(dom, s.time, s.v)
            zeta_nodal = _nodal_zeta(pairing, s.zeta)
            jn, jt = s.jumps[2 * k], s.jumps[2 * k + 1]
            p = p_full[dof]
            rows.append([s.time, jn, jt, zeta_nodal[k], s.pi[k],
                         zeta_nodal[k] * problem.params.kappa_n * jn,
                         zeta_nodal[k] * problem.params.kappa_t * (jt - s.pi[k]),
                         -(p @ pairing.normals[k]), -(p @ pairing.tangents[k])])
        path = os.path.join(out_dir, "interface_probe.csv")
        _write_csv(
            path,
            f"interface history at the glued node nearest x = {probe_x} mm; "
            "jumps in mm, tractions in MPa; t_n/t_t from the adhesive law "
            "(nodally averaged damage), bem_t_n/bem_t_t from the boundary "
            "solution",
            ["t", "jump_n", "jump_t", "zeta", "pi", "t_n", "t_t",
             "bem_t_n", "bem_t_t"],
            rows)
        files.append(path)

    for t_snap in config.output.get("snapshot_times", []):
        idx = int(np.argmin(np.abs(record.times - float(t_snap))))
        s = steps[idx]
        _, p_full = problem.domain_state(dom, s.time, s.v)
        zeta_nodal = _nodal_zeta(pairing, s.zeta)
        dof_of_node = _contact_dof_of_node(mesh)
        rows = []
        for k, entry in enumerate(pairing.entries):
            node = _entry_node(entry, pairing.kind)
            x = mesh.nodes[node, 0]
            jn, jt = s.jumps[2 * k], s.jumps[2 * k + 1]
            p = p_full[dof_of_node[node]]
            rows.append([x, jn, jt, zeta_nodal[k], s.pi[k],
                         zeta_nodal[k] * problem.params.kappa_n * jn,
                         zeta_nodal[k] * problem.params.kappa_t * (jt - s.pi[k]),
                         -(p @ pairing.normals[k]), -(p @ pairing.tangents[k])])
        path = os.path.join(out_dir, f"interface_t{s.time:.6g}.csv")
        _write_csv(
            path,
            f"interface fields along the glued zone at t = {s.time:.6g} "
            "(accepted step nearest the requested snapshot time); jumps in "
            "mm, tractions in MPa, zeta nodally averaged",
            ["x", "jump_n", "jump_t", "zeta", "pi", "t_n", "t_t",
             "bem_t_n", "bem_t_t"],
            rows)
        files.append(path)

    path = os.path.join(out_dir, "mesh_domain0.yaml")
    _atomic_write(path, yaml.safe_dump(mesh_to_dict(mesh), sort_keys=True))
    files.append(path)
    return files


def write_gc_sweep(out_dir: str, config: ScenarioConfig) -> list:
    os.makedirs(out_dir, exist_ok=True)
    params = AdhesiveParams(**config.adhesive)
    n = int(config.output.get("n_points", 181))
    rows = []
    for phi in np.linspace(0.0, np.pi / 2, n):
        c = gc_curve(params, float(phi))
        rows.append([c["phi"], c["jump_n"], c["jump_t"], c["psi_u"],
                     c["psi_g"], c["psi_sigma"], c["g_c"]])
    path = os.path.join(out_dir, "gc_curve.csv")
    _write_csv(
        path,
        "mixed-mode toughness at crack-growth onset; angles in radians, "
        "jumps in mm, toughness in N/mm",
        ["phi", "jump_n", "jump_t", "psi_u", "psi_g", "psi_sigma", "g_c"],
        rows)
    return [path]


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delabem",
        description="Boundary-element delamination simulator (plane strain)")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a scenario and write CSV outputs")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--builtin", choices=sorted(BUILTINS),
                     help="built-in scenario name")
    src.add_argument("--config", help="path to a YAML scenario configuration")
    run.add_argument("--out-dir", default="out", help="output directory")
    run.add_argument("--steps", type=int, help="override the number of time steps")
    run.add_argument("--mesh-level", type=int, choices=(54, 108, 216),
                     help="glued-zone element count for the application scenario")
    run.add_argument("--case", choices=("a", "b", "c", "d"),
                     help="dissipation variant for the nonmonotonic scenario")
    run.add_argument("--max-backtracks", type=int,
                     help="override the per-step backtrack budget")
    run.add_argument("--seed", type=int, default=0,
                     help="seed echoed into the report (randomized tests only)")
    run.add_argument("--reference-report",
                     help="report of another run to compare strain energies against")
    return parser


def _resolve_config(args) -> ScenarioConfig:
    if args.config:
        config = load_config(args.config)
    elif args.builtin == "application" and args.mesh_level:
        config = scenario_application(mesh_level=args.mesh_level)
    elif args.builtin and args.builtin.startswith("nonmonotonic") and args.case:
        config = scenario_nonmonotonic(case=args.case)
    else:
        config = BUILTINS[args.builtin]()
    if args.steps is not None:
        config.load["n_steps"] = int(args.steps)
    if args.max_backtracks is not None:
        config.solver["max_backtracks"] = int(args.max_backtracks)
    return config


def run_command(args) -> int:
    t_start = time.perf_counter()
    try:
        config = _resolve_config(args)
        if config.name == "gc-sweep":
            files = write_gc_sweep(args.out_dir, config)
            _write_report(args, config, files, "completed", {}, t_start)
            return 0
        problem = build_problem(config)
    except (ValueError, MeshError, OSError, KeyError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1

    status, record = "completed", None
    try:
        record = run_evolution(problem)
        status = record.termination
    except EvolutionAborted as exc:
        record = exc.record
        status = record.termination if record else "aborted"
        print(f"run aborted: {exc}", file=sys.stderr)
    files = []
    if record is not None and record.steps:
        files = write_run_outputs(args.out_dir, config, problem, record)
    diagnostics = dict(record.diagnostics) if record else {}
    diagnostics["termination"] = status
    if record and record.steps:
        diagnostics["accepted_steps"] = len(record.steps)
        diagnostics["final_time"] = float(record.steps[-1].time)
        diagnostics["strain_energy_final"] = float(record.steps[-1].energies.bulk)
        snaps = config.output.get("snapshot_times", [])
        if snaps:
            idx = int(np.argmin(np.abs(record.times - float(snaps[0]))))
            diagnostics["strain_energy_snapshot"] = \
                float(record.steps[idx].energies.bulk)
            diagnostics["snapshot_time"] = float(record.steps[idx].time)
    if args.reference_report:
        try:
            with open(args.reference_report) as fh:
                ref = yaml.safe_load(fh)
            ours = diagnostics.get("strain_energy_snapshot")
            theirs = ref.get("diagnostics", {}).get("strain_energy_snapshot")
            if ours is not None and theirs:
                diagnostics["strain_energy_percent_difference"] = \
                    100.0 * abs(ours - theirs) / abs(theirs)
        except OSError as exc:
            print(f"reference report unreadable: {exc}", file=sys.stderr)
    _write_report(args, config, files, status, diagnostics, t_start)
    return 0 if status in ("completed", "total-debond") else 2


def _write_report(args, config, files, status, diagnostics, t_start):
    os.makedirs(args.out_dir, exist_ok=True)
    config_path = os.path.join(args.out_dir, "config.yaml")
    save_config(config, config_path)
    report = {
        "version": __version__,
        "status": status,
        "seed": int(getattr(args, "seed", 0) or 0),
        "config": config.to_dict(),
        "outputs": sorted(os.path.basename(f) for f in files + [config_path]),
        "diagnostics": diagnostics,
        "wall_clock_seconds": round(time.perf_counter() - t_start, 3),
    }
    _atomic_write(os.path.join(args.out_dir, "report.yaml"),
                  yaml.safe_dump(report, sort_keys=True))


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.command == "run":
        return run_command(args)
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
