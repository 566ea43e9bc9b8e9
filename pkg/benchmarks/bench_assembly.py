"""Benchmark: compiled vs numpy backend for the H/G assembly core.

Usage: python benchmarks/bench_assembly.py [--repeats N]
"""

import argparse
import time

import numpy as np

from delabem import kernels
from delabem.kernels import Material
from delabem.mesh import DIRICHLET, NEUMANN, build_rectangle


def build(level):
    nx, nv = level
    return build_rectangle(250.0, 12.5, (nx, nv, nx, nv),
                           (NEUMANN, DIRICHLET, NEUMANN, NEUMANN),
                           contact_span=("bottom", 0.0, 225.0))


def time_backend(mesh, material, backend, repeats):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = kernels.assemble_hg(material, mesh.nodes, mesh.elements,
                                  mesh.lengths, mesh.tangents, mesh.normals,
                                  backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    material = Material(70000.0, 0.35)
    backends = ["python"]
    if kernels._speedups is not None:
        backends.insert(0, "compiled")
    else:
        print("compiled backend not built; timing the numpy fallback only")

    print(f"{'elements':>9} {'dofs':>6}", *(f"{b:>12}" for b in backends),
          f"{'speedup':>9}" if len(backends) == 2 else "")
    for level in ((30, 2), (60, 3), (120, 6), (240, 12)):
        mesh = build(level)
        times = {}
        results = {}
        for b in backends:
            times[b], results[b] = time_backend(mesh, material, b, args.repeats)
        if len(backends) == 2:
            h1, h2 = results["compiled"][0], results["python"][0]
            rel = np.max(np.abs(h1 - h2)) / np.max(np.abs(h1))
            assert rel < 1e-12, f"backend mismatch {rel:.2e}"
            extra = f"{times['python'] / times['compiled']:>8.1f}x"
        else:
            extra = ""
        print(f"{mesh.n_elements:>9} {2 * mesh.n_nodes:>6}",
              *(f"{times[b]:>11.4f}s" for b in backends), extra)


if __name__ == "__main__":
    main()
