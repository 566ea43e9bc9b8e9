"""Plane-strain elastostatic kernels and boundary-element integrals.

The batch H/G assembly has two interchangeable backends: a compiled
Cython core and a vectorized numpy fallback.  The compiled one is picked
at import time when available; set ``DELABEM_BACKEND=python`` to force
the fallback (``benchmarks/bench_assembly.py`` compares the two).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _reference
from ._reference import element_integrals as _element_integrals
from ._reference import free_term as _free_term
from ._reference import gauss_rule, kelvin_t, kelvin_u

try:
    from . import _speedups
except ImportError:            # extension not built: numpy fallback
    _speedups = None

BACKEND = "compiled" if (_speedups is not None
                         and os.environ.get("DELABEM_BACKEND") != "python") else "python"

__all__ = [
    "Material", "BACKEND", "kelvin_U", "kelvin_T", "free_term",
    "element_integrals", "assemble_hg", "gauss_rule",
]


@dataclass(frozen=True)
class Material:
    """Isotropic linear-elastic material (plane strain).

    ``young_modulus`` in MPa, ``poisson_ratio`` dimensionless in [0, 0.5).
    """

    young_modulus: float
    poisson_ratio: float

    def __post_init__(self):
        if not self.young_modulus > 0.0:
            raise ValueError(f"Young modulus must be positive, got {self.young_modulus}")
        if not 0.0 <= self.poisson_ratio < 0.5:
            raise ValueError(f"Poisson ratio must lie in [0, 0.5), got {self.poisson_ratio}")

    @property
    def shear_modulus(self) -> float:
        return self.young_modulus / (2.0 * (1.0 + self.poisson_ratio))


def kelvin_U(material: Material, field_point, source_point) -> np.ndarray:
    """2x2 Kelvin displacement kernel (mm/N per unit thickness)."""
    return kelvin_u(material.shear_modulus, material.poisson_ratio,
                    field_point, source_point)


def kelvin_T(material: Material, field_point, source_point, normal) -> np.ndarray:
    """2x2 Kelvin traction kernel (1/mm); ``normal`` is the unit outward
    normal at the field point."""
    return kelvin_t(material.poisson_ratio, field_point, source_point, normal)


def free_term(material: Material, tangent_in, tangent_out) -> np.ndarray:
    """Free-term matrix c at a node between elements with the given unit
    tangents (loop order); identity/2 at smooth points."""
    return _free_term(tangent_in, tangent_out, material.poisson_ratio)


def element_integrals(material: Material, p0, p1, collocation_point, order: int = 12):
    """Per-local-node 2x2 blocks of int N U dS and int N T dS over the
    straight element ``p0 -> p1``; see the reference backend for the
    quadrature grading and singular-case conventions."""
    return _element_integrals(material.shear_modulus, material.poisson_ratio,
                              p0, p1, collocation_point, order)


def assemble_hg(material: Material, nodes, elements, lengths, tangents,
                normals, order: int = 12, backend: str | None = None):
    """Raw collocation matrices for one closed loop.

    ``H`` is (2n, 2n) with zero diagonal blocks (closed by rigid-body row
    sums downstream); ``G`` is (2n, 4n) with one column pair per
    (element, local node) traction slot.
    """
    which = backend or BACKEND
    if which == "compiled":
        if _speedups is None:
            raise RuntimeError("compiled backend requested but not built")
        xq, wq = gauss_rule(order)
        x16, w16 = gauss_rule(16)
        return _speedups.assemble_hg(
            np.ascontiguousarray(nodes, dtype=float),
            np.ascontiguousarray(elements, dtype=np.int_),
            np.ascontiguousarray(lengths, dtype=float),
            np.ascontiguousarray(tangents, dtype=float),
            np.ascontiguousarray(normals, dtype=float),
            material.shear_modulus, material.poisson_ratio,
            xq, wq, x16, w16)
    if which == "python":
        return _reference.assemble_hg(nodes, elements, lengths, tangents, normals,
                                      material.shear_modulus, material.poisson_ratio,
                                      order)
    raise ValueError(f"unknown backend {which!r}")
