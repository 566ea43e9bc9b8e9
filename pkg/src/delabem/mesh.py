"""Boundary meshes, boundary-condition partitions and interface pairings.

A :class:`DomainMesh` is one closed counterclockwise polygonal loop of
straight elements with per-element part tags (Dirichlet / Neumann /
Contact).  Displacements are continuous piecewise linear over the loop
nodes; tractions are piecewise linear per element and may jump at corners
and at part junctions (duplicated traction slots are merged only where
the boundary is smooth and the tag does not change).

Units are fixed globally: mm for lengths, N for forces, MPa for stresses.
Line energies come out in N/mm; with unit thickness, 1 N = 1 J/m.

Meshes and pairings are immutable after construction and safe to share
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

DIRICHLET = "dirichlet"
NEUMANN = "neumann"
CONTACT = "contact"

PART_TAGS = (DIRICHLET, NEUMANN, CONTACT)

# two adjacent elements are "smooth" at their shared node when their
# tangents agree to this angular tolerance
_COLLINEAR_TOL = 1e-9


class MeshError(ValueError):
    """Invalid mesh geometry or boundary-condition layout."""


@dataclass
class DomainMesh:
    """Boundary discretization of one elastic subdomain.

    Parameters
    ----------
    domain_id : int
        Identifier used to address this domain in interface pairings.
    nodes : (n, 2) float array
        Node coordinates in mm.
    elements : (n, 2) int array
        Node index pairs; consecutive elements must chain into a single
        closed, counterclockwise, non-self-intersecting loop.
    part_tags : sequence of str
        Per-element tag, one of ``dirichlet``, ``neumann``, ``contact``.
    """

    domain_id: int
    nodes: np.ndarray
    elements: np.ndarray
    part_tags: np.ndarray

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.elements = np.asarray(self.elements, dtype=int)
        self.part_tags = np.asarray(self.part_tags, dtype=object)
        self._validate()

    # -- derived geometry ------------------------------------------------

    @cached_property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @cached_property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @cached_property
    def element_vectors(self) -> np.ndarray:
        return self.nodes[self.elements[:, 1]] - self.nodes[self.elements[:, 0]]

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.element_vectors, axis=1)

    @cached_property
    def tangents(self) -> np.ndarray:
        return self.element_vectors / self.lengths[:, None]

    @cached_property
    def normals(self) -> np.ndarray:
        """Outward unit normals (loop is counterclockwise)."""
        t = self.tangents
        return np.column_stack([t[:, 1], -t[:, 0]])

    @cached_property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[self.elements[:, 0]] + self.nodes[self.elements[:, 1]])

    @cached_property
    def total_length(self) -> float:
        return float(self.lengths.sum())

    # -- adjacency and parts ----------------------------------------------

    @cached_property
    def node_in_element(self) -> np.ndarray:
        """Element arriving at each node (node is its second endpoint)."""
        out = np.full(self.n_nodes, -1, dtype=int)
        out[self.elements[:, 1]] = np.arange(self.n_elements)
        return out

    @cached_property
    def node_out_element(self) -> np.ndarray:
        """Element leaving each node (node is its first endpoint)."""
        out = np.full(self.n_nodes, -1, dtype=int)
        out[self.elements[:, 0]] = np.arange(self.n_elements)
        return out

    @cached_property
    def node_parts(self) -> np.ndarray:
        """Per-node part: contact beats dirichlet beats neumann."""
        parts = np.empty(self.n_nodes, dtype=object)
        for n in range(self.n_nodes):
            tags = {self.part_tags[self.node_in_element[n]],
                    self.part_tags[self.node_out_element[n]]}
            if CONTACT in tags:
                parts[n] = CONTACT
            elif DIRICHLET in tags:
                parts[n] = DIRICHLET
            else:
                parts[n] = NEUMANN
        return parts

    def part_nodes(self, part: str) -> np.ndarray:
        """Node ids belonging to ``part``, ascending."""
        return np.flatnonzero(self.node_parts == part)

    @cached_property
    def contact_nodes(self) -> np.ndarray:
        return self.part_nodes(CONTACT)

    @cached_property
    def dirichlet_nodes(self) -> np.ndarray:
        return self.part_nodes(DIRICHLET)

    @cached_property
    def neumann_nodes(self) -> np.ndarray:
        return self.part_nodes(NEUMANN)

    def part_elements(self, part: str) -> np.ndarray:
        return np.flatnonzero(self.part_tags == part)

    @cached_property
    def contact_elements(self) -> np.ndarray:
        return self.part_elements(CONTACT)

    # -- traction slot layout ----------------------------------------------

    @cached_property
    def traction_dof_of_slot(self) -> np.ndarray:
        """Traction dof index for each (element, local end) slot.

        Slots sharing a node are merged into one dof only when both
        elements carry the same tag and are collinear there; corners and
        part junctions keep independent values (discontinuous piecewise
        linear tractions).
        """
        slot_dof = np.full((self.n_elements, 2), -1, dtype=int)
        next_dof = 0
        for e in range(self.n_elements):
            for loc in (0, 1):
                if slot_dof[e, loc] >= 0:
                    continue
                slot_dof[e, loc] = next_dof
                node = self.elements[e, loc]
                other = self.node_out_element[node] if loc == 1 else self.node_in_element[node]
                oloc = 0 if loc == 1 else 1
                if (self.part_tags[other] == self.part_tags[e]
                        and self._smooth_at(node)):
                    slot_dof[other, oloc] = next_dof
                next_dof += 1
        return slot_dof

    def _smooth_at(self, node: int) -> bool:
        t_in = self.tangents[self.node_in_element[node]]
        t_out = self.tangents[self.node_out_element[node]]
        cross = t_in[0] * t_out[1] - t_in[1] * t_out[0]
        return abs(cross) < _COLLINEAR_TOL and np.dot(t_in, t_out) > 0.0

    @cached_property
    def n_traction_dofs(self) -> int:
        return int(self.traction_dof_of_slot.max()) + 1

    @cached_property
    def traction_dof_part(self) -> np.ndarray:
        parts = np.empty(self.n_traction_dofs, dtype=object)
        for e in range(self.n_elements):
            for loc in (0, 1):
                parts[self.traction_dof_of_slot[e, loc]] = self.part_tags[e]
        return parts

    @cached_property
    def traction_dof_node(self) -> np.ndarray:
        out = np.full(self.n_traction_dofs, -1, dtype=int)
        for e in range(self.n_elements):
            for loc in (0, 1):
                out[self.traction_dof_of_slot[e, loc]] = self.elements[e, loc]
        return out

    def part_traction_dofs(self, part: str) -> np.ndarray:
        return np.flatnonzero(self.traction_dof_part == part)

    @cached_property
    def split_collocation_nodes(self) -> np.ndarray:
        """Nodes whose collocation rows must move off-node.

        At a corner interior to the Dirichlet or contact part both
        traction slots stay independent unknowns, so nodal collocation
        leaves the system underdetermined; such nodes are collocated at
        two points inside the adjacent elements instead.
        """
        out = []
        for node in range(self.n_nodes):
            e_in, e_out = self.node_in_element[node], self.node_out_element[node]
            tags = (self.part_tags[e_in], self.part_tags[e_out])
            if (tags[0] == tags[1] and tags[0] in (DIRICHLET, CONTACT)
                    and not self._smooth_at(node)):
                out.append(node)
        return np.asarray(out, dtype=int)

    # -- validation ---------------------------------------------------------

    def _validate(self):
        n = self.nodes.shape[0]
        if self.elements.shape != (n, 2):
            raise MeshError(
                f"closed loop needs as many elements as nodes, got {self.elements.shape[0]} "
                f"elements for {n} nodes")
        if self.part_tags.shape[0] != self.elements.shape[0]:
            raise MeshError("one part tag per element required")
        bad = [t for t in self.part_tags if t not in PART_TAGS]
        if bad:
            raise MeshError(f"unknown part tags: {sorted(set(map(str, bad)))}")
        if np.any(self.lengths <= 0.0):
            raise MeshError("zero-length element in mesh")

        # single closed chain covering every node exactly once
        succ = np.full(n, -1, dtype=int)
        for a, b in self.elements:
            if succ[a] != -1:
                raise MeshError(f"node {a} starts two elements")
            succ[a] = b
        seen, cur = 0, int(self.elements[0, 0])
        start = cur
        while True:
            cur = succ[cur]
            seen += 1
            if cur == start:
                break
            if seen > n:
                raise MeshError("element chain does not close")
        if seen != n:
            raise MeshError("elements do not form a single closed loop")

        # counterclockwise orientation (shoelace)
        x, y = self.nodes[:, 0], self.nodes[:, 1]
        a, b = self.elements[:, 0], self.elements[:, 1]
        area2 = np.sum(x[a] * y[b] - x[b] * y[a])
        if area2 <= 0:
            raise MeshError("boundary loop must be counterclockwise")

        self._check_no_self_intersection()

        # disjoint closures of the Dirichlet and Contact parts
        for node in range(n):
            tags = {self.part_tags[self.node_in_element[node]],
                    self.part_tags[self.node_out_element[node]]}
            if CONTACT in tags and DIRICHLET in tags:
                raise MeshError(
                    f"node {node} lies on the closure of both the contact and "
                    f"Dirichlet parts; their closures must be disjoint")

    def _check_no_self_intersection(self):
        p = self.nodes[self.elements[:, 0]]
        q = self.nodes[self.elements[:, 1]]
        n = self.n_elements

        def orient(a, b, c):
            return ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                    - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))

        i, j = np.triu_indices(n, k=1)
        adjacent = (self.elements[i, 1] == self.elements[j, 0]) | \
                   (self.elements[j, 1] == self.elements[i, 0])
        i, j = i[~adjacent], j[~adjacent]
        d1 = orient(p[i], q[i], p[j]) * orient(p[i], q[i], q[j])
        d2 = orient(p[j], q[j], p[i]) * orient(p[j], q[j], q[i])
        if np.any((d1 < 0) & (d2 < 0)):
            raise MeshError("boundary loop self-intersects")


# ---------------------------------------------------------------------------
# rectangle builder
# ---------------------------------------------------------------------------

_SIDES = ("bottom", "right", "top", "left")


def build_rectangle(length: float, height: float, counts, tags,
                    contact_span=None, span_counts=None,
                    domain_id: int = 0) -> DomainMesh:
    """Uniformly meshed axis-aligned rectangle with corner at the origin.

    Parameters
    ----------
    length, height : float
        Rectangle dimensions in mm.
    counts : mapping or sequence
        Elements per side, keyed/ordered ``bottom, right, top, left``.
    tags : mapping or sequence
        Part tag per side (``dirichlet`` or ``neumann``), same order.
    contact_span : tuple, optional
        ``(side, a, b)`` marking the portion of ``side`` between arc
        coordinates ``a < b`` (measured from the side's first corner) as
        contact.  The endpoints must coincide with element boundaries of
        the side's uniform mesh unless ``span_counts`` is given.
    span_counts : tuple of int, optional
        ``(before, on, after)`` element counts that replace the contact
        side's uniform mesh by three piecewise-uniform stretches (the
        outer counts may be zero when the span reaches a corner).
    """
    counts = _per_side(counts, "counts")
    tags = _per_side(tags, "tags")
    for s in _SIDES:
        if int(counts[s]) < 1:
            raise MeshError(f"side {s}: need at least one element")
        if tags[s] not in (DIRICHLET, NEUMANN):
            raise MeshError(f"side {s}: tag must be dirichlet or neumann, got {tags[s]!r}")

    corners = np.array([[0.0, 0.0], [length, 0.0], [length, height], [0.0, height]])
    side_len = {"bottom": length, "right": height, "top": length, "left": height}

    span_side = None
    if contact_span is not None:
        span_side, span_a, span_b = contact_span
        if span_side not in _SIDES:
            raise MeshError(f"unknown side {span_side!r}")
        if not (0.0 <= span_a < span_b <= side_len[span_side]):
            raise MeshError("contact_span must lie inside its side")

    nodes = []
    elem_tags = []
    for k, s in enumerate(_SIDES):
        c0, c1 = corners[k], corners[(k + 1) % 4]
        ll = side_len[s]
        if s == span_side and span_counts is not None:
            n_pre, n_on, n_post = (int(v) for v in span_counts)
            if n_on < 1 or (span_a > 0 and n_pre < 1) or (span_b < ll and n_post < 1):
                raise MeshError("span_counts must mesh every nonempty stretch")
            breaks = [(0.0, span_a, n_pre, tags[s]), (span_a, span_b, n_on, CONTACT),
                      (span_b, ll, n_post, tags[s])]
        elif s == span_side:
            m = int(counts[s])
            h = ll / m
            for x in (span_a, span_b):
                if abs(x / h - round(x / h)) > 1e-9:
                    raise MeshError(
                        f"contact_span endpoint {x} does not fall on an element "
                        f"boundary (element length {h})")
            breaks = [(0.0, span_a, round(span_a / h), tags[s]),
                      (span_a, span_b, round((span_b - span_a) / h), CONTACT),
                      (span_b, ll, round((ll - span_b) / h), tags[s])]
        else:
            breaks = [(0.0, ll, int(counts[s]), tags[s])]
        for x0, x1, m, tag in breaks:
            if m == 0:
                continue
            for a in range(m):
                frac = (x0 + (x1 - x0) * a / m) / ll
                nodes.append(c0 + (c1 - c0) * frac)
                elem_tags.append(tag)
    nodes = np.asarray(nodes)
    n = len(nodes)
    elements = np.column_stack([np.arange(n), (np.arange(n) + 1) % n])

    return DomainMesh(domain_id=domain_id, nodes=nodes, elements=elements,
                      part_tags=np.asarray(elem_tags, dtype=object))


def _per_side(spec, what):
    if isinstance(spec, dict):
        missing = [s for s in _SIDES if s not in spec]
        if missing:
            raise MeshError(f"{what} missing sides {missing}")
        return dict(spec)
    vals = list(spec)
    if len(vals) != 4:
        raise MeshError(f"{what} must give all four sides (bottom, right, top, left)")
    return dict(zip(_SIDES, vals))


# ---------------------------------------------------------------------------
# interface pairing
# ---------------------------------------------------------------------------

RIGID_OBSTACLE = "rigid-obstacle"
TWO_DOMAIN = "two-domain"


@dataclass
class InterfacePairing:
    """Node pairing of a contact/adhesive zone with local frames.

    ``entries`` holds ``(domain_id, node_id)`` for rigid-obstacle zones or
    ``((domain_i, node_i), (domain_j, node_j))`` coincident pairs for
    conforming two-domain interfaces.  ``normals[k]`` points from the
    obstacle (or domain j) into domain i, so a nonnegative normal jump
    means separation; ``tangents[k]`` is the normal rotated by -90 deg.

    ``elements`` lists entry-index pairs forming the interface elements
    that carry the damage variable; ``element_lengths`` their lengths.
    """

    kind: str
    entries: list
    normals: np.ndarray
    tangents: np.ndarray
    elements: np.ndarray = field(default=None)
    element_lengths: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.kind not in (RIGID_OBSTACLE, TWO_DOMAIN):
            raise MeshError(f"unknown pairing kind {self.kind!r}")
        self.normals = np.asarray(self.normals, dtype=float)
        self.tangents = np.asarray(self.tangents, dtype=float)
        if self.elements is not None:
            self.elements = np.asarray(self.elements, dtype=int)
            self.element_lengths = np.asarray(self.element_lengths, dtype=float)
        nrm = np.linalg.norm(self.normals, axis=1)
        tng = np.linalg.norm(self.tangents, axis=1)
        dots = np.einsum("ij,ij->i", self.normals, self.tangents)
        if not (np.allclose(nrm, 1.0, atol=1e-12) and np.allclose(tng, 1.0, atol=1e-12)
                and np.allclose(dots, 0.0, atol=1e-12)):
            raise MeshError("interface frames must be orthonormal")

    @property
    def n_entries(self) -> int:
        return len(self.entries)

    @cached_property
    def node_weights(self) -> np.ndarray:
        """Lumped length per entry (half-sum of adjacent element lengths)."""
        w = np.zeros(self.n_entries)
        for (a, b), L in zip(self.elements, self.element_lengths):
            w[a] += 0.5 * L
            w[b] += 0.5 * L
        return w


def pair_rigid_obstacle(mesh: DomainMesh) -> InterfacePairing:
    """Pair every contact node of ``mesh`` against a fixed rigid obstacle."""
    cnodes = mesh.contact_nodes
    if cnodes.size == 0:
        raise MeshError(f"domain {mesh.domain_id} has no contact part")
    pos = {int(n): k for k, n in enumerate(cnodes)}
    normals = np.zeros((cnodes.size, 2))
    for k, node in enumerate(cnodes):
        acc = np.zeros(2)
        for e in (mesh.node_in_element[node], mesh.node_out_element[node]):
            if mesh.part_tags[e] == CONTACT:
                acc -= mesh.normals[e]          # obstacle -> body direction
        normals[k] = acc / np.linalg.norm(acc)
    tangents = np.column_stack([normals[:, 1], -normals[:, 0]])
    elems = [(pos[int(a)], pos[int(b)]) for a, b in mesh.elements[mesh.contact_elements]]
    return InterfacePairing(
        kind=RIGID_OBSTACLE,
        entries=[(mesh.domain_id, int(n)) for n in cnodes],
        normals=normals, tangents=tangents,
        elements=np.asarray(elems, dtype=int),
        element_lengths=mesh.lengths[mesh.contact_elements])


def pair_two_domain(mesh_i: DomainMesh, mesh_j: DomainMesh,
                    tol: float = 1e-9) -> InterfacePairing:
    """Pair coincident contact nodes of two conforming meshes.

    Every contact node of ``mesh_i`` must coincide with a contact node of
    ``mesh_j`` and vice versa.  Normals point from domain j into domain
    i (the outward normal of domain j along the interface).
    """
    ci, cj = mesh_i.contact_nodes, mesh_j.contact_nodes
    if ci.size != cj.size:
        raise MeshError("two-domain pairing needs conforming contact meshes")
    coords_j = mesh_j.nodes[cj]
    entries, normals = [], []
    for node in ci:
        d = np.linalg.norm(coords_j - mesh_i.nodes[node], axis=1)
        k = int(np.argmin(d))
        if d[k] > tol:
            raise MeshError(
                f"contact node {int(node)} of domain {mesh_i.domain_id} has no "
                f"coincident partner in domain {mesh_j.domain_id}")
        entries.append(((mesh_i.domain_id, int(node)), (mesh_j.domain_id, int(cj[k]))))
        acc = np.zeros(2)
        for e in (mesh_j.node_in_element[cj[k]], mesh_j.node_out_element[cj[k]]):
            if mesh_j.part_tags[e] == CONTACT:
                acc += mesh_j.normals[e]
        normals.append(acc / np.linalg.norm(acc))
    normals = np.asarray(normals)
    tangents = np.column_stack([normals[:, 1], -normals[:, 0]])
    pos = {int(n): k for k, n in enumerate(ci)}
    elems = [(pos[int(a)], pos[int(b)]) for a, b in mesh_i.elements[mesh_i.contact_elements]]
    return InterfacePairing(
        kind=TWO_DOMAIN, entries=entries, normals=normals, tangents=tangents,
        elements=np.asarray(elems, dtype=int),
        element_lengths=mesh_i.lengths[mesh_i.contact_elements])


def stacked_contact_layout(meshes) -> dict:
    """Position of each (domain_id, node_id) in the stacked contact vector.

    The stacked vector concatenates the contact-node displacement vectors
    of all meshes in ascending ``domain_id`` order, two dofs per node.
    """
    layout = {}
    offset = 0
    for mesh in sorted(meshes, key=lambda m: m.domain_id):
        for k, node in enumerate(mesh.contact_nodes):
            layout[(mesh.domain_id, int(node))] = offset + k
        offset += mesh.contact_nodes.size
    return layout


def jump_operator(pairing: InterfacePairing, meshes) -> sp.csr_matrix:
    """Sparse map from stacked contact displacements to per-entry jumps.

    Row ``2k`` yields the normal jump of entry ``k`` and row ``2k+1`` the
    tangential jump.  For rigid-obstacle entries the jump is the single
    domain's displacement in the entry frame; for two-domain entries it is
    the difference of the two traces, ``u_i - u_j``, in the entry frame.
    """
    layout = stacked_contact_layout(meshes)
    n_cols = 2 * len(layout)
    rows, cols, vals = [], [], []

    def add(entry_row, key, sign):
        if key not in layout:
            raise MeshError(f"interface entry references unknown contact node {key}")
        p = layout[key]
        nu, tau = pairing.normals[entry_row], pairing.tangents[entry_row]
        for c in (0, 1):
            rows.append(2 * entry_row)
            cols.append(2 * p + c)
            vals.append(sign * nu[c])
            rows.append(2 * entry_row + 1)
            cols.append(2 * p + c)
            vals.append(sign * tau[c])

    for k, entry in enumerate(pairing.entries):
        if pairing.kind == RIGID_OBSTACLE:
            add(k, entry, +1.0)
        else:
            key_i, key_j = entry
            add(k, key_i, +1.0)
            add(k, key_j, -1.0)

    return sp.csr_matrix((vals, (rows, cols)),
                         shape=(2 * pairing.n_entries, n_cols))
