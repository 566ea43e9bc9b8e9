"""Mesh construction, boundary partitions and interface pairings."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delabem.mesh import (CONTACT, DIRICHLET, NEUMANN, DomainMesh, MeshError,
                          build_rectangle, jump_operator, pair_rigid_obstacle,
                          pair_two_domain, stacked_contact_layout)


def test_pull_push_contact_element_length():
    mesh = build_rectangle(250.0, 12.5, (30, 2, 30, 2),
                           (NEUMANN, DIRICHLET, NEUMANN, NEUMANN),
                           contact_span=("bottom", 0.0, 225.0))
    contact = mesh.contact_elements
    assert contact.size == 27
    assert mesh.lengths[contact] == pytest.approx(225.0 / 27)
    assert mesh.lengths[contact][0] == pytest.approx(8.3333333, rel=1e-6)


def test_minimal_square_loop():
    mesh = build_rectangle(1.0, 1.0, (1, 1, 1, 1), (NEUMANN,) * 4)
    assert mesh.n_elements == 4
    assert mesh.n_nodes == 4


def test_contact_span_from_uniform_sixty_element_side():
    mesh = build_rectangle(250.0, 12.5, (60, 3, 60, 3),
                           (NEUMANN, NEUMANN, NEUMANN, DIRICHLET),
                           contact_span=("bottom", 25.0, 225.0))
    contact = mesh.contact_elements
    assert contact.size == 48
    assert np.allclose(mesh.lengths[contact], 250.0 / 60)
    assert mesh.lengths[contact][0] == pytest.approx(4.1667, abs=2e-4)


def test_span_counts_mesh_piecewise():
    mesh = build_rectangle(250.0, 12.5, (60, 3, 60, 3),
                           (NEUMANN, NEUMANN, NEUMANN, DIRICHLET),
                           contact_span=("bottom", 25.0, 225.0),
                           span_counts=(2, 10, 2))
    assert mesh.contact_elements.size == 10
    assert np.allclose(mesh.lengths[mesh.contact_elements], 20.0)


def test_loop_closure_sums_to_zero():
    for counts in ((3, 4, 5, 2), (8, 8, 8, 8), (27, 2, 30, 3)):
        mesh = build_rectangle(7.5, 2.25, counts, (NEUMANN,) * 4)
        assert np.allclose(mesh.element_vectors.sum(axis=0), 0.0, atol=1e-12)


def test_misaligned_contact_span_rejected():
    with pytest.raises(MeshError, match="element boundary"):
        build_rectangle(250.0, 12.5, (30, 2, 30, 2), (NEUMANN,) * 4,
                        contact_span=("bottom", 0.0, 220.0))


def test_contact_touching_dirichlet_rejected():
    # the glued span reaches the corner shared with the Dirichlet side
    with pytest.raises(MeshError, match="disjoint"):
        build_rectangle(250.0, 12.5, (30, 2, 30, 2),
                        (NEUMANN, DIRICHLET, NEUMANN, NEUMANN),
                        contact_span=("bottom", 0.0, 250.0))


def test_clockwise_loop_rejected():
    nodes = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]])
    elements = np.array([[0, 1], [1, 2], [2, 3], [3, 0]])
    with pytest.raises(MeshError, match="counterclockwise"):
        DomainMesh(0, nodes, elements, np.array([NEUMANN] * 4, dtype=object))


def test_self_intersecting_loop_rejected():
    nodes = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    elements = np.array([[0, 1], [1, 2], [2, 3], [3, 0]])
    with pytest.raises(MeshError):
        DomainMesh(0, nodes, elements, np.array([NEUMANN] * 4, dtype=object))


def test_traction_dofs_merge_only_at_smooth_same_part_nodes():
    mesh = build_rectangle(250.0, 12.5, (30, 2, 30, 2),
                           (NEUMANN, DIRICHLET, NEUMANN, NEUMANN),
                           contact_span=("bottom", 0.0, 225.0))
    # smooth interior contact nodes merged: 27 elements -> 28 dofs
    assert mesh.part_traction_dofs(CONTACT).size == 28
    # four corners plus the contact/neumann junction keep duplicates
    slots = 2 * mesh.n_elements
    merged = slots - mesh.n_traction_dofs
    smooth_nodes = sum(
        1 for node in range(mesh.n_nodes)
        if mesh._smooth_at(node)
        and mesh.part_tags[mesh.node_in_element[node]]
        == mesh.part_tags[mesh.node_out_element[node]])
    assert merged == smooth_nodes


def test_split_collocation_nodes():
    all_d = build_rectangle(1.0, 1.0, (4, 4, 4, 4), (DIRICHLET,) * 4)
    assert all_d.split_collocation_nodes.size == 4      # the four corners
    mixed = build_rectangle(250.0, 12.5, (30, 2, 30, 2),
                            (NEUMANN, DIRICHLET, NEUMANN, NEUMANN),
                            contact_span=("bottom", 0.0, 225.0))
    assert mixed.split_collocation_nodes.size == 0


# ---------------------------------------------------------------------------
# jump operator
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def bonded_pair():
    """Two unit squares glued along the shared horizontal edge."""
    lower = build_rectangle(1.0, 1.0, (2, 2, 2, 2),
                            (DIRICHLET, NEUMANN, NEUMANN, NEUMANN), domain_id=0)
    lower.part_tags[lower.part_elements(NEUMANN)[2:4]] = CONTACT
    upper = build_rectangle(1.0, 1.0, (2, 2, 2, 2),
                            (NEUMANN, NEUMANN, DIRICHLET, NEUMANN), domain_id=1)
    upper.nodes[:, 1] += 1.0
    lower2 = DomainMesh(0, lower.nodes, lower.elements, lower.part_tags)
    upper.part_tags[0:2] = CONTACT
    upper2 = DomainMesh(1, upper.nodes, upper.elements, upper.part_tags)
    return lower2, upper2


def test_rigid_obstacle_jump_values():
    mesh = build_rectangle(250.0, 12.5, (30, 2, 30, 2),
                           (NEUMANN, DIRICHLET, NEUMANN, NEUMANN),
                           contact_span=("bottom", 0.0, 225.0))
    pairing = pair_rigid_obstacle(mesh)
    # bottom contact: normal points up into the body, tangent along +x
    assert np.allclose(pairing.normals, [0.0, 1.0])
    assert np.allclose(pairing.tangents, [1.0, 0.0])
    J = jump_operator(pairing, [mesh])
    u = np.zeros(2 * pairing.n_entries)
    u[1::2] = 1.0                                  # uniform (0, 1) displacement
    j = J @ u
    assert np.allclose(j[0::2], 1.0)
    assert np.allclose(j[1::2], 0.0)


def test_jump_hand_dot_products():
    # frame nu=(0,1), tau=(-1,0): u=(1,1) gives jumps (1, -1)
    mesh = build_rectangle(250.0, 12.5, (30, 2, 30, 2),
                           (NEUMANN, DIRICHLET, NEUMANN, NEUMANN),
                           contact_span=("bottom", 0.0, 225.0))
    pairing = pair_rigid_obstacle(mesh)
    pairing.tangents = np.tile([-1.0, 0.0], (pairing.n_entries, 1))
    J = jump_operator(pairing, [mesh])
    u = np.ones(2 * pairing.n_entries)
    j = J @ u
    assert np.allclose(j[0::2], 1.0)
    assert np.allclose(j[1::2], -1.0)


def test_two_domain_equal_traces_have_zero_jump(bonded_pair):
    lower, upper = bonded_pair
    pairing = pair_two_domain(upper, lower)
    J = jump_operator(pairing, [lower, upper])
    layout = stacked_contact_layout([lower, upper])
    u = np.zeros(2 * len(layout))
    for (dom, node), pos in layout.items():
        mesh = lower if dom == 0 else upper
        u[2 * pos:2 * pos + 2] = [0.3 * mesh.nodes[node, 0], -0.1]
    assert np.allclose(J @ u, 0.0, atol=1e-14)


def test_two_domain_normal_orientation(bonded_pair):
    lower, upper = bonded_pair
    pairing = pair_two_domain(upper, lower)    # i = upper, j = lower
    assert np.allclose(pairing.normals, [0.0, 1.0])
    layout = stacked_contact_layout([lower, upper])
    u = np.zeros(2 * len(layout))
    for (dom, node), pos in layout.items():
        if dom == 1:
            u[2 * pos + 1] = 0.5               # upper body lifts: opening jump
    J = jump_operator(pairing, [lower, upper])
    assert np.all((J @ u)[0::2] > 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_jump_operator_linearity(seed, alpha, beta):
    mesh = build_rectangle(10.0, 2.0, (5, 1, 5, 1),
                           (NEUMANN, DIRICHLET, NEUMANN, NEUMANN),
                           contact_span=("bottom", 0.0, 8.0))
    pairing = pair_rigid_obstacle(mesh)
    J = jump_operator(pairing, [mesh])
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(J.shape[1])
    v = rng.standard_normal(J.shape[1])
    assert np.allclose(J @ (alpha * u + beta * v),
                       alpha * (J @ u) + beta * (J @ v), atol=1e-10)


def test_unmatched_node_error(bonded_pair):
    lower, upper = bonded_pair
    pairing = pair_rigid_obstacle(lower)
    pairing.entries[0] = (7, 99)
    with pytest.raises(MeshError, match="99"):
        jump_operator(pairing, [lower])


def test_nonconforming_two_domain_rejected(bonded_pair):
    lower, upper = bonded_pair
    shifted = DomainMesh(1, upper.nodes + [0.02, 0.0], upper.elements,
                         upper.part_tags)
    with pytest.raises(MeshError, match="coincident"):
        pair_two_domain(shifted, lower)
