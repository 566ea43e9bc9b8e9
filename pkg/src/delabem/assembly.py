"""Per-domain collocation systems, mixed solves and boundary condensation.

``assemble`` builds the dense collocation pair ``H u = G p`` for one
domain (diagonal H blocks closed by the rigid-body technique).
``condense`` eliminates it into the time-independent block operator that
maps known boundary data ``(u_C, u_D, p_N)`` to the unknowns
``(p_C, p_D, u_N)``, together with the boundary mass matrices used by
every energy form.  Assembly and condensation run once per domain per
run; only the load data varies in time.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from . import kernels
from .kernels import Material
from .mesh import CONTACT, DIRICHLET, NEUMANN, DomainMesh, MeshError


class SolverError(RuntimeError):
    """Linear solve failed or produced an untrustworthy solution."""


def _dofs(nodes_or_dofs: np.ndarray) -> np.ndarray:
    """Expand entity indices to interleaved (x, y) dof indices."""
    idx = np.asarray(nodes_or_dofs, dtype=int)
    out = np.empty(2 * idx.size, dtype=int)
    out[0::2] = 2 * idx
    out[1::2] = 2 * idx + 1
    return out


@dataclass
class CollocationSystem:
    """Dense collocation system H u = G p for one domain.

    ``H`` is (2n, 2n) over nodal displacements; ``G`` is (2n, 2m) over the
    merged traction dofs of the mesh.
    """

    mesh: DomainMesh
    material: Material
    H: np.ndarray
    G: np.ndarray

    @cached_property
    def _mixed(self):
        """LU factorization of the mixed matrix with unknown columns
        ``[u at Neumann nodes | p on Dirichlet | p on contact]``."""
        mesh = self.mesh
        un = _dofs(mesh.neumann_nodes)
        pd = _dofs(mesh.part_traction_dofs(DIRICHLET))
        pc = _dofs(mesh.part_traction_dofs(CONTACT))
        A = np.hstack([self.H[:, un], -self.G[:, pd], -self.G[:, pc]])
        if A.shape[0] != A.shape[1]:
            raise MeshError(
                f"mixed system is not square ({A.shape[0]} equations, "
                f"{A.shape[1]} unknowns); a corner interior to the Dirichlet or "
                f"contact part leaves duplicated tractions underdetermined")
        try:
            lu = sla.lu_factor(A)
        except sla.LinAlgError as exc:
            raise SolverError(f"mixed collocation matrix is singular: {exc}") from exc
        splits = np.cumsum([un.size, pd.size])
        return lu, (un, pd, pc), splits

    def solve_mixed(self, dirichlet_values, neumann_values, contact_displacements,
                    residual_tol: float = 1e-10):
        """Solve the mixed BVP and return the full boundary state.

        Data is ordered by the mesh's part listings: ``dirichlet_values``
        per Dirichlet node, ``neumann_values`` per Neumann traction dof,
        ``contact_displacements`` per contact node, each an (k, 2) array.
        Returns ``(u, p)`` with shapes (n, 2) and (m, 2).
        """
        mesh = self.mesh
        u = np.zeros((mesh.n_nodes, 2))
        p = np.zeros((mesh.n_traction_dofs, 2))
        u[mesh.dirichlet_nodes] = np.asarray(dirichlet_values, float).reshape(-1, 2)
        u[mesh.contact_nodes] = np.asarray(contact_displacements, float).reshape(-1, 2)
        p[mesh.part_traction_dofs(NEUMANN)] = np.asarray(neumann_values, float).reshape(-1, 2)

        lu, (un, pd, pc), splits = self._mixed
        rhs = self.G @ p.ravel() - self.H @ u.ravel()
        x = sla.lu_solve(lu, rhs)
        if not np.all(np.isfinite(x)):
            raise SolverError("mixed solve produced non-finite values "
                              "(unconstrained rigid modes?)")
        xu, xpd, xpc = np.split(x, splits)
        u.ravel()[un] = xu
        p.ravel()[pd] = xpd
        p.ravel()[pc] = xpc

        res = self.H @ u.ravel() - self.G @ p.ravel()
        scale = max(np.linalg.norm(self.H @ u.ravel()), np.linalg.norm(self.G @ p.ravel()), 1e-30)
        if np.linalg.norm(res) > residual_tol * scale:
            raise SolverError(
                f"collocation residual {np.linalg.norm(res) / scale:.2e} exceeds "
                f"{residual_tol:.1e}; system is ill-conditioned or singular")
        return u, p


# off-node collocation distance from a split corner, as a fraction of the
# adjacent element length
_SPLIT_OFFSET = 0.25


def assemble(mesh: DomainMesh, material: Material, order: int = 12,
             backend: str | None = None) -> CollocationSystem:
    """Assemble the collocation system for one domain.

    Nodal rows are closed by the rigid-body technique (each diagonal 2x2
    block is minus the sum of the off-diagonal blocks of its row); G
    columns are accumulated into the mesh's merged traction dofs.  Rows
    of corner nodes interior to the Dirichlet/contact part are replaced
    by two off-node collocation points (one inside each adjacent element)
    to match their duplicated traction unknowns.
    """
    H_raw, G_raw = kernels.assemble_hg(material, mesh.nodes, mesh.elements,
                                       mesh.lengths, mesh.tangents, mesh.normals,
                                       order=order, backend=backend)
    n = mesh.n_nodes
    diag = -H_raw.reshape(2 * n, n, 2).sum(axis=1).reshape(n, 2, 2)
    for i in range(n):
        H_raw[2 * i:2 * i + 2, 2 * i:2 * i + 2] = diag[i]

    G = np.zeros((2 * n, 2 * mesh.n_traction_dofs))
    for e in range(mesh.n_elements):
        for loc in (0, 1):
            d = mesh.traction_dof_of_slot[e, loc]
            G[:, 2 * d:2 * d + 2] += G_raw[:, 4 * e + 2 * loc:4 * e + 2 * loc + 2]

    split = mesh.split_collocation_nodes
    if split.size:
        keep = _dofs(np.setdiff1d(np.arange(n), split))
        extra_h, extra_g = [], []
        for node in split:
            for e, s_frac in ((mesh.node_out_element[node], _SPLIT_OFFSET),
                              (mesh.node_in_element[node], 1.0 - _SPLIT_OFFSET)):
                h_r, g_r = _offset_row(mesh, material, e, s_frac, order)
                extra_h.append(h_r)
                extra_g.append(g_r)
        H_raw = np.vstack([H_raw[keep]] + extra_h)
        G = np.vstack([G[keep]] + extra_g)
    return CollocationSystem(mesh=mesh, material=material, H=H_raw, G=G)


def _offset_row(mesh: DomainMesh, material: Material, elem: int, s_frac: float,
                order: int):
    """Two collocation rows at the point ``s_frac`` along element ``elem``.

    Built from explicit element integrals plus the smooth free term
    (identity/2 weighted by the interpolation at the collocation point);
    no rigid-body closure is involved.
    """
    h_row = np.zeros((2, 2 * mesh.n_nodes))
    g_row = np.zeros((2, 2 * mesh.n_traction_dofs))
    a, b = mesh.elements[elem]
    point = mesh.nodes[a] + s_frac * (mesh.nodes[b] - mesh.nodes[a])
    for e in range(mesh.n_elements):
        ea, eb = mesh.elements[e]
        ub, tb, _ = kernels.element_integrals(
            material, mesh.nodes[ea], mesh.nodes[eb], point, order)
        for loc, gnode in enumerate((ea, eb)):
            h_row[:, 2 * gnode:2 * gnode + 2] += tb[loc].T
            d = mesh.traction_dof_of_slot[e, loc]
            g_row[:, 2 * d:2 * d + 2] += ub[loc]
    h_row[:, 2 * a:2 * a + 2] += 0.5 * (1.0 - s_frac) * np.eye(2)
    h_row[:, 2 * b:2 * b + 2] += 0.5 * s_frac * np.eye(2)
    return h_row, g_row


# ---------------------------------------------------------------------------
# boundary mass matrices
# ---------------------------------------------------------------------------

def part_mass_matrix(mesh: DomainMesh, part: str) -> np.ndarray:
    """Mass matrix of int_{Gamma_part} a . b dS for nodal-linear ``a`` and
    element-linear ``b``, with rows over all mesh nodes and columns over
    the part's traction dofs."""
    cols = mesh.part_traction_dofs(part)
    col_of = {int(d): k for k, d in enumerate(cols)}
    W = np.zeros((2 * mesh.n_nodes, 2 * cols.size))
    for e in mesh.part_elements(part):
        L = mesh.lengths[e]
        nodes = mesh.elements[e]
        dofs = [col_of[int(mesh.traction_dof_of_slot[e, loc])] for loc in (0, 1)]
        m_el = L * np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])
        for a in range(2):
            for b in range(2):
                for c in range(2):
                    W[2 * nodes[a] + c, 2 * dofs[b] + c] += m_el[a, b]
    return W


# ---------------------------------------------------------------------------
# condensed boundary operator
# ---------------------------------------------------------------------------

@dataclass
class CondensedOperator:
    """Time-independent boundary block map (u_C, u_D, p_N) -> (p_C, p_D, u_N)
    for one domain, with the boundary mass matrices of the energy forms.

    Vector layouts follow the mesh orderings: contact/Dirichlet values per
    part node ascending, Neumann-side displacements per pure-Neumann node,
    tractions per part traction dof ascending.  All blocks are dense.
    """

    mesh: DomainMesh
    material: Material
    m_cc: np.ndarray
    m_cd: np.ndarray
    m_cn: np.ndarray
    m_dc: np.ndarray
    m_dd: np.ndarray
    m_dn: np.ndarray
    m_nc: np.ndarray
    m_nd: np.ndarray
    m_nn: np.ndarray
    w_c: np.ndarray          # contact-node rows x contact traction dofs
    w_d: np.ndarray
    w_n: np.ndarray          # pure-Neumann-node rows x Neumann traction dofs
    w_n_full: np.ndarray     # all-node rows x Neumann traction dofs

    @cached_property
    def contact_stiffness(self) -> np.ndarray:
        """Symmetrized contact stiffness K_C = sym(W_C M_CC)."""
        A = self.w_c @ self.m_cc
        return 0.5 * (A + A.T)

    @cached_property
    def asymmetry_norm(self) -> float:
        """Relative asymmetry of W_C M_CC, a discretization diagnostic."""
        A = self.w_c @ self.m_cc
        return float(np.linalg.norm(A - A.T) / np.linalg.norm(A))

    def contact_load_vector(self, u_d, p_n) -> np.ndarray:
        """f_C(t) = W_C (M_CD u_D(t) + M_CN p_N(t))."""
        return self.w_c @ (self.m_cd @ np.ravel(u_d) + self.m_cn @ np.ravel(p_n))

    def load_constant(self, u_d, p_n) -> float:
        """The u_C-independent part of the condensed potential energy."""
        ud = np.ravel(u_d)
        pn = np.ravel(p_n)
        val = 0.5 * ud @ (self.w_d @ (self.m_dd @ ud))
        val += 0.5 * ud @ (self.w_d @ (self.m_dn @ pn))
        val -= 0.5 * (self.m_nd @ ud) @ (self.w_n @ pn)
        val -= 0.5 * (self.m_nn @ pn) @ (self.w_n @ pn)
        return float(val)

    def apply(self, u_c, u_d, p_n):
        """Full boundary state (u, p) from known data, via the blocks."""
        mesh = self.mesh
        uc = np.ravel(u_c)
        ud = np.ravel(u_d)
        pn = np.ravel(p_n)
        u = np.zeros((mesh.n_nodes, 2))
        p = np.zeros((mesh.n_traction_dofs, 2))
        u[mesh.contact_nodes] = uc.reshape(-1, 2)
        u[mesh.dirichlet_nodes] = ud.reshape(-1, 2)
        u.ravel()[_dofs(mesh.neumann_nodes)] = self.m_nc @ uc + self.m_nd @ ud + self.m_nn @ pn
        p[mesh.part_traction_dofs(NEUMANN)] = pn.reshape(-1, 2)
        p.ravel()[_dofs(mesh.part_traction_dofs(CONTACT))] = \
            self.m_cc @ uc + self.m_cd @ ud + self.m_cn @ pn
        p.ravel()[_dofs(mesh.part_traction_dofs(DIRICHLET))] = \
            self.m_dc @ uc + self.m_dd @ ud + self.m_dn @ pn
        return u, p


def condense(system: CollocationSystem) -> CondensedOperator:
    """Eliminate the collocation system into the condensed block operator.

    Equivalent to solving the unit-data sub-problems: one multi-rhs solve
    with the mixed factorization yields every block column.
    """
    mesh = system.mesh
    if mesh.contact_nodes.size == 0:
        raise MeshError(f"domain {mesh.domain_id}: condensation needs a contact part")
    if mesh.dirichlet_nodes.size == 0:
        warnings.warn(
            f"domain {mesh.domain_id}: empty Dirichlet part leaves rigid modes "
            f"unconstrained; the contact stiffness will be rank deficient",
            stacklevel=2)

    lu, (un, pd, pc), splits = system._mixed
    uc_cols = _dofs(mesh.contact_nodes)
    ud_cols = _dofs(mesh.dirichlet_nodes)
    pn_cols = _dofs(mesh.part_traction_dofs(NEUMANN))

    rhs = np.hstack([-system.H[:, uc_cols], -system.H[:, ud_cols],
                     system.G[:, pn_cols]])
    X = sla.lu_solve(lu, rhs)
    if not np.all(np.isfinite(X)):
        raise SolverError("condensation solve produced non-finite values")
    XU, XPD, XPC = np.split(X, splits)
    c0, c1 = uc_cols.size, uc_cols.size + ud_cols.size

    w_n_full = part_mass_matrix(mesh, NEUMANN)
    return CondensedOperator(
        mesh=mesh, material=system.material,
        m_cc=XPC[:, :c0], m_cd=XPC[:, c0:c1], m_cn=XPC[:, c1:],
        m_dc=XPD[:, :c0], m_dd=XPD[:, c0:c1], m_dn=XPD[:, c1:],
        m_nc=XU[:, :c0], m_nd=XU[:, c0:c1], m_nn=XU[:, c1:],
        w_c=part_mass_matrix(mesh, CONTACT)[_dofs(mesh.contact_nodes)],
        w_d=part_mass_matrix(mesh, DIRICHLET)[_dofs(mesh.dirichlet_nodes)],
        w_n=w_n_full[_dofs(mesh.neumann_nodes)],
        w_n_full=w_n_full)


def contact_qp_data(condensed: CondensedOperator, u_d, p_n):
    """Quadratic model of the condensed potential energy in u_C.

    Returns ``(K_C, f_C, c)`` so that the bulk potential energy of the
    domain at the given load is ``0.5 u_C' K_C u_C + f_C' u_C + c``.
    """
    return (condensed.contact_stiffness,
            condensed.contact_load_vector(u_d, p_n),
            condensed.load_constant(u_d, p_n))
