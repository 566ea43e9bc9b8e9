"""Numpy backend: plane-strain Kelvin kernels and boundary-element integrals.

All closed forms assume plane strain.  Straight elements carry linear
shape functions; integrals with the collocation point off the element use
Gauss-Legendre quadrature (order 12, upgraded to 16 and subdivided when
the point comes close), while on-element integrals are analytic: the
displacement kernel has a logarithmic singularity and the traction kernel
is taken in the Cauchy principal value sense.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

# quadrature grading thresholds in units of element length
NEAR_UPGRADE = 1.0      # closer than one element length: order 16
NEAR_SUBDIVIDE = 0.5    # closer than half: split into 4 subsegments
DEGENERATE_REL = 1e-12

_J = np.array([[0.0, 1.0], [-1.0, 0.0]])


@lru_cache(maxsize=None)
def gauss_rule(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def kelvin_u(mu: float, nu: float, field_point, source_point) -> np.ndarray:
    """Kelvin displacement kernel U_ml, 2x2, mm/N per unit thickness."""
    rvec = np.asarray(field_point, float) - np.asarray(source_point, float)
    r = float(np.hypot(rvec[0], rvec[1]))
    if r == 0.0:
        raise ValueError("coincident field and source point; use the singular "
                         "element integrals instead")
    rh = rvec / r
    scale = 1.0 / (8.0 * np.pi * mu * (1.0 - nu))
    return scale * (-(3.0 - 4.0 * nu) * np.log(r) * np.eye(2) + np.outer(rh, rh))


def kelvin_t(nu: float, field_point, source_point, normal) -> np.ndarray:
    """Kelvin traction kernel T_ml, 2x2, 1/mm; ``normal`` is the unit
    outward normal at the field point."""
    rvec = np.asarray(field_point, float) - np.asarray(source_point, float)
    r = float(np.hypot(rvec[0], rvec[1]))
    if r == 0.0:
        raise ValueError("coincident field and source point; use the singular "
                         "element integrals instead")
    rh = rvec / r
    n = np.asarray(normal, float)
    drdn = float(rh @ n)
    k = 1.0 - 2.0 * nu
    mat = drdn * (k * np.eye(2) + 2.0 * np.outer(rh, rh)) \
        + k * (np.outer(rh, n) - np.outer(n, rh))
    return -mat / (4.0 * np.pi * (1.0 - nu) * r)


def free_term(tangent_in, tangent_out, nu: float) -> np.ndarray:
    """Free-term coefficient matrix c_ml at a boundary node.

    ``tangent_in``/``tangent_out`` are the unit tangents of the elements
    arriving at and leaving the node, in loop (counterclockwise) order.
    Smooth points give identity/2; corners the analytic wedge value.
    """
    t_in = np.asarray(tangent_in, float)
    t_out = np.asarray(tangent_out, float)
    th_a = np.arctan2(t_out[1], t_out[0])
    th_b = np.arctan2(-t_in[1], -t_in[0])
    delta = th_b - th_a
    while delta <= 0.0:
        delta += 2.0 * np.pi
    while delta > 2.0 * np.pi:
        delta -= 2.0 * np.pi
    th_b = th_a + delta
    ds = np.sin(2 * th_b) - np.sin(2 * th_a)
    dc = np.cos(2 * th_b) - np.cos(2 * th_a)
    wedge = np.array([[ds, -dc], [-dc, -ds]])
    return (delta / (2.0 * np.pi)) * np.eye(2) + wedge / (8.0 * np.pi * (1.0 - nu))


# ---------------------------------------------------------------------------
# element integrals
# ---------------------------------------------------------------------------

def _gauss_blocks(mu, nu, p0, p1, xi_point, order, a=-1.0, b=1.0):
    """Quadrature U/T blocks over the [a, b] sub-interval of the element."""
    x, w = gauss_rule(order)
    x = 0.5 * (a + b) + 0.5 * (b - a) * x
    w = w * 0.5 * (b - a)
    vec = p1 - p0
    L = np.hypot(vec[0], vec[1])
    t = vec / L
    n = np.array([t[1], -t[0]])
    pts = p0[None, :] + 0.5 * (x[:, None] + 1.0) * vec[None, :]
    shapes = np.column_stack([0.5 * (1.0 - x), 0.5 * (1.0 + x)])
    jac = 0.5 * L

    rvec = pts - np.asarray(xi_point, float)[None, :]
    r = np.hypot(rvec[:, 0], rvec[:, 1])
    rh = rvec / r[:, None]
    scale_u = 1.0 / (8.0 * np.pi * mu * (1.0 - nu))
    umat = scale_u * (-(3.0 - 4.0 * nu) * np.log(r)[:, None, None] * np.eye(2)
                      + rh[:, :, None] * rh[:, None, :])
    k = 1.0 - 2.0 * nu
    drdn = rh @ n
    tmat = -(drdn[:, None, None] * (k * np.eye(2) + 2.0 * rh[:, :, None] * rh[:, None, :])
             + k * (rh[:, :, None] * n[None, None, :] - n[None, :, None] * rh[:, None, :])
             ) / (4.0 * np.pi * (1.0 - nu) * r)[:, None, None]

    wN = (w[:, None] * shapes) * jac
    ub = np.einsum("ga,gkl->akl", wN, umat)
    tb = np.einsum("ga,gkl->akl", wN, tmat)
    return ub, tb


def _point_segment(p0, p1, point):
    """(distance, arc coordinate of the closest point, element length)."""
    vec = p1 - p0
    L = float(np.hypot(vec[0], vec[1]))
    if L <= 0.0:
        raise ValueError("zero-length element")
    s = float(np.clip(np.dot(point - p0, vec) / L**2, 0.0, 1.0)) * L
    closest = p0 + (s / L) * vec
    return float(np.hypot(*(point - closest))), s, L


def _ln_int(x):
    return x * np.log(x) - x if x > 0.0 else 0.0


def _sln_int(x):
    return 0.5 * x * x * (np.log(x) - 0.5) if x > 0.0 else 0.0


def _singular_blocks(mu, nu, p0, p1, s0):
    """Analytic on-element integrals for a collocation point at arc
    coordinate ``s0`` of the element.

    The U blocks integrate the logarithmic singularity exactly.  The T
    blocks are Cauchy principal values; when ``s0`` is an element end the
    own-node block is the finite part whose remaining log divergence
    cancels against the neighbouring element of a closed loop (production
    assembly never uses it: diagonal blocks are closed by rigid-body
    row sums).
    """
    vec = p1 - p0
    L = float(np.hypot(vec[0], vec[1]))
    t = vec / L
    scale_u = 1.0 / (8.0 * np.pi * mu * (1.0 - nu))
    c_t = (1.0 - 2.0 * nu) / (4.0 * np.pi * (1.0 - nu))
    if s0 < 1e-9 * L:
        s0 = 0.0
    elif L - s0 < 1e-9 * L:
        s0 = L
    right, left = L - s0, s0
    ttT = np.outer(t, t)

    ub = np.empty((2, 2, 2))
    tb = np.empty((2, 2, 2))
    for loc, (n_at, slope) in enumerate((((L - s0) / L, -1.0 / L), (s0 / L, 1.0 / L))):
        ln_part = n_at * (_ln_int(right) + _ln_int(left)) \
            + slope * (_sln_int(right) - _sln_int(left))
        ub[loc] = scale_u * (-(3.0 - 4.0 * nu) * ln_part * np.eye(2) + 0.5 * L * ttT)
        if right > 0.0 and left > 0.0:
            cpv = n_at * np.log(right / left) + slope * L
        elif left == 0.0:
            # collocation at the start node: finite part, log divergence
            # cancels against the neighbouring element of the loop
            cpv = n_at * np.log(right) + slope * L
        else:
            cpv = -n_at * np.log(left) + slope * L
        tb[loc] = c_t * cpv * _J
    return ub, tb


def element_integrals(mu, nu, p0, p1, collocation_point, order: int = 12):
    """Per-node 2x2 blocks of the U and T kernels over one element.

    Returns ``(u_blocks, t_blocks, singular)`` where the blocks have shape
    (2, 2, 2), indexed by local node.  Off-element points use graded
    Gauss-Legendre quadrature; on-element points the analytic formulas.
    """
    p0 = np.asarray(p0, float)
    p1 = np.asarray(p1, float)
    xi = np.asarray(collocation_point, float)
    d, s, L = _point_segment(p0, p1, xi)
    if d < DEGENERATE_REL * L:
        ub, tb = _singular_blocks(mu, nu, p0, p1, s)
        return ub, tb, True
    rho = d / L
    if rho >= NEAR_UPGRADE:
        ub, tb = _gauss_blocks(mu, nu, p0, p1, xi, order)
    elif rho >= NEAR_SUBDIVIDE:
        ub, tb = _gauss_blocks(mu, nu, p0, p1, xi, 16)
    else:
        ub = np.zeros((2, 2, 2))
        tb = np.zeros((2, 2, 2))
        for k in range(4):
            a, b = -1.0 + 0.5 * k, -0.5 + 0.5 * k
            u1, t1 = _gauss_blocks(mu, nu, p0, p1, xi, 16, a, b)
            ub += u1
            tb += t1
    return ub, tb, False


# ---------------------------------------------------------------------------
# full H/G assembly
# ---------------------------------------------------------------------------

def assemble_hg(nodes, elements, lengths, tangents, normals, mu, nu, order=12):
    """Raw collocation matrices for one closed loop.

    Collocates at every node.  Returns ``(H, G)`` where ``H`` is
    (2n, 2n) with the diagonal 2x2 blocks left at zero (they are closed
    by the rigid-body technique downstream) and ``G`` is (2n, 4n) with
    one column pair per (element, local node) traction slot.
    """
    nodes = np.asarray(nodes, float)
    elements = np.asarray(elements, int)
    n = nodes.shape[0]
    H = np.zeros((2 * n, 2 * n))
    G = np.zeros((2 * n, 4 * n))
    xq, wq = gauss_rule(order)
    shapes = np.column_stack([0.5 * (1.0 - xq), 0.5 * (1.0 + xq)])
    scale_u = 1.0 / (8.0 * np.pi * mu * (1.0 - nu))
    kk = 1.0 - 2.0 * nu
    eye = np.eye(2)

    for e in range(elements.shape[0]):
        a, b = int(elements[e, 0]), int(elements[e, 1])
        p0, p1 = nodes[a], nodes[b]
        L = lengths[e]
        nrm = normals[e]
        pts = p0[None, :] + 0.5 * (xq[:, None] + 1.0) * (p1 - p0)[None, :]

        # all collocation points at once against this element
        rvec = pts[None, :, :] - nodes[:, None, :]
        dist = np.hypot(rvec[..., 0], rvec[..., 1])
        r = dist.copy()
        r[a], r[b] = 1.0, 1.0           # masked: handled analytically below
        rh = rvec / r[..., None]
        umat = scale_u * (-(3.0 - 4.0 * nu) * np.log(r)[..., None, None] * eye
                          + rh[..., :, None] * rh[..., None, :])
        drdn = rh @ nrm
        tmat = -(drdn[..., None, None] * (kk * eye + 2.0 * rh[..., :, None] * rh[..., None, :])
                 + kk * (rh[..., :, None] * nrm[None, None, None, :]
                         - nrm[None, None, :, None] * rh[..., None, :])
                 ) / (4.0 * np.pi * (1.0 - nu) * r)[..., None, None]

        # the collocation row contracts u_m T_ml over the kernel's first
        # index, so the T blocks enter transposed
        wN = (wq[:, None] * shapes) * (0.5 * L)
        ub = np.einsum("gc,igkl->ickl", wN, umat)
        tb = np.einsum("gc,igkl->iclk", wN, tmat)

        # fix up rows where plain order-12 quadrature is not accurate enough
        near = np.flatnonzero(dist.min(axis=1) < NEAR_UPGRADE * L)
        for i in near:
            if i == a or i == b:
                continue
            u_i, t_i, singular = element_integrals(mu, nu, p0, p1, nodes[i], order)
            if singular:
                raise ValueError(
                    f"collocation node {i} lies on element {e} it does not "
                    f"belong to: duplicate or degenerate geometry")
            ub[i], tb[i] = u_i, t_i.transpose(0, 2, 1)

        # analytic singular rows at the element's own nodes
        for loc, i in enumerate((a, b)):
            sub, stb = _singular_blocks(mu, nu, p0, p1, loc * L)
            ub[i] = sub
            tb[i] = stb.transpose(0, 2, 1)
            tb[i, loc] = 0.0            # own-node T block closed by rigid body

        for loc, gnode in enumerate((a, b)):
            H[:, 2 * gnode:2 * gnode + 2] += tb[:, loc].reshape(2 * n, 2)
            G[:, 4 * e + 2 * loc:4 * e + 2 * loc + 2] += ub[:, loc].reshape(2 * n, 2)

    return H, G
