# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled assembly core: tight C loop over (collocation node, element)
pairs with the same quadrature grading and analytic singular integrals as
the numpy backend."""

import numpy as np

cimport numpy as cnp
from libc.math cimport log, sqrt

cnp.import_array()

DEF PI = 3.141592653589793238462643383279502884

cdef double _i0(double x) noexcept:
    return x * log(x) - x if x > 0.0 else 0.0

cdef double _i1(double x) noexcept:
    return 0.5 * x * x * (log(x) - 0.5) if x > 0.0 else 0.0


def assemble_hg(double[:, ::1] nodes, long[:, ::1] elements,
                double[::1] lengths, double[:, ::1] tangents,
                double[:, ::1] normals, double mu, double nu,
                double[::1] xq, double[::1] wq,
                double[::1] x16, double[::1] w16):
    """Raw H (diagonal blocks zero) and per-slot G for one closed loop."""
    cdef Py_ssize_t n = nodes.shape[0]
    cdef cnp.ndarray[double, ndim=2] H = np.zeros((2 * n, 2 * n))
    cdef cnp.ndarray[double, ndim=2] G = np.zeros((2 * n, 4 * n))
    cdef double[:, ::1] Hv = H
    cdef double[:, ::1] Gv = G

    cdef double scale_u = 1.0 / (8.0 * PI * mu * (1.0 - nu))
    cdef double kk = 1.0 - 2.0 * nu
    cdef double c_t = kk / (4.0 * PI * (1.0 - nu))
    cdef double kap = 3.0 - 4.0 * nu

    cdef Py_ssize_t e, i, a, b, g, loc, k, l, sub
    cdef double p0x, p0y, vx, vy, L, nx, ny, tx, ty
    cdef double xi, w, jac, N0, N1, px, py
    cdef double rx, ry, r, rhx, rhy, lr, drdn, cu, ct
    cdef double ub[2][2][2]
    cdef double tb[2][2][2]
    cdef double d, s, rho, lo, hi
    cdef double ln0, ln1
    cdef Py_ssize_t ng

    for e in range(n):
        a = elements[e, 0]
        b = elements[e, 1]
        p0x = nodes[a, 0]
        p0y = nodes[a, 1]
        vx = nodes[b, 0] - p0x
        vy = nodes[b, 1] - p0y
        L = lengths[e]
        tx = tangents[e, 0]
        ty = tangents[e, 1]
        nx = normals[e, 0]
        ny = normals[e, 1]

        for i in range(n):
            for loc in range(2):
                for k in range(2):
                    for l in range(2):
                        ub[loc][k][l] = 0.0
                        tb[loc][k][l] = 0.0

            if i == a or i == b:
                # analytic singular integrals, collocation at an end node
                if i == a:
                    ln0 = _i0(L) - _i1(L) / L          # own-node log integral
                    ln1 = _i1(L) / L
                else:
                    ln0 = _i1(L) / L
                    ln1 = _i0(L) - _i1(L) / L
                for k in range(2):
                    for l in range(2):
                        cu = 0.5 * L * (tx if k == 0 else ty) * (tx if l == 0 else ty)
                        ub[0][k][l] = scale_u * (cu - (kap * ln0 if k == l else 0.0))
                        ub[1][k][l] = scale_u * (cu - (kap * ln1 if k == l else 0.0))
                # far-node CPV block: +c_t*J at the start node, -c_t*J at the end
                if i == a:
                    tb[1][0][1] = c_t
                    tb[1][1][0] = -c_t
                else:
                    tb[0][0][1] = -c_t
                    tb[0][1][0] = c_t
            else:
                # distance from node i to the element
                s = ((nodes[i, 0] - p0x) * vx + (nodes[i, 1] - p0y) * vy) / (L * L)
                if s < 0.0:
                    s = 0.0
                elif s > 1.0:
                    s = 1.0
                rx = nodes[i, 0] - (p0x + s * vx)
                ry = nodes[i, 1] - (p0y + s * vy)
                d = sqrt(rx * rx + ry * ry)
                if d < 1e-12 * L:
                    raise ValueError(
                        f"collocation node {i} lies on element {e} it does not "
                        f"belong to: duplicate or degenerate geometry")
                rho = d / L
                for sub in range(4):
                    if rho >= 0.5:
                        if sub > 0:
                            break
                        lo = -1.0
                        hi = 1.0
                        ng = xq.shape[0] if rho >= 1.0 else x16.shape[0]
                    else:
                        lo = -1.0 + 0.5 * sub
                        hi = lo + 0.5
                        ng = x16.shape[0]
                    for g in range(ng):
                        if rho >= 1.0:
                            xi = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xq[g]
                            w = wq[g] * 0.5 * (hi - lo)
                        else:
                            xi = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x16[g]
                            w = w16[g] * 0.5 * (hi - lo)
                        N0 = 0.5 * (1.0 - xi)
                        N1 = 0.5 * (1.0 + xi)
                        jac = 0.5 * L
                        px = p0x + N1 * vx
                        py = p0y + N1 * vy
                        rx = px - nodes[i, 0]
                        ry = py - nodes[i, 1]
                        r = sqrt(rx * rx + ry * ry)
                        rhx = rx / r
                        rhy = ry / r
                        lr = log(r)
                        drdn = rhx * nx + rhy * ny
                        for k in range(2):
                            for l in range(2):
                                cu = scale_u * ((rhx if k == 0 else rhy) * (rhx if l == 0 else rhy)
                                                - (kap * lr if k == l else 0.0))
                                ct = -(drdn * ((kk if k == l else 0.0)
                                               + 2.0 * (rhx if k == 0 else rhy) * (rhx if l == 0 else rhy))
                                       + kk * ((rhx if k == 0 else rhy) * (nx if l == 0 else ny)
                                               - (nx if k == 0 else ny) * (rhx if l == 0 else rhy))
                                       ) / (4.0 * PI * (1.0 - nu) * r)
                                ub[0][k][l] += w * jac * N0 * cu
                                ub[1][k][l] += w * jac * N1 * cu
                                tb[0][k][l] += w * jac * N0 * ct
                                tb[1][k][l] += w * jac * N1 * ct

            # collocation rows contract u_m T_ml over the kernel's first
            # index: T blocks enter transposed (U blocks are symmetric)
            for k in range(2):
                for l in range(2):
                    Hv[2 * i + k, 2 * a + l] += tb[0][l][k]
                    Hv[2 * i + k, 2 * b + l] += tb[1][l][k]
                    Gv[2 * i + k, 4 * e + l] += ub[0][k][l]
                    Gv[2 * i + k, 4 * e + 2 + l] += ub[1][k][l]

    return H, G
