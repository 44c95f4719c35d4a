"""Quadrature rules on reference cells.

Reference cells: the unit interval [0,1], unit square [0,1]^2, unit cube
[0,1]^3 and the triangle with vertices (0,0), (1,0), (0,1).
"""

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi


def n_points_for_degree(degree):
    """Gauss points per direction needed to integrate polynomials of ``degree`` exactly."""
    return max(1, (int(degree) + 2) // 2)


@lru_cache(maxsize=None)
def gauss_interval(n):
    """n-point Gauss-Legendre rule on [0, 1]."""
    x, w = leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def gauss_tensor(n, dim):
    """Tensor-product Gauss rule on [0,1]^dim, first coordinate varying fastest."""
    x, w = gauss_interval(n)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    pts = np.column_stack([g.transpose().ravel() for g in grids])
    wts = np.prod([g.transpose().ravel() for g in wgrids], axis=0)
    return pts, wts


@lru_cache(maxsize=None)
def collapsed_triangle(n):
    """Conical product rule on the reference triangle, exact to degree 2n-1.

    Built from the Duffy map (s, t) -> (s (1 - t), t) with Gauss-Jacobi(1, 0)
    in the collapsed direction.
    """
    s, ws = gauss_interval(n)
    tj, wj = roots_jacobi(n, 1.0, 0.0)
    # weight (1 - xi) on [-1, 1] mapped to (1 - t) on [0, 1]
    t = 0.5 * (tj + 1.0)
    wt = 0.25 * wj
    S, T = np.meshgrid(s, t, indexing="xy")
    WS, WT = np.meshgrid(ws, wt, indexing="xy")
    pts = np.column_stack([(S * (1.0 - T)).ravel(), T.ravel()])
    return pts, (WS * WT).ravel()


def cell_rule(cell_kind, degree):
    """Rule exact to polynomial ``degree`` on the reference cell of ``cell_kind``."""
    n = n_points_for_degree(degree)
    if cell_kind == "triangle":
        return collapsed_triangle(n)
    dim = {"quadrilateral": 2, "hexahedron": 3}[cell_kind]
    return gauss_tensor(n, dim)


def cell_rule_points(cell_kind, n):
    """Rule with a fixed number of points per direction."""
    if cell_kind == "triangle":
        return collapsed_triangle(int(n))
    dim = {"quadrilateral": 2, "hexahedron": 3}[cell_kind]
    return gauss_tensor(int(n), dim)


def facet_rule(cell_kind, degree):
    """Rule on the reference facet: [0,1] in 2D, [0,1]^2 in 3D."""
    n = n_points_for_degree(degree)
    if cell_kind == "hexahedron":
        return gauss_tensor(n, 2)
    return gauss_interval(n)
