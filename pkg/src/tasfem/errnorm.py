"""L2 error of a discrete field and its conversion to digits."""

import math

import numpy as np

from .exceptions import DomainError
from .quadrature import cell_rule, cell_rule_points

_CHUNK_CELLS = 20_000


def l2_error(space, coeffs, exact, quad_boost=4, quad_points=None):
    """sqrt(sum_E int_E (u_h - u)^2), integrated directly cell by cell.

    The quadrature is exact for polynomials of degree ``2p + quad_boost``.
    ``quad_points`` instead fixes the Gauss points per direction regardless
    of degree; ``quad_points=3`` is how the deal.II reference numbers were
    measured and under-integrates for p >= 3.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (space.n_dofs,):
        raise ValueError(f"expected {space.n_dofs} coefficients, got shape {coeffs.shape}")
    if quad_points is None:
        pts, wts = cell_rule(space.mesh.cell_kind, 2 * space.degree + int(quad_boost))
    else:
        pts, wts = cell_rule_points(space.mesh.cell_kind, quad_points)
    vals, _ = space.element.tabulate(pts)
    geom = space.geometry
    total = 0.0
    for start in range(0, space.mesh.n_cells, _CHUNK_CELLS):
        cells = np.arange(start, min(start + _CHUNK_CELLS, space.mesh.n_cells))
        uh = coeffs[space.dof_map[cells]] @ vals.T
        u = exact(geom.to_physical(cells, pts))
        total += float(np.einsum("cq,q,c->", (uh - u) ** 2, wts, geom.det[cells]))
    return math.sqrt(total)


def doa(err):
    """Digits of accuracy, -log10(err), defined for 0 < err < 1."""
    if not (0.0 < err < 1.0):
        raise DomainError(f"digits of accuracy need 0 < err < 1, got {err!r}", err)
    return -math.log10(err)


def dos(n_dofs):
    """Digits of size, log10(N), defined for N > 1."""
    if not n_dofs > 1:
        raise DomainError(f"digits of size need N > 1, got {n_dofs!r}", n_dofs)
    return math.log10(n_dofs)
