"""Lagrange shape functions on reference cells.

Tensor cells use equispaced nodes in [0,1]^d ordered with the first
coordinate varying fastest.  Triangles use the equispaced P_p lattice with a
nodal basis obtained by inverting the monomial Vandermonde matrix.
"""

from functools import lru_cache

import numpy as np

REFERENCE_VERTICES = {
    "triangle": np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
    "quadrilateral": np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
    "hexahedron": np.array(
        [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 1.0],
            [1.0, 1.0, 1.0],
            [0.0, 1.0, 1.0],
        ]
    ),
}


def _lagrange_1d(p, x):
    """Values and derivatives of the degree-p equispaced Lagrange basis at x."""
    nodes = np.linspace(0.0, 1.0, p + 1)
    x = np.asarray(x, dtype=float)
    vals = np.ones((x.size, p + 1))
    ders = np.zeros((x.size, p + 1))
    for i in range(p + 1):
        others = [nodes[j] for j in range(p + 1) if j != i]
        denom = np.prod([nodes[i] - xj for xj in others])
        factors = np.stack([x - xj for xj in others], axis=1)
        vals[:, i] = np.prod(factors, axis=1) / denom
        for k in range(p):
            rest = np.delete(factors, k, axis=1)
            ders[:, i] += np.prod(rest, axis=1) / denom
    return vals, ders


class LagrangeElement:
    """Nodal Lagrange element of given degree on a reference cell."""

    def __init__(self, cell_kind, degree):
        self.cell_kind = cell_kind
        self.degree = degree
        self.dim = REFERENCE_VERTICES[cell_kind].shape[1]
        p = degree
        if cell_kind == "triangle":
            self.nodes = np.array(
                [[i / p, j / p] for j in range(p + 1) for i in range(p + 1 - j)]
            )
            self._exponents = [(a, b) for b in range(p + 1) for a in range(p + 1 - b)]
            V = self._monomials(self.nodes)
            self._coeffs = np.linalg.inv(V)
        else:
            t = np.linspace(0.0, 1.0, p + 1)
            grids = np.meshgrid(*([t] * self.dim), indexing="ij")
            self.nodes = np.column_stack([g.transpose().ravel() for g in grids])
        self.n_basis = self.nodes.shape[0]

    def _monomials(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        return np.column_stack([x**a * y**b for a, b in self._exponents])

    def _monomial_grads(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        dx = [a * x ** max(a - 1, 0) * y**b if a else np.zeros_like(x) for a, b in self._exponents]
        dy = [b * x**a * y ** max(b - 1, 0) if b else np.zeros_like(x) for a, b in self._exponents]
        return np.stack([np.column_stack(dx), np.column_stack(dy)], axis=2)

    def tabulate(self, pts):
        """Return ``(values, gradients)`` of shapes (M, nb) and (M, nb, dim)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.cell_kind == "triangle":
            vals = self._monomials(pts) @ self._coeffs
            grads = np.einsum("mak,ab->mbk", self._monomial_grads(pts), self._coeffs)
            return vals, grads
        p, d, m = self.degree, self.dim, pts.shape[0]
        per_axis = [_lagrange_1d(p, pts[:, k]) for k in range(d)]
        # basis index: first axis fastest
        vals = np.ones((m,) + (p + 1,) * d)
        grads = np.ones((m,) + (p + 1,) * d + (d,))
        for k in range(d):
            v, dv = per_axis[k]
            shape = [m] + [1] * d
            shape[d - k] = p + 1
            vals = vals * v.reshape(shape)
            for g in range(d):
                grads[..., g] *= (dv if g == k else v).reshape(shape)
        return vals.reshape(m, -1), grads.reshape(m, -1, d)

    def facet_points(self, local_facet_vertices, facet_pts):
        """Map reference-facet points into this cell's reference coordinates."""
        rv = REFERENCE_VERTICES[self.cell_kind][list(local_facet_vertices)]
        facet_pts = np.asarray(facet_pts, dtype=float)
        if self.dim == 2:
            s = facet_pts.reshape(-1, 1)
            return rv[0] + s * (rv[1] - rv[0])
        s, t = facet_pts[:, :1], facet_pts[:, 1:2]
        return rv[0] + s * (rv[1] - rv[0]) + t * (rv[3] - rv[0])


@lru_cache(maxsize=None)
def lagrange_element(cell_kind, degree):
    return LagrangeElement(cell_kind, degree)
