"""Structured meshes of the unit square and unit cube.

Vertices are numbered with x varying fastest, then y, then z.  Cells keep a
fixed local vertex ordering (counter-clockwise in 2D, bottom face
counter-clockwise then top face in 3D) so that DoF maps are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidResolutionError, CapabilityError

CELL_KINDS = ("triangle", "quadrilateral", "hexahedron")

# Local facets as tuples of local vertex indices.
LOCAL_FACETS = {
    "triangle": ((0, 1), (1, 2), (2, 0)),
    "quadrilateral": ((0, 1), (1, 2), (2, 3), (3, 0)),
    "hexahedron": (
        (0, 3, 2, 1),
        (4, 5, 6, 7),
        (0, 1, 5, 4),
        (1, 2, 6, 5),
        (2, 3, 7, 6),
        (3, 0, 4, 7),
    ),
}


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable structured mesh.

    ``interior_facets`` rows are ``(cell_a, facet_a, cell_b, facet_b)`` with
    ``cell_a < cell_b``; ``boundary_facets`` rows are ``(cell, facet)``.  All
    boundary facets are tagged Dirichlet.
    """

    dim: int
    cell_kind: str
    n_per_axis: int
    vertices: np.ndarray
    cells: np.ndarray
    interior_facets: np.ndarray = field(repr=False)
    boundary_facets: np.ndarray = field(repr=False)

    @property
    def h(self) -> float:
        return 1.0 / self.n_per_axis

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def local_facets(self):
        return LOCAL_FACETS[self.cell_kind]

    def cell_coords(self) -> np.ndarray:
        """Vertex coordinates per cell, shape (n_cells, n_local_vertices, dim)."""
        return self.vertices[self.cells]

    def cell_measures(self) -> np.ndarray:
        xc = self.cell_coords()
        if self.cell_kind == "triangle":
            e1 = xc[:, 1] - xc[:, 0]
            e2 = xc[:, 2] - xc[:, 0]
            return 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        return np.full(self.n_cells, self.h**self.dim)

    def cell_boundary_measures(self) -> np.ndarray:
        """Perimeter (2D) or surface area (3D) of every cell."""
        if self.cell_kind == "triangle":
            xc = self.cell_coords()
            edges = xc[:, [1, 2, 0]] - xc
            return np.linalg.norm(edges, axis=2).sum(axis=1)
        n_facets = 2 * self.dim
        return np.full(self.n_cells, n_facets * self.h ** (self.dim - 1))

    def facet_vertices(self, cells, local) -> np.ndarray:
        """Vertex indices of facets given by (cell, local facet) pairs."""
        table = np.array(self.local_facets)
        return self.cells[np.asarray(cells)[:, None], table[np.asarray(local)]]

    def boundary_facet_vertices(self) -> np.ndarray:
        return self.facet_vertices(self.boundary_facets[:, 0], self.boundary_facets[:, 1])

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (
            self.cell_kind == other.cell_kind
            and self.n_per_axis == other.n_per_axis
            and np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.cells, other.cells)
        )

    __hash__ = None


def _check_n(n):
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InvalidResolutionError(f"cells per axis must be an integer >= 1, got {n!r}")
    return int(n)


def _connect(cells, kind):
    """Pair up facets shared by two cells; the rest are on the boundary."""
    table = np.array(LOCAL_FACETS[kind])
    n_cells, n_local = cells.shape[0], table.shape[0]
    fverts = np.sort(cells[:, table], axis=2).reshape(n_cells * n_local, -1)
    _, inverse, counts = np.unique(fverts, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    if counts.max() > 2:
        raise RuntimeError("facet shared by more than two cells")
    owner = np.repeat(np.arange(n_cells), n_local)
    local = np.tile(np.arange(n_local), n_cells)
    order = np.argsort(inverse, kind="stable")
    sorted_ids = inverse[order]
    shared = counts[sorted_ids] == 2
    first = order[shared][0::2]
    second = order[shared][1::2]
    interior = np.column_stack([owner[first], local[first], owner[second], local[second]])
    lone = order[~shared]
    lone = lone[np.lexsort((local[lone], owner[lone]))]
    boundary = np.column_stack([owner[lone], local[lone]])
    return interior.astype(np.int64), boundary.astype(np.int64)


def _grid_vertices(n, dim):
    t = np.linspace(0.0, 1.0, n + 1)
    axes = np.meshgrid(*([t] * dim), indexing="ij")
    # x fastest: reverse the ij ordering before flattening
    return np.column_stack([a.transpose().ravel() for a in axes])


def unit_square(n: int, kind: str = "quadrilateral") -> Mesh:
    """Mesh of [0,1]^2 with ``n`` cells per axis.

    Triangle meshes split every square along its lower-left to upper-right
    diagonal.
    """
    n = _check_n(n)
    if kind not in ("triangle", "quadrilateral"):
        raise CapabilityError(f"unit_square does not support cell kind {kind!r}")
    verts = _grid_vertices(n, 2)
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    i, j = i.ravel(), j.ravel()
    v00 = i + (n + 1) * j
    v10, v01 = v00 + 1, v00 + n + 1
    v11 = v01 + 1
    if kind == "quadrilateral":
        cells = np.column_stack([v00, v10, v11, v01])
    else:
        lower = np.column_stack([v00, v10, v11])
        upper = np.column_stack([v00, v11, v01])
        cells = np.stack([lower, upper], axis=1).reshape(-1, 3)
    cells = cells.astype(np.int64)
    interior, boundary = _connect(cells, kind)
    return Mesh(2, kind, n, _frozen(verts), _frozen(cells), _frozen(interior), _frozen(boundary))


def unit_cube(n: int) -> Mesh:
    """Hexahedral mesh of [0,1]^3 with ``n`` cells per axis."""
    n = _check_n(n)
    verts = _grid_vertices(n, 3)
    k, j, i = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    i, j, k = i.ravel(), j.ravel(), k.ravel()
    m = n + 1
    v000 = i + m * j + m * m * k
    bottom = [v000, v000 + 1, v000 + 1 + m, v000 + m]
    top = [v + m * m for v in bottom]
    cells = np.column_stack(bottom + top).astype(np.int64)
    interior, boundary = _connect(cells, "hexahedron")
    return Mesh(3, "hexahedron", n, _frozen(verts), _frozen(cells), _frozen(interior), _frozen(boundary))


def refine_uniform(mesh: Mesh) -> Mesh:
    """Halve h by regenerating the mesh at twice the resolution."""
    if not isinstance(mesh, Mesh):
        raise TypeError("refine_uniform expects a Mesh")
    if mesh.dim == 3:
        return unit_cube(2 * mesh.n_per_axis)
    return unit_square(2 * mesh.n_per_axis, mesh.cell_kind)
