"""CG and symmetric interior penalty DG discretizations of -lap(u) = f.

All cells of the structured meshes are affine images of the reference cell,
so element matrices are computed once per distinct Jacobian and scattered.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .elements import lagrange_element, LagrangeElement
from .exceptions import CapabilityError, DimensionError
from .meshgen import Mesh
from .quadrature import cell_rule, facet_rule

FAMILIES = ("CG", "DG")

# (family, cell kind) -> supported degrees
SUPPORTED = {
    ("CG", "triangle"): (1, 2, 3),
    ("CG", "quadrilateral"): (1, 2, 3),
    ("CG", "hexahedron"): (1, 2),
    ("DG", "triangle"): (1, 2, 3),
    ("DG", "quadrilateral"): (1, 2, 3),
}

# local nonzeros scattered per sparse chunk; bounds peak memory of assembly
_CHUNK_ENTRIES = 4_000_000


@dataclass(frozen=True, eq=False)
class CellGeometry:
    """Affine maps x = origin + jacobian @ xi for every cell."""

    origin: np.ndarray
    jacobian: np.ndarray
    inv_jacobian: np.ndarray
    det: np.ndarray
    group: np.ndarray
    group_rep: np.ndarray

    @classmethod
    def from_mesh(cls, mesh: Mesh):
        xc = mesh.cell_coords()
        x0 = xc[:, 0]
        if mesh.cell_kind == "triangle":
            cols = [xc[:, 1] - x0, xc[:, 2] - x0]
        elif mesh.cell_kind == "quadrilateral":
            cols = [xc[:, 1] - x0, xc[:, 3] - x0]
        else:
            cols = [xc[:, 1] - x0, xc[:, 3] - x0, xc[:, 4] - x0]
        J = np.stack(cols, axis=2)
        det = np.linalg.det(J)
        if np.any(det <= 0):
            raise ValueError("mesh contains inverted or degenerate cells")
        inv = np.linalg.inv(J)
        key = np.round(J.reshape(len(J), -1) * mesh.n_per_axis, 10)
        _, rep, group = np.unique(key, axis=0, return_index=True, return_inverse=True)
        return cls(x0, J, inv, det, group.ravel(), rep)

    def to_physical(self, cells, xi):
        """Map reference points ``xi`` (M, d) or (C, M, d) through cells."""
        if xi.ndim == 2:
            return self.origin[cells][:, None, :] + np.einsum("ckm,qm->cqk", self.jacobian[cells], xi)
        return self.origin[cells][:, None, :] + np.einsum("ckm,cqm->cqk", self.jacobian[cells], xi)

    def to_reference(self, cells, x):
        return np.einsum("ckm,cqm->cqk", self.inv_jacobian[cells], x - self.origin[cells][:, None, :])


@dataclass(frozen=True, eq=False)
class FunctionSpace:
    mesh: Mesh
    family: str
    degree: int
    element: LagrangeElement = field(repr=False)
    n_dofs: int
    dof_map: np.ndarray = field(repr=False)
    dof_coords: np.ndarray = field(repr=False)
    constrained_dofs: np.ndarray = field(repr=False)
    geometry: CellGeometry = field(repr=False)

    @property
    def dim(self):
        return self.mesh.dim

    def interpolate(self, func: Callable) -> np.ndarray:
        """Nodal interpolant of ``func`` as a full coefficient vector."""
        return np.asarray(func(self.dof_coords), dtype=float)

    def locate(self, points):
        """Cell index and reference coordinates of each point."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            raise DimensionError(f"expected points of dimension {self.dim}")
        n = self.mesh.n_per_axis
        idx = np.clip(np.floor(pts * n).astype(np.int64), 0, n - 1)
        cell = np.zeros(len(pts), dtype=np.int64)
        for k in range(self.dim):
            cell += idx[:, k] * n**k
        if self.mesh.cell_kind == "triangle":
            local = pts * n - idx
            cell = 2 * cell + (local[:, 1] > local[:, 0])
        xi = self.geometry.to_reference(cell, pts[:, None, :])[:, 0, :]
        return cell, xi

    def evaluate(self, coeffs, points):
        """Evaluate the discrete field with full coefficients at ``points``."""
        cell, xi = self.locate(points)
        vals, _ = self.element.tabulate(xi)
        return np.einsum("mb,mb->m", vals, np.asarray(coeffs)[self.dof_map[cell]])


def build_space(mesh: Mesh, family: str, degree: int) -> FunctionSpace:
    """Lagrange space of the given family and degree over ``mesh``."""
    family = str(family).upper()
    if family not in FAMILIES:
        raise CapabilityError(f"unknown family {family!r}")
    degrees = SUPPORTED.get((family, mesh.cell_kind), ())
    if degree not in degrees:
        raise CapabilityError(
            f"{family}{degree} on {mesh.cell_kind} cells is not supported"
        )
    element = lagrange_element(mesh.cell_kind, degree)
    geom = CellGeometry.from_mesh(mesh)
    nb = element.n_basis
    node_x = geom.to_physical(np.arange(mesh.n_cells), element.nodes)
    if family == "CG":
        m = degree * mesh.n_per_axis
        ijk = np.rint(node_x * m).astype(np.int64)
        dof_map = np.zeros(ijk.shape[:2], dtype=np.int64)
        for k in range(mesh.dim):
            dof_map += ijk[..., k] * (m + 1) ** k
        n_dofs = (m + 1) ** mesh.dim
        dof_coords = np.empty((n_dofs, mesh.dim))
        dof_coords[dof_map.ravel()] = node_x.reshape(-1, mesh.dim)
        flat = ijk.reshape(-1, mesh.dim)
        on_bdry = np.any((flat == 0) | (flat == m), axis=1)
        constrained = np.unique(dof_map.ravel()[on_bdry])
    else:
        n_dofs = mesh.n_cells * nb
        dof_map = np.arange(n_dofs, dtype=np.int64).reshape(mesh.n_cells, nb)
        dof_coords = node_x.reshape(-1, mesh.dim)
        constrained = np.zeros(0, dtype=np.int64)
    if n_dofs <= 1:
        raise CapabilityError("function space must have more than one DoF")
    for a in (dof_map, dof_coords, constrained):
        a.setflags(write=False)
    return FunctionSpace(mesh, family, degree, element, n_dofs, dof_map, dof_coords, constrained, geom)


@dataclass(frozen=True)
class MmsCase:
    id: str
    dim: int
    exact: Callable = field(repr=False)
    source: Callable = field(repr=False)


def _s(k, x):
    return np.sin(k * np.pi * x)


def _test1(x):
    return _s(2, x[..., 0]) * _s(2, x[..., 1])


def _test1_f(x):
    return 8 * np.pi**2 * _test1(x)


def _test2(x):
    return np.sin(2 * np.pi * x[..., 0] ** 2) * np.sin(2 * np.pi * x[..., 1] ** 2)


def _test2_f(x):
    x_, y_ = x[..., 0], x[..., 1]
    sx, sy = np.sin(2 * np.pi * x_**2), np.sin(2 * np.pi * y_**2)
    cx, cy = np.cos(2 * np.pi * x_**2), np.cos(2 * np.pi * y_**2)
    pi = np.pi
    return (16 * pi**2 * x_**2 * sx - 4 * pi * cx) * sy + (16 * pi**2 * y_**2 * sy - 4 * pi * cy) * sx


def _test3(x):
    return _s(2, x[..., 0]) * _s(2, x[..., 1]) * _s(2, x[..., 2])


def _test3_f(x):
    return 12 * np.pi**2 * _test3(x)


def _test4(x):
    return 5 * _s(6, x[..., 0]) * _s(7, x[..., 1]) * _s(8, x[..., 2])


def _test4_f(x):
    return 149 * np.pi**2 * _test4(x)


MMS_CASES = {
    "test1": MmsCase("test1", 2, _test1, _test1_f),
    "test2": MmsCase("test2", 2, _test2, _test2_f),
    "test3": MmsCase("test3", 3, _test3, _test3_f),
    "test4": MmsCase("test4", 3, _test4, _test4_f),
}


def mms_case(case_id: str) -> MmsCase:
    """Manufactured solution and matching source term; all vanish on the boundary."""
    try:
        return MMS_CASES[case_id]
    except KeyError:
        raise ValueError(f"unknown MMS case {case_id!r}; choose from {sorted(MMS_CASES)}") from None


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    """Linear system over the free DoFs of a space."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    free_to_global: np.ndarray
    dirichlet_dofs: np.ndarray
    dirichlet_values: np.ndarray
    space: FunctionSpace = field(repr=False)

    @property
    def n_free(self):
        return self.rhs.shape[0]

    def expand(self, x_free) -> np.ndarray:
        """Full coefficient vector from the solved unknowns plus boundary data."""
        full = np.zeros(self.space.n_dofs)
        full[self.dirichlet_dofs] = self.dirichlet_values
        full[self.free_to_global] = x_free
        return full


def _scatter(dofs, local, n, group=None):
    """Sum element matrices into a CSR matrix, chunked to bound memory.

    With ``group`` given, item i uses ``local[group[i]]``.
    """
    k = dofs.shape[1]
    step = max(1, _CHUNK_ENTRIES // (k * k))
    total = sp.csr_matrix((n, n))
    for start in range(0, dofs.shape[0], step):
        d = dofs[start : start + step]
        block = local[start : start + step] if group is None else local[group[start : start + step]]
        rows = np.broadcast_to(d[:, :, None], (len(d), k, k)).ravel()
        cols = np.broadcast_to(d[:, None, :], (len(d), k, k)).ravel()
        total = total + sp.coo_matrix((block.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    total.sum_duplicates()
    total.sort_indices()
    return total


def _cell_rule(space):
    return cell_rule(space.mesh.cell_kind, 2 * space.degree + 2)


def _stiffness_by_group(space):
    geom = space.geometry
    pts, wts = _cell_rule(space)
    _, ref_grads = space.element.tabulate(pts)
    inv = geom.inv_jacobian[geom.group_rep]
    det = geom.det[geom.group_rep]
    G = np.einsum("qim,gmk->gqik", ref_grads, inv)
    return np.einsum("q,g,gqik,gqjk->gij", wts, det, G, G)


def stiffness_matrix(space: FunctionSpace) -> sp.csr_matrix:
    """Broken stiffness matrix sum_E int_E grad v . grad u over all DoFs."""
    K = _stiffness_by_group(space)
    return _scatter(space.dof_map, K, space.n_dofs, space.geometry.group)


SOURCE_MODES = ("quadrature", "interpolated")


def _mass_by_group(space):
    geom = space.geometry
    pts, wts = _cell_rule(space)
    vals, _ = space.element.tabulate(pts)
    return np.einsum("q,g,qi,qj->gij", wts, geom.det[geom.group_rep], vals, vals)


def load_vector(space: FunctionSpace, source: Callable, mode: str = "quadrature") -> np.ndarray:
    """Load vector int f v.

    ``mode="interpolated"`` replaces f by its nodal interpolant in the space
    before integrating, which is what Firedrake/FEniCS scripts do when the
    source is interpolated into a Function.
    """
    geom = space.geometry
    cells = np.arange(space.mesh.n_cells)
    if mode == "quadrature":
        pts, wts = _cell_rule(space)
        vals, _ = space.element.tabulate(pts)
        fq = source(geom.to_physical(cells, pts))
        local = np.einsum("cq,q,qi->ci", fq, wts, vals) * geom.det[:, None]
    elif mode == "interpolated":
        fn = source(geom.to_physical(cells, space.element.nodes))
        local = np.einsum("cij,cj->ci", _mass_by_group(space)[geom.group], fn)
    else:
        raise ValueError(f"unknown source mode {mode!r}; choose from {SOURCE_MODES}")
    return np.bincount(space.dof_map.ravel(), weights=local.ravel(), minlength=space.n_dofs)


def _check_case(space, case):
    if space.dim != case.dim:
        raise DimensionError(f"{case.id} is {case.dim}D but the mesh is {space.dim}D")


def assemble_cg(space: FunctionSpace, case: MmsCase, source: str = "quadrature") -> AssembledSystem:
    """Continuous Galerkin system with Dirichlet DoFs eliminated."""
    if space.family != "CG":
        raise CapabilityError("assemble_cg requires a CG space")
    _check_case(space, case)
    A = stiffness_matrix(space)
    F = load_vector(space, case.source, source)
    fixed = np.asarray(space.constrained_dofs)
    free = np.setdiff1d(np.arange(space.n_dofs), fixed)
    u0 = np.asarray(case.exact(space.dof_coords[fixed]), dtype=float)
    A_ff = A[free][:, free].tocsr()
    rhs = F[free] - A[free][:, fixed] @ u0
    A_ff.sort_indices()
    return AssembledSystem(A_ff, rhs, free, fixed, u0, space)


def sip_penalty(p: int, d: int):
    """Interior and boundary penalty coefficients ``(sigma, gamma)``."""
    sigma = (p + 1) * (p + d) / (2 * d)
    return sigma, 2 * sigma


def _facet_frames(mesh, cells, local):
    """Outward unit normals and measures of facets (cell, local facet)."""
    fv = mesh.vertices[mesh.facet_vertices(cells, local)]
    if mesh.dim == 2:
        t = fv[:, 1] - fv[:, 0]
        normal = np.column_stack([t[:, 1], -t[:, 0]])
    else:
        normal = np.cross(fv[:, 1] - fv[:, 0], fv[:, 3] - fv[:, 0])
    measure = np.linalg.norm(normal, axis=1)
    normal = normal / measure[:, None]
    outward = fv.mean(axis=1) - mesh.cell_coords()[cells].mean(axis=1)
    flip = np.einsum("fk,fk->f", normal, outward) < 0
    normal[flip] *= -1
    return normal, measure


def _unique_rows(*columns):
    key = np.column_stack([np.round(np.asarray(c, dtype=float).reshape(len(c), -1), 9) for c in columns])
    _, rep, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    return rep, inv.ravel()


def assemble_sip_dg(space: FunctionSpace, case: MmsCase, source: str = "quadrature") -> AssembledSystem:
    """Symmetric interior penalty DG system.

    Penalty weights are ``sigma * mean(|dE|/|E|)`` over the two cells of an
    interior facet and ``gamma * |dE|/|E|`` on Dirichlet facets, where |dE|
    is the cell boundary measure.  Dirichlet data enter weakly.
    """
    if space.family != "DG":
        raise CapabilityError("assemble_sip_dg requires a DG space")
    _check_case(space, case)
    mesh, geom, el = space.mesh, space.geometry, space.element
    p, d = space.degree, space.dim
    sigma, gamma = sip_penalty(p, d)
    nb = el.n_basis
    table = mesh.local_facets
    fpts, fwts = facet_rule(mesh.cell_kind, 2 * p + 2)
    surface_ratio = mesh.cell_boundary_measures() / mesh.cell_measures()

    A = stiffness_matrix(space)
    F = load_vector(space, case.source, source)

    # interior facets
    inter = mesh.interior_facets
    if len(inter):
        ca, fa, cb, fb = inter.T
        normal, emeas = _facet_frames(mesh, ca, fa)
        kappa = 0.5 * (surface_ratio[ca] + surface_ratio[cb])
        xi_a = np.stack([el.facet_points(table[f], fpts) for f in range(len(table))])[fa]
        x = geom.to_physical(ca, xi_a)
        xi_b = geom.to_reference(cb, x)
        rep, grp = _unique_rows(fa, geom.group[ca], geom.group[cb], xi_b, normal, emeas, kappa)
        local = np.empty((len(rep), 2 * nb, 2 * nb))
        for g, r in enumerate(rep):
            va, ga = el.tabulate(xi_a[r])
            vb, gb = el.tabulate(xi_b[r])
            ga = ga @ geom.inv_jacobian[ca[r]]
            gb = gb @ geom.inv_jacobian[cb[r]]
            n = normal[r]
            jump = np.concatenate([va[:, :, None] * n, -vb[:, :, None] * n], axis=1)
            avg = 0.5 * np.concatenate([ga, gb], axis=1)
            local[g] = emeas[r] * np.einsum(
                "q,qik,qjk->ij", fwts, -jump, avg
            )
            local[g] += local[g].T.copy()
            local[g] += emeas[r] * sigma * kappa[r] * np.einsum("q,qik,qjk->ij", fwts, jump, jump)
        dofs = np.concatenate([space.dof_map[ca], space.dof_map[cb]], axis=1)
        A = A + _scatter(dofs, local, space.n_dofs, grp)

    # Dirichlet facets
    bc, bf = mesh.boundary_facets.T
    normal, emeas = _facet_frames(mesh, bc, bf)
    kappa = surface_ratio[bc]
    xi = np.stack([el.facet_points(table[f], fpts) for f in range(len(table))])[bf]
    x = geom.to_physical(bc, xi)
    u0 = case.exact(x)
    rep, grp = _unique_rows(bf, geom.group[bc], normal, emeas, kappa)
    local = np.empty((len(rep), nb, nb))
    rhs_coef = np.empty((len(rep), len(fwts), nb))
    for g, r in enumerate(rep):
        v, gr = el.tabulate(xi[r])
        gr = gr @ geom.inv_jacobian[bc[r]]
        dn = gr @ normal[r]
        m = -np.einsum("q,qi,qj->ij", fwts, v, dn)
        local[g] = emeas[r] * (m + m.T + gamma * kappa[r] * np.einsum("q,qi,qj->ij", fwts, v, v))
        rhs_coef[g] = emeas[r] * fwts[:, None] * (gamma * kappa[r] * v - dn)
    A = A + _scatter(space.dof_map[bc], local, space.n_dofs, grp)
    rhs_local = np.einsum("fq,fqi->fi", u0, rhs_coef[grp])
    F = F + np.bincount(space.dof_map[bc].ravel(), weights=rhs_local.ravel(), minlength=space.n_dofs)

    A = A.tocsr()
    A.sum_duplicates()
    A.sort_indices()
    all_dofs = np.arange(space.n_dofs)
    empty = np.zeros(0, dtype=np.int64)
    return AssembledSystem(A, F, all_dofs, empty, np.zeros(0), space)


def assemble(space: FunctionSpace, case: MmsCase, source: str = "quadrature") -> AssembledSystem:
    if space.family == "CG":
        return assemble_cg(space, case, source)
    return assemble_sip_dg(space, case, source)
