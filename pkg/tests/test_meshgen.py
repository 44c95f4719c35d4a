import numpy as np
import pytest
from hypothesis import given, strategies as st

from tasfem.exceptions import InvalidResolutionError
from tasfem.meshgen import refine_uniform, unit_cube, unit_square


def test_square_counts():
    q = unit_square(10)
    assert (q.n_cells, q.n_vertices) == (100, 121)
    t = unit_square(10, "triangle")
    assert (t.n_cells, t.n_vertices) == (200, 121)
    one = unit_square(1)
    assert (one.n_cells, one.n_vertices, len(one.boundary_facets)) == (1, 4, 4)


def test_cube_counts():
    c = unit_cube(30)
    assert (c.n_cells, c.n_vertices) == (27000, 29791)
    assert (unit_cube(1).n_cells, unit_cube(1).n_vertices) == (1, 8)
    two = unit_cube(2)
    assert two.n_cells == 8
    assert len(two.boundary_facets) == 24


def test_refine():
    assert refine_uniform(unit_square(10)).n_cells == 400
    assert refine_uniform(unit_square(10, "triangle")).n_cells == 800
    twice = refine_uniform(refine_uniform(unit_square(10)))
    ref = unit_square(40)
    assert set(map(tuple, np.round(twice.vertices, 14))) == set(map(tuple, np.round(ref.vertices, 14)))
    assert twice == ref


@pytest.mark.parametrize("n", [0, -1])
def test_bad_resolution(n):
    with pytest.raises(InvalidResolutionError):
        unit_square(n)
    with pytest.raises(InvalidResolutionError):
        unit_cube(n)


def test_bad_kind():
    with pytest.raises(ValueError):
        unit_square(2, "pentagon")


def _facet_incidence(mesh):
    counts = {}
    for c in range(mesh.n_cells):
        for lf in mesh.local_facets:
            key = tuple(sorted(mesh.cells[c, list(lf)]))
            counts[key] = counts.get(key, 0) + 1
    return counts


@given(n=st.integers(1, 6), kind=st.sampled_from(["triangle", "quadrilateral", "hexahedron"]))
def test_mesh_invariants(n, kind):
    mesh = unit_cube(min(n, 4)) if kind == "hexahedron" else unit_square(n, kind)
    d = mesh.dim
    assert np.all((mesh.vertices >= 0) & (mesh.vertices <= 1))
    expected = 2 * n**2 if kind == "triangle" else mesh.n_per_axis**d
    assert mesh.n_cells == expected
    meas = mesh.cell_measures()
    assert np.all(meas > 0)
    if kind != "triangle":
        np.testing.assert_allclose(meas, mesh.h**d, rtol=1e-14)
    assert meas.sum() == pytest.approx(1.0, rel=1e-13)
    counts = _facet_incidence(mesh)
    assert set(counts.values()) <= {1, 2}
    assert sum(v == 2 for v in counts.values()) == len(mesh.interior_facets)
    assert sum(v == 1 for v in counts.values()) == len(mesh.boundary_facets)
    # interior facet pairs really share their vertices
    for ca, fa, cb, fb in mesh.interior_facets:
        va = set(mesh.cells[ca, list(mesh.local_facets[fa])])
        vb = set(mesh.cells[cb, list(mesh.local_facets[fb])])
        assert va == vb
