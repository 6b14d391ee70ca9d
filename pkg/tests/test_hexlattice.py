import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from onetwo import hexlattice as hx


@pytest.mark.parametrize("k,n,verts,internal,boundary", [
    (1, 1, 6, 6, 6),
    (1, 2, 10, 11, 8),
    (2, 2, 16, 19, 10),
    (2, 3, 22, 27, 12),
])
def test_box_counts(k, n, verts, internal, boundary):
    g = hx.build_box(k, n)
    assert len(g.vertices) == verts
    assert len(g.internal) == internal
    assert len(g.boundary) == boundary
    assert len(g.faces) == k * n
    assert g.shape == ("box", k, n)


@given(st.integers(1, 3), st.integers(1, 3))
def test_box_structure(k, n):
    g = hx.build_box(k, n)
    # every region vertex has degree three
    assert all(len(inc) == 3 for inc in g.incident)
    # handshake: internal edges count twice, boundary edges once
    assert 3 * len(g.vertices) == 2 * len(g.internal) + len(g.boundary)
    assert len(g.vertices) == 2 * (k + 1) * (n + 1) - 2
    assert len(g.boundary) == 2 * (k + n) + 2
    for f in g.faces:
        assert len(f) == 6 and all(k_ in g.internal for k_ in f)
    assert set(g.classes) <= set(hx.CLASSES)


@given(st.integers(1, 3), st.integers(1, 3))
def test_classes_are_balanced_on_faces(k, n):
    g = hx.build_box(k, n)
    for f in g.faces:
        cls = [g.classes[e] for e in f]
        assert all(cls.count(c) == 2 for c in hx.CLASSES)


def test_edge_classes():
    assert hx.edge_class((0, 0), (1, 0)) == hx.HORIZONTAL
    assert hx.edge_class((0, 0), (0, 1)) == hx.NWSE
    assert hx.edge_class((0, 1), (0, 2)) == hx.NESW


def test_plane_embedding_has_unit_edges():
    g = hx.build_box(2, 2)
    for u, v in g.edges:
        a, b = hx.to_plane(hx.vertex_xy(u)), hx.to_plane(hx.vertex_xy(v))
        assert math.dist(a, b) == pytest.approx(1.0)


def test_cylinder():
    g = hx.build_cylinder(3, 1)
    assert g.topology == "cylinder"
    assert len(g.faces) == 3
    low, high = hx.cylinder_rims(g)
    assert len(low) == len(high) == 3
    assert set(low) | set(high) == set(g.boundary)
    assert all(len(inc) == 3 for inc in g.incident)


def test_parse_lattice():
    assert hx.parse_lattice("box:2,3").shape == ("box", 2, 3)
    assert hx.parse_lattice("square:2").shape == ("box", 2, 2)
    assert hx.parse_lattice("cylinder:3,1").shape == ("cylinder", 3, 1)
    with pytest.raises(hx.LatticeError):
        hx.parse_lattice("hex:1")


def test_face_grid():
    g = hx.build_box(2, 3)
    grid = hx.box_face_grid(g)
    assert len(grid) == 2 and all(len(r) == 3 for r in grid)
    assert sorted(f for r in grid for f in r) == list(range(6))


def test_incidence_graph_degrees():
    g = hx.build_box(2, 2)
    ig = hx.incidence_graph(g)
    assert all(ig.degree(("v", i)) == 3 for i in range(len(g.vertices)))
    # interior hexagons see all six of their angles
    for base in g.face_bases:
        assert ig.is_interior(base)
        assert ig.degree(("f", base)) == 6


def test_json_roundtrip_is_stable():
    g = hx.build_box(1, 2)
    assert g.dumps() == hx.build_box(1, 2).dumps()
