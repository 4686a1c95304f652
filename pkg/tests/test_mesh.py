"""Triangulation validation, square-mesh generators, mesh IO, hat functions."""

from fractions import Fraction

import pytest

from hodgefem.forms import PolyForm, codifferential_green, exterior_derivative
from hodgefem.mesh import (
    CRISSCROSS,
    DIAGONAL,
    LAGRANGE_FULL,
    LAGRANGE_ZERO,
    Triangulation,
    format_mesh,
    generate_square_mesh,
    parse_mesh,
    read_mesh,
    whitney_basis,
    write_mesh,
)


def test_generator_counts():
    tri = generate_square_mesh(2, DIAGONAL)
    assert len(tri.vertices) == 9
    assert len(tri.cells) == 8
    assert len(tri.edges) == 16
    assert tri.interior_vertices == [4]
    assert tri.euler_characteristic == 1
    assert tri.warnings == []

    tri4 = generate_square_mesh(4, DIAGONAL)
    assert len(tri4.vertices) == 25
    assert len(tri4.cells) == 32
    assert len(tri4.interior_vertices) == 9

    cc = generate_square_mesh(3, CRISSCROSS)
    assert len(cc.vertices) == 16 + 9
    assert len(cc.cells) == 36
    assert cc.euler_characteristic == 1


def test_generator_rejects_bad_arguments():
    with pytest.raises(ValueError, match="must be an integer >= 2"):
        generate_square_mesh(1)
    with pytest.raises(ValueError, match="unknown mesh pattern"):
        generate_square_mesh(2, "union_jack")


def test_mesh_size_halves_under_refinement():
    h2 = generate_square_mesh(2).h
    h4 = generate_square_mesh(4).h
    assert h4 == pytest.approx(h2 / 2, rel=1e-12)


def test_vertex_degrees_on_diagonal_mesh():
    # the generator flips two corner squares, which pushes the center
    # vertex of the 2x2 mesh up to degree 8
    tri = generate_square_mesh(2, DIAGONAL)
    assert tri.vertex_degree(4) == 8
    # away from the flipped corners the interior degree is the usual 6
    tri4 = generate_square_mesh(4, DIAGONAL)
    assert tri4.vertex_degree(12) == 6
    assert 12 in tri4.interior_vertices


def test_patch_fan_is_edge_connected():
    tri = generate_square_mesh(4, DIAGONAL)
    for v, fan in tri.patches.items():
        assert sorted(fan) == sorted(set(fan))
        for a, b in zip(fan, fan[1:]):
            shared = set(tri.cells[a]) & set(tri.cells[b])
            assert v in shared and len(shared) == 2


def test_cell_slot_lookup():
    tri = generate_square_mesh(2)
    c = tri.patches[4][0]
    slot = tri.cell_slot(c, 4)
    assert tri.cells[c][slot] == 4
    with pytest.raises(ValueError, match="not in cell"):
        tri.cell_slot(c, 8 if 8 not in tri.cells[c] else 0)


def test_orientation_is_normalized():
    # clockwise input comes out counterclockwise
    tri = Triangulation([(0, 0), (1, 0), (0, 1)], [(0, 2, 1)])
    a, b, c = (tri.vertices[v] for v in tri.cells[0])
    area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    assert area2 > 0
    assert tri.simplex(0).volume == Fraction(1, 2)
    assert "mesh has no interior vertices" in tri.warnings


def test_validation_rejects_broken_input():
    with pytest.raises(ValueError, match="vertex 2 duplicates vertex 0"):
        Triangulation([(0, 0), (1, 0), (0, 0)], [(0, 1, 2)])
    with pytest.raises(ValueError, match="cell 1 duplicates cell 0"):
        Triangulation([(0, 0), (1, 0), (0, 1)], [(0, 1, 2), (1, 2, 0)])
    with pytest.raises(ValueError, match="three distinct vertices"):
        Triangulation([(0, 0), (1, 0), (0, 1)], [(0, 1, 1)])
    with pytest.raises(ValueError, match="references missing vertex 3"):
        Triangulation([(0, 0), (1, 0), (0, 1)], [(0, 1, 3)])
    with pytest.raises(ValueError, match="degenerate"):
        Triangulation([(0, 0), (1, 0), (2, 0)], [(0, 1, 2)])
    with pytest.raises(ValueError, match="vertex 3 is not referenced"):
        Triangulation([(0, 0), (1, 0), (0, 1), (5, 5)], [(0, 1, 2)])


def test_validation_rejects_overshared_edge():
    pts = [(0, 0), (1, 0), (0, 1), (1, 1), (Fraction(1, 2), -1)]
    cells = [(0, 1, 2), (0, 1, 3), (0, 1, 4)]
    with pytest.raises(ValueError, match=r"edge \(0, 1\) is shared by more than two"):
        Triangulation(pts, cells)


def test_validation_rejects_hanging_vertex():
    # vertex 4 splits edge (0, 1) of the big triangle
    pts = [(0, 0), (2, 0), (2, 2), (0, 2), (1, 0), (1, -1)]
    cells = [(0, 1, 2), (0, 2, 3), (0, 4, 5)]
    with pytest.raises(ValueError, match=r"vertex 4 lies inside edge \(0, 1\)"):
        Triangulation(pts, cells)


def test_validation_rejects_isolated_boundary_vertex():
    # 2x2 grid with all diagonals parallel: corner vertex 2 only sees
    # other boundary vertices
    def gid(i, j):
        return j * 3 + i

    pts = [(Fraction(i, 2), Fraction(j, 2)) for j in range(3) for i in range(3)]
    cells = []
    for j in range(2):
        for i in range(2):
            bl, br = gid(i, j), gid(i + 1, j)
            tr, tl = gid(i + 1, j + 1), gid(i, j + 1)
            cells.extend([(bl, br, tr), (bl, tr, tl)])
    with pytest.raises(ValueError, match="boundary vertex 2 has no edge to an interior"):
        Triangulation(pts, cells)


def test_validation_rejects_disconnected_mesh():
    pts = [(0, 0), (1, 0), (0, 1), (5, 5), (6, 5), (5, 6)]
    with pytest.raises(ValueError, match="not edge-connected"):
        Triangulation(pts, [(0, 1, 2), (3, 4, 5)])


def test_format_round_trip_is_exact():
    tri = generate_square_mesh(3, DIAGONAL)
    text = format_mesh(tri)
    assert "1/3" in text  # thirds have no finite decimal form
    back = parse_mesh(text)
    assert back.vertices == tri.vertices
    assert back.cells == tri.cells
    assert format_mesh(back) == text

    tri2 = generate_square_mesh(2, DIAGONAL)
    text2 = format_mesh(tri2)
    assert "0.5" in text2 and "/" not in text2


def test_file_round_trip(tmp_path):
    tri = generate_square_mesh(2, CRISSCROSS)
    path = tmp_path / "mesh.txt"
    write_mesh(tri, path)
    back = read_mesh(path)
    assert back.vertices == tri.vertices
    assert back.cells == tri.cells


def test_parse_accepts_comments_and_blank_lines():
    text = (
        "# unit triangle\nndim 2\n\nvertices 3\n0 0\n1 0\n0 1\n\n"
        "# one cell\ncells 1\n0 1 2\n"
    )
    tri = parse_mesh(text)
    assert len(tri.cells) == 1


def test_parse_errors_name_the_bad_entity():
    with pytest.raises(ValueError, match="first line must be 'ndim 2'"):
        parse_mesh("ndim 3\nvertices 0\ncells 0\n")
    with pytest.raises(ValueError, match="vertex count 'x' is not an integer"):
        parse_mesh("ndim 2\nvertices x\ncells 0\n")
    with pytest.raises(ValueError, match="vertex 1: bad coordinate token '1/0'"):
        parse_mesh("ndim 2\nvertices 3\n0 0\n1/0 0\n0 1\ncells 1\n0 1 2\n")
    with pytest.raises(ValueError, match="cell 0: expected three vertex ids"):
        parse_mesh("ndim 2\nvertices 3\n0 0\n1 0\n0 1\ncells 1\n0 1\n")
    with pytest.raises(ValueError, match="ended while expecting cell 0"):
        parse_mesh("ndim 2\nvertices 3\n0 0\n1 0\n0 1\ncells 1\n")
    with pytest.raises(ValueError, match="unexpected trailing content"):
        parse_mesh("ndim 2\nvertices 3\n0 0\n1 0\n0 1\ncells 1\n0 1 2\n9 9 9\n")


def test_hats_partition_unity_and_interpolate_vertices():
    tri = generate_square_mesh(2, DIAGONAL)
    space = whitney_basis(tri, LAGRANGE_FULL)
    assert space.dim == 9
    for c in range(len(tri.cells)):
        hats = space.cell_hats(c)
        total = hats[0] + hats[1] + hats[2]
        assert total.terms == {(0, 0): Fraction(1)}
        s = tri.simplex(c)
        for i, v in enumerate(tri.cells[c]):
            centered = tuple(
                tri.vertices[v][j] - s.barycenter[j] for j in range(2)
            )
            for i2 in range(3):
                expect = Fraction(1 if i2 == i else 0)
                assert hats[i2](centered) == expect


def test_zero_kind_keeps_interior_vertices_only():
    tri = generate_square_mesh(4, DIAGONAL)
    full = whitney_basis(tri, LAGRANGE_FULL)
    zero = whitney_basis(tri, LAGRANGE_ZERO)
    assert full.dim == 25
    assert zero.dim == 9
    assert zero.dof_vertices == tri.interior_vertices
    assert all(zero.index_of[v] == i for i, v in enumerate(zero.dof_vertices))
    with pytest.raises(ValueError, match="unknown Whitney space kind"):
        whitney_basis(tri, "serendipity")


def test_hat_form_wrappers_match_exterior_calculus():
    tri = generate_square_mesh(2, DIAGONAL)
    space = whitney_basis(tri, LAGRANGE_FULL)
    for c in (0, 3):
        for slot in range(3):
            grad = exterior_derivative(space.hat_form(c, slot))
            assert grad == space.grad_hat(c, slot)
            vol = space.hat_volume_form(c, slot)
            assert isinstance(vol, PolyForm) and vol.k == 2
            rot_grad = codifferential_green(vol)
            assert rot_grad == space.delta_hat_volume(c, slot)
