"""Sphere meshes, the linear split and GMSH 2.2 input/output."""
import math
import warnings

import numpy as np
import pytest

from curvedquad.errors import MeshFormatError
from curvedquad.mesh import (SurfaceMesh, is_conforming, is_outward, node_normals, read_msh,
                             sphere_mesh, split_to_linear, write_msh)
from curvedquad.samples import DEMO_NODES

SINGLE = """$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
6
1 0 0 0
2 1 0 0
3 0 1 0
4 0.5 0 0
5 0.5 0.5 0
6 0 0.5 0
$EndNodes
$Elements
1
1 9 2 1 1 1 2 3 4 5 6
$EndElements
"""

MIXED = """$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
8
1 0 0 0
2 1 0 0
3 0 1 0
4 0.5 0 0
5 0.5 0.5 0
6 0 0.5 0
7 5 5 5
8 6 6 6
$EndNodes
$Elements
3
1 1 2 1 1 7 8
2 9 2 1 1 1 2 3 4 5 6
3 15 2 1 1 7
$EndElements
"""


def write(tmp_path, text, name="mesh.msh"):
    path = tmp_path / name
    path.write_text(text)
    return path


@pytest.mark.parametrize("r", [0, 1, 2])
def test_sphere_counts(r):
    mesh = sphere_mesh(r)
    assert mesh.n_elements == 20 * 4 ** r
    # Euler: V - E + F = 2 with E = 3F/2; nodes are vertices plus edges
    assert mesh.n_nodes == (2 + mesh.n_elements // 2) + 3 * mesh.n_elements // 2
    assert mesh.order == 2


def test_sphere_nodes_on_unit_sphere():
    mesh = sphere_mesh(2)
    assert np.max(np.abs(np.linalg.norm(mesh.nodes, axis=1) - 1.0)) < 1e-14


def test_sphere_is_conforming_and_outward():
    for r in (0, 1, 2):
        mesh = sphere_mesh(r)
        assert is_conforming(mesh)
        assert is_outward(mesh)


def test_sphere_area():
    areas = [sphere_mesh(r).area() for r in (0, 1, 2)]
    assert abs(areas[2] - 4 * math.pi) < 1e-4 * 4 * math.pi
    assert abs(areas[2] - 4 * math.pi) < abs(areas[1] - 4 * math.pi) < abs(areas[0] - 4 * math.pi)


def test_split_areas_increase_from_below():
    prev = 0.0
    for r in (0, 1, 2):
        mesh = sphere_mesh(r)
        flat = split_to_linear(mesh)
        a = flat.area()
        # inscribed facets
        assert a < mesh.area() and a < 4 * math.pi
        assert a > prev
        prev = a


def test_split_counts_and_nodes():
    mesh = sphere_mesh(1)
    flat = split_to_linear(mesh)
    assert flat.n_elements == 6 * mesh.n_elements
    assert flat.n_nodes == mesh.n_nodes + mesh.n_elements
    assert np.array_equal(flat.nodes[:mesh.n_nodes], mesh.nodes)
    assert flat.order == 1
    assert is_outward(flat)
    with pytest.raises(ValueError):
        split_to_linear(flat)


def test_split_tiles_a_flat_element():
    nodes = np.array([[0, 0, 0], [2, 0, 0], [0, 1, 0], [1, 0, 0], [1, 0.5, 0], [0, 0.5, 0]],
                     dtype=float)
    mesh = SurfaceMesh(nodes, np.array([[0, 1, 2, 3, 4, 5]]))
    flat = split_to_linear(mesh)
    assert flat.n_elements == 6
    assert abs(flat.area() - 1.0) < 1e-12


def test_node_normals_on_sphere():
    mesh = sphere_mesh(1)
    n = node_normals(mesh)
    assert np.allclose(np.linalg.norm(n, axis=1), 1.0)
    assert np.min(np.sum(n * mesh.nodes, axis=1)) > 0.99


def test_mesh_is_read_only():
    mesh = sphere_mesh(0)
    with pytest.raises(ValueError):
        mesh.nodes[0, 0] = 1.0
    with pytest.raises(ValueError):
        SurfaceMesh(mesh.nodes, mesh.elements + 1000)


def test_read_single_element(tmp_path):
    mesh = read_msh(write(tmp_path, SINGLE))
    assert (mesh.n_elements, mesh.n_nodes) == (1, 6)
    assert np.array_equal(mesh.element(0).nodes[4], [0.5, 0.5, 0.0])


def test_read_mixed_file_skips_other_types(tmp_path):
    with pytest.warns(UserWarning, match="skipped"):
        mesh = read_msh(write(tmp_path, MIXED))
    assert (mesh.n_elements, mesh.n_nodes) == (1, 6)


@pytest.mark.parametrize("broken", [
    SINGLE.replace("$EndNodes\n", ""),
    SINGLE.replace("2.2 0 8", "4.1 0 8"),
    SINGLE.replace("2.2 0 8", "2.2 1 8"),
    SINGLE.replace("\n6\n1 0 0 0", "\n7\n1 0 0 0"),
    SINGLE.replace("1 9 2 1 1 1 2 3 4 5 6", "1 9 2 1 1 1 2 3 4 5 99"),
    SINGLE.replace("1 9 2 1 1 1 2 3 4 5 6", "1 9 2 1 1 1 2 3 4 5"),
    SINGLE.replace("1 9 2 1 1 1 2 3 4 5 6", "1 2 2 1 1 1 2 3"),
    SINGLE.replace("$Elements", "$Elementz"),
])
def test_malformed_files(tmp_path, broken):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(MeshFormatError):
            read_msh(write(tmp_path, broken))


@pytest.mark.parametrize("r", [0, 2])
def test_round_trip(tmp_path, r):
    mesh = sphere_mesh(r)
    path = tmp_path / "sphere.msh"
    write_msh(mesh, path)
    back = read_msh(path)
    assert np.array_equal(back.nodes, mesh.nodes)
    assert np.array_equal(back.elements, mesh.elements)
    assert back.n_elements == 20 * 4 ** r


def test_round_trip_of_demo_element(tmp_path):
    mesh = SurfaceMesh(DEMO_NODES, np.arange(6)[None])
    path = tmp_path / "demo.msh"
    write_msh(mesh, path)
    assert np.array_equal(read_msh(path).nodes, DEMO_NODES)
