"""Surface meshes of six-node triangles: GMSH 2.2 input/output, an
icosphere generator and the six-way split into flat three-node panels."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .element import CurvedTriangle, interpolate, surface_jacobian
from .errors import MeshFormatError

#: GMSH element type of the six-node triangle
MSH_TRIANGLE6 = 9
#: GMSH element type of the three-node triangle
MSH_TRIANGLE3 = 2


@dataclass
class SurfaceMesh:
    """Nodes and element connectivity of a triangulated surface.

    ``elements`` has six columns (corners, then the edge nodes of edges
    1-2, 2-3, 3-1) for second-order meshes and three columns for flat
    linear meshes.
    """

    nodes: np.ndarray
    elements: np.ndarray
    _adjacency: list | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.nodes = np.array(self.nodes, dtype=float)
        self.elements = np.array(self.elements, dtype=np.int64)
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 3:
            raise ValueError(f"nodes must be N x 3, got shape {self.nodes.shape}")
        if self.elements.ndim != 2 or self.elements.shape[1] not in (3, 6):
            raise ValueError(f"elements must be P x 6 or P x 3, got shape {self.elements.shape}")
        if self.elements.size and (self.elements.min() < 0
                                   or self.elements.max() >= len(self.nodes)):
            raise ValueError("element node index out of range")
        for arr in (self.nodes, self.elements):
            arr.setflags(write=False)

    @property
    def order(self) -> int:
        """2 for six-node elements, 1 for flat three-node elements."""
        return 2 if self.elements.shape[1] == 6 else 1

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def element(self, j: int) -> CurvedTriangle:
        """Geometry of element ``j``; flat panels get chord-midpoint edge nodes."""
        idx = self.elements[j]
        if self.order == 2:
            return CurvedTriangle(self.nodes[idx])
        return CurvedTriangle.flat(self.nodes[idx])

    @property
    def adjacency(self) -> list[list[int]]:
        """Elements touching each node."""
        if self._adjacency is None:
            adj = [[] for _ in range(self.n_nodes)]
            for j, idx in enumerate(self.elements):
                for i in idx:
                    adj[i].append(j)
            self._adjacency = adj
        return self._adjacency

    def area(self, rule=None) -> float:
        """Surface area, integrated with ``rule`` (default: 25-point rule)."""
        from .quadrature import fallback_rule

        rule = fallback_rule() if rule is None else rule
        total = 0.0
        for j in range(self.n_elements):
            J, _ = surface_jacobian(self.element(j), rule.xi, rule.eta)
            total += float(J @ rule.w)
        return total


# reference coordinates of the nodes of each element column
_REF6 = np.array([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.5, 0.0), (0.5, 0.5), (0.0, 0.5)])


def node_normals(mesh: SurfaceMesh) -> np.ndarray:
    """Unit normal at each node: area-weighted mean of the adjacent element
    normals evaluated at that node."""
    from .quadrature import fallback_rule

    rule = fallback_rule()
    acc = np.zeros((mesh.n_nodes, 3))
    ref = _REF6[: mesh.elements.shape[1]]
    for j, idx in enumerate(mesh.elements):
        tri = mesh.element(j)
        J, _ = surface_jacobian(tri, rule.xi, rule.eta)
        area = float(J @ rule.w)
        _, n = surface_jacobian(tri, ref[:, 0], ref[:, 1])
        acc[idx] += area * n
    norms = np.linalg.norm(acc, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("node without adjacent elements")
    return acc / norms[:, None]


def _edge_signatures(mesh: SurfaceMesh):
    # map from sorted corner pair to (element, edge node triple)
    sig = {}
    for j, idx in enumerate(mesh.elements):
        for k in range(3):
            a, b = idx[k], idx[(k + 1) % 3]
            mid = idx[3 + k] if mesh.order == 2 else -1
            sig.setdefault((min(a, b), max(a, b)), []).append((j, mid))
    return sig


def is_conforming(mesh: SurfaceMesh) -> bool:
    """True if every edge is shared by exactly two elements with the same
    edge node."""
    for users in _edge_signatures(mesh).values():
        if len(users) != 2 or users[0][1] != users[1][1]:
            return False
    return True


def is_outward(mesh: SurfaceMesh) -> bool:
    """True if all centroid normals point away from the node centroid
    (meaningful for star-shaped bodies)."""
    centre = mesh.nodes.mean(axis=0)
    for j in range(mesh.n_elements):
        tri = mesh.element(j)
        y = interpolate(tri, 1.0 / 3.0, 1.0 / 3.0)
        _, n = surface_jacobian(tri, 1.0 / 3.0, 1.0 / 3.0)
        if float(n @ (y - centre)) <= 0.0:
            return False
    return True


def _icosahedron():
    t = (1.0 + 5.0 ** 0.5) / 2.0
    v = np.array([(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
                  (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
                  (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)], dtype=float)
    f = np.array([(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
                  (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
                  (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
                  (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)])
    return v / np.linalg.norm(v, axis=1)[:, None], f


def _midpoint_nodes(verts, faces):
    # one new vertex per edge; returns (vertices, P x 3 edge-node indices)
    verts = list(map(tuple, verts))
    index = {}
    mids = np.empty((len(faces), 3), dtype=np.int64)
    for j, f in enumerate(faces):
        for k in range(3):
            a, b = int(f[k]), int(f[(k + 1) % 3])
            key = (min(a, b), max(a, b))
            if key not in index:
                p = 0.5 * (np.asarray(verts[a]) + np.asarray(verts[b]))
                index[key] = len(verts)
                verts.append(tuple(p / np.linalg.norm(p)))
            mids[j, k] = index[key]
    return np.array(verts), mids


def sphere_mesh(refinement: int) -> SurfaceMesh:
    """Unit-sphere mesh of ``20 * 4**refinement`` six-node triangles.

    The icosahedron is subdivided ``refinement`` times; all nodes, including
    the edge nodes, lie on the sphere and the elements are outward oriented.
    """
    if refinement < 0:
        raise ValueError("refinement must be non-negative")
    verts, faces = _icosahedron()
    for _ in range(refinement):
        verts, m = _midpoint_nodes(verts, faces)
        a, b, c = faces.T
        ab, bc, ca = m.T
        faces = np.concatenate([np.stack([a, ab, ca], 1), np.stack([ab, b, bc], 1),
                                np.stack([ca, bc, c], 1), np.stack([ab, bc, ca], 1)])
    verts, mids = _midpoint_nodes(verts, faces)
    return SurfaceMesh(verts, np.hstack([faces, mids]))


# six flat triangles fanning from the centroid (column 6) over the element
# nodes, counter-clockwise in reference coordinates
_SPLIT = ((0, 3, 6), (3, 1, 6), (1, 4, 6), (4, 2, 6), (2, 5, 6), (5, 0, 6))


def split_to_linear(mesh: SurfaceMesh) -> SurfaceMesh:
    """Replace every six-node element by six flat triangles on its nodes and
    its centroid (the image of xi = eta = 1/3), which is added as a node."""
    if mesh.order != 2:
        raise ValueError("split_to_linear needs a six-node mesh")
    centroids = np.array([interpolate(mesh.element(j), 1.0 / 3.0, 1.0 / 3.0)
                          for j in range(mesh.n_elements)]).reshape(-1, 3)
    nodes = np.vstack([mesh.nodes, centroids])
    elements = []
    for j, idx in enumerate(mesh.elements):
        ext = list(idx) + [mesh.n_nodes + j]
        elements += [[ext[a], ext[b], ext[c]] for a, b, c in _SPLIT]
    return SurfaceMesh(nodes, np.array(elements, dtype=np.int64).reshape(-1, 3))


def _sections(lines):
    out = {}
    name = None
    body = []
    for raw in lines:
        line = raw.strip()
        if not line:
            continue
        if line.startswith("$End"):
            if name is None or line[4:] != name:
                raise MeshFormatError(f"unexpected {line}")
            out[name] = body
            name = None
        elif line.startswith("$"):
            if name is not None:
                raise MeshFormatError(f"section {name} not closed before {line}")
            name = line[1:]
            body = []
        elif name is not None:
            body.append(line)
    if name is not None:
        raise MeshFormatError(f"section {name} not closed")
    return out


def read_msh(path) -> SurfaceMesh:
    """Load the six-node triangles of a GMSH 2.2 ASCII file.

    Other element types are skipped with a warning.  Only nodes used by the
    triangles are kept, in order of first appearance in the node section.
    """
    text = Path(path).read_text()
    sec = _sections(text.splitlines())
    for name in ("MeshFormat", "Nodes", "Elements"):
        if name not in sec:
            raise MeshFormatError(f"missing ${name} section")
    fmt = sec["MeshFormat"][0].split()
    if not fmt or not fmt[0].startswith("2"):
        raise MeshFormatError(f"only GMSH format 2.2 is supported, got {fmt[:1]}")
    if len(fmt) > 1 and fmt[1] != "0":
        raise MeshFormatError("binary GMSH files are not supported")
    try:
        n = int(sec["Nodes"][0])
        ids = {}
        coords = np.empty((n, 3))
        for k, line in enumerate(sec["Nodes"][1:n + 1]):
            parts = line.split()
            ids[int(parts[0])] = k
            coords[k] = [float(v) for v in parts[1:4]]
        if len(ids) != n:
            raise MeshFormatError("node count does not match $Nodes header")
        m = int(sec["Elements"][0])
        rows = sec["Elements"][1:m + 1]
        if len(rows) != m:
            raise MeshFormatError("element count does not match $Elements header")
        tris = []
        skipped = {}
        for line in rows:
            parts = [int(v) for v in line.split()]
            etype, ntags = parts[1], parts[2]
            conn = parts[3 + ntags:]
            if etype != MSH_TRIANGLE6:
                skipped[etype] = skipped.get(etype, 0) + 1
                continue
            if len(conn) != 6:
                raise MeshFormatError(f"six-node triangle with {len(conn)} nodes")
            tris.append([ids[c] for c in conn])
    except (ValueError, IndexError, KeyError) as exc:
        raise MeshFormatError(f"malformed GMSH file: {exc}") from exc
    if skipped:
        warnings.warn(f"skipped GMSH element types {sorted(skipped)} "
                      f"({sum(skipped.values())} elements)", stacklevel=2)
    if not tris:
        raise MeshFormatError("no six-node triangles (type 9) found")
    tris = np.array(tris, dtype=np.int64)
    used = np.unique(tris)
    renumber = np.full(n, -1, dtype=np.int64)
    renumber[used] = np.arange(len(used))
    return SurfaceMesh(coords[used], renumber[tris])


def write_msh(mesh: SurfaceMesh, path) -> None:
    """Write ``mesh`` as GMSH 2.2 ASCII (types 9 or 2, one physical tag)."""
    etype = MSH_TRIANGLE6 if mesh.order == 2 else MSH_TRIANGLE3
    lines = ["$MeshFormat", "2.2 0 8", "$EndMeshFormat", "$Nodes", str(mesh.n_nodes)]
    lines += [f"{k + 1} {x!r} {y!r} {z!r}" for k, (x, y, z) in enumerate(mesh.nodes.tolist())]
    lines += ["$EndNodes", "$Elements", str(mesh.n_elements)]
    for j, idx in enumerate(mesh.elements):
        lines.append(f"{j + 1} {etype} 2 1 1 " + " ".join(str(i + 1) for i in idx))
    lines += ["$EndElements", ""]
    Path(path).write_text("\n".join(lines))
