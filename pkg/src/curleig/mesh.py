"""Closed oriented triangulated surfaces with an intrinsic (edge-length) metric.

The mesh is the discrete stand-in for a closed orientable Riemannian surface.
The metric is *intrinsic*: a positive length per edge, decoupled from the
embedding, so that conformal changes act on lengths alone via the discrete
conformal rule ``l_ij = exp((u_i + u_j)/2) * l0_ij``.  Vertex positions are
kept for I/O and visualization only.

Conventions fixed here and relied on everywhere else:

* edges are stored once, oriented lexicographically (small index -> large);
* triangles keep their given winding, which must be globally consistent;
* all validation happens at construction time; instances are immutable.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DegenerateMetricError, InvalidParameterError, MeshError

__all__ = [
    "TriangleMesh",
    "ConformalFactor",
    "SurfaceTopology",
    "generate_flat_torus",
    "generate_icosphere",
    "load_mesh",
    "save_mesh",
    "topology",
    "effective_edge_lengths",
    "mesh_summary",
]


def _triangle_inequality_violations(lengths_per_face):
    """Indices of faces whose three side lengths violate the strict triangle
    inequality.  ``lengths_per_face`` has shape (F, 3)."""
    a, b, c = lengths_per_face.T
    bad = (a + b <= c) | (b + c <= a) | (c + a <= b)
    return np.nonzero(bad)[0]


class TriangleMesh:
    """A closed, oriented, manifold triangle mesh with per-edge metric.

    Parameters
    ----------
    vertices : (V, 3) array_like
        Embedding positions.  Used for default edge lengths and exports.
    triangles : (F, 3) array_like of int
        Vertex triples with globally consistent winding.
    edge_lengths : dict | float | None
        Intrinsic metric.  ``None`` takes lengths from the embedding; a dict
        maps ``(min_index, max_index)`` vertex pairs to lengths; a scalar
        assigns the same length to every edge.
    planar_coords : (V, 2) array_like, optional
        Periodic chart coordinates (flat-torus meshes only); enables the
        area-preserving flow machinery.
    box_size : float, optional
        Period of the planar chart in both directions.

    Attributes
    ----------
    vertices : (V, 3) ndarray
    triangles : (F, 3) ndarray
    edges : (E, 2) ndarray
        Oriented edges, ``edges[e, 0] < edges[e, 1]``.
    base_edge_lengths : (E,) ndarray
    face_edges : (F, 3) ndarray
        Edge index of (i->j, j->k, k->i) for each face ``(i, j, k)``.
    face_edge_signs : (F, 3) ndarray
        +1 where the face traverses the edge in its stored orientation.

    Raises
    ------
    MeshError
        If the mesh has boundary, is non-manifold, is non-orientable, or has
        inconsistent Euler characteristic.
    DegenerateMetricError
        If any face violates the strict triangle inequality.
    """

    def __init__(self, vertices, triangles, edge_lengths=None,
                 planar_coords=None, box_size=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError("vertices must have shape (V, 3)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshError("triangles must have shape (F, 3)")
        V = self.vertices.shape[0]
        if self.triangles.size and (self.triangles.min() < 0
                                    or self.triangles.max() >= V):
            raise MeshError("triangle index out of range")
        if np.any(self.triangles[:, 0] == self.triangles[:, 1]) or \
           np.any(self.triangles[:, 1] == self.triangles[:, 2]) or \
           np.any(self.triangles[:, 2] == self.triangles[:, 0]):
            bad = int(np.nonzero(
                (self.triangles[:, 0] == self.triangles[:, 1])
                | (self.triangles[:, 1] == self.triangles[:, 2])
                | (self.triangles[:, 2] == self.triangles[:, 0]))[0][0])
            raise MeshError(f"degenerate triangle {bad} repeats a vertex")

        self._build_edges()
        self._check_manifold()
        self._check_vertex_links()

        self.base_edge_lengths = self._resolve_lengths(edge_lengths)
        if np.any(self.base_edge_lengths <= 0):
            raise MeshError("edge lengths must be positive")
        bad = _triangle_inequality_violations(
            self.base_edge_lengths[self.face_edges])
        if bad.size:
            raise DegenerateMetricError(
                f"{bad.size} faces violate the triangle inequality "
                f"(first: face {int(bad[0])})", faces=bad)

        adj = coo_matrix(
            (np.ones(len(self.edges)), (self.edges[:, 0], self.edges[:, 1])),
            shape=(V, V))
        self.n_components = connected_components(
            adj, directed=False, return_labels=False)
        chi = self.euler_characteristic
        if chi % 2 != 0:
            raise MeshError(f"odd Euler characteristic {chi}")
        if self.n_components == 1 and chi > 2:
            raise MeshError(f"Euler characteristic {chi} exceeds 2")

        if planar_coords is not None:
            self.planar_coords = np.ascontiguousarray(planar_coords, float)
            self.box_size = float(box_size)
        else:
            self.planar_coords = None
            self.box_size = None

        for arr in (self.vertices, self.triangles, self.edges,
                    self.base_edge_lengths, self.face_edges,
                    self.face_edge_signs):
            arr.setflags(write=False)
        if self.planar_coords is not None:
            self.planar_coords.setflags(write=False)

    # -- construction helpers -------------------------------------------------

    def _build_edges(self):
        tri = self.triangles
        raw = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        und = np.sort(raw, axis=1)
        self.edges, inverse = np.unique(und, axis=0, return_inverse=True)
        F = tri.shape[0]
        self.face_edges = inverse.reshape(3, F).T.copy()
        self.face_edge_signs = np.where(raw[:, 0] < raw[:, 1], 1, -1) \
            .reshape(3, F).T.copy()
        self._directed = raw

    def _check_manifold(self):
        E = len(self.edges)
        counts = np.zeros(E, dtype=np.int64)
        np.add.at(counts, self.face_edges.ravel(), 1)
        if np.any(counts != 2):
            e = int(np.nonzero(counts != 2)[0][0])
            i, j = self.edges[e]
            if counts[e] < 2:
                raise MeshError(
                    f"open boundary: edge ({i}, {j}) has {counts[e]} face(s)")
            raise MeshError(
                f"non-manifold: edge ({i}, {j}) has {counts[e]} faces")
        # Orientability: each directed edge must occur exactly once.
        key = self._directed[:, 0] * len(self.vertices) + self._directed[:, 1]
        uniq, cnt = np.unique(key, return_counts=True)
        if np.any(cnt > 1):
            k = uniq[np.nonzero(cnt > 1)[0][0]]
            i, j = divmod(int(k), len(self.vertices))
            face = int(np.nonzero(key == k)[0][0]) % self.triangles.shape[0]
            raise MeshError(
                f"non-orientable: directed edge ({i}, {j}) traversed twice "
                f"(face {face} has inconsistent winding)")

    def _check_vertex_links(self):
        """Each vertex link must be a single cycle (no pinch points).

        Per-edge manifoldness does not rule out two cones meeting at a
        vertex, so connect the faces around each vertex through shared
        incident edges and require a single component.
        """
        V = len(self.vertices)
        F = self.triangles.shape[0]
        incident_faces = [[] for _ in range(V)]
        for f, (i, j, k) in enumerate(self.triangles):
            incident_faces[i].append(f)
            incident_faces[j].append(f)
            incident_faces[k].append(f)
        edge_of = {}
        for f in range(F):
            i, j, k = self.triangles[f]
            for a, b in ((i, j), (j, k), (k, i)):
                edge_of.setdefault((min(a, b), max(a, b)), []).append(f)
        for v in range(V):
            faces = incident_faces[v]
            if not faces:
                raise MeshError(f"isolated vertex {v}")
            local = {f: n for n, f in enumerate(faces)}
            par = list(range(len(faces)))

            def lfind(x):
                while par[x] != x:
                    par[x] = par[par[x]]
                    x = par[x]
                return x

            for f in faces:
                tri = self.triangles[f]
                others = [w for w in tri if w != v]
                for w in others:
                    pair = edge_of[(min(v, w), max(v, w))]
                    a, b = pair
                    ra, rb = lfind(local[a]), lfind(local[b])
                    if ra != rb:
                        par[ra] = rb
            roots = {lfind(n) for n in range(len(faces))}
            if len(roots) != 1:
                raise MeshError(f"non-manifold: pinched vertex {v}")

    def _resolve_lengths(self, edge_lengths):
        if edge_lengths is None:
            d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
            return np.linalg.norm(d, axis=1)
        if np.isscalar(edge_lengths):
            return np.full(len(self.edges), float(edge_lengths))
        out = np.empty(len(self.edges))
        for e, (i, j) in enumerate(self.edges):
            out[e] = edge_lengths[(int(i), int(j))]
        return out

    # -- basic counts ----------------------------------------------------------

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_edges(self):
        return self.edges.shape[0]

    @property
    def n_faces(self):
        return self.triangles.shape[0]

    @property
    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    def edge_lookup(self):
        """Dict mapping ``(i, j)`` with ``i < j`` to the edge index."""
        return {(int(i), int(j)): e for e, (i, j) in enumerate(self.edges)}


@dataclass(frozen=True)
class ConformalFactor:
    """Per-vertex log conformal scale ``u``.

    Validated against a mesh on construction: the scaled lengths
    ``exp((u_i + u_j)/2) * l0_ij`` must satisfy the strict triangle
    inequality in every face.
    """

    u: np.ndarray

    def __init__(self, mesh, u):
        u = np.ascontiguousarray(u, dtype=float)
        if u.shape != (mesh.n_vertices,):
            raise InvalidParameterError(
                f"conformal factor has length {u.shape}, mesh has "
                f"{mesh.n_vertices} vertices")
        effective_edge_lengths(mesh, u)  # raises DegenerateMetricError
        u.setflags(write=False)
        object.__setattr__(self, "u", u)


def _factor_values(mesh, factor):
    """Accept a ConformalFactor, a raw array, or None (flat factor)."""
    if factor is None:
        return np.zeros(mesh.n_vertices)
    if isinstance(factor, ConformalFactor):
        return factor.u
    u = np.asarray(factor, dtype=float)
    if u.shape != (mesh.n_vertices,):
        raise InvalidParameterError("conformal factor length mismatch")
    return u


def effective_edge_lengths(mesh, factor=None):
    """Conformally scaled edge lengths ``exp((u_i + u_j)/2) * l0_ij``.

    Raises
    ------
    DegenerateMetricError
        If the scaled lengths violate a strict triangle inequality; the
        offending face indices are attached to the exception.
    """
    u = _factor_values(mesh, factor)
    i, j = mesh.edges[:, 0], mesh.edges[:, 1]
    lengths = np.exp(0.5 * (u[i] + u[j])) * mesh.base_edge_lengths
    bad = _triangle_inequality_violations(lengths[mesh.face_edges])
    if bad.size:
        raise DegenerateMetricError(
            f"conformal factor degenerates {bad.size} faces "
            f"(first: face {int(bad[0])})", faces=bad)
    return lengths


@dataclass(frozen=True)
class SurfaceTopology:
    genus: int
    euler_characteristic: int
    is_sphere: bool


def topology(mesh):
    """Genus and Euler characteristic of a connected closed mesh."""
    if mesh.n_components != 1:
        raise MeshError(
            f"mesh has {mesh.n_components} components; topology is "
            "defined for connected surfaces")
    chi = mesh.euler_characteristic
    if chi % 2 != 0 or chi > 2:
        raise MeshError(f"corrupted mesh: Euler characteristic {chi}")
    genus = (2 - chi) // 2
    return SurfaceTopology(genus=genus, euler_characteristic=chi,
                           is_sphere=(genus == 0))


def mesh_summary(mesh):
    """JSON-ready summary record ``{V, E, F, chi, genus}``."""
    topo = topology(mesh)
    return {
        "V": mesh.n_vertices,
        "E": mesh.n_edges,
        "F": mesh.n_faces,
        "chi": topo.euler_characteristic,
        "genus": topo.genus,
    }


# -- generators ----------------------------------------------------------------


def generate_flat_torus(side_length, resolution):
    """Regular n-by-n triangulation of the square flat torus.

    The intrinsic metric is the flat one (axis edges ``h``, diagonals
    ``h*sqrt(2)`` with ``h = side_length/resolution``); the 3D embedding is a
    torus of revolution and is decorative.  The planar chart ``(x, y)`` with
    period ``side_length`` is stored for the flow machinery.
    """
    L = float(side_length)
    n = int(resolution)
    if L <= 0:
        raise InvalidParameterError("side_length must be positive")
    if n < 3:
        raise InvalidParameterError("resolution must be at least 3")
    h = L / n

    idx = lambda i, j: (i % n) * n + (j % n)
    coords = np.empty((n * n, 2))
    verts = np.empty((n * n, 3))
    R, r = L / (2 * np.pi) * 1.5, L / (2 * np.pi) * 0.5
    for i in range(n):
        for j in range(n):
            x, y = i * h, j * h
            coords[idx(i, j)] = (x, y)
            th, ph = 2 * np.pi * x / L, 2 * np.pi * y / L
            verts[idx(i, j)] = ((R + r * np.cos(ph)) * np.cos(th),
                                (R + r * np.cos(ph)) * np.sin(th),
                                r * np.sin(ph))

    tris = []
    lengths = {}

    def put(a, b, val):
        lengths[(min(a, b), max(a, b))] = val

    for i in range(n):
        for j in range(n):
            v00 = idx(i, j)
            v10 = idx(i + 1, j)
            v11 = idx(i + 1, j + 1)
            v01 = idx(i, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
            put(v00, v10, h)
            put(v00, v01, h)
            put(v00, v11, h * np.sqrt(2.0))

    return TriangleMesh(verts, np.array(tris), edge_lengths=lengths,
                        planar_coords=coords, box_size=L)


_ICOSA_VERTS = None


def _icosahedron():
    global _ICOSA_VERTS
    phi = (1 + np.sqrt(5)) / 2
    v = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=float)
    v /= np.linalg.norm(v[0])
    f = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ])
    return v, f


def generate_icosphere(radius, subdivisions):
    """Icosahedron subdivided ``subdivisions`` times, projected to the sphere.

    Edge lengths are geodesic (great-circle) so the discrete spectrum
    converges to the round-sphere spectrum.
    """
    R = float(radius)
    if R <= 0:
        raise InvalidParameterError("radius must be positive")
    s = int(subdivisions)
    if s < 0:
        raise InvalidParameterError("subdivisions must be nonnegative")

    verts, faces = _icosahedron()
    for _ in range(s):
        cache = {}
        new_faces = []
        verts = list(verts)

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                m /= np.linalg.norm(m)
                cache[key] = len(verts)
                verts.append(m)
            return cache[key]

        for (a, b, c) in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        verts = np.array(verts)
        faces = np.array(new_faces)

    unit = np.asarray(verts)
    pos = unit * R
    tmp = TriangleMesh(pos, faces)   # builds the edge table
    dots = np.clip(np.einsum("ij,ij->i",
                             unit[tmp.edges[:, 0]], unit[tmp.edges[:, 1]]),
                   -1.0, 1.0)
    geod = {(int(i), int(j)): R * np.arccos(d)
            for (i, j), d in zip(tmp.edges, dots)}
    return TriangleMesh(pos, faces, edge_lengths=geod)


# -- OBJ subset I/O --------------------------------------------------------------


def load_mesh(path):
    """Read the documented OBJ subset (``v`` and ``f`` records, triangles,
    counterclockwise winding) and validate it as a closed oriented surface.

    Raises
    ------
    MeshError
        Naming the offending simplex for non-manifold, open-boundary, or
        non-orientable input.
    """
    verts, faces = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                if len(parts) != 4:
                    raise MeshError(
                        f"face record with {len(parts) - 1} vertices; "
                        "only triangles are supported")
                faces.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
    if not verts or not faces:
        raise MeshError(f"no usable v/f records in {path}")
    return TriangleMesh(np.array(verts), np.array(faces))


def save_mesh(mesh, path):
    """Write the mesh as the OBJ subset (``v``/``f`` records)."""
    with open(path, "w") as fh:
        for p in mesh.vertices:
            fh.write(f"v {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        for (i, j, k) in mesh.triangles:
            fh.write(f"f {i + 1} {j + 1} {k + 1}\n")
