"""Nodal sets of vertex functions and the topology of their complement.

The zero set of the piecewise-linear interpolant of a sign-changing vertex
function crosses each mixed-sign triangle in one chord; on a closed surface
the chords concatenate into disjoint closed loops.  Exact zeros are resolved
by simulation of simplicity (a symbolic +epsilon), which makes every
combinatorial decision total.

Region Euler characteristics are computed on the abstract subcomplex of
uniform-sign simplices.  Because every mixed triangle carries exactly one
chord and every crossing edge two mixed triangles, the identity
``sum_R chi(R) = chi(Sigma)`` holds exactly and is asserted.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateNodalSetError, InvalidParameterError, MeshError

__all__ = [
    "NodalCurve",
    "RegionTopology",
    "NodalDomainSet",
    "extract_nodal_set",
    "nodal_domains",
    "courant_check",
    "export_curves_obj",
    "curves_to_json",
    "regions_to_json",
]

TAU_ZERO = 1e-12
PLATEAU_FRACTION = 0.01


@dataclass(frozen=True)
class NodalCurve:
    """One connected component of the nodal set.

    ``points`` are (edge_id, t, xyz): the crossing parameter t in [0, 1]
    measures from the edge's first (lower-index) vertex, xyz interpolates the
    embedding.  Consecutive points (cyclically) span one triangle chord.
    """

    component_id: int
    points: list
    is_closed: bool = True

    @property
    def edge_ids(self):
        return [p[0] for p in self.points]


@dataclass(frozen=True)
class RegionTopology:
    region_id: int
    sign: int
    euler_characteristic: int
    boundary_loop_count: int

    @property
    def is_disc(self):
        return self.euler_characteristic == 1 and self.boundary_loop_count == 1


@dataclass(frozen=True)
class NodalDomainSet:
    regions: list
    curve_components: int
    region_of_vertex: np.ndarray = field(repr=False, default=None)

    def discs(self):
        return [r for r in self.regions if r.is_disc]


def _signs(f):
    """Symbolic-perturbation sign: zero counts as positive."""
    return np.where(f < 0, -1, 1).astype(np.int8)


def _check_plateau(mesh, f):
    """Reject functions that vanish on a two-dimensional plateau.

    Isolated zero vertices and even whole zero curves through vertices are
    handled by simulation of simplicity, so the degeneracy signal is a face
    all of whose corners vanish: there the sign pattern is numerically
    meaningless and the nodal set is not a curve system.
    """
    f = np.asarray(f, dtype=float)
    scale = np.abs(f).max()
    if scale == 0:
        raise DegenerateNodalSetError("function is identically zero")
    z = np.abs(f) <= TAU_ZERO * scale
    zero_faces = int(np.sum(np.all(z[mesh.triangles], axis=1)))
    if zero_faces > PLATEAU_FRACTION * mesh.n_faces:
        raise DegenerateNodalSetError(
            f"{zero_faces} of {mesh.n_faces} faces vanish identically; "
            "nodal set has a plateau")
    return f


def extract_nodal_set(mesh, f):
    """Closed nodal curves of the PL interpolant of f, one NodalCurve per
    connected component.  A one-signed f yields an empty list."""
    f = _check_plateau(mesh, f)
    if f.shape != (mesh.n_vertices,):
        raise InvalidParameterError("vertex function has wrong length")
    s = _signs(f)

    ei, ej = mesh.edges[:, 0], mesh.edges[:, 1]
    crossing = s[ei] != s[ej]
    if not np.any(crossing):
        return []

    # Each mixed triangle pairs its two crossing edges into a chord.
    cross_flags = crossing[mesh.face_edges]          # (F, 3)
    n_cross = cross_flags.sum(axis=1)
    if np.any(~np.isin(n_cross, (0, 2))):
        raise MeshError("sign pattern inconsistent with simplicity")
    mixed = np.nonzero(n_cross == 2)[0]

    # chord[face] = (edge_a, edge_b); adjacency edge -> [faces]
    edge_faces = {}
    chords = {}
    for fidx in mixed:
        ea, eb = mesh.face_edges[fidx][cross_flags[fidx]]
        chords[fidx] = (int(ea), int(eb))
        edge_faces.setdefault(int(ea), []).append(fidx)
        edge_faces.setdefault(int(eb), []).append(fidx)

    for e, fs in edge_faces.items():
        if len(fs) != 2:
            raise MeshError(f"crossing edge {e} not shared by two mixed faces")

    t = np.zeros(mesh.n_edges)
    with np.errstate(invalid="ignore"):
        denom = f[ei] - f[ej]
        tt = np.where(denom != 0, f[ei] / np.where(denom == 0, 1.0, denom), 0.0)
    t[crossing] = np.clip(tt[crossing], 0.0, 1.0)

    def point(e):
        i, j = mesh.edges[e]
        xyz = (1 - t[e]) * mesh.vertices[i] + t[e] * mesh.vertices[j]
        return (int(e), float(t[e]), xyz)

    curves = []
    visited_edges = set()
    for start in sorted(edge_faces):
        if start in visited_edges:
            continue
        loop = [start]
        visited_edges.add(start)
        prev_face = None
        e = start
        while True:
            nxt = [fc for fc in edge_faces[e] if fc != prev_face]
            face = nxt[0]
            ea, eb = chords[face]
            e_next = eb if ea == e else ea
            if e_next == start:
                break
            loop.append(e_next)
            visited_edges.add(e_next)
            prev_face = face
            e = e_next
        curves.append(NodalCurve(component_id=len(curves),
                                 points=[point(e) for e in loop],
                                 is_closed=True))
    return curves


def nodal_domains(mesh, f, curves):
    """Sign-connected regions of the complement of the nodal set, with the
    Euler characteristic and boundary-loop count of each."""
    f = _check_plateau(mesh, f)
    s = _signs(f)
    V = mesh.n_vertices

    # Union-find over same-sign edges.
    parent = np.arange(V)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    ei, ej = mesh.edges[:, 0], mesh.edges[:, 1]
    same = s[ei] == s[ej]
    for a, b in mesh.edges[same]:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    roots = np.array([find(v) for v in range(V)])
    uniq, region_of_vertex = np.unique(roots, return_inverse=True)
    n_regions = len(uniq)

    sign_changing = bool(np.any(s != s[0]))
    if sign_changing and n_regions < 2:
        raise MeshError("sign-changing function with a single region")

    # chi per region over the uniform-sign subcomplex.
    v_count = np.bincount(region_of_vertex, minlength=n_regions)
    e_count = np.bincount(region_of_vertex[ei[same]], minlength=n_regions)
    tri_signs = s[mesh.triangles]
    uniform = (tri_signs[:, 0] == tri_signs[:, 1]) & \
              (tri_signs[:, 1] == tri_signs[:, 2])
    f_count = np.bincount(region_of_vertex[mesh.triangles[uniform, 0]],
                          minlength=n_regions)
    chi = v_count - e_count + f_count

    if int(chi.sum()) != mesh.euler_characteristic:
        raise MeshError(
            f"region Euler characteristics sum to {int(chi.sum())}, "
            f"mesh has {mesh.euler_characteristic}")

    # Adjacent nodal components per region.
    adjacent = [set() for _ in range(n_regions)]
    for curve in curves:
        for e in curve.edge_ids:
            a, b = mesh.edges[e]
            adjacent[region_of_vertex[a]].add(curve.component_id)
            adjacent[region_of_vertex[b]].add(curve.component_id)

    regions = []
    for r in range(n_regions):
        sign = int(s[np.nonzero(region_of_vertex == r)[0][0]])
        loops = len(adjacent[r])
        # chi + loops = 2 - 2 g_region must leave an even, nonnegative gap.
        gap = 2 - int(chi[r]) - loops
        if gap < 0 or gap % 2 != 0:
            raise MeshError(
                f"region {r} has chi={int(chi[r])}, {loops} boundary loops; "
                "inconsistent with an orientable subsurface")
        regions.append(RegionTopology(region_id=r, sign=sign,
                                      euler_characteristic=int(chi[r]),
                                      boundary_loop_count=loops))
    return NodalDomainSet(regions=regions, curve_components=len(curves),
                          region_of_vertex=region_of_vertex)


def courant_check(domains):
    """True when the nodal domain count is exactly two (the Courant bound for
    a first eigenfunction, attained on closed surfaces)."""
    return len(domains.regions) == 2


def export_curves_obj(curves, path):
    """Write nodal curves as OBJ polylines (v records plus l records)."""
    with open(path, "w") as fh:
        offset = 1
        for c in curves:
            for (_, _, xyz) in c.points:
                fh.write(f"v {xyz[0]:.17g} {xyz[1]:.17g} {xyz[2]:.17g}\n")
            n = len(c.points)
            idx = [offset + i for i in range(n)] + [offset]
            fh.write("l " + " ".join(str(i) for i in idx) + "\n")
            offset += n
    return path


def curves_to_json(curves):
    return [{"component_id": c.component_id,
             "is_closed": c.is_closed,
             "points": [[p[0], p[1], list(map(float, p[2]))] for p in c.points]}
            for c in curves]


def regions_to_json(domains):
    return {
        "curve_components": domains.curve_components,
        "regions": [{
            "region_id": r.region_id,
            "sign": r.sign,
            "euler_characteristic": r.euler_characteristic,
            "boundary_loop_count": r.boundary_loop_count,
            "is_disc": r.is_disc,
        } for r in domains.regions],
    }
