"""Discrete exterior calculus on the conformally scaled mesh.

Operators are assembled intrinsically from edge lengths:

* ``d0``, ``d1``: signed incidence matrices (connectivity only, d1 @ d0 = 0).
* ``star0``: barycentric dual vertex areas (diagonal, positive).
* ``star1``: Galerkin (Whitney edge-element) mass matrix, sparse SPD.
* ``star2``: inverse face areas (diagonal).
* ``J``: wedge pairing J[e, e'] = integral of W_e ^ W_e' over the surface.
  This matrix is purely combinatorial (wedge integrals of Whitney forms do
  not see the metric) and skew-symmetric.
* ``rot1 = star1^{-1} J^T``: the surface Hodge star on primal 1-cochains,
  i.e. the L2 projection of the pointwise 90-degree rotation back onto the
  Whitney space.

Two exact identities tie the pieces together and are relied on downstream:
``S = d0^T star1 d0`` equals the cotangent stiffness matrix, and
``J^T d0 = -d1^T Avg`` where ``Avg`` is face-averaging of vertex values
(integration by parts of Whitney forms; boundary terms cancel on a closed
surface).
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidParameterError, SolverError
from .mesh import effective_edge_lengths

__all__ = [
    "OperatorSet",
    "assemble",
    "scalar_laplacian",
    "one_form_laplacian",
    "rotated_differential",
    "hodge_decompose",
    "inner_product_0",
    "inner_product_1",
    "export_operators",
]

# Relative tolerance for identities that are exact up to a linear solve.
TAU_OP = 1e-8

# tau_rot = C_ROT * h bounds the defect of rot1 o rot1 = -I on co-exact
# cochains.  C_ROT was calibrated on flat-torus refinement (measured defect
# ~0.42*h for h = mesh size) and carries a 4x margin for curved/bumpy metrics.
C_ROT = 1.7

# Local traversal pairs of a face (v0, v1, v2) and the third vertex of each.
_PAIRS = ((0, 1), (1, 2), (2, 0))
_OPP = (2, 0, 1)


def _heron(a, b, c):
    """Numerically stable face areas from side lengths (Kahan's formula)."""
    hi = np.maximum(np.maximum(a, b), c)
    lo = np.minimum(np.minimum(a, b), c)
    mid = a + b + c - hi - lo
    t = (hi + (mid + lo)) * (lo - (hi - mid)) * (lo + (hi - mid)) * (hi + (mid - lo))
    if np.any(t <= 0):
        raise InvalidParameterError("degenerate face in area computation")
    return 0.25 * np.sqrt(t)


class OperatorSet:
    """All discrete operators for one (mesh, conformal factor) pair.

    Immutable after assembly; factorizations are cached lazily.  Use
    :func:`assemble` to construct.
    """

    def __init__(self, mesh, lengths):
        self.mesh = mesh
        self.lengths = lengths
        V, E, F = mesh.n_vertices, mesh.n_edges, mesh.n_faces

        face_len = lengths[mesh.face_edges]            # (F, 3): l01, l12, l20
        self.face_areas = _heron(face_len[:, 0], face_len[:, 1], face_len[:, 2])

        # d0, d1 from connectivity.
        rows = np.repeat(np.arange(E), 2)
        cols = mesh.edges.ravel()
        vals = np.tile([-1.0, 1.0], E)
        self.d0 = sp.csr_matrix((vals, (rows, cols)), shape=(E, V))

        rows = np.repeat(np.arange(F), 3)
        self.d1 = sp.csr_matrix(
            (mesh.face_edge_signs.ravel().astype(float),
             (rows, mesh.face_edges.ravel())), shape=(F, E))

        # Barycentric dual areas and inverse face areas.
        dual = np.zeros(V)
        np.add.at(dual, mesh.triangles.ravel(),
                  np.repeat(self.face_areas / 3.0, 3))
        self.star0 = sp.dia_matrix((dual, 0), shape=(V, V)).tocsr()
        self.star0_diag = dual
        self.star2 = sp.dia_matrix((1.0 / self.face_areas, 0),
                                   shape=(F, F)).tocsr()

        self.star1, self.J = self._assemble_edge_matrices(face_len)

        # Face-averaging of vertex values and the curl building block
        # B = d1^T Avg (satisfies J^T d0 = -B exactly).
        self.avg = sp.csr_matrix(
            (np.full(3 * F, 1.0 / 3.0),
             (np.repeat(np.arange(F), 3), mesh.triangles.ravel())),
            shape=(F, V))
        self.B = (self.d1.T @ self.avg).tocsr()

        S = (self.d0.T @ (self.star1 @ self.d0)).tocsr()
        self.S = (S + S.T) * 0.5   # exact symmetry

        self._star1_solve = None
        self._stiffness_solve = None
        self._harmonic = None

        from .mesh import topology
        self.genus = topology(mesh).genus if mesh.n_components == 1 else None

    def _assemble_edge_matrices(self, face_len):
        mesh = self.mesh
        E, F = mesh.n_edges, mesh.n_faces
        A = self.face_areas

        # Barycentric gradient inner products per face, g[a, b] (local).
        l01, l12, l20 = face_len[:, 0], face_len[:, 1], face_len[:, 2]
        opp = np.stack([l12, l20, l01], axis=1)       # edge opposite vertex a
        g = np.empty((F, 3, 3))
        for a in range(3):
            g[:, a, a] = opp[:, a] ** 2 / (4.0 * A**2)
        # cot of the angle at vertex c, opposite the pair (a, b)
        side = {frozenset((0, 1)): l01, frozenset((1, 2)): l12,
                frozenset((2, 0)): l20}
        for a in range(3):
            for b in range(3):
                if a == b:
                    continue
                c = 3 - a - b
                la = side[frozenset((c, a))]
                lb = side[frozenset((c, b))]
                lab = side[frozenset((a, b))]
                cot_c = (la**2 + lb**2 - lab**2) / (4.0 * A)
                g[:, a, b] = -cot_c / (2.0 * A)

        # sigma[a, b]: +1 if (a, b) is a positively-oriented traversal pair.
        sigma = np.zeros((3, 3))
        for (p, q) in _PAIRS:
            sigma[p, q] = 1.0
            sigma[q, p] = -1.0

        # Local canonical pair (a, b) for each of the face's three edges.
        signs = mesh.face_edge_signs
        la = np.empty((F, 3), dtype=np.int64)
        lb = np.empty((F, 3), dtype=np.int64)
        for m, (p, q) in enumerate(_PAIRS):
            pos = signs[:, m] > 0
            la[:, m] = np.where(pos, p, q)
            lb[:, m] = np.where(pos, q, p)

        delta = np.eye(3)
        fa = A
        rows, cols, mvals, jvals = [], [], [], []
        arange_F = np.arange(F)
        for m in range(3):
            for mp in range(3):
                a, b = la[:, m], lb[:, m]
                c, d = la[:, mp], lb[:, mp]
                I = lambda x, y: fa * (1.0 + delta[x, y]) / 12.0
                G = lambda x, y: g[arange_F, x, y]
                mval = (G(b, d) * I(a, c) - G(b, c) * I(a, d)
                        - G(a, d) * I(b, c) + G(a, c) * I(b, d))
                sig = lambda x, y: sigma[x, y]
                jval = (sig(b, d) * (1.0 + delta[a, c])
                        - sig(b, c) * (1.0 + delta[a, d])
                        - sig(a, d) * (1.0 + delta[b, c])
                        + sig(a, c) * (1.0 + delta[b, d])) / 24.0
                rows.append(mesh.face_edges[:, m])
                cols.append(mesh.face_edges[:, mp])
                mvals.append(mval)
                jvals.append(jval)
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        star1 = sp.csr_matrix((np.concatenate(mvals), (rows, cols)),
                              shape=(E, E))
        star1 = (star1 + star1.T) * 0.5
        J = sp.csr_matrix((np.concatenate(jvals), (rows, cols)), shape=(E, E))
        J = (J - J.T) * 0.5   # exact skew-symmetry
        return star1.tocsr(), J.tocsr()

    # -- cached factorizations -------------------------------------------------

    def star1_solve(self, rhs):
        if self._star1_solve is None:
            self._star1_solve = spla.factorized(self.star1.tocsc())
        if rhs.ndim == 1:
            return self._star1_solve(rhs)
        return np.column_stack([self._star1_solve(rhs[:, k])
                                for k in range(rhs.shape[1])])

    def stiffness_solve(self, rhs):
        """Solve S p = rhs with vertex 0 pinned (rhs must be compatible,
        i.e. orthogonal to constants)."""
        if self._stiffness_solve is None:
            Sred = self.S[1:, :][:, 1:].tocsc()
            self._stiffness_solve = spla.factorized(Sred)
        p = np.zeros(self.mesh.n_vertices)
        p[1:] = self._stiffness_solve(rhs[1:])
        res = np.linalg.norm(self.S @ p - rhs)
        # Relative check with an absolute floor: a numerically-zero rhs
        # (e.g. from an already co-closed input) is pure roundoff.
        floor = 1e-13 * abs(self.S).max() * max(np.linalg.norm(p), 1.0)
        scale = np.linalg.norm(rhs)
        if res > 1e-6 * scale + floor:
            raise SolverError("stiffness solve did not converge",
                              residual=res / max(scale, floor))
        return p

    # -- operator applications --------------------------------------------------

    def rot1(self, c):
        """Surface Hodge star on 1-cochains (L2 projection of the rotation)."""
        return self.star1_solve(self.J.T @ c)

    def curl_tangential(self, f):
        """Tangential block of the invariant curl: the rotated differential
        of f, computed through the exact identity J^T d0 = -B."""
        return -self.star1_solve(self.B @ f)

    def curl_normal(self, b):
        """Normal block of the invariant curl: -(face curl of b averaged to
        vertices), i.e. -star0^{-1} B^T b."""
        return -(self.B.T @ b) / self.star0_diag

    def apply_W(self, f):
        """W = B^T star1^{-1} B, the vertex operator whose pencil with star0
        carries the squared spectrum of the invariant curl."""
        return self.B.T @ self.star1_solve(self.B @ f)

    @property
    def mesh_size(self):
        return float(self.lengths.max())

    @property
    def tau_rot(self):
        return C_ROT * self.mesh_size

    def harmonic_basis(self):
        """star1-orthonormal basis of the numerical kernel of the 1-form
        Laplacian (cached)."""
        if self._harmonic is None:
            from .spectral import harmonic_basis
            self._harmonic = harmonic_basis(self, self.genus)
        return self._harmonic


def assemble(mesh, factor=None):
    """Build the operator set for a mesh with an optional conformal factor."""
    lengths = effective_edge_lengths(mesh, factor)
    return OperatorSet(mesh, lengths)


def scalar_laplacian(ops):
    """Generalized eigenproblem pair (stiffness S = d0^T star1 d0, mass
    star0) for the 0-form Laplacian.  S equals the cotangent matrix."""
    return ops.S, ops.star0


def one_form_laplacian(ops):
    """The 1-form Hodge Laplacian as a symmetric pencil (A1, star1) with
    A1 = star1 d0 star0^{-1} d0^T star1 + d1^T star2 d1.

    The operator itself is star1^{-1} A1 (symmetric w.r.t. the star1 inner
    product); its kernel is the space of harmonic 1-cochains, dimension 2g.
    """
    sd0 = ops.star1 @ ops.d0
    inv0 = sp.dia_matrix((1.0 / ops.star0_diag, 0),
                         shape=(ops.mesh.n_vertices,) * 2)
    A1 = sd0 @ inv0 @ sd0.T + ops.d1.T @ ops.star2 @ ops.d1
    A1 = (A1 + A1.T) * 0.5
    return A1.tocsr(), ops.star1


def rotated_differential(ops, f):
    """rot1(d0 f): the co-closed 1-cochain representing star_Sigma df."""
    return ops.rot1(ops.d0 @ f)


def inner_product_0(ops, f, g):
    return float(f @ (ops.star0 @ g))


def inner_product_1(ops, a, b):
    return float(a @ (ops.star1 @ b))


def hodge_decompose(ops, b):
    """Split a 1-cochain into exact + coexact + harmonic parts.

    The exact part is d0 p with p solving the weak Poisson problem; the
    harmonic part is the star1-orthogonal projection onto the numerical
    kernel of the 1-form Laplacian; the coexact part is the remainder.
    The three parts are mutually star1-orthogonal to solver precision.
    """
    rhs = ops.d0.T @ (ops.star1 @ b)
    p = ops.stiffness_solve(rhs)
    exact = ops.d0 @ p
    harm = np.zeros_like(b)
    for h in ops.harmonic_basis():
        harm += inner_product_1(ops, h, b) * h
    coexact = b - exact - harm
    return exact, coexact, harm


def export_operators(ops, directory):
    """Write the sparse operators as MatrixMarket coordinate files."""
    import os
    from scipy.io import mmwrite

    os.makedirs(directory, exist_ok=True)
    for name in ("d0", "d1", "star0", "star1", "star2", "J"):
        mmwrite(os.path.join(directory, name + ".mtx"),
                sp.coo_matrix(getattr(ops, name)))
    return directory
