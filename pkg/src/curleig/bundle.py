"""S1-invariant 1-forms on the product of a circle and a surface.

An invariant form is a pair ``(f, b)``: a vertex function (the component
along the unit fiber form) and an edge cochain (the tangential part).  The
circle factor is never discretized; fiber Fourier indices enter the spectrum
assembly arithmetically.

The invariant curl is the block map

    curl(f, b) = ( -star0^{-1} B^T b ,  -star1^{-1} B f ),   B = d1^T Avg,

which is exactly self-adjoint in the product L2 inner product
G = diag(l star0, l star1) thanks to the identity J^T d0 = -B.  Its nonzero
spectrum is {+-sqrt(lambda)} for lambda in the nonzero spectrum of the pencil
(W, star0), W = B^T star1^{-1} B, and every pencil eigenvector f yields the
exact curl eigenpairs (f, +-star1^{-1}(-B f)/sqrt(lambda)).

ker(B) always contains the constants; on structured grids it can contain
extra combinatorial vectors (on the regular n x n torus grid with 3 | n,
the two lattice modes cos/sin(2 pi (i+j)/3)).  These are metric-independent
and are treated as part of the curl kernel throughout.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidParameterError, SolverError
from .mesh import topology

__all__ = [
    "BundleSpec",
    "InvariantOneForm",
    "ProductEigenvalue",
    "assemble_product_spectrum",
    "lift_eigenfunction",
    "invariant_curl",
    "curl_residual",
    "product_inner",
    "product_norm",
    "curl_pencil_eigs",
    "curl_kernel_basis",
    "principal_curl_eigenpair",
    "form_to_json",
]

KERNEL_REL_TOL = 1e-9


@dataclass(frozen=True)
class BundleSpec:
    """Trivial circle bundle over a surface with constant fiber length.

    ``euler_number`` is carried through to the contact classifier; the
    product constructor forces it to zero.
    """

    fiber_length: float
    euler_number: int
    mesh: object
    factor: object = None

    def __post_init__(self):
        if self.fiber_length <= 0:
            raise InvalidParameterError("fiber length must be positive")

    @classmethod
    def product(cls, mesh, fiber_length, factor=None):
        return cls(fiber_length=float(fiber_length), euler_number=0,
                   mesh=mesh, factor=factor)

    @property
    def genus(self):
        return topology(self.mesh).genus


@dataclass(frozen=True)
class InvariantOneForm:
    """Pair (f, b) encoding the invariant form f*eta + beta."""

    f: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "f", np.asarray(self.f, dtype=float))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))

    def __add__(self, other):
        return InvariantOneForm(self.f + other.f, self.b + other.b)

    def __sub__(self, other):
        return InvariantOneForm(self.f - other.f, self.b - other.b)

    def __mul__(self, c):
        return InvariantOneForm(c * self.f, c * self.b)

    __rmul__ = __mul__


def product_inner(spec, ops, a1, a2):
    """L2 inner product on the product: l * ((f1, f2)_0 + (b1, b2)_1)."""
    return spec.fiber_length * (
        float(a1.f @ (ops.star0 @ a2.f)) + float(a1.b @ (ops.star1 @ a2.b)))


def product_norm(spec, ops, a):
    return float(np.sqrt(max(product_inner(spec, ops, a, a), 0.0)))


@dataclass(frozen=True, order=True)
class ProductEigenvalue:
    value_sq: float
    origin: str = field(compare=False)
    n: int = field(compare=False)
    m: int | None = field(compare=False)


def assemble_product_spectrum(spec, scalar_eigs, n_max):
    """All candidate squared curl eigenvalues of the product, sorted.

    Candidates: the surface eigenvalues (invariant sector), the combined
    values ``(2 pi n / l)^2 + nu_m`` for fiber index ``n >= 1``, and the pure
    fiber values ``(2 pi n / l)^2`` contributed by harmonic surface 1-forms,
    present only in genus >= 1.
    """
    if len(scalar_eigs) == 0:
        raise InvalidParameterError("need at least one surface eigenvalue")
    if n_max < 1:
        raise InvalidParameterError("n_max must be >= 1")
    l = spec.fiber_length
    out = []
    for m, nu in enumerate(scalar_eigs, start=1):
        out.append(ProductEigenvalue(float(nu), "normal", 0, m))
        for n in range(1, n_max + 1):
            out.append(ProductEigenvalue(
                (2 * np.pi * n / l) ** 2 + float(nu), "tangential", n, m))
    if spec.genus >= 1:
        for n in range(1, n_max + 1):
            out.append(ProductEigenvalue((2 * np.pi * n / l) ** 2,
                                         "harmonic", n, None))
    out.sort()
    return out


def lift_eigenfunction(ops, f, nu, sign=+1):
    """Curl eigenform from a scalar eigenfunction (the Chandrasekhar-Kendall
    construction specialized to invariant forms).

    Returns ``(f, sign * rot1(d0 f) / sqrt(nu))``; with sign +1 the pair is
    a +sqrt(nu) curl eigenform up to the discretization residual, with the
    two components of equal L2 norm up to the rot1 isometry defect.
    """
    if nu <= 0:
        raise InvalidParameterError("eigenvalue must be positive")
    if sign not in (+1, -1):
        raise InvalidParameterError("sign must be +1 or -1")
    return InvariantOneForm(f, sign * ops.curl_tangential(f) / np.sqrt(nu))


def invariant_curl(spec, ops, a):
    """Discrete curl on invariant pairs (linear, G-self-adjoint)."""
    return InvariantOneForm(ops.curl_normal(a.b), ops.curl_tangential(a.f))


def curl_residual(spec, ops, a, mu):
    """Relative eigen-relation defect ||curl(a) - mu a|| / ||a||."""
    na = product_norm(spec, ops, a)
    if na == 0:
        raise InvalidParameterError("residual of the zero form")
    r = invariant_curl(spec, ops, a) - mu * a
    return product_norm(spec, ops, r) / na


# -- spectrum of the discrete curl itself ----------------------------------------


def _w_scale(ops):
    return ops.S.diagonal().sum() / ops.star0_diag.sum()


def _precond(ops):
    shift = 0.05 * _w_scale(ops)
    M0 = sp.dia_matrix((ops.star0_diag, 0),
                       shape=(ops.mesh.n_vertices,) * 2).tocsr()
    fac = spla.factorized((ops.S + shift * M0).tocsc())
    return spla.LinearOperator(M0.shape, matvec=fac, dtype=float)


def curl_pencil_eigs(ops, k=8, seed=101, tol=1e-8, maxiter=800):
    """Lowest ``k`` eigenpairs of (W, star0), W = B^T star1^{-1} B.

    The square roots of the nonzero eigenvalues are the positive eigenvalues
    of the invariant curl; the kernel is ker(B).  LOBPCG preconditioned with
    the shifted stiffness matrix, seeded, with a dense fallback on small
    meshes.
    """
    V = ops.mesh.n_vertices
    cache = getattr(ops, "_curl_pencil", None)
    if cache is not None and cache[0] >= k:
        lam, vecs = cache[1], cache[2]
        return lam[:k], vecs[:, :k]

    Wop = spla.LinearOperator((V, V), matvec=ops.apply_W, dtype=float)
    M0 = sp.dia_matrix((ops.star0_diag, 0), shape=(V, V)).tocsr()
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(V,)))
    X0 = rng.standard_normal((V, k + 2))
    X0[:, 0] = 1.0
    lam = vecs = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            lam, vecs = spla.lobpcg(Wop, X0, B=M0, M=_precond(ops), tol=tol,
                                    maxiter=maxiter, largest=False)
            order = np.argsort(lam)
            lam, vecs = lam[order], vecs[:, order]
        except Exception:
            lam = None
    scale = _w_scale(ops)
    if lam is not None:
        res = np.array([np.linalg.norm(ops.apply_W(vecs[:, i])
                                       - lam[i] * ops.star0_diag * vecs[:, i])
                        / np.linalg.norm(ops.star0_diag * vecs[:, i])
                        for i in range(len(lam))])
        if np.any(res > 1e-6 * scale):
            lam = None
    if lam is None:
        if V > 4200:
            raise SolverError("curl pencil eigensolve failed to converge")
        import scipy.linalg as sla
        Bd = ops.B.toarray()
        W = Bd.T @ ops.star1_solve(Bd)
        lam_all, vecs_all = sla.eigh(W, np.diag(ops.star0_diag))
        lam, vecs = lam_all[:k + 2], vecs_all[:, :k + 2]

    # star0-orthonormalize (within clusters LOBPCG is only approximately so).
    for i in range(vecs.shape[1]):
        v = vecs[:, i]
        for jcol in range(i):
            v = v - (vecs[:, jcol] @ (ops.star0_diag * v)) * vecs[:, jcol]
        vecs[:, i] = v / np.sqrt(v @ (ops.star0_diag * v))
    lam = np.array([vecs[:, i] @ ops.apply_W(vecs[:, i])
                    for i in range(vecs.shape[1])])
    order = np.argsort(lam)
    lam, vecs = lam[order], vecs[:, order]
    ops._curl_pencil = (k, lam, vecs)
    return lam[:k], vecs[:, :k]


def curl_kernel_basis(ops):
    """star0-orthonormal basis of the f-sector curl kernel ker(B)."""
    lam, vecs = curl_pencil_eigs(ops)
    scale = _w_scale(ops)
    n_ker = int(np.sum(lam < KERNEL_REL_TOL * scale))
    return vecs[:, :n_ker]


def principal_curl_eigenpair(ops):
    """Smallest nonzero curl eigenvalue mu1 > 0 and its pencil eigenvector.

    ``(f1, -star1^{-1} B f1 / mu1)`` is then an exact discrete +mu1 curl
    eigenform (up to the pencil solve tolerance).
    """
    lam, vecs = curl_pencil_eigs(ops)
    scale = _w_scale(ops)
    nonzero = np.nonzero(lam >= KERNEL_REL_TOL * scale)[0]
    if len(nonzero) == 0:
        raise SolverError("no nonzero curl eigenvalue found")
    i = int(nonzero[0])
    return float(np.sqrt(lam[i])), vecs[:, i].copy()


def form_to_json(spec, a):
    return {
        "fiber_length": spec.fiber_length,
        "f": [float(x) for x in a.f],
        "b": [float(x) for x in a.b],
    }


def export_product_spectrum_csv(eigs, path):
    """Candidate spectrum as CSV with origin tags."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "value_sq", "origin", "n", "m"])
        for i, e in enumerate(eigs):
            w.writerow([i, repr(e.value_sq), e.origin, e.n,
                        "" if e.m is None else e.m])
    return path
