"""Symmetric generalized eigenproblems for the surface operators.

Smallest eigenvalues are found by shift-invert Lanczos (ARPACK) with a small
negative shift, which keeps the factorized matrix positive definite while the
zero modes (constants, harmonic forms) come out first and are deflated or
returned as the kernel.  Starting vectors are seeded, so repeated runs are
bit-identical.
"""

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidParameterError, SolverError, TopologyMismatchError

__all__ = [
    "EigenPair",
    "SpectrumRequest",
    "solve_scalar_spectrum",
    "harmonic_basis",
    "rayleigh_quotient",
    "cluster_ids",
    "export_spectrum_csv",
]

TAU_EIG = 1e-9
CLUSTER_REL_GAP = 1e-6
_SEED = 0x5EED


@dataclass(frozen=True)
class EigenPair:
    eigenvalue: float
    eigenvector: np.ndarray
    residual: float
    cluster_id: int = 0
    cluster_size: int = 1

    @property
    def flagged(self):
        """True when the eigenvalue sits in a near-degenerate cluster."""
        return self.cluster_size > 1


@dataclass(frozen=True)
class SpectrumRequest:
    count: int
    tolerance: float = TAU_EIG
    shift: float = 0.0

    def __post_init__(self):
        if self.tolerance <= 0:
            raise InvalidParameterError("tolerance must be positive")


def _start_vector(n):
    rng = np.random.default_rng(np.random.SeedSequence(_SEED, spawn_key=(n,)))
    return rng.standard_normal(n)


def _fix_signs(vecs):
    for k in range(vecs.shape[1]):
        v = vecs[:, k]
        i = int(np.argmax(np.abs(v)))
        if v[i] < 0:
            vecs[:, k] = -v
    return vecs


def _lowest_pencil(A, M, k, sigma=None):
    """k algebraically smallest eigenpairs of A v = lam M v (A PSD, M SPD)."""
    n = A.shape[0]
    k = min(k, n - 1)
    if sigma is None:
        scale = (A.diagonal().sum() / max(M.diagonal().sum(), 1e-300))
        sigma = -max(1e-2 * scale, 1e-12)
    try:
        vals, vecs = spla.eigsh(A, k=k, M=M, sigma=sigma, which="LM",
                                v0=_start_vector(n), tol=0, maxiter=5000)
    except spla.ArpackNoConvergence as err:
        raise SolverError(f"eigensolver did not converge: {err}") from err
    order = np.argsort(vals)
    return vals[order], _fix_signs(vecs[:, order])


def cluster_ids(eigenvalues, rel_gap=CLUSTER_REL_GAP):
    """Group eigenvalues whose consecutive relative gap is below rel_gap."""
    ids = np.zeros(len(eigenvalues), dtype=int)
    for i in range(1, len(eigenvalues)):
        prev, cur = eigenvalues[i - 1], eigenvalues[i]
        scale = max(abs(prev), abs(cur), 1e-300)
        ids[i] = ids[i - 1] if (cur - prev) / scale < rel_gap else ids[i - 1] + 1
    return ids


def _package(vals, vecs, S, M, tolerance):
    Mnorm = np.linalg.norm((M @ vecs), axis=0)
    res = np.linalg.norm(S @ vecs - (M @ vecs) * vals, axis=0) / Mnorm
    bad = res > np.maximum(tolerance, tolerance * np.abs(vals))
    if np.any(bad):
        raise SolverError("eigenpair residual above tolerance",
                          residual=float(res.max()))
    cids = cluster_ids(vals)
    sizes = {c: int(np.sum(cids == c)) for c in np.unique(cids)}
    return [EigenPair(float(v), vecs[:, i].copy(), float(res[i]),
                      int(cids[i]), sizes[int(cids[i])])
            for i, v in enumerate(vals)]


def solve_scalar_spectrum(S, M, request):
    """The ``count`` smallest nonzero eigenpairs of (S, M), constants deflated.

    Eigenvectors are M-orthonormal with deterministic sign; near-degenerate
    eigenvalues are reported as flagged clusters rather than errors.
    """
    if request.count < 1:
        raise InvalidParameterError("count must be >= 1")
    n = S.shape[0]
    if request.count > n - 1:
        raise InvalidParameterError("count exceeds dimension - 1")
    vals, vecs = _lowest_pencil(S, M, request.count + 4,
                                sigma=request.shift if request.shift < 0 else None)
    scale = S.diagonal().sum() / M.diagonal().sum()
    keep = vals > 1e-9 * scale
    vals, vecs = vals[keep], vecs[:, keep]
    if len(vals) < request.count:
        raise SolverError("not enough nonzero eigenvalues converged")
    vals, vecs = vals[:request.count], vecs[:, :request.count]
    # Explicitly remove any constant component left by deflation.
    ones = np.ones(n)
    m1 = M @ ones
    vecs = vecs - np.outer(ones, (m1 @ vecs) / (ones @ m1))
    vecs /= np.sqrt(np.einsum("ij,ij->j", vecs, M @ vecs))
    return _package(vals, vecs, S, M, request.tolerance)


def harmonic_basis(ops, genus):
    """star1-orthonormal basis of the numerical kernel of the 1-form
    Laplacian; its dimension must equal 2*genus.

    Raises
    ------
    TopologyMismatchError
        If the numerical kernel dimension disagrees with the topology.
    """
    if genus is None:
        raise InvalidParameterError("harmonic basis needs a connected mesh")
    if genus == 0:
        return []
    from .dec import one_form_laplacian

    A1, M1 = one_form_laplacian(ops)
    k = 2 * genus + 3
    vals, vecs = _lowest_pencil(A1, M1, k)
    first_nonzero = vals[2 * genus]
    tau_kernel = 1e-6 * first_nonzero
    n_kernel = int(np.sum(vals < tau_kernel))
    if n_kernel != 2 * genus:
        raise TopologyMismatchError(
            f"1-form Laplacian kernel has dimension {n_kernel}, "
            f"expected {2 * genus}")
    basis = []
    for i in range(2 * genus):
        v = vecs[:, i].copy()
        for h in basis:   # re-orthonormalize inside the cluster
            v -= (h @ (M1 @ v)) * h
        v /= np.sqrt(v @ (M1 @ v))
        basis.append(v)
    return basis


def rayleigh_quotient(S, M, v):
    v = np.asarray(v, dtype=float)
    denom = v @ (M @ v)
    if denom <= 0:
        raise InvalidParameterError("Rayleigh quotient of the zero vector")
    return float(v @ (S @ v) / denom)


def export_spectrum_csv(pairs, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "eigenvalue", "residual", "cluster_id"])
        for i, p in enumerate(pairs):
            w.writerow([i, repr(p.eigenvalue), repr(p.residual), p.cluster_id])
    return path
