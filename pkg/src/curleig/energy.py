"""Energy, helicity, and volume-preserving orbit perturbations.

Helicity is computed through the discrete curl's own structure: for a form
``a`` in the range of the curl, ``helicity(a) = 2 l x^T star0 a_f`` where
``W x = -B^T a_b``.  Because the discrete curl is exactly G-self-adjoint,
the lower bound ``E(a) >= mu1 |helicity(a)|`` with ``mu1`` the smallest
nonzero discrete curl eigenvalue is a finite-dimensional theorem, with
equality exactly on the principal eigenforms.

Two families of volume-preserving perturbations act on invariant forms:

* fiber shears ``(theta, x) -> (theta + psi(x), x)``; the pullback adds
  ``f dpsi`` to the tangential part and is discretized with the midpoint
  rule.  This choice makes the Stokes cancellation exact: at any lifted pair
  ``(f, c * rot1 d0 f)`` the cross term vanishes in exact arithmetic, so the
  energy increase ``l ||f dpsi||^2`` is exactly nonnegative.

* Hamiltonian flows of the surface: vertices are advected along the rotated
  chart gradient scaled by the inverse conformal area density (a midpoint
  integrator), the components are pulled back by interpolation and edge
  resampling, and the residual area distortion is measured and reported.
  Supported on meshes with a periodic planar chart (generated flat tori).
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .bundle import (InvariantOneForm, curl_kernel_basis, _precond,
                     principal_curl_eigenpair, product_inner, product_norm)
from .errors import (InvalidParameterError, PropertyViolationError,
                     SolverError)

__all__ = [
    "HelicityResult",
    "FiberShear",
    "HamiltonianFlow",
    "BoundCheckReport",
    "OrbitReport",
    "energy",
    "helicity",
    "random_range_form",
    "helicity_bound_check",
    "fiber_shear_pullback",
    "hamiltonian_pushforward",
    "orbit_minimization_test",
    "make_fiber_shears",
    "make_hamiltonian_flows",
    "random_smooth_field",
    "stream_rng",
]

TAU_BOUND = 1e-6
TAU_SHEAR = 1e-9
VOL_LIMIT = 1e-3


def stream_rng(seed, stream):
    """Substream ``stream`` of the master seed (counter-based splitting)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


def energy(spec, ops, a):
    """L2 energy l (||f||^2 + ||b||^2); zero iff the form is zero."""
    return product_inner(spec, ops, a, a)


def _solve_W(ops, rhs, scale, rtol=1e-12):
    """Least-squares solve of W x = rhs.  ``scale`` is the norm of the form
    the rhs was built from; a rhs at roundoff level relative to it is pure
    noise (e.g. from an exactly co-closed input) and maps to x = 0."""
    if np.linalg.norm(rhs) <= 1e-13 * max(scale, 1e-300):
        return np.zeros_like(rhs)
    V = ops.mesh.n_vertices
    Wop = spla.LinearOperator((V, V), matvec=ops.apply_W, dtype=float)
    x, info = spla.cg(Wop, rhs, M=_precond(ops), rtol=rtol,
                      atol=1e-13 * scale, maxiter=20 * int(np.sqrt(V) + 100))
    if info != 0:
        raise SolverError(f"helicity solve did not converge (info={info})",
                          residual=float(np.linalg.norm(ops.apply_W(x) - rhs)))
    return x


@dataclass(frozen=True)
class HelicityResult:
    value: float
    discarded_fraction: float
    kernel_warning: bool

    def __float__(self):
        return self.value


def helicity(spec, ops, a):
    """(curl^{-1} a, a) on the kernel complement of the discrete curl.

    The kernel component of ``a`` (closed tangential parts, constants along
    the fiber, and any combinatorial kernel of B) is projected out; its
    relative norm is reported and flagged when above 1 percent.
    """
    na = product_norm(spec, ops, a)
    if na == 0:
        raise InvalidParameterError("helicity of the zero form")
    ker = curl_kernel_basis(ops)
    f_clean = a.f - ker @ (ker.T @ (ops.star0_diag * a.f))
    b_scale = 2.0 * np.linalg.norm(a.b)
    x = _solve_W(ops, -(ops.B.T @ a.b), b_scale)
    value = 2.0 * spec.fiber_length * float(x @ (ops.star0_diag * f_clean))
    b_range = -ops.star1_solve(ops.B @ x)
    df = a.f - f_clean
    db = a.b - b_range
    discarded = math.sqrt(spec.fiber_length * (
        float(df @ (ops.star0_diag * df)) + float(db @ (ops.star1 @ db))))
    frac = discarded / na
    return HelicityResult(value=value, discarded_fraction=frac,
                          kernel_warning=frac > 0.01)


def random_range_form(ops, rng):
    """Random invariant form in the range of the discrete curl."""
    ker = curl_kernel_basis(ops)
    f = rng.standard_normal(ops.mesh.n_vertices)
    f -= ker @ (ker.T @ (ops.star0_diag * f))
    b_raw = rng.standard_normal(ops.mesh.n_edges)
    x = _solve_W(ops, -(ops.B.T @ b_raw), 2.0 * np.linalg.norm(b_raw))
    b = -ops.star1_solve(ops.B @ x)
    return InvariantOneForm(f, b), x


@dataclass(frozen=True)
class BoundCheckReport:
    samples: int
    violations: int
    min_slack_rel: float
    equality_slack_rel: float
    mu1: float
    seed: int

    def to_json(self):
        return {
            "samples": self.samples,
            "violations": self.violations,
            "min_slack_rel": self.min_slack_rel,
            "equality_slack_rel": self.equality_slack_rel,
            "mu1": self.mu1,
            "seed": self.seed,
        }


def helicity_bound_check(spec, ops, samples, seed):
    """Energy lower bound from helicity on random kernel-orthogonal forms.

    Every sample must satisfy ``E >= mu1 |helicity| - TAU_BOUND * E`` where
    ``mu1`` is the smallest nonzero eigenvalue of the discrete curl; the
    equality witness is the principal eigenform itself.

    Raises
    ------
    PropertyViolationError
        On any violation beyond tolerance (bug signal).
    """
    mu1, f1 = principal_curl_eigenpair(ops)
    l = spec.fiber_length
    min_slack = np.inf
    violations = 0
    for k in range(samples):
        rng = stream_rng(seed, k)
        a, x = random_range_form(ops, rng)
        E = energy(spec, ops, a)
        hel = 2.0 * l * float(x @ (ops.star0_diag * a.f))
        slack = (E - mu1 * abs(hel)) / E
        min_slack = min(min_slack, slack)
        if slack < -TAU_BOUND:
            violations += 1
    alpha1 = InvariantOneForm(f1, ops.curl_tangential(f1) / mu1)
    E1 = energy(spec, ops, alpha1)
    hel1 = helicity(spec, ops, alpha1).value
    eq_slack = abs(E1 - mu1 * abs(hel1)) / E1
    report = BoundCheckReport(samples=samples, violations=violations,
                              min_slack_rel=float(min_slack),
                              equality_slack_rel=float(eq_slack),
                              mu1=float(mu1), seed=seed)
    if violations:
        raise PropertyViolationError(
            f"helicity bound violated on {violations} of {samples} samples "
            f"(min slack {min_slack:.3e})")
    return report


# -- fiber shears -----------------------------------------------------------------


@dataclass(frozen=True)
class FiberShear:
    psi: np.ndarray


def fiber_shear_pullback(a, psi, ops):
    """Pullback under (theta, x) -> (theta + psi(x), x): adds the midpoint
    discretization of f dpsi to the tangential part.  Exactly
    volume-preserving."""
    i, j = ops.mesh.edges[:, 0], ops.mesh.edges[:, 1]
    mid = 0.5 * (a.f[i] + a.f[j])
    return InvariantOneForm(a.f, a.b + mid * (psi[j] - psi[i]))


def random_smooth_field(ops, rng, heat_steps=40, amplitude=1.0):
    """Random vertex field with the lattice-scale noise damped by explicit
    heat steps; zero mean, sup-norm ``amplitude``."""
    g = rng.standard_normal(ops.mesh.n_vertices)
    m = ops.star0_diag
    lmax = float((ops.S.diagonal() / m).max()) * 2.0
    dt = 1.0 / lmax
    for _ in range(heat_steps):
        g = g - dt * (ops.S @ g) / m
    g -= (m @ g) / m.sum()
    sup = np.abs(g).max()
    if sup == 0:
        raise SolverError("degenerate random field")
    return amplitude * g / sup


def make_fiber_shears(ops, count, seed, amplitude=0.5):
    return [FiberShear(random_smooth_field(ops, stream_rng(seed, k),
                                           amplitude=amplitude))
            for k in range(count)]


# -- Hamiltonian surface flows ---------------------------------------------------


@dataclass(frozen=True)
class HamiltonianFlow:
    H: np.ndarray
    t: float
    steps: int


@dataclass(frozen=True)
class FlowQuality:
    area_distortion: float
    usable: bool
    t: float
    steps: int


class _TorusChart:
    """Geometry of the periodic chart of a generated flat torus."""

    def __init__(self, mesh, ops):
        if mesh.planar_coords is None:
            raise InvalidParameterError(
                "Hamiltonian flows need a mesh with a periodic planar chart "
                "(generated flat torus)")
        self.L = mesh.box_size
        V = mesh.n_vertices
        n = int(round(math.sqrt(V)))
        if n * n != V:
            raise InvalidParameterError("chart mesh is not an n x n grid")
        self.n = n
        self.h = self.L / n
        self.coords = mesh.planar_coords
        tri = mesh.triangles
        P0 = self.coords[tri[:, 0]]
        self.P0 = P0
        self.d1 = self._minimg(self.coords[tri[:, 1]] - P0)
        self.d2 = self._minimg(self.coords[tri[:, 2]] - P0)
        self.chart_area = 0.5 * (self.d1[:, 0] * self.d2[:, 1]
                                 - self.d1[:, 1] * self.d2[:, 0])
        if np.any(self.chart_area <= 0):
            raise InvalidParameterError("chart triangles must be positive")
        self.rho = ops.face_areas / self.chart_area
        # Inverse of [[d1], [d2]] rows for barycentric solves.
        det = 2.0 * self.chart_area
        self.inv = np.empty((len(tri), 2, 2))
        self.inv[:, 0, 0] = self.d2[:, 1] / det
        self.inv[:, 0, 1] = -self.d2[:, 0] / det
        self.inv[:, 1, 0] = -self.d1[:, 1] / det
        self.inv[:, 1, 1] = self.d1[:, 0] / det

    def _minimg(self, d):
        return d - self.L * np.round(d / self.L)

    def locate(self, pts):
        """Containing face index for chart points (vectorized)."""
        p = np.mod(pts, self.L)
        gi = np.minimum((p[:, 0] / self.h).astype(np.int64), self.n - 1)
        gj = np.minimum((p[:, 1] / self.h).astype(np.int64), self.n - 1)
        fx = p[:, 0] / self.h - gi
        fy = p[:, 1] / self.h - gj
        lower = fx >= fy
        return 2 * (gi * self.n + gj) + np.where(lower, 0, 1)

    def barycentric(self, pts, faces):
        d = self._minimg(pts - self.P0[faces])
        lam12 = np.einsum("nij,nj->ni", self.inv[faces], d)
        lam0 = 1.0 - lam12.sum(axis=1)
        return np.column_stack([lam0, lam12])

    def grad_field(self, Hvals, mesh):
        """Rotated chart gradient of a PL vertex function over the conformal
        area density: the Hamiltonian field, constant per face."""
        tri = mesh.triangles
        rhs = np.column_stack([Hvals[tri[:, 1]] - Hvals[tri[:, 0]],
                               Hvals[tri[:, 2]] - Hvals[tri[:, 0]]])
        grad = np.einsum("nij,nj->ni", np.swapaxes(self.inv, 1, 2), rhs)
        rot = np.column_stack([-grad[:, 1], grad[:, 0]])
        return rot / self.rho[:, None]


def _advect(chart, X, pts, t, steps):
    dt = t / steps
    y = pts.copy()
    for _ in range(steps):
        f1 = chart.locate(y)
        ym = y + 0.5 * dt * X[f1]
        f2 = chart.locate(ym)
        y = y + dt * X[f2]
    return y


def _whitney_eval(chart, mesh, cochain, pts, faces):
    """Whitney 1-form field of an edge cochain at chart points."""
    lam = chart.barycentric(pts, faces)
    grads = np.empty((len(faces), 3, 2))
    inv_t = np.swapaxes(chart.inv[faces], 1, 2)
    grads[:, 1, :] = inv_t[:, :, 0]
    grads[:, 2, :] = inv_t[:, :, 1]
    grads[:, 0, :] = -grads[:, 1, :] - grads[:, 2, :]
    vals = cochain[mesh.face_edges[faces]] * mesh.face_edge_signs[faces]
    out = np.zeros((len(faces), 2))
    for m, (p, q) in enumerate(((0, 1), (1, 2), (2, 0))):
        w = (lam[:, p, None] * grads[:, q, :]
             - lam[:, q, None] * grads[:, p, :])
        out += vals[:, m, None] * w
    return out


def hamiltonian_pushforward(a, H, t, steps, mesh, ops):
    """Pull an invariant form back along the time-t Hamiltonian flow of H.

    The vertex function is composed with the flow; the tangential cochain is
    resampled by integrating its Whitney field along the advected edges.
    Returns the new form and a FlowQuality record with the measured relative
    area distortion; the result is flagged unusable above ``VOL_LIMIT``.

    Raises
    ------
    SolverError
        If a triangle inverts (time step too large for this H).
    """
    chart = _TorusChart(mesh, ops)
    if t == 0:
        return InvariantOneForm(a.f.copy(), a.b.copy()), \
            FlowQuality(0.0, True, t, steps)
    X = chart.grad_field(H, mesh)
    sup = np.abs(X).max()
    if t * sup > 0.45 * chart.L:
        raise SolverError("flow displacement exceeds half the chart period")

    newpos = _advect(chart, X, chart.coords, t, steps)

    tri = mesh.triangles
    q0 = newpos[tri[:, 0]]
    e1 = chart._minimg(newpos[tri[:, 1]] - q0)
    e2 = chart._minimg(newpos[tri[:, 2]] - q0)
    area2 = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    if np.any(area2 <= 0):
        raise SolverError(
            f"{int(np.sum(area2 <= 0))} triangles invert under the flow; "
            "reduce the time step")

    centroid = np.mod(q0 + (e1 + e2) / 3.0, chart.L)
    rho_new = chart.rho[chart.locate(centroid)]
    new_conf = rho_new * area2
    tau_vol = float(np.abs(new_conf - ops.face_areas).sum()
                    / ops.face_areas.sum())

    faces_v = chart.locate(newpos)
    lam_v = chart.barycentric(newpos, faces_v)
    f_new = np.einsum("ni,ni->n", lam_v, a.f[tri[faces_v]])

    i, j = mesh.edges[:, 0], mesh.edges[:, 1]
    pi, pj = newpos[i], newpos[j]
    dz = chart._minimg(pj - pi)
    seg_len = np.linalg.norm(dz, axis=1)
    K = max(4, int(np.ceil(3.0 * seg_len.max() / chart.h)))
    b_new = np.zeros(mesh.n_edges)
    for kk in range(K):
        s = (kk + 0.5) / K
        mid = pi + s * dz
        fm = chart.locate(np.mod(mid, chart.L))
        w = _whitney_eval(chart, mesh, a.b, mid, fm)
        b_new += np.einsum("ni,ni->n", w, dz) / K

    quality = FlowQuality(area_distortion=tau_vol,
                          usable=tau_vol <= VOL_LIMIT, t=t, steps=steps)
    return InvariantOneForm(f_new, b_new), quality


def make_hamiltonian_flows(ops, count, seed, steps=24, target_vol=VOL_LIMIT):
    """Random Hamiltonian flows with the time scaled until the measured area
    distortion is within ``target_vol``."""
    mesh = ops.mesh
    chart = _TorusChart(mesh, ops)
    probe = InvariantOneForm(np.zeros(mesh.n_vertices),
                             np.zeros(mesh.n_edges))
    flows = []
    for k in range(count):
        rng = stream_rng(seed, 10_000 + k)
        H = random_smooth_field(ops, rng, amplitude=1.0)
        X = chart.grad_field(H, mesh)
        t = 0.25 * chart.h / max(np.abs(X).max(), 1e-12)
        for _ in range(12):
            try:
                _, q = hamiltonian_pushforward(probe, H, t, steps, mesh, ops)
            except SolverError:
                t *= 0.5
                continue
            if q.usable:
                break
            t *= 0.5
        flows.append(HamiltonianFlow(H=H, t=t, steps=steps))
    return flows


# -- orbit minimality --------------------------------------------------------------


@dataclass(frozen=True)
class OrbitReport:
    energy_reference: float
    shear_ratios: list
    flow_ratios: list
    flow_distortions: list
    min_ratio: float
    violations: int
    seed: int | None = None

    def to_json(self):
        return {
            "energy_reference": self.energy_reference,
            "shear_ratios": self.shear_ratios,
            "flow_ratios": self.flow_ratios,
            "flow_distortions": self.flow_distortions,
            "min_ratio": self.min_ratio,
            "violations": self.violations,
            "seed": self.seed,
        }


def export_orbit_csv(report, path):
    """Per-sample energy ratios (and flow distortions) as CSV."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "index", "energy_ratio", "area_distortion"])
        for i, r in enumerate(report.shear_ratios):
            w.writerow(["fiber_shear", i, repr(r), ""])
        for i, (r, v) in enumerate(zip(report.flow_ratios,
                                       report.flow_distortions)):
            w.writerow(["hamiltonian_flow", i, repr(r), repr(v)])
    return path


def orbit_minimization_test(alpha1, family, ops, spec, seed=None):
    """Energy of every volume-preserving pullback of alpha1 must not drop.

    Fiber shears are exactly volume-preserving, so a ratio below
    ``1 - TAU_SHEAR`` raises PropertyViolationError.  Hamiltonian flows carry
    the measured area distortion tau_vol and are held to
    ``1 - max(TAU_SHEAR, 10 * tau_vol)``; those violations are recorded, not
    raised, and unusable flows are skipped.
    """
    E0 = energy(spec, ops, alpha1)
    if E0 <= 0:
        raise InvalidParameterError("reference form has zero energy")
    shear_ratios, flow_ratios, flow_vols = [], [], []
    violations = 0
    for pert in family:
        if isinstance(pert, FiberShear):
            a2 = fiber_shear_pullback(alpha1, pert.psi, ops)
            ratio = energy(spec, ops, a2) / E0
            shear_ratios.append(float(ratio))
            if ratio < 1.0 - TAU_SHEAR:
                raise PropertyViolationError(
                    f"energy dropped to ratio {ratio:.12f} under an exactly "
                    "volume-preserving fiber shear")
        elif isinstance(pert, HamiltonianFlow):
            a2, q = hamiltonian_pushforward(alpha1, pert.H, pert.t,
                                            pert.steps, ops.mesh, ops)
            if not q.usable:
                continue
            ratio = energy(spec, ops, a2) / E0
            flow_ratios.append(float(ratio))
            flow_vols.append(q.area_distortion)
            if ratio < 1.0 - max(TAU_SHEAR, 10.0 * q.area_distortion):
                violations += 1
        else:
            raise InvalidParameterError(f"unknown perturbation {pert!r}")
    ratios = shear_ratios + flow_ratios
    return OrbitReport(energy_reference=float(E0),
                       shear_ratios=shear_ratios,
                       flow_ratios=flow_ratios,
                       flow_distortions=flow_vols,
                       min_ratio=float(min(ratios)) if ratios else 1.0,
                       violations=violations,
                       seed=seed)
