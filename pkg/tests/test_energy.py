import numpy as np
import pytest

from curleig.bundle import (
    BundleSpec,
    InvariantOneForm,
    lift_eigenfunction,
    principal_curl_eigenpair,
)
from curleig.dec import assemble, scalar_laplacian
from curleig.energy import (
    FiberShear,
    HamiltonianFlow,
    energy,
    fiber_shear_pullback,
    hamiltonian_pushforward,
    helicity,
    helicity_bound_check,
    make_fiber_shears,
    make_hamiltonian_flows,
    orbit_minimization_test,
    random_smooth_field,
    stream_rng,
)
from curleig.errors import InvalidParameterError, PropertyViolationError
from curleig.mesh import generate_flat_torus
from curleig.search import bump_factor
from curleig.spectral import SpectrumRequest, solve_scalar_spectrum


@pytest.fixture(scope="module")
def bumpy():
    """Resolution-48 torus with the certificate bump metric."""
    mesh = generate_flat_torus(2 * np.pi, 48)
    u = bump_factor(mesh, 2.0, 0.6, mesh.n_vertices // 2)
    ops = assemble(mesh, u)
    spec = BundleSpec.product(mesh, 1.0, u)
    return mesh, ops, spec


@pytest.fixture(scope="module")
def alpha1(bumpy):
    _, ops, _ = bumpy
    mu1, f1 = principal_curl_eigenpair(ops)
    return mu1, InvariantOneForm(f1, ops.curl_tangential(f1) / mu1)


class TestEnergy:
    def test_zero_form(self, bumpy):
        mesh, ops, spec = bumpy
        zero = InvariantOneForm(np.zeros(mesh.n_vertices),
                                np.zeros(mesh.n_edges))
        assert energy(spec, ops, zero) == 0.0

    def test_constant_section(self, torus32):
        ops = assemble(torus32)
        spec = BundleSpec.product(torus32, 2 * np.pi)
        a = InvariantOneForm(np.ones(torus32.n_vertices),
                             np.zeros(torus32.n_edges))
        assert np.isclose(energy(spec, ops, a), 2 * np.pi * (2 * np.pi) ** 2,
                          rtol=1e-12)

    def test_paired_eigenforms_equal_energy(self, bumpy):
        mesh, ops, spec = bumpy
        S, M = scalar_laplacian(ops)
        p = solve_scalar_spectrum(S, M, SpectrumRequest(1))[0]
        ap = lift_eigenfunction(ops, p.eigenvector, p.eigenvalue, +1)
        am = lift_eigenfunction(ops, p.eigenvector, p.eigenvalue, -1)
        assert np.isclose(energy(spec, ops, ap), energy(spec, ops, am),
                          rtol=1e-14)


class TestHelicity:
    def test_eigenform_identity(self, bumpy, alpha1):
        _, ops, spec = bumpy
        mu1, a1 = alpha1
        h = helicity(spec, ops, a1)
        E = energy(spec, ops, a1)
        assert abs(h.value - E / mu1) < 1e-8 * E / mu1
        assert h.discarded_fraction < 1e-8
        assert not h.kernel_warning

    def test_negative_eigenform(self, bumpy, alpha1):
        _, ops, spec = bumpy
        mu1, a1 = alpha1
        am = InvariantOneForm(a1.f, -a1.b)
        h = helicity(spec, ops, am)
        E = energy(spec, ops, am)
        assert abs(h.value + E / mu1) < 1e-8 * E / mu1

    def test_kernel_warning_on_closed_input(self, bumpy):
        mesh, ops, spec = bumpy
        h1 = ops.harmonic_basis()[0]
        a = InvariantOneForm(np.zeros(mesh.n_vertices), h1)
        res = helicity(spec, ops, a)
        assert res.kernel_warning
        assert res.discarded_fraction > 0.99
        assert abs(res.value) < 1e-8

    def test_zero_form_rejected(self, bumpy):
        mesh, ops, spec = bumpy
        with pytest.raises(InvalidParameterError):
            helicity(spec, ops, InvariantOneForm(
                np.zeros(mesh.n_vertices), np.zeros(mesh.n_edges)))


class TestHelicityBound:
    def test_no_violations_and_equality(self, bumpy):
        _, ops, spec = bumpy
        report = helicity_bound_check(spec, ops, samples=25, seed=321)
        assert report.violations == 0
        assert report.min_slack_rel > -1e-6
        assert report.equality_slack_rel <= 1e-6

    def test_second_eigenform_positive_slack(self, bumpy):
        from curleig.bundle import curl_pencil_eigs, curl_kernel_basis
        _, ops, spec = bumpy
        lam, vecs = curl_pencil_eigs(ops)
        nker = curl_kernel_basis(ops).shape[1]
        mu1 = np.sqrt(lam[nker])
        mu2 = np.sqrt(lam[nker + 1])
        f2 = vecs[:, nker + 1]
        a2 = InvariantOneForm(f2, ops.curl_tangential(f2) / mu2)
        E = energy(spec, ops, a2)
        h = helicity(spec, ops, a2).value
        slack = E - mu1 * abs(h)
        expected = E * (1.0 - mu1 / mu2)
        assert slack > 0
        assert abs(slack - expected) < 1e-6 * E


class TestFiberShear:
    def test_constant_shear_identity(self, bumpy, alpha1):
        _, ops, spec = bumpy
        _, a1 = alpha1
        psi = np.full(ops.mesh.n_vertices, 1.23)
        a2 = fiber_shear_pullback(a1, psi, ops)
        assert np.array_equal(a2.b, a1.b)

    def test_pure_tangential_form_unchanged(self, bumpy):
        mesh, ops, spec = bumpy
        rng = np.random.default_rng(0)
        a = InvariantOneForm(np.zeros(mesh.n_vertices),
                             rng.standard_normal(mesh.n_edges))
        psi = random_smooth_field(ops, rng)
        a2 = fiber_shear_pullback(a, psi, ops)
        assert np.array_equal(a2.b, a.b)

    def test_energy_never_decreases_at_eigenform(self, bumpy, alpha1):
        _, ops, spec = bumpy
        _, a1 = alpha1
        E0 = energy(spec, ops, a1)
        for k in range(30):
            psi = random_smooth_field(ops, stream_rng(5150, k), amplitude=0.7)
            ratio = energy(spec, ops, fiber_shear_pullback(a1, psi, ops)) / E0
            assert ratio >= 1.0 - 1e-12

    def test_exact_energy_increment(self, bumpy, alpha1):
        # E(shear) - E = l ||f dpsi||^2: the cross term cancels exactly.
        _, ops, spec = bumpy
        _, a1 = alpha1
        psi = random_smooth_field(ops, stream_rng(6, 0))
        a2 = fiber_shear_pullback(a1, psi, ops)
        delta = a2.b - a1.b
        expected = spec.fiber_length * float(delta @ (ops.star1 @ delta))
        got = energy(spec, ops, a2) - energy(spec, ops, a1)
        assert abs(got - expected) < 1e-9 * energy(spec, ops, a1)

    def test_helicity_invariant_at_eigenform(self, bumpy, alpha1):
        _, ops, spec = bumpy
        _, a1 = alpha1
        h0 = helicity(spec, ops, a1).value
        E0 = energy(spec, ops, a1)
        for k in range(5):
            psi = random_smooth_field(ops, stream_rng(7, k), amplitude=0.6)
            h1 = helicity(spec, ops, fiber_shear_pullback(a1, psi, ops)).value
            assert abs(h1 - h0) <= 1e-8 * E0


class TestHamiltonianFlow:
    def test_zero_time_identity(self, bumpy, alpha1):
        mesh, ops, spec = bumpy
        _, a1 = alpha1
        H = random_smooth_field(ops, stream_rng(8, 0))
        a2, q = hamiltonian_pushforward(a1, H, 0.0, 8, mesh, ops)
        assert np.allclose(a2.f, a1.f, atol=1e-12)
        assert np.allclose(a2.b, a1.b, atol=1e-12)
        assert q.area_distortion == 0.0

    def test_constant_hamiltonian_identity(self, bumpy, alpha1):
        mesh, ops, spec = bumpy
        _, a1 = alpha1
        H = np.full(mesh.n_vertices, 4.0)
        a2, q = hamiltonian_pushforward(a1, H, 0.05, 8, mesh, ops)
        assert np.allclose(a2.f, a1.f, atol=1e-10)
        assert np.allclose(a2.b, a1.b, atol=1e-10)

    def test_small_flow_energy_and_distortion(self, bumpy, alpha1):
        mesh, ops, spec = bumpy
        _, a1 = alpha1
        flows = make_hamiltonian_flows(ops, 3, seed=99, steps=16)
        E0 = energy(spec, ops, a1)
        for fl in flows:
            a2, q = hamiltonian_pushforward(a1, fl.H, fl.t, fl.steps, mesh,
                                            ops)
            assert q.usable
            assert q.area_distortion <= 1e-3
            ratio = energy(spec, ops, a2) / E0
            assert ratio >= 1.0 - 1e-2

    def test_large_step_inverts(self, bumpy):
        mesh, ops, spec = bumpy
        from curleig.errors import SolverError
        H = random_smooth_field(ops, stream_rng(9, 0))
        with pytest.raises(SolverError):
            # grossly too large a displacement
            hamiltonian_pushforward(
                InvariantOneForm(np.zeros(mesh.n_vertices),
                                 np.zeros(mesh.n_edges)),
                H, 1e4, 2, mesh, ops)

    def test_requires_chart(self, sphere3):
        ops = assemble(sphere3)
        a = InvariantOneForm(np.zeros(sphere3.n_vertices),
                             np.zeros(sphere3.n_edges))
        with pytest.raises(InvalidParameterError):
            hamiltonian_pushforward(a, np.zeros(sphere3.n_vertices), 0.1, 4,
                                    sphere3, ops)


class TestOrbitMinimization:
    def test_full_family(self, bumpy, alpha1):
        mesh, ops, spec = bumpy
        _, a1 = alpha1
        family = make_fiber_shears(ops, 20, seed=13) + \
            make_hamiltonian_flows(ops, 4, seed=13, steps=16)
        report = orbit_minimization_test(a1, family, ops, spec, seed=13)
        assert report.violations == 0
        assert min(report.shear_ratios) >= 1.0 - 1e-9
        assert all(r >= 1.0 - 1e-2 for r in report.flow_ratios)

    def test_shear_violation_raises(self, bumpy):
        # A non-minimizing reference must be caught: use the second
        # eigenform shifted to make shears able to lower the energy.
        mesh, ops, spec = bumpy
        rng = np.random.default_rng(3)
        # f large where dpsi correlates negatively with b: engineer by
        # taking b = -f dpsi for a smooth psi.
        psi = random_smooth_field(ops, rng)
        f = random_smooth_field(ops, rng) + 1.5
        i, j = mesh.edges[:, 0], mesh.edges[:, 1]
        b = -0.5 * (f[i] + f[j]) * (psi[j] - psi[i])
        bad = InvariantOneForm(f, 2.0 * b)
        with pytest.raises(PropertyViolationError):
            orbit_minimization_test(bad, [FiberShear(psi)], ops, spec)

    def test_report_json(self, bumpy, alpha1):
        mesh, ops, spec = bumpy
        _, a1 = alpha1
        family = make_fiber_shears(ops, 3, seed=21)
        report = orbit_minimization_test(a1, family, ops, spec, seed=21)
        blob = report.to_json()
        assert blob["violations"] == 0
        assert len(blob["shear_ratios"]) == 3


def test_stream_rng_deterministic_and_split():
    a = stream_rng(42, 0).standard_normal(4)
    b = stream_rng(42, 0).standard_normal(4)
    c = stream_rng(42, 1).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_orbit_csv_export(tmp_path, bumpy, alpha1):
    from curleig.energy import export_orbit_csv, make_fiber_shears
    mesh, ops, spec = bumpy
    _, a1 = alpha1
    report = orbit_minimization_test(
        a1, make_fiber_shears(ops, 3, seed=77), ops, spec)
    path = export_orbit_csv(report, str(tmp_path / "orbit.csv"))
    rows = open(path).read().splitlines()
    assert rows[0] == "kind,index,energy_ratio,area_distortion"
    assert len(rows) == 4
