import numpy as np
import pytest

from curleig.errors import DegenerateMetricError, InvalidParameterError
from curleig.mesh import effective_edge_lengths, generate_flat_torus
from curleig.search import (
    BumpFamily,
    SweepConfig,
    bump_factor,
    certify,
    sweep,
)


class TestBumpFactor:
    def test_zero_amplitude(self, torus32):
        u = bump_factor(torus32, 0.0, 0.5, 0)
        assert np.array_equal(u, np.zeros(torus32.n_vertices))

    def test_wide_bump_is_constant(self, torus32):
        u = bump_factor(torus32, 1.5, 1e6, 0)
        assert np.allclose(u, 1.5, atol=1e-6)

    def test_moderate_bump_validates(self, torus48):
        u = bump_factor(torus48, 3.0, 0.5, 0)
        lengths = effective_edge_lengths(torus48, u)   # must not raise
        assert lengths.max() > torus48.base_edge_lengths.max()
        assert u.max() == pytest.approx(3.0)
        # localized: drops below 5% of the peak outside a few widths
        assert np.median(u) < 0.15

    def test_bad_width(self, torus32):
        with pytest.raises(InvalidParameterError):
            bump_factor(torus32, 1.0, 0.0, 0)

    def test_sharp_bump_degenerates(self, torus48):
        u = bump_factor(torus48, 50.0, 0.05, 0)
        with pytest.raises(DegenerateMetricError):
            effective_edge_lengths(torus48, u)


@pytest.fixture(scope="module")
def fast_reports(torus48):
    family = BumpFamily(center=torus48.n_vertices // 2,
                        amplitudes=(0.0, 2.0), widths=(0.6,))
    cfg = SweepConfig(seed=7, run_expensive=False)
    return sweep(torus48, family, 1.0, cfg)


class TestSweepFast:
    """Classification-only sweeps (expensive certificate tests disabled)."""

    def test_flat_point_tight(self, fast_reports):
        flat = [r for r in fast_reports if r.amplitude == 0.0][0]
        assert flat.status == "ok"
        assert flat.verdict == "universally_tight"
        assert flat.nodal_components == 2
        assert not flat.complete

    def test_bump_point_overtwisted(self, fast_reports):
        bump = [r for r in fast_reports if r.amplitude == 2.0][0]
        assert bump.verdict == "overtwisted"
        assert bump.rule_fired == "i"
        assert bump.nodal_components == 1
        assert bump.disc_witness is not None
        witness = bump.region_table[bump.disc_witness]
        assert witness["euler_characteristic"] == 1
        assert witness["boundary_loop_count"] == 1
        assert bump.branch == "nu1"

    def test_incomplete_without_expensive_tests(self, fast_reports):
        # Without orbit/bound runs no point can be a complete certificate.
        assert all(not r.complete for r in fast_reports)

    def test_degenerate_point_skipped(self, torus48):
        family = BumpFamily(center=0, amplitudes=(50.0,), widths=(0.05,))
        reports = sweep(torus48, family, 1.0,
                        SweepConfig(seed=1, run_expensive=False))
        assert reports[0].status == "skipped"
        assert "degenerate" in reports[0].skip_reason

    def test_genus_zero_refused(self, sphere3):
        family = BumpFamily(center=0, amplitudes=(1.0,), widths=(0.5,))
        with pytest.raises(InvalidParameterError):
            sweep(sphere3, family, 1.0, SweepConfig(seed=1))

    def test_determinism(self, torus48):
        family = BumpFamily(center=5, amplitudes=(1.5,), widths=(0.6,))
        cfg = SweepConfig(seed=99, run_expensive=False)
        r1 = sweep(torus48, family, 1.0, cfg)
        r2 = sweep(torus48, family, 1.0, cfg)
        assert [a.to_json() for a in r1] == [b.to_json() for b in r2]


@pytest.fixture(scope="module")
def cert_report(torus48):
    family = BumpFamily(center=torus48.n_vertices // 2,
                        amplitudes=(1.5,), widths=(0.6,))
    cfg = SweepConfig(seed=11, bound_samples=20, shear_count=20,
                      flow_count=2, flow_steps=16)
    return sweep(torus48, family, 1.0, cfg)[0]


class TestCertification:
    def test_complete_certificate(self, cert_report):
        r = cert_report
        assert r.verdict == "overtwisted"
        assert r.branch == "nu1"
        assert r.curl_residual_plus <= 0.05
        assert r.curl_residual_minus <= 0.05
        assert r.helicity_bound["violations"] == 0
        assert r.helicity_bound["equality_slack_rel"] <= 1e-6
        assert r.orbit["violations"] == 0
        assert min(r.orbit["shear_ratios"]) >= 1.0 - 1e-9
        assert r.complete
        assert certify(r)

    def test_mu1_matches_scalar(self, cert_report):
        r = cert_report
        assert abs(r.mu1_curl - np.sqrt(r.nu1)) < 0.05 * np.sqrt(r.nu1)

    def test_certify_rejects_fiber_branch(self, cert_report):
        import copy
        r = copy.copy(cert_report)
        r.branch = "fiber"
        assert not certify(r)

    def test_certify_rejects_tight(self, cert_report):
        import copy
        r = copy.copy(cert_report)
        r.verdict = "universally_tight"
        assert not certify(r)


@pytest.mark.slow
class TestRefinementStability:
    def test_certificate_survives_refinement(self):
        # Same smooth bump at resolutions 48 and 96: same verdict and branch.
        for n in (48, 96):
            mesh = generate_flat_torus(2 * np.pi, n)
            family = BumpFamily(center=mesh.n_vertices // 2 + n // 2,
                                amplitudes=(1.5,), widths=(0.6,))
            cfg = SweepConfig(seed=3, run_expensive=False)
            r = sweep(mesh, family, 1.0, cfg)[0]
            assert r.verdict == "overtwisted"
            assert r.branch == "nu1"
            assert r.nodal_components == 1
