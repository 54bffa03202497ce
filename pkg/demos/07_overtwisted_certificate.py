"""
An overtwisted energy minimizer
===============================

The headline computation.  On the flat torus the first eigenfunction's
nodal set is a pair of essential circles and the invariant contact
structure is universally tight.  Concentrating area with a conformal bump
localizes the first eigenfunction; its nodal set becomes a single circle
bounding a disc, and the classifier flips to overtwisted -- while the
lifted eigenform still minimizes energy on its volume-preserving orbit
(helicity bound and orbit tests pass).  A metric sweep finds such points
and certifies them end to end.
"""

import numpy as np

from curleig import generate_flat_torus
from curleig.search import BumpFamily, SweepConfig, certify, sweep

mesh = generate_flat_torus(2 * np.pi, 48)
family = BumpFamily(center=mesh.n_vertices // 2,
                    amplitudes=(0.0, 1.5), widths=(0.6,))
config = SweepConfig(seed=90210, bound_samples=40, shear_count=40,
                     flow_count=6, flow_steps=16)

print("sweeping conformal bumps on the genus-1 torus "
      "(fiber length 1, so the fiber branch sits at (2 pi)^2 = 39.5) ...\n")
reports = sweep(mesh, family, fiber_length=1.0, config=config)

for r in sorted(reports, key=lambda r: (r.amplitude, r.width)):
    print(f"A = {r.amplitude:<4g} sigma = {r.width:<4g}")
    print(f"  nu_1 = {r.nu1:.5f}  branch = {r.branch}  "
          f"nodal components = {r.nodal_components}")
    print(f"  verdict: {r.verdict} (rule {r.rule_fired})", end="")
    if r.disc_witness is not None:
        w = r.region_table[r.disc_witness]
        print(f", disc witness: region {r.disc_witness} "
              f"(chi = {w['euler_characteristic']}, "
              f"{w['boundary_loop_count']} loop)")
    else:
        print()
    if r.orbit is not None:
        print(f"  curl residual {r.curl_residual_plus:.3f}, "
              f"orbit min ratio {r.orbit['min_ratio']:.8f}, "
              f"helicity equality slack "
              f"{r.helicity_bound['equality_slack_rel']:.1e}")
    print(f"  complete certificate: {certify(r)}\n")

best = next((r for r in reports if r.complete), None)
if best:
    print("==> an overtwisted invariant curl eigenfield that minimizes "
          "energy on its")
    print("    volume-preserving orbit exists at "
          f"(A, sigma) = ({best.amplitude}, {best.width}).")
    print("    Energy minimization does not force tightness.")

# Save a picture of the localized eigenfunction and its nodal circle.
try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from curleig import assemble, scalar_laplacian, extract_nodal_set
    from curleig.search import bump_factor
    from curleig.spectral import SpectrumRequest, solve_scalar_spectrum

    u = bump_factor(mesh, best.amplitude, best.width, best.center)
    ops = assemble(mesh, u)
    S, M = scalar_laplacian(ops)
    f1 = solve_scalar_spectrum(S, M, SpectrumRequest(1))[0].eigenvector
    x, y = mesh.planar_coords.T
    fig, ax = plt.subplots(figsize=(5, 5))
    tp = ax.tripcolor(x, y, f1, shading="gouraud", cmap="RdBu_r")
    for curve in extract_nodal_set(mesh, f1):
        pts = []
        for (e, t, _) in curve.points:
            i, j = mesh.edges[e]
            d = mesh.planar_coords[j] - mesh.planar_coords[i]
            d -= 2 * np.pi * np.round(d / (2 * np.pi))
            pts.append(mesh.planar_coords[i] + t * d)
        pts = np.array(pts)
        ax.plot(pts[:, 0], pts[:, 1], "k.", ms=2)
    ax.set_aspect("equal")
    ax.set_title("first eigenfunction and its nodal circle")
    fig.colorbar(tp, ax=ax, shrink=0.8)
    fig.savefig("demo_certificate_eigenfunction.png", dpi=130,
                bbox_inches="tight")
    print("\nwrote demo_certificate_eigenfunction.png")
except ImportError:
    pass
