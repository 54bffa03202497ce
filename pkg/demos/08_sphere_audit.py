"""
Why the sphere product never certifies
======================================

Over the sphere the story rigidifies: whenever the first curl eigenvalue
comes from the surface branch, the first eigenfunction has exactly two
nodal domains (Courant), so the projected characteristic curve is a single
circle and the structure is universally tight.  On the fiber branch the
eigenforms vanish somewhere and define no contact structure at all.
Random conformal metrics never escape this dichotomy.
"""

from curleig import (BundleSpec, assemble, generate_icosphere,
                     s2_cross_s1_audit, scalar_laplacian,
                     solve_scalar_spectrum, SpectrumRequest)
from curleig.energy import random_smooth_field, stream_rng

mesh = generate_icosphere(1.0, 3)
ops_flat = assemble(mesh)

print("10 random conformal metrics, fiber length 1:")
for k in range(10):
    u = random_smooth_field(ops_flat, stream_rng(424242, k), amplitude=0.3)
    ops = assemble(mesh, u)
    spec = BundleSpec(fiber_length=1.0, euler_number=0, mesh=mesh, factor=u)
    S, M = scalar_laplacian(ops)
    pairs = solve_scalar_spectrum(S, M, SpectrumRequest(4))
    rep = s2_cross_s1_audit(spec, ops, pairs)
    verdicts = {m["classification"] for m in rep["members"]}
    courant = all(m["courant_two_domains"] for m in rep["members"])
    print(f"  metric {k}: nu_1 = {rep['nu1']:.4f}, branch {rep['branch']}, "
          f"Courant ok: {courant}, verdicts: {sorted(verdicts)}")

print("\nlong fibers push the first eigenvalue onto the fiber branch:")
spec = BundleSpec(fiber_length=50.0, euler_number=0, mesh=mesh)
ops = assemble(mesh)
S, M = scalar_laplacian(ops)
pairs = solve_scalar_spectrum(S, M, SpectrumRequest(2))
rep = s2_cross_s1_audit(spec, ops, pairs)
print(f"  l = 50: mu_1^2 = {rep['mu1_sq']:.5f} ({rep['branch']} branch), "
      f"eigenforms have zeros: {rep['has_zeros']}")
