"""
Curl eigenforms on the product
==============================

A scalar eigenfunction f with eigenvalue nu lifts to the invariant pair
(f, +-rot(df)/sqrt(nu)), a curl eigenform of eigenvalue +-sqrt(nu) on the
product of the circle with the surface.  The discrete eigen-relation defect
shrinks at second order under mesh refinement.

The candidate spectrum of the product combines the surface eigenvalues
with fiber harmonics: mu_1^2 = min(nu_1, (2 pi / l)^2).
"""

import numpy as np

from curleig import (BundleSpec, assemble, assemble_product_spectrum,
                     curl_residual, generate_flat_torus, lift_eigenfunction,
                     scalar_laplacian, solve_scalar_spectrum, SpectrumRequest)

print("eigen-relation defect of the lifted pair (flat torus, L = 2 pi):")
print(f"{'res':>5} {'residual(+)':>13} {'residual(-)':>13}")
prev = None
for res in (16, 32, 64):
    mesh = generate_flat_torus(2 * np.pi, res)
    ops = assemble(mesh)
    spec = BundleSpec.product(mesh, 1.0)
    S, M = scalar_laplacian(ops)
    p = solve_scalar_spectrum(S, M, SpectrumRequest(1))[0]
    mu = np.sqrt(p.eigenvalue)
    rp = curl_residual(spec, ops,
                       lift_eigenfunction(ops, p.eigenvector, p.eigenvalue, +1),
                       +mu)
    rm = curl_residual(spec, ops,
                       lift_eigenfunction(ops, p.eigenvector, p.eigenvalue, -1),
                       -mu)
    note = f"   ratio {prev / rp:.2f}" if prev else ""
    print(f"{res:>5} {rp:>13.3e} {rm:>13.3e}{note}")
    prev = rp

print("\nproduct spectrum candidates (nu list [1, 1, 2], genus 1):")
for l in (np.pi, 4 * np.pi):
    spec = BundleSpec.product(mesh, l)
    eigs = assemble_product_spectrum(spec, [1.0, 1.0, 2.0], n_max=2)
    head = ", ".join(f"{e.value_sq:.3f}[{e.origin}]" for e in eigs[:4])
    print(f"  l = {l:5.3f}: {head}, ...")
    print(f"           mu_1^2 = {eigs[0].value_sq:.4f} "
          f"= min(nu_1, (2 pi / l)^2) = "
          f"{min(1.0, (2 * np.pi / l)**2):.4f}")
