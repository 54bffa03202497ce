"""
Hodge decomposition of 1-cochains
=================================

A random edge cochain splits into exact + coexact + harmonic parts that
are mutually orthogonal in the Whitney mass inner product.  On the torus
the harmonic space is two-dimensional (the two winding directions); its
basis vectors pair nontrivially with the coordinate direction fields.
"""

import numpy as np

from curleig import assemble, generate_flat_torus, hodge_decompose
from curleig.dec import inner_product_1
from curleig.spectral import harmonic_basis

mesh = generate_flat_torus(2 * np.pi, 32)
ops = assemble(mesh)

rng = np.random.default_rng(7)
b = rng.standard_normal(mesh.n_edges)
exact, coexact, harmonic = hodge_decompose(ops, b)

norm = lambda v: np.sqrt(inner_product_1(ops, v, v))
print(f"|b|        = {norm(b):.6f}")
print(f"|exact|    = {norm(exact):.6f}")
print(f"|coexact|  = {norm(coexact):.6f}")
print(f"|harmonic| = {norm(harmonic):.6f}")

pythagoras = norm(exact) ** 2 + norm(coexact) ** 2 + norm(harmonic) ** 2
print(f"\nsum of squares / |b|^2 = {pythagoras / norm(b)**2:.12f}")

err = b - exact - coexact - harmonic
print(f"reassembly error       = {norm(err):.2e}")
for name, u, v in (("exact.coexact", exact, coexact),
                   ("exact.harmonic", exact, harmonic),
                   ("coexact.harmonic", coexact, harmonic)):
    print(f"<{name}> = {inner_product_1(ops, u, v):+.2e}")

print("\nHarmonic basis pairings with the coordinate direction fields:")
basis = harmonic_basis(ops, genus=1)
i, j = mesh.edges[:, 0], mesh.edges[:, 1]
d = mesh.planar_coords[j] - mesh.planar_coords[i]
d -= 2 * np.pi * np.round(d / (2 * np.pi))
for k, h in enumerate(basis):
    px = inner_product_1(ops, h, d[:, 0])
    py = inner_product_1(ops, h, d[:, 1])
    print(f"  h{k}: <h, dx> = {px:+.4f}   <h, dy> = {py:+.4f}")
