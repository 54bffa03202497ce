"""
Nodal domains on the sphere
===========================

The first eigenvalue of the unit round sphere is 2 with multiplicity 3
(the linear coordinate functions).  Each eigenfunction vanishes on a great
circle and splits the sphere into two hemispherical discs: the Courant
count of nodal domains is exactly two, and each domain has Euler
characteristic 1 with a single boundary loop.
"""

from curleig import (assemble, courant_check, extract_nodal_set,
                     generate_icosphere, nodal_domains, scalar_laplacian,
                     solve_scalar_spectrum, SpectrumRequest)

mesh = generate_icosphere(1.0, 3)
ops = assemble(mesh)
S, M = scalar_laplacian(ops)
pairs = solve_scalar_spectrum(S, M, SpectrumRequest(3))

print(f"nu_1 = {pairs[0].eigenvalue:.6f} "
      f"(multiplicity {pairs[0].cluster_size}, exact value 2)")

for k, p in enumerate(pairs):
    curves = extract_nodal_set(mesh, p.eigenvector)
    domains = nodal_domains(mesh, p.eigenvector, curves)
    print(f"\neigenfunction {k}:")
    print(f"  nodal components: {len(curves)}")
    print(f"  Courant count two domains: {courant_check(domains)}")
    for r in domains.regions:
        kind = "disc" if r.is_disc else "not a disc"
        print(f"  region {r.region_id}: sign {r.sign:+d}, "
              f"chi = {r.euler_characteristic}, "
              f"{r.boundary_loop_count} boundary loop(s) -> {kind}")
