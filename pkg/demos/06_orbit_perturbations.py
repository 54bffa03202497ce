"""
Energy along the volume-preserving orbit
========================================

Pulling the principal curl eigenform back by volume-preserving maps can
only raise its energy.  Fiber shears are exactly volume-preserving and the
midpoint discretization makes the energy increment exactly nonnegative;
Hamiltonian surface flows are volume-preserving up to a measured area
distortion and stay within the matching tolerance.
"""

import numpy as np

from curleig import BundleSpec, assemble, energy, generate_flat_torus
from curleig.bundle import InvariantOneForm, principal_curl_eigenpair
from curleig.energy import (fiber_shear_pullback, hamiltonian_pushforward,
                            make_fiber_shears, make_hamiltonian_flows,
                            orbit_minimization_test)
from curleig.search import bump_factor

mesh = generate_flat_torus(2 * np.pi, 48)
u = bump_factor(mesh, 2.0, 0.6, mesh.n_vertices // 2)
ops = assemble(mesh, u)
spec = BundleSpec.product(mesh, 1.0, u)

mu1, f1 = principal_curl_eigenpair(ops)
alpha1 = InvariantOneForm(f1, ops.curl_tangential(f1) / mu1)
E0 = energy(spec, ops, alpha1)
print(f"reference energy E(alpha_1) = {E0:.6f}")

print("\nfiber shears (exactly volume-preserving):")
for k, shear in enumerate(make_fiber_shears(ops, 5, seed=11)):
    E = energy(spec, ops, fiber_shear_pullback(alpha1, shear.psi, ops))
    print(f"  shear {k}: E ratio = {E / E0:.12f}")

print("\nHamiltonian flows (measured area distortion):")
for k, flow in enumerate(make_hamiltonian_flows(ops, 5, seed=12, steps=16)):
    a2, q = hamiltonian_pushforward(alpha1, flow.H, flow.t, flow.steps,
                                    mesh, ops)
    print(f"  flow {k}: E ratio = {energy(spec, ops, a2) / E0:.8f}   "
          f"tau_vol = {q.area_distortion:.2e}   t = {flow.t:.4f}")

family = make_fiber_shears(ops, 50, seed=13) + \
    make_hamiltonian_flows(ops, 10, seed=13, steps=16)
report = orbit_minimization_test(alpha1, family, ops, spec, seed=13)
print(f"\nfull family: min ratio {report.min_ratio:.10f}, "
      f"{report.violations} violations")
