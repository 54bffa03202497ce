"""Curl eigenfields on products of a circle with a closed surface.

The library discretizes invariant 1-forms on S1 x Sigma, solves the surface
eigenproblems they reduce to, extracts the nodal topology of eigenfunctions,
classifies the induced invariant contact structures as tight or overtwisted,
and certifies energy minimization on the volume-preserving orbit.
"""

from .bundle import (BundleSpec, InvariantOneForm, ProductEigenvalue,
                     assemble_product_spectrum, curl_residual, invariant_curl,
                     lift_eigenfunction, principal_curl_eigenpair,
                     product_inner, product_norm)
from .contact import (ClassificationInput, Verdict, characteristic_projection,
                      giroux_classify, s2_cross_s1_audit)
from .dec import (OperatorSet, assemble, hodge_decompose, inner_product_0,
                  inner_product_1, one_form_laplacian, rotated_differential,
                  scalar_laplacian)
from .energy import (FiberShear, HamiltonianFlow, energy, fiber_shear_pullback,
                     hamiltonian_pushforward, helicity, helicity_bound_check,
                     orbit_minimization_test)
from .mesh import (ConformalFactor, SurfaceTopology, TriangleMesh,
                   effective_edge_lengths, generate_flat_torus,
                   generate_icosphere, load_mesh, mesh_summary, save_mesh,
                   topology)
from .nodal import (NodalCurve, NodalDomainSet, RegionTopology, courant_check,
                    extract_nodal_set, nodal_domains)
from .search import (BumpFamily, CertificateReport, SweepConfig, bump_factor,
                     certify, sweep)
from .spectral import (EigenPair, SpectrumRequest, harmonic_basis,
                       rayleigh_quotient, solve_scalar_spectrum)

__version__ = "0.1.0"
