"""Tight / overtwisted classification of invariant contact structures.

The classifier consumes only combinatorial data: the surface topology, the
bundle Euler number, and the region table of the projected characteristic
curve system.  The three rules are:

(i)   surface not a sphere: universally tight iff no complementary region
      is a disc;
(ii)  sphere, e < 0: tight iff the curve system is empty;
(iii) sphere, e >= 0: tight iff the curve system is a single circle.

An empty curve system on the sphere with e >= 0 fails (iii) (we treat the
empty set as not connected) and the verdict carries a flag so the case is
auditable downstream.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParameterError, PropertyViolationError
from .nodal import courant_check, extract_nodal_set, nodal_domains

__all__ = [
    "ClassificationInput",
    "Verdict",
    "characteristic_projection",
    "giroux_classify",
    "s2_cross_s1_audit",
    "verdict_to_json",
]


@dataclass(frozen=True)
class ClassificationInput:
    genus: int
    euler_number: int
    regions: list                 # RegionTopology records
    curve_components: int


@dataclass(frozen=True)
class Verdict:
    classification: str           # "universally_tight" | "overtwisted"
    rule_fired: str               # "i" | "ii" | "iii"
    witness_region: Optional[int] = None
    empty_curve_flag: bool = False

    @property
    def tight(self):
        return self.classification == "universally_tight"


def characteristic_projection(mesh, f1):
    """Nodal curves of the generating eigenfunction: the projection of the
    characteristic surface of the lifted contact forms."""
    return extract_nodal_set(mesh, f1)


def _disc_witness(regions):
    for r in regions:
        if r.is_disc:
            return r.region_id
    return None


def giroux_classify(inp):
    """Apply the tight/overtwisted criterion to combinatorial region data."""
    if inp.genus < 0:
        raise InvalidParameterError("genus must be nonnegative")
    if inp.genus > 0:
        tight = not any(r.is_disc for r in inp.regions)
        return Verdict(
            classification="universally_tight" if tight else "overtwisted",
            rule_fired="i",
            witness_region=None if tight else _disc_witness(inp.regions))
    if inp.euler_number < 0:
        tight = inp.curve_components == 0
        return Verdict(
            classification="universally_tight" if tight else "overtwisted",
            rule_fired="ii",
            witness_region=None if tight else _disc_witness(inp.regions))
    tight = inp.curve_components == 1
    return Verdict(
        classification="universally_tight" if tight else "overtwisted",
        rule_fired="iii",
        witness_region=None if tight else _disc_witness(inp.regions),
        empty_curve_flag=(inp.curve_components == 0))


def s2_cross_s1_audit(spec, ops, scalar_pairs):
    """Check the rigidity statement for the product of a sphere and a circle.

    Decides the branch of the first curl eigenvalue from the closed-form
    minimum; on the surface branch runs the Courant count and the classifier
    for every member of the first eigenvalue cluster, which must all come out
    universally tight.  On the fiber branch the report flags that those
    eigenforms vanish somewhere and define no contact structure.

    Raises
    ------
    PropertyViolationError
        If any surface-branch verdict is overtwisted (a bug signal, not a
        discovery).
    """
    if spec.genus != 0:
        raise InvalidParameterError("audit applies to genus 0 only")
    nu1 = scalar_pairs[0].eigenvalue
    fiber_sq = (2 * np.pi / spec.fiber_length) ** 2
    branch = "nu1" if nu1 <= fiber_sq else "fiber"
    report = {
        "nu1": nu1,
        "fiber_value_sq": fiber_sq,
        "mu1_sq": min(nu1, fiber_sq),
        "branch": branch,
        "has_zeros": branch == "fiber",
        "members": [],
    }
    if branch == "fiber":
        return report
    cluster0 = [p for p in scalar_pairs if p.cluster_id == scalar_pairs[0].cluster_id]
    for p in cluster0:
        curves = characteristic_projection(spec.mesh, p.eigenvector)
        domains = nodal_domains(spec.mesh, p.eigenvector, curves)
        verdict = giroux_classify(ClassificationInput(
            genus=0, euler_number=spec.euler_number,
            regions=domains.regions,
            curve_components=domains.curve_components))
        member = {
            "courant_two_domains": courant_check(domains),
            "curve_components": domains.curve_components,
            "classification": verdict.classification,
            "rule_fired": verdict.rule_fired,
        }
        report["members"].append(member)
        if not verdict.tight:
            raise PropertyViolationError(
                "surface-branch eigenform classified overtwisted on the "
                "sphere product; this contradicts the Courant rigidity "
                "argument and signals a bug")
    return report


def verdict_to_json(verdict, domains=None):
    out = {
        "classification": verdict.classification,
        "rule": verdict.rule_fired,
        "witness_region": verdict.witness_region,
        "empty_curve_flag": verdict.empty_curve_flag,
    }
    if domains is not None:
        out["curve_components"] = domains.curve_components
        out["region_table"] = [{
            "region_id": r.region_id,
            "sign": r.sign,
            "euler_characteristic": r.euler_characteristic,
            "boundary_loop_count": r.boundary_loop_count,
            "is_disc": r.is_disc,
        } for r in domains.regions]
    return out
