"""Command-line orchestration.

Exit codes: 0 success, 1 configuration or I/O failure, 2 mathematical
property violation (bug signal).  Every JSON artifact embeds the hash of the
canonical config and the master seed; all randomness is derived from that
seed by counter-based splitting (substream k is
``SeedSequence(seed, spawn_key=(k,))``).
"""

import argparse
import csv
import hashlib
import json
import os
import sys

import numpy as np

from .bundle import BundleSpec, InvariantOneForm, principal_curl_eigenpair
from .contact import (ClassificationInput, giroux_classify, s2_cross_s1_audit,
                      verdict_to_json)
from .dec import assemble, scalar_laplacian
from .energy import (export_orbit_csv, make_fiber_shears,
                     make_hamiltonian_flows, orbit_minimization_test,
                     random_smooth_field, stream_rng)
from .errors import CurlEigError, PropertyViolationError
from .mesh import (generate_flat_torus, generate_icosphere, load_mesh,
                   mesh_summary, save_mesh, topology)
from .nodal import (curves_to_json, export_curves_obj, extract_nodal_set,
                    nodal_domains, regions_to_json)
from .search import (DEFAULT_A_GRID, DEFAULT_SIGMA_GRID, BumpFamily,
                     SweepConfig, bump_factor, sweep)
from .spectral import SpectrumRequest, export_spectrum_csv, solve_scalar_spectrum

__all__ = ["main"]


def _parse_mesh(spec_str):
    """Mesh source: ``torus:RES:SIDE``, ``icosphere:SUBDIV:RADIUS``, or an
    OBJ path."""
    if spec_str.startswith("torus:"):
        _, res, side = spec_str.split(":")
        return generate_flat_torus(float(side), int(res))
    if spec_str.startswith("icosphere:"):
        _, sub, rad = spec_str.split(":")
        return generate_icosphere(float(rad), int(sub))
    if not os.path.exists(spec_str):
        raise FileNotFoundError(f"mesh file not found: {spec_str}")
    return load_mesh(spec_str)


def _parse_metric(metric_str, mesh):
    """Bump metric ``A,SIGMA[,CENTER]`` (center defaults to the middle
    vertex); empty or ``flat`` means the base metric."""
    if not metric_str or metric_str == "flat":
        return None
    parts = metric_str.split(",")
    A, sigma = float(parts[0]), float(parts[1])
    center = int(parts[2]) if len(parts) > 2 else mesh.n_vertices // 2
    return bump_factor(mesh, A, sigma, center)


def _config_hash(config):
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _write_artifact(path, kind, payload, config, seed):
    artifact = {
        "kind": kind,
        "config_hash": _config_hash(config),
        "seed": seed,
        "payload": payload,
    }
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        json.dump(artifact, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _read_kv_config(path):
    """Flat ``key = value`` config file (TOML-style scalars, # comments)."""
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key] = val
    return out


def _grid(arg):
    return tuple(float(x) for x in arg.split(","))


# -- commands -----------------------------------------------------------------------


def _cmd_spectrum(args):
    mesh = _parse_mesh(args.mesh)
    u = _parse_metric(args.metric, mesh)
    ops = assemble(mesh, u)
    S, M = scalar_laplacian(ops)
    pairs = solve_scalar_spectrum(S, M, SpectrumRequest(args.k, args.tol))
    os.makedirs(args.out, exist_ok=True)
    export_spectrum_csv(pairs, os.path.join(args.out, "spectrum.csv"))
    config = {"command": "spectrum", "mesh": args.mesh, "metric": args.metric,
              "k": args.k, "tol": args.tol}
    _write_artifact(os.path.join(args.out, "mesh_summary.json"),
                    "mesh_summary", mesh_summary(mesh), config, None)
    print(f"nu_1 = {pairs[0].eigenvalue:.8g}  "
          f"(cluster size {pairs[0].cluster_size})")
    return 0


def _cmd_nodal(args):
    mesh = _parse_mesh(args.mesh)
    u = _parse_metric(args.metric, mesh)
    ops = assemble(mesh, u)
    S, M = scalar_laplacian(ops)
    pairs = solve_scalar_spectrum(
        S, M, SpectrumRequest(max(args.eig_index + 1, 4)))
    f = pairs[args.eig_index].eigenvector
    curves = extract_nodal_set(mesh, f)
    domains = nodal_domains(mesh, f, curves)
    os.makedirs(args.out, exist_ok=True)
    export_curves_obj(curves, os.path.join(args.out, "nodal_curves.obj"))
    config = {"command": "nodal", "mesh": args.mesh, "metric": args.metric,
              "eig_index": args.eig_index}
    payload = {"curves": curves_to_json(curves),
               "regions": regions_to_json(domains),
               "eigenvalue": pairs[args.eig_index].eigenvalue}
    _write_artifact(os.path.join(args.out, "nodal_report.json"),
                    "nodal_report", payload, config, None)
    print(f"{len(curves)} nodal component(s), "
          f"{len(domains.regions)} region(s)")
    return 0


def _cmd_classify(args):
    mesh = _parse_mesh(args.mesh)
    u = _parse_metric(args.metric, mesh)
    ops = assemble(mesh, u)
    topo = topology(mesh)
    S, M = scalar_laplacian(ops)
    pairs = solve_scalar_spectrum(S, M, SpectrumRequest(4))
    f1 = pairs[0].eigenvector
    nu1 = pairs[0].eigenvalue
    curves = extract_nodal_set(mesh, f1)
    domains = nodal_domains(mesh, f1, curves)
    verdict = giroux_classify(ClassificationInput(
        genus=topo.genus, euler_number=args.euler_number,
        regions=domains.regions, curve_components=domains.curve_components))
    fiber_sq = (2 * np.pi / args.fiber_length) ** 2
    payload = verdict_to_json(verdict, domains)
    payload["nu1"] = nu1
    payload["fiber_value_sq"] = fiber_sq
    payload["branch"] = "nu1" if nu1 <= fiber_sq else "fiber"
    config = {"command": "classify", "mesh": args.mesh,
              "metric": args.metric, "fiber_length": args.fiber_length,
              "euler_number": args.euler_number}
    os.makedirs(args.out, exist_ok=True)
    _write_artifact(os.path.join(args.out, "verdict.json"), "verdict",
                    payload, config, None)
    print(f"{verdict.classification} (rule {verdict.rule_fired})")
    return 0


def _cmd_certify_sweep(args):
    if args.config:
        kv = _read_kv_config(args.config)
        if "a_grid" in kv:
            args.a_grid = kv["a_grid"]
        if "sigma_grid" in kv:
            args.sigma_grid = kv["sigma_grid"]
        if "fiber_length" in kv:
            args.fiber_length = float(kv["fiber_length"])
        if "seed" in kv:
            args.seed = int(kv["seed"])
        if "center" in kv:
            args.center = int(kv["center"])
    mesh = _parse_mesh(args.mesh)
    center = args.center if args.center >= 0 else mesh.n_vertices // 2
    family = BumpFamily(center=center, amplitudes=_grid(args.a_grid),
                        widths=_grid(args.sigma_grid))
    config_obj = SweepConfig(seed=args.seed, run_expensive=not args.fast)
    reports = sweep(mesh, family, args.fiber_length, config_obj)
    config = {"command": "certify-sweep", "mesh": args.mesh,
              "a_grid": args.a_grid, "sigma_grid": args.sigma_grid,
              "fiber_length": args.fiber_length, "center": center,
              "fast": args.fast}
    os.makedirs(args.out, exist_ok=True)
    rows = [r.to_json() for r in reports]
    for r, row in zip(reports, rows):
        row["mesh_spec"] = args.mesh
    _write_artifact(os.path.join(args.out, "sweep.json"), "sweep",
                    {"points": rows,
                     "n_complete": sum(r.complete for r in reports)},
                    config, args.seed)
    with open(os.path.join(args.out, "sweep.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["A", "sigma", "nu1", "branch", "components", "verdict",
                    "complete", "status"])
        for r in sorted(reports, key=lambda r: (r.amplitude, r.width)):
            w.writerow([r.amplitude, r.width, r.nu1, r.branch,
                        r.nodal_components, r.verdict, r.complete, r.status])
    best = next((r for r in reports if r.complete), None)
    if best is not None:
        bdir = os.path.join(args.out, "best_certificate")
        os.makedirs(bdir, exist_ok=True)
        u = bump_factor(mesh, best.amplitude, best.width, best.center)
        ops = assemble(mesh, u)
        S, M = scalar_laplacian(ops)
        pairs = solve_scalar_spectrum(S, M, SpectrumRequest(4))
        f1 = pairs[best.member_index].eigenvector
        curves = extract_nodal_set(mesh, f1)
        save_mesh(mesh, os.path.join(bdir, "mesh.obj"))
        export_curves_obj(curves, os.path.join(bdir, "nodal_curves.obj"))
        if mesh.planar_coords is not None:
            _save_eigenfunction_graph(
                mesh, f1, os.path.join(bdir, "f1_graph.obj"))
        row = best.to_json()
        row["mesh_spec"] = args.mesh
        row["f1"] = [float(x) for x in f1]
        _write_artifact(os.path.join(bdir, "certificate.json"), "certificate",
                        row, config, args.seed)
        print(f"complete certificate at A={best.amplitude}, "
              f"sigma={best.width} (nu1={best.nu1:.6g}, branch={best.branch})")
    else:
        print("no complete certificate on this grid")
    for r in reports:
        tag = "COMPLETE" if r.complete else (r.verdict or r.status)
        print(f"  A={r.amplitude:<5g} sigma={r.width:<5g} -> {tag}")
    return 0


def _save_eigenfunction_graph(mesh, f, path):
    """OBJ of the graph surface (x, y, f(x, y)) over the periodic chart."""
    scale = 0.35 * mesh.box_size / max(abs(float(f.max())),
                                       abs(float(f.min())), 1e-30)
    with open(path, "w") as fh:
        for (x, y), z in zip(mesh.planar_coords, f):
            fh.write(f"v {x:.17g} {y:.17g} {scale * z:.17g}\n")
        for (i, j, k) in mesh.triangles:
            fh.write(f"f {i + 1} {j + 1} {k + 1}\n")
    return path


def _cmd_orbit_test(args):
    with open(args.certificate) as fh:
        artifact = json.load(fh)
    cert = artifact["payload"]
    mesh = _parse_mesh(cert["mesh_spec"])
    u = bump_factor(mesh, cert["amplitude"], cert["width"], cert["center"])
    ops = assemble(mesh, u)
    spec = BundleSpec.product(mesh, cert["fiber_length"], u)
    mu1, f1 = principal_curl_eigenpair(ops)
    alpha1 = InvariantOneForm(f1, ops.curl_tangential(f1) / mu1)
    shears = make_fiber_shears(ops, args.samples, seed=args.seed)
    flows = make_hamiltonian_flows(ops, args.flows, seed=args.seed)
    report = orbit_minimization_test(alpha1, shears + flows, ops, spec,
                                     seed=args.seed)
    config = {"command": "orbit-test", "certificate": args.certificate,
              "samples": args.samples, "flows": args.flows}
    os.makedirs(args.out, exist_ok=True)
    _write_artifact(os.path.join(args.out, "orbit_report.json"),
                    "orbit_report", report.to_json(), config, args.seed)
    export_orbit_csv(report, os.path.join(args.out, "orbit_samples.csv"))
    print(f"min energy ratio {report.min_ratio:.12f} "
          f"({report.violations} violations)")
    return 0 if report.violations == 0 else 2


def _cmd_audit_s2(args):
    mesh = generate_icosphere(1.0, args.subdiv)
    ops_flat = assemble(mesh)
    results = []
    for k in range(args.trials):
        rng = stream_rng(args.seed, k)
        u = random_smooth_field(ops_flat, rng, amplitude=0.3)
        ops = assemble(mesh, u)
        spec = BundleSpec(fiber_length=args.fiber_length, euler_number=0,
                          mesh=mesh, factor=u)
        S, M = scalar_laplacian(ops)
        pairs = solve_scalar_spectrum(S, M, SpectrumRequest(4))
        results.append(s2_cross_s1_audit(spec, ops, pairs))
    config = {"command": "audit-s2", "subdiv": args.subdiv,
              "trials": args.trials, "fiber_length": args.fiber_length}
    os.makedirs(args.out, exist_ok=True)
    n_tight = sum(1 for r in results for mm in r["members"]
                  if mm["classification"] == "universally_tight")
    payload = {"trials": results, "tight_members": n_tight}
    _write_artifact(os.path.join(args.out, "audit_s2.json"), "audit_s2",
                    payload, config, args.seed)
    print(f"{args.trials} random metrics audited, "
          f"{n_tight} tight member verdicts, 0 overtwisted")
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="curleig",
        description="Curl eigenfields on circle-times-surface products: "
                    "spectra, nodal topology, tight/overtwisted "
                    "classification, energy-minimization certificates.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="surface Laplacian spectrum")
    sp.add_argument("--mesh", required=True)
    sp.add_argument("--metric", default="flat")
    sp.add_argument("--k", type=int, default=6)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=_cmd_spectrum)

    sp = sub.add_parser("nodal", help="nodal curves and domain topology")
    sp.add_argument("--mesh", required=True)
    sp.add_argument("--metric", default="flat")
    sp.add_argument("--eig-index", type=int, default=0)
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=_cmd_nodal)

    sp = sub.add_parser("classify", help="tight/overtwisted verdict")
    sp.add_argument("--mesh", required=True)
    sp.add_argument("--metric", default="flat")
    sp.add_argument("--fiber-length", type=float, default=1.0)
    sp.add_argument("--euler-number", type=int, default=0)
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=_cmd_classify)

    sp = sub.add_parser("certify-sweep",
                        help="bump-metric sweep with certificates")
    sp.add_argument("--mesh", required=True)
    sp.add_argument("--a-grid", default=",".join(map(str, DEFAULT_A_GRID)))
    sp.add_argument("--sigma-grid",
                    default=",".join(map(str, DEFAULT_SIGMA_GRID)))
    sp.add_argument("--center", type=int, default=-1)
    sp.add_argument("--fiber-length", type=float, default=1.0)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--config", default=None,
                    help="key = value file overriding the grids")
    sp.add_argument("--fast", action="store_true",
                    help="skip the expensive orbit/helicity tests")
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=_cmd_certify_sweep)

    sp = sub.add_parser("orbit-test",
                        help="energy-minimality test on a certificate")
    sp.add_argument("--certificate", required=True)
    sp.add_argument("--samples", type=int, default=100)
    sp.add_argument("--flows", type=int, default=20)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=_cmd_orbit_test)

    sp = sub.add_parser("audit-s2",
                        help="tightness audit over random sphere metrics")
    sp.add_argument("--subdiv", type=int, default=3)
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--fiber-length", type=float, default=1.0)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=_cmd_audit_s2)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PropertyViolationError as err:
        print(f"property violation: {err}", file=sys.stderr)
        return 2
    except (CurlEigError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
