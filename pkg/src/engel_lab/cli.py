"""Command-line front end.

Subcommands bind the construction presets to the verification, dynamics, and
rigidity experiments and emit deterministic JSON/CSV artifacts.  Exit codes:
0 success (and verification pass), 1 verification failure, 2 configuration
error.  ``ENGEL_LAB_THREADS`` optionally shards independent trials.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import characteristic_dynamics as dyn
from . import rigidity_lab as rig
from .engel_verify import verify_engel
from .errors import AmbiguousClass, ConfigError, EngelLabError
from .frame_algebra import LieModel
from .presets import KAPPA_PRESETS, build_preset, preset_names
from .serialize import SCHEMA_VERSION, write_csv, write_json

KAPPA_SWEEP = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0)


def worker_count() -> int:
    raw = os.environ.get("ENGEL_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _manifest_from_args(args) -> dict:
    manifest = {}
    if getattr(args, "config", None):
        try:
            manifest = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}")
        if not isinstance(manifest, dict):
            raise ConfigError("config manifest must be a JSON object")
    for key in ("preset", "kappa", "T", "dt", "trials", "seed", "tol",
                "samples", "orbits", "out", "format"):
        val = getattr(args, key, None)
        if val is not None:
            manifest[key] = val
    manifest.setdefault("seed", 0)
    manifest.setdefault("format", "json")
    if manifest.get("format") not in ("json", "csv"):
        raise ConfigError("--format must be json or csv")
    return manifest


def _build(manifest) -> dict:
    name = manifest.get("preset")
    if not name:
        raise ConfigError("a --preset is required")
    overrides = {}
    if manifest.get("kappa") is not None:
        if name not in KAPPA_PRESETS:
            raise ConfigError(f"preset {name!r} does not take --kappa")
        overrides["kappa"] = float(manifest["kappa"])
    return build_preset(name, **overrides)


def _outdir(manifest) -> Path:
    out = Path(manifest.get("out") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_verify(args) -> int:
    manifest = _manifest_from_args(args)
    built = _build(manifest)
    n = int(manifest.get("samples", 1000))
    tol = float(manifest.get("tol", 1e-8))
    report = verify_engel(built["structure"], n_samples=n, tol=tol,
                          skip=100 + int(manifest["seed"]))
    doc = report.to_json_dict()
    doc["preset"] = manifest["preset"]
    out = _outdir(manifest) / f"verify_{manifest['preset']}.json"
    write_json(out, doc)
    s = doc["summary"]
    if report.passed:
        detail = f"ranks (2,3,4) at {s['n_samples']} points, {s['n_marginal']} marginal"
    else:
        bad = [k for k in ("all_rank_D_2", "all_rank_E_3", "all_rank_EE_4") if not s[k]]
        detail = f"failed {', '.join(bad)} over {s['n_samples']} points"
    print(f"{'PASS' if report.passed else 'FAIL'} {manifest['preset']}: {detail} -> {out}")
    return 0 if report.passed else 1


def cmd_classify(args) -> int:
    manifest = _manifest_from_args(args)
    built = _build(manifest)
    s = built["structure"]
    est = dyn.estimate_global_type(
        s,
        n_orbits=int(manifest.get("orbits", 3)),
        T_max=float(manifest.get("T", 20.0)),
        dt=float(manifest.get("dt", 1e-2)))
    doc = {
        "schema_version": SCHEMA_VERSION,
        "preset": manifest["preset"],
        "kappa": manifest.get("kappa"),
        "type": est.kind,
        "genuine": est.genuine,
        "label": est.label(),
        "evidence": est.evidence,
    }
    out = _outdir(manifest) / f"classify_{manifest['preset']}.json"
    write_json(out, doc)
    print(f"{manifest['preset']}: {est.label()} -> {out}")
    return 0


def cmd_orbit(args) -> int:
    manifest = _manifest_from_args(args)
    built = _build(manifest)
    s = built["structure"]
    T = float(manifest.get("T", 5.0))
    dt = float(manifest.get("dt", 1e-3))
    if args.p0 is not None:
        p0 = np.array([float(v) for v in args.p0.split(",")])
    elif isinstance(s.model, LieModel):
        p0 = np.zeros(s.model.dim)
    else:
        box = s.model.box
        p0 = box.mean(axis=1) + 0.1 * (box[:, 1] - box[:, 0])
    truncated = None
    try:
        orbit = dyn.integrate_characteristic(s, p0, T, dt)
    except EngelLabError as e:
        if not hasattr(e, "t_exit"):
            raise
        truncated = max(e.t_exit - 2 * dt, 10 * dt)
        orbit = dyn.integrate_characteristic(s, p0, truncated, dt)
    orbit = dyn.transport_EmodW(s, orbit)
    dev = dyn.developing_map(orbit)
    out = _outdir(manifest)
    if manifest["format"] == "csv":
        path = out / f"orbit_{manifest['preset']}.csv"
        orbit.to_csv(path)
    else:
        path = out / f"orbit_{manifest['preset']}.json"
        write_json(path, {
            "schema_version": SCHEMA_VERSION,
            "preset": manifest["preset"],
            "t": orbit.times,
            "points": orbit.points,
            "angle": orbit.angle,
            "developing_length": dev.length,
        })
    note = f" (truncated at chart exit t={truncated:g})" if truncated else ""
    print(f"{manifest['preset']}: orbit T={orbit.times[-1]:g}{note} developing "
          f"length {dev.length:.6g} (monotone) -> {path}")
    return 0


def cmd_rigidity(args) -> int:
    manifest = _manifest_from_args(args)
    trials = int(manifest.get("trials", 1000))
    T = float(manifest.get("T", 1.0))
    dt = float(manifest.get("dt", 1e-3))
    seed = int(manifest["seed"])
    # optional control-family knobs (manifest only)
    family = {"n_modes": int(manifest.get("modes", 3)),
              "amplitude": float(manifest.get("amplitude", 1.0))}
    if manifest.get("eps_grid"):
        family["eps_grid"] = [float(e) for e in manifest["eps_grid"]]
    nw = worker_count()
    if nw > 1 and trials >= 2 * nw:
        from concurrent.futures import ThreadPoolExecutor
        chunk = trials // nw
        sizes = [chunk] * (nw - 1) + [trials - chunk * (nw - 1)]
        with ThreadPoolExecutor(max_workers=nw) as pool:
            parts = list(pool.map(
                lambda i: rig.rigidity_probe(T=T, n_trials=sizes[i], dt=dt,
                                             seed=seed + i, **family), range(nw)))
        regions = {}
        for p in parts:
            for k, v in p["regions"].items():
                regions[k] = regions.get(k, 0) + v
        probe = parts[0]
        probe["regions"] = {k: regions[k] for k in sorted(regions)}
        probe["n_trials"] = trials
        probe["n_outside_accessible"] = sum(p["n_outside_accessible"] for p in parts)
        probe["max_cone_value"] = max(p["max_cone_value"] for p in parts)
    else:
        probe = rig.rigidity_probe(T=T, n_trials=trials, dt=dt, seed=seed, **family)

    rng = np.random.default_rng(seed)
    residuals = []
    for _ in range(100):
        u, v = rig.random_admissible_controls(rng)
        c = rig.sample_d_curve((u, v), T, dt)
        residuals.append(rig.inaba_identity_check(c))
    doc = {
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "probe": probe,
        "inaba_max_residual": float(max(residuals)),
        "inaba_n_curves": len(residuals),
    }
    out = _outdir(manifest) / "rigidity.json"
    write_json(out, doc)
    print(f"rigidity: {probe['n_outside_accessible']} of {trials} endpoints outside "
          f"A+ u AW, max cone value {probe['max_cone_value']:.3e}, "
          f"inaba residual {doc['inaba_max_residual']:.3e} -> {out}")
    return 0


def cmd_report(args) -> int:
    manifest = _manifest_from_args(args)
    preset = manifest.get("preset", "kappa-sweep")
    if preset != "kappa-sweep":
        raise ConfigError("report supports --preset kappa-sweep")
    rows = []
    for kappa in KAPPA_SWEEP:
        built = build_preset("lorentz-magnetic-lie", kappa=kappa)
        est = dyn.estimate_global_type(built["structure"], n_orbits=1,
                                       T_max=float(manifest.get("T", 20.0)),
                                       dt=float(manifest.get("dt", 1e-2)))
        c = kappa * (kappa + 1.0)
        expected = "elliptic" if c > 0 else ("parabolic" if c == 0 else "hyperbolic")
        rows.append({
            "kappa": kappa,
            "kappa_kappa_plus_1": c,
            "expected": expected,
            "estimated": est.kind,
            "genuine": est.genuine,
            "agrees": est.kind == expected,
        })
    out = _outdir(manifest)
    if manifest["format"] == "csv":
        path = out / "kappa_sweep.csv"
        write_csv(path, ["kappa", "kappa_kappa_plus_1", "agrees"],
                  [[r["kappa"] for r in rows],
                   [r["kappa_kappa_plus_1"] for r in rows],
                   [1.0 if r["agrees"] else 0.0 for r in rows]])
    else:
        path = out / "kappa_sweep.json"
        write_json(path, {"schema_version": SCHEMA_VERSION, "rows": rows})
    ok = all(r["agrees"] for r in rows)
    for r in rows:
        print(f"kappa={r['kappa']:+.2f}  k(k+1)={r['kappa_kappa_plus_1']:+.2f}  "
              f"expected={r['expected']:<10s} estimated={r['estimated']}")
    print(("sign law reproduced" if ok else "MISMATCH") + f" -> {path}")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="engel-lab",
        description="Engel structures: construction, verification, and "
                    "Cauchy-characteristic dynamics at desk scale.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, kappa=True):
        p.add_argument("--preset", choices=preset_names() + ["kappa-sweep"],
                       help="named construction preset")
        if kappa:
            p.add_argument("--kappa", type=float, default=None,
                           help="curvature parameter for lorentz-* presets")
        p.add_argument("-T", dest="T", type=float, default=None, help="time horizon")
        p.add_argument("--dt", type=float, default=None, help="integration step")
        p.add_argument("--tol", type=float, default=None, help="rank tolerance")
        p.add_argument("--seed", type=int, default=None, help="sampling seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--format", choices=("json", "csv"), default=None)
        p.add_argument("--config", default=None, help="JSON run manifest")

    p = sub.add_parser("verify", help="check ranks (2,3,4) at sample points")
    common(p)
    p.add_argument("--samples", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("classify", help="estimate the global dynamic type")
    common(p)
    p.add_argument("--orbits", type=int, default=None)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("orbit", help="integrate a characteristic orbit")
    common(p)
    p.add_argument("--p0", default=None, help="comma-separated start point")
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("rigidity", help="accessible-set and integral-identity probes")
    common(p, kappa=False)
    p.add_argument("--trials", type=int, default=None)
    p.set_defaults(func=cmd_rigidity)

    p = sub.add_parser("report", help="kappa-sweep table for the sign law")
    common(p)
    p.set_defaults(func=cmd_report)

    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except AmbiguousClass as e:
        print(f"ambiguous classification: {e}", file=sys.stderr)
        return 1
    except EngelLabError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
