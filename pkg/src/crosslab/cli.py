"""crosslab command line.

Exit codes: 0 ok, 1 property violation, 2 generation failure, 64 usage, 73 I/O.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bounds, circlepack, drawing, harness, oracles, router
from .geodesic import PathParams
from .surface import (
    GenerationError,
    GluingFormatError,
    SurfaceValidationError,
    generate_surface,
    parse_gluing,
    serialize_gluing,
    validate,
)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_GENERATION = 2
EXIT_USAGE = 64
EXIT_IO = 73


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(doc: dict) -> None:
    print(json.dumps(doc, sort_keys=True))


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _surface_from_spec(spec: str, seed: int):
    source = harness.SurfaceSource.parse(spec, seed)
    if source.path is None and (source.faces < 16 or source.faces % 16):
        raise UsageError(f"face count must be a positive multiple of 16, got {source.faces}")
    if source.path is not None:
        return validate(parse_gluing(_read(source.path)))
    return source.load()


# commands --------------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.faces < 16 or args.faces % 16:
        raise UsageError(f"--faces must be a positive multiple of 16, got {args.faces}")
    surface = generate_surface(args.faces, args.seed)
    _write(args.out, serialize_gluing(surface.table))
    _emit({"out": args.out, "F": surface.F, "g": surface.genus, "V": surface.V, "surface_id": surface.surface_id()})
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.replay:
        manifest = json.loads(_read(args.replay))
        config = harness.ExperimentConfig.from_dict(manifest["config"])
        if args.csv:
            config = dataclasses.replace(config, csv_path=args.csv)
    else:
        if not (args.surfaces and args.n and args.trials and args.csv):
            raise UsageError("sweep needs --surfaces, --n, --trials and --csv (or --replay)")
        specs = [s for s in args.surfaces.split(",") if s.strip()]
        for spec in specs:
            if spec.strip().isdigit() and (int(spec) < 16 or int(spec) % 16):
                raise UsageError(f"face count must be a positive multiple of 16, got {spec}")
        if args.trials < 1 or args.n < 2:
            raise UsageError("need n >= 2 and trials >= 1")
        config = harness.ExperimentConfig(
            surfaces=tuple(harness.SurfaceSource.parse(s, args.surface_seed) for s in specs),
            n=args.n, trials=args.trials, seed=args.seed, k=args.k, eps=args.eps,
            csv_path=args.csv, svg_path=args.svg, diameter=not args.no_diameter,
        )
    # fail on unwritable outputs before spending the compute
    for path in (config.csv_path, config.svg_path, args.manifest):
        if path:
            _write(path, "")
    result = harness.run_sweep(config)
    _write(config.csv_path, harness.rows_to_csv(result.rows))
    manifest_path = args.manifest or f"{config.csv_path}.manifest.json"
    _write(manifest_path, harness.dumps_manifest(result.manifest))
    if config.svg_path:
        harness.scatter_svg(result.rows, config.svg_path)
    summary = {}
    for surface in result.surfaces:
        rows = [r for r in result.rows if r["F"] == surface.F]
        mean, std = harness.summarize(rows)
        summary[str(surface.F)] = {"g": surface.genus, "mean_crossings": mean, "std": std}
    _emit({"rows": len(result.rows), "csv": config.csv_path, "manifest": manifest_path, "summary": summary})
    return EXIT_OK


def cmd_pack(args) -> int:
    doc = json.loads(_read(args.triangulation))
    if "match" in doc:
        tri = circlepack.triangulation_from_surface(validate(parse_gluing(json.dumps(doc))))
    else:
        tri = circlepack.load_triangulation(json.dumps(doc))
    try:
        packing = circlepack.thurston_pack(tri, tol=args.tol, max_iter=args.max_iter)
    except circlepack.PackingError as exc:
        _emit({"error": str(exc), "best_residual": exc.best_residual})
        return EXIT_VIOLATION
    try:
        area = circlepack.packing_area_check(packing, tri.genus)
    except AssertionError as exc:
        _emit({"violation": "packing_area", "detail": str(exc)})
        return EXIT_VIOLATION
    out = {
        "radii": packing.radii.tolist(),
        "residual": packing.residual,
        "iterations": packing.iterations,
        "genus": tri.genus,
        "area_lhs": area.disk_area_lower,
        "area_rhs": area.surface_area,
    }
    if args.out:
        _write(args.out, json.dumps(out, indent=1) + "\n")
        _emit({k: v for k, v in out.items() if k != "radii"} | {"out": args.out})
    else:
        _emit(out)
    return EXIT_OK


def cmd_route(args) -> int:
    if args.g < 4 or args.g % 2:
        raise UsageError("--g must be even and at least 4")
    rows = []
    for seed in range(args.seed, args.seed + args.seeds):
        graph = router.random_cubic_graph(args.g, seed)
        result = router.route_all_pairs(graph, args.n)
        est = router.congestion_crossing_estimate(result)
        rows.append({
            "g": args.g, "n": args.n, "seed": seed,
            "con_max": float(result.congestion.max()),
            "con_sum_sq": est,
            "estimate": est,
            "normalized": est * args.g / (args.n ** 4 * math.log(args.g) ** 2),
        })
    if args.csv:
        _write(args.csv, harness.rows_to_csv(rows, harness.ROUTER_COLUMNS))
    _emit({"rows": rows if not args.csv else len(rows)})
    return EXIT_OK


def cmd_oracle(args) -> int:
    if args.n < 2 or args.trials < 1:
        raise UsageError("need n >= 2 and trials >= 1")
    rows = []
    counts = []
    for t in range(args.trials):
        seed = harness.trial_seed(args.seed, 0, t)
        rng = np.random.default_rng(seed)
        extra = {}
        if args.backend == "sphere":
            c = oracles.sphere_drawing(args.n, rng)
            g = 0
        else:
            res = oracles.torus_drawing(args.n, oracles.LATTICES[args.backend.split(":", 1)[1]], rng)
            c, g = res.crossings, 1
            extra = {"degenerate_events": res.tie_events}
        counts.append(c)
        rows.append({"surface_id": args.backend, "g": g, "F": "", "n": args.n, "trial": t, "seed": seed,
                     "crossings": c, "degenerate_events": 0, **extra})
    if args.csv:
        _write(args.csv, harness.rows_to_csv(rows))
    arr = np.array(counts, dtype=float)
    out = {"backend": args.backend, "n": args.n, "trials": args.trials, "mean": float(arr.mean()),
           "stderr": float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0}
    if args.backend == "sphere":
        out["expected"] = oracles.moon_expectation(args.n)
    _emit(out)
    return EXIT_OK


def cmd_draw(args) -> int:
    surface = _surface_from_spec(args.surface, args.surface_seed)
    rng = np.random.default_rng(args.seed)
    d = drawing.random_geometric_drawing(surface, args.n, rng, PathParams(k=args.k, eps=args.eps))
    doc = drawing.drawing_to_dict(d)
    doc["surface"] = json.loads(serialize_gluing(surface.table))
    _write(args.out, json.dumps(doc, indent=1) + "\n")
    report = drawing.count_crossings(d, surface)
    _emit({"out": args.out, "n": d.n, "m": d.m, "crossings": report.total})
    return EXIT_OK


def cmd_check(args) -> int:
    doc = json.loads(_read(args.drawing))
    if args.surface:
        surface = _surface_from_spec(args.surface, args.surface_seed)
    elif "surface" in doc:
        surface = validate(parse_gluing(json.dumps(doc["surface"])))
    else:
        raise UsageError("drawing file carries no surface; pass --surface")
    try:
        d = drawing.drawing_from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        _emit({"violation": "drawing_format", "detail": str(exc)})
        return EXIT_VIOLATION
    problems = drawing.validate_drawing(d, surface)
    if problems:
        _emit({"violation": problems[0].split(":", 1)[0], "details": problems})
        return EXIT_VIOLATION
    report = drawing.count_crossings(d, surface)
    ref = oracles.global_crossing_oracle(d)
    out = {"crossings": report.total, "oracle": ref.crossings, "degenerate_events": report.degenerate_events,
           "repeat_pairs": report.repeat_pairs}
    if report.degenerate_events == 0 and report.total != ref.crossings:
        _emit(out | {"violation": "oracle_equivalence"})
        return EXIT_VIOLATION
    if report.total > drawing.pairwise_bound(d) or drawing.pairwise_bound(d) > drawing.congestion_bound(d):
        _emit(out | {"violation": "congestion_bound"})
        return EXIT_VIOLATION
    if d.m:
        ball = bounds.metric_ball_dense(d, surface)
        need = d.m ** 2 / (32.0 * d.n ** 2)
        out["metric_ball"] = {"center": ball.center, "radius": ball.radius, "inside": ball.count, "required": need}
        if ball.count < need:
            _emit(out | {"violation": "metric_ball_dense"})
            return EXIT_VIOLATION
        disk = bounds.embedded_disk_check(surface, d.vertices[ball.center])
        out["embedded_disk"] = {"estimate": disk.estimate, "bound": disk.bound}
        if not disk.passed:
            _emit(out | {"violation": "embedded_disk"})
            return EXIT_VIOLATION
        r = math.log(surface.genus) if surface.genus > 2 else 1.0
        genus = bounds.disk_genus_check(surface, d.vertices[ball.center], r)
        out["disk_genus"] = {"radius": r, "genus": genus.ball.genus, "allowed": genus.allowed}
        if not genus.passed:
            _emit(out | {"violation": "disk_genus"})
            return EXIT_VIOLATION
    _emit(out)
    return EXIT_OK


# parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="crosslab", description="Random geodesic drawings on hyperbolic surfaces.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate and validate a gluing table")
    p.add_argument("--faces", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sweep", help="crossing experiments over several surfaces")
    p.add_argument("--surfaces", help="comma list of face counts or gluing files")
    p.add_argument("--surface-seed", type=int, default=0)
    p.add_argument("--n", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--csv")
    p.add_argument("--svg")
    p.add_argument("--manifest")
    p.add_argument("--replay", help="re-run the sweep recorded in a manifest")
    p.add_argument("--no-diameter", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("pack", help="circle-pack a triangulation (or a gluing table's own triangulation)")
    p.add_argument("--triangulation", required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("route", help="all-pairs routing on a random cubic graph")
    p.add_argument("--g", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("oracle", help="sphere and flat-torus reference drawings")
    p.add_argument("--backend", choices=["sphere", "torus:square", "torus:honeycomb"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("draw", help="write one random geometric drawing of K_n")
    p.add_argument("--surface", required=True, help="face count or gluing file")
    p.add_argument("--surface-seed", type=int, default=0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_draw)

    p = sub.add_parser("check", help="validate a drawing file and run the crossing and lemma checks")
    p.add_argument("--drawing", required=True)
    p.add_argument("--surface", help="face count or gluing file, if the drawing does not embed one")
    p.add_argument("--surface-seed", type=int, default=0)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"crosslab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GenerationError as exc:
        print(f"crosslab: generation failed: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    except (GluingFormatError, SurfaceValidationError, json.JSONDecodeError) as exc:
        print(f"crosslab: invalid input: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except OSError as exc:
        print(f"crosslab: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
