"""Experiment plumbing: per-trial seeds, drawing trials, sweeps, CSV, SVG and manifests."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .drawing import congestion, count_crossings, normalized_crossings, random_geometric_drawing
from .geodesic import PathParams, surface_diameter_estimate
from .surface import CombinatorialSurface, generate_surface, load_gluing, parse_gluing, serialize_gluing, validate

CSV_COLUMNS = [
    "surface_id", "g", "F", "n", "trial", "seed", "crossings", "con_max", "con_sum",
    "degenerate_events", "normalized", "pairwise_bound", "repeat_pairs", "mean_edge_length", "diameter",
]
ROUTER_COLUMNS = ["g", "n", "seed", "con_max", "con_sum_sq", "estimate", "normalized"]


class InvariantViolation(AssertionError):
    """A property the experiment asserts on every run failed."""


def trial_seed(master: int, faces: int, trial: int) -> int:
    """Seed of one trial: the first word of SeedSequence([master, F, trial]).

    Any trial can be replayed alone from (master, F, trial).
    """
    return int(np.random.SeedSequence([master, faces, trial]).generate_state(1)[0])


def worker_count() -> int:
    raw = os.environ.get("CROSSLAB_THREADS")
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def run_trial(
    surface: CombinatorialSurface,
    n: int,
    trial: int,
    seed: int,
    params: PathParams,
    diameter: float = float("nan"),
) -> dict:
    """One random geometric K_n drawing, counted and checked."""
    rng = np.random.default_rng(seed)
    drawing = random_geometric_drawing(surface, n, rng, params)
    report = count_crossings(drawing, surface)
    con = congestion(drawing)
    pairwise = int((con.per_face * (con.per_face - 1) // 2).sum())
    if not report.total <= pairwise <= con.max ** 2 * surface.F:
        raise InvariantViolation(
            f"crossings {report.total} <= pairwise {pairwise} <= con_max^2 F {con.max ** 2 * surface.F} fails"
        )
    lengths = [p.length for p in drawing.paths]
    return {
        "surface_id": surface.surface_id(),
        "g": surface.genus,
        "F": surface.F,
        "n": n,
        "trial": trial,
        "seed": seed,
        "crossings": report.total,
        "con_max": con.max,
        "con_sum": con.sum,
        "degenerate_events": report.degenerate_events,
        "normalized": normalized_crossings(report.total, n, surface.genus),
        "pairwise_bound": pairwise,
        "repeat_pairs": report.repeat_pairs,
        "mean_edge_length": float(np.mean(lengths)) if lengths else 0.0,
        "diameter": diameter,
    }


def expectation_experiment(
    surface: CombinatorialSurface,
    n: int,
    trials: int,
    seed: int,
    params: PathParams | None = None,
) -> list[dict]:
    """``trials`` independent drawings with seeds from ``trial_seed(seed, F, t)``."""
    if trials < 1:
        raise ValueError("need at least one trial")
    params = params or PathParams()
    return [run_trial(surface, n, t, trial_seed(seed, surface.F, t), params) for t in range(trials)]


def summarize(rows: list[dict], key: str = "crossings") -> tuple[float, float]:
    values = np.array([r[key] for r in rows], dtype=float)
    std = float(values.std(ddof=1)) if len(values) > 1 else 0.0
    return float(values.mean()), std


# sweeps ---------------------------------------------------------------------


@dataclass(frozen=True)
class SurfaceSource:
    """A gluing file, or generate(F, seed)."""

    faces: int | None = None
    seed: int = 0
    path: str | None = None

    def load(self) -> CombinatorialSurface:
        if self.path is not None:
            return validate(load_gluing(self.path))
        return generate_surface(self.faces, self.seed)

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "SurfaceSource":
        text = text.strip()
        if text.isdigit():
            return cls(faces=int(text), seed=seed)
        return cls(path=text)


@dataclass(frozen=True)
class ExperimentConfig:
    surfaces: tuple[SurfaceSource, ...]
    n: int
    trials: int
    seed: int
    k: int = 8
    eps: float = 0.05
    csv_path: str | None = None
    svg_path: str | None = None
    diameter: bool = True

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["surfaces"] = [asdict(s) for s in self.surfaces]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        doc["surfaces"] = tuple(SurfaceSource(**s) for s in doc["surfaces"])
        return cls(**doc)


_SURFACE_CACHE: dict[str, CombinatorialSurface] = {}


def _trial_job(job: tuple) -> dict:
    gluing_text, n, trial, seed, k, eps, diameter = job
    surface = _SURFACE_CACHE.get(gluing_text)
    if surface is None:
        surface = _SURFACE_CACHE[gluing_text] = validate(parse_gluing(gluing_text))
    return run_trial(surface, n, trial, seed, PathParams(k=k, eps=eps), diameter)


@dataclass
class SweepResult:
    rows: list[dict]
    manifest: dict
    surfaces: list[CombinatorialSurface] = field(repr=False)


def run_sweep(config: ExperimentConfig, workers: int | None = None) -> SweepResult:
    """All (surface, trial) drawings; rows keep (surface, trial) order whatever the worker count."""
    surfaces = [src.load() for src in config.surfaces]
    jobs = []
    surface_docs = []
    for surface in surfaces:
        text = serialize_gluing(surface.table)
        diameter = surface_diameter_estimate(surface, portal_density=config.k) if config.diameter else float("nan")
        seeds = [trial_seed(config.seed, surface.F, t) for t in range(config.trials)]
        surface_docs.append({
            "surface_id": surface.surface_id(), "F": surface.F, "g": surface.genus,
            "diameter": diameter, "trial_seeds": seeds,
        })
        jobs += [(text, config.n, t, s, config.k, config.eps, diameter) for t, s in enumerate(seeds)]
    workers = workers or worker_count()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_trial_job, jobs, chunksize=1))
    else:
        rows = [_trial_job(job) for job in jobs]
    manifest = build_manifest("sweep", config.to_dict(), surface_docs)
    return SweepResult(rows, manifest, surfaces)


def build_manifest(command: str, config: dict, surfaces: list | None = None) -> dict:
    return {
        "command": command,
        "config": config,
        "seed_scheme": "numpy SeedSequence([master, F, trial]).generate_state(1)[0]",
        "surfaces": surfaces or [],
        "versions": {
            "crosslab": package_version(),
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
    }


def package_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else "nan"
    return str(value)


def rows_to_csv(rows: list[dict], columns: list[str] | None = None) -> str:
    columns = columns or CSV_COLUMNS
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c, "")) for c in columns])
    return buf.getvalue()


def write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def dumps_manifest(manifest: dict) -> str:
    return json.dumps(manifest, indent=2, sort_keys=True) + "\n"


def scatter_svg(rows: list[dict], path: str | Path) -> None:
    """Static scatter of the normalized crossing statistic against genus."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "crosslab"
    fig, ax = plt.subplots(figsize=(5, 3.5))
    g = [r["g"] for r in rows]
    y = [r["normalized"] for r in rows]
    ax.scatter(g, y, s=12, alpha=0.7)
    ax.set_xlabel("genus g")
    ax.set_ylabel("cr g / (n^4 log^2(g+1))")
    ax.set_xscale("log", base=2)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
