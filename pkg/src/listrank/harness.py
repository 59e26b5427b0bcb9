"""Experiment orchestration: single runs, learning-rate sweeps and reports."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
import xml.etree.ElementTree as ET
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .baselines import DEFAULT_MF_EPOCHS, HEURISTIC_MODES, HeuristicPredictor, train_bpr, train_mf
from .dataset import RatingsDataset, SplitSpec, load_ratings, split_train_test
from .errors import DataError, ListrankError, UsageError
from .listwise import MAX_DEFAULT_STEPS, TrainConfig, default_steps, train_zeroshot
from .metrics import DEFAULT_K, MATTHEW_DEFINITION, MetricsReport, mae, matthew_degree

log = logging.getLogger(__name__)

ALGORITHMS = ("zeroshot_listwise", "mf", "bpr", *HEURISTIC_MODES)
DEFAULT_GRID = (1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1)
CSV_HEADER = ("algorithm", "lr", "dim", "steps", "seed", "k", "mae", "matthew_degree", "runtime_ms")
SVG_METRICS = ("mae", "matthew_degree")


@dataclass
class ExperimentConfig:
    dataset: str | None = None
    format: str = "movielens_dat"
    columns: tuple[str, str, str] | None = None
    algorithm: str = "zeroshot_listwise"
    dim: int = 10
    lr: float | tuple[float, ...] = 1e-3
    steps: int | None = None
    seed: int = 42
    split: float = 0.8
    k: int = DEFAULT_K
    scale: tuple[float, float] | None = None
    out: str | None = None
    report: str = "csv"
    jobs: int = 1

    def __post_init__(self):
        algos = self.algorithms
        bad = [a for a in algos if a not in ALGORITHMS]
        if bad or not algos:
            raise UsageError(f"unknown algorithm(s) {bad}; expected from {ALGORITHMS}")
        if not self.grid:
            raise UsageError("learning-rate grid is empty")
        if any(not (lr >= 0 and math.isfinite(lr)) for lr in self.grid):
            raise UsageError(f"learning rates must be finite and >= 0, got {self.grid}")
        if self.dim < 1 or self.k < 1 or self.jobs < 1:
            raise UsageError("dim, k and jobs must be positive")
        if self.steps is not None and self.steps < 0:
            raise UsageError("steps must be >= 0")
        if self.report not in ("csv", "svg", "both"):
            raise UsageError(f"unknown report format {self.report!r}")
        if self.scale is not None:
            self.scale = tuple(float(s) for s in self.scale)
            if len(self.scale) != 2 or not self.scale[0] < self.scale[1]:
                raise UsageError(f"scale must be (min, max) with min < max, got {self.scale}")
        SplitSpec(self.split, self.seed)

    @property
    def algorithms(self) -> list[str]:
        return [a.strip() for a in self.algorithm.split(",") if a.strip()]

    @property
    def grid(self) -> tuple[float, ...]:
        if isinstance(self.lr, (int, float)):
            return (float(self.lr),)
        return tuple(float(x) for x in self.lr)

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        for key in ("columns", "scale"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        if isinstance(data.get("lr"), list):
            data["lr"] = tuple(data["lr"])
        return cls(**data)

    @classmethod
    def from_json(cls, path, **overrides) -> ExperimentConfig:
        """Config from a flat JSON object; non-None ``overrides`` win."""
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError(f"config {path} must hold a JSON object")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(data)


def load_dataset(cfg: ExperimentConfig) -> RatingsDataset:
    if not cfg.dataset:
        raise UsageError("no dataset given")
    return load_ratings(cfg.dataset, cfg.format, cfg.columns, cfg.scale)


def resolved_steps(algorithm: str, cfg: ExperimentConfig, train: RatingsDataset) -> int:
    if cfg.steps is not None:
        return 0 if algorithm in HEURISTIC_MODES else cfg.steps
    if algorithm == "zeroshot_listwise":
        return default_steps(train.n_users, train.n_items)
    if algorithm == "mf":
        return DEFAULT_MF_EPOCHS
    if algorithm == "bpr":
        return min(10 * len(train), MAX_DEFAULT_STEPS)
    return 0


def fit(algorithm: str, train: RatingsDataset, lr: float, cfg: ExperimentConfig):
    """Train ``algorithm`` on ``train`` and return a predictor.

    The listwise trainer only ever sees the matrix shape and rating scale.
    """
    steps = resolved_steps(algorithm, cfg, train)
    tcfg = TrainConfig(learning_rate=lr, steps=steps, d=cfg.dim, seed=cfg.seed)
    if algorithm == "zeroshot_listwise":
        return train_zeroshot(train.n_users, train.n_items, tcfg, train.scale)
    if algorithm == "mf":
        return train_mf(train, tcfg)
    if algorithm == "bpr":
        return train_bpr(train, tcfg)
    return HeuristicPredictor(train, algorithm, cfg.seed)


def _evaluate(algorithm, lr, cfg, train, test) -> MetricsReport:
    start = time.perf_counter()
    predictor = fit(algorithm, train, lr, cfg)
    preds = predictor.predict(test.users, test.items)
    err = mae(np.column_stack([preds, test.values]))
    degree, profile = matthew_degree(predictor, train, cfg.k)
    runtime = (time.perf_counter() - start) * 1000.0
    return MetricsReport(
        algorithm=algorithm, mae=err, matthew_degree=degree, k=cfg.k,
        runtime_ms=runtime, lr=lr, dim=cfg.dim,
        steps=resolved_steps(algorithm, cfg, train), seed=cfg.seed,
        notes={"popularity_r_squared": profile.r_squared, "recommended_items": len(profile.counts)},
    )


def _split(cfg, dataset):
    ds = load_dataset(cfg) if dataset is None else dataset
    return ds, *split_train_test(ds, SplitSpec(cfg.split, cfg.seed))


def run_experiment(cfg: ExperimentConfig, dataset: RatingsDataset | None = None) -> MetricsReport:
    """Load, split, train on the train half and evaluate one configuration.

    Uses the first algorithm and first learning rate of ``cfg``. MAE is taken
    on the test half, the Matthew degree over all users with their training
    items excluded. Writes the report to ``cfg.out`` when set.
    """
    ds, train, test = _split(cfg, dataset)
    report = _evaluate(cfg.algorithms[0], cfg.grid[0], cfg, train, test)
    if cfg.out:
        write_reports([report], cfg, ds)
    return report


def _failed_report(algorithm, lr, cfg, train, exc) -> MetricsReport:
    return MetricsReport(
        algorithm=algorithm, mae=math.nan, matthew_degree=math.nan, k=cfg.k,
        runtime_ms=0.0, lr=lr, dim=cfg.dim, steps=resolved_steps(algorithm, cfg, train),
        seed=cfg.seed, failed=True, notes={"error": str(exc), "exit_code": exc.exit_code},
    )


def sweep(cfg: ExperimentConfig, dataset: RatingsDataset | None = None) -> list[MetricsReport]:
    """Run every (algorithm, learning rate) point of ``cfg``.

    All points share the seed and the train/test split, so only the learning
    rate varies along a series. A failing point yields a report marked
    ``failed`` instead of aborting the sweep. Reports come back in
    algorithm-major, grid order whatever ``cfg.jobs`` is.
    """
    ds, train, test = _split(cfg, dataset)
    points = [(a, lr) for a in cfg.algorithms for lr in cfg.grid]

    def run(point):
        algorithm, lr = point
        try:
            return _evaluate(algorithm, lr, cfg, train, test)
        except ListrankError as exc:
            log.warning("sweep point %s lr=%g failed: %s", algorithm, lr, exc)
            return _failed_report(algorithm, lr, cfg, train, exc)

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            reports = list(pool.map(run, points))
    else:
        reports = [run(p) for p in points]
    if cfg.out:
        write_reports(reports, cfg, ds)
    return reports


def _fmt(x) -> str:
    return repr(float(x))


def csv_row(r: MetricsReport) -> list[str]:
    return [
        r.algorithm, _fmt(r.lr), str(r.dim), str(r.steps), str(r.seed), str(r.k),
        _fmt(r.mae), _fmt(r.matthew_degree), _fmt(r.runtime_ms),
    ]


def emit_csv(reports: Sequence[MetricsReport], path) -> Path:
    if not reports:
        raise UsageError("no reports to emit")
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in reports:
                w.writerow(csv_row(r))
    except OSError as exc:
        raise DataError(f"cannot write report {path}: {exc}") from exc
    return path


def read_csv_reports(path) -> list[MetricsReport]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise DataError(f"{path}: unexpected report header {header}")
        out = []
        for row in reader:
            rec = dict(zip(header, row))
            out.append(MetricsReport(
                algorithm=rec["algorithm"], mae=float(rec["mae"]),
                matthew_degree=float(rec["matthew_degree"]), k=int(rec["k"]),
                runtime_ms=float(rec["runtime_ms"]), lr=float(rec["lr"]), dim=int(rec["dim"]),
                steps=int(rec["steps"]), seed=int(rec["seed"]),
                failed=math.isnan(float(rec["mae"])),
            ))
    return out


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")


def emit_svg(reports: Sequence[MetricsReport], path, metric: str = "mae") -> Path:
    """Line chart of ``metric`` against log10(learning rate), one polyline per algorithm."""
    if not reports:
        raise UsageError("no reports to emit")
    if metric not in SVG_METRICS:
        raise UsageError(f"unknown metric {metric!r}")
    width, height, pad = 640, 400, 60
    series: dict[str, list[tuple[float, float]]] = {}
    for r in reports:
        pts = series.setdefault(r.algorithm, [])
        y = getattr(r, metric)
        if r.lr > 0 and math.isfinite(y):
            pts.append((math.log10(r.lr), y))
    xs = [p[0] for pts in series.values() for p in pts] or [0.0]
    ys = [p[1] for pts in series.values() for p in pts] or [0.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def py(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg",
                     width=str(width), height=str(height), viewBox=f"0 0 {width} {height}")
    ET.SubElement(svg, "rect", x="0", y="0", width=str(width), height=str(height), fill="white")
    axes = ET.SubElement(svg, "g", stroke="black", fill="none")
    ET.SubElement(axes, "line", x1=str(pad), y1=str(height - pad), x2=str(width - pad), y2=str(height - pad))
    ET.SubElement(axes, "line", x1=str(pad), y1=str(pad), x2=str(pad), y2=str(height - pad))
    labels = ET.SubElement(svg, "g", fill="black", style="font-family:sans-serif;font-size:12px")
    ET.SubElement(labels, "text", x=str(width / 2), y=str(height - 15), style="text-anchor:middle").text = "learning rate (log10)"
    ET.SubElement(labels, "text", x="15", y=str(height / 2),
                  transform=f"rotate(-90 15 {height / 2})", style="text-anchor:middle").text = metric
    for x, anchor in ((x0, "start"), (x1, "end")):
        ET.SubElement(labels, "text", x=f"{px(x):.2f}", y=str(height - pad + 15), style=f"text-anchor:{anchor}").text = f"{10 ** x:.0e}"
    for y in (y0, y1):
        ET.SubElement(labels, "text", x=str(pad - 5), y=f"{py(y):.2f}", style="text-anchor:end").text = f"{y:.3g}"
    for n, (name, pts) in enumerate(series.items()):
        colour = _PALETTE[n % len(_PALETTE)]
        ET.SubElement(svg, "polyline", fill="none", stroke=colour, points=" ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)).set("data-algorithm", name)
        ET.SubElement(labels, "text", x=str(width - pad + 5), y=str(pad + 15 * n), fill=colour).text = name
    path = Path(path)
    try:
        ET.ElementTree(svg).write(path, encoding="utf-8", xml_declaration=True)
    except OSError as exc:
        raise DataError(f"cannot write report {path}: {exc}") from exc
    return path


def emit_report(reports: Sequence[MetricsReport], format: str, path, metric: str = "mae") -> Path:
    if format == "csv":
        return emit_csv(reports, path)
    if format == "svg":
        return emit_svg(reports, path, metric)
    raise UsageError(f"unknown report format {format!r}")


def report_metadata(reports: Sequence[MetricsReport], cfg: ExperimentConfig, ds: RatingsDataset | None) -> dict:
    best = {}
    for r in reports:
        if not r.failed and (r.algorithm not in best or r.mae < best[r.algorithm]):
            best[r.algorithm] = r.mae
    meta = {
        "swept_variable": "learning_rate (assumed x-axis of the accuracy/fairness figures)",
        "matthew_definition": MATTHEW_DEFINITION,
        "heuristics_note": "global_mean/user_mean/item_mean/random_uniform are stand-in heuristics",
        "kernel_backend": kernels.BACKEND,
        "config": vars(cfg),
        "best_mae": best,
        "failed_points": [
            {"algorithm": r.algorithm, "lr": r.lr, **r.notes} for r in reports if r.failed
        ],
    }
    if "zeroshot_listwise" in best:
        others = {a: m for a, m in best.items() if a != "zeroshot_listwise"}
        meta["zeroshot_beats"] = {a: best["zeroshot_listwise"] < m for a, m in others.items()}
    if ds is not None:
        meta["dataset"] = {"n_users": ds.n_users, "n_items": ds.n_items, "n_ratings": len(ds),
                           "scale": list(ds.scale), "sha256": ds.digest()}
    return meta


def write_reports(reports: Sequence[MetricsReport], cfg: ExperimentConfig, ds=None) -> list[Path]:
    """Write CSV and/or SVG per ``cfg.report`` plus a JSON metadata sidecar."""
    out = Path(cfg.out)
    written = []
    if cfg.report in ("csv", "both"):
        written.append(emit_csv(reports, out.with_suffix(".csv")))
    if cfg.report in ("svg", "both"):
        for metric in SVG_METRICS:
            written.append(emit_svg(reports, out.with_name(f"{out.stem}_{metric}.svg"), metric))
    meta = out.with_name(out.stem + ".meta.json")
    try:
        meta.write_text(json.dumps(report_metadata(reports, cfg, ds), indent=2, default=str) + "\n")
    except OSError as exc:
        raise DataError(f"cannot write {meta}: {exc}") from exc
    written.append(meta)
    return written
