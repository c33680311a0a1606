"""Box-robustness benchmark on synthetic scenes.

A Scene is a binary ground-truth mask plus its tight box and a referring
expression. The harness perturbs the box per regime, runs prompt discovery
against the mask oracle, and scores the retained verdicts and emitted
positives against the mask. Hit-rate is the fraction of emitted positive
points that land inside the mask, the desk-scale stand-in for downstream
mask quality.
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import math
from dataclasses import dataclass, replace

import numpy as np
from PIL import Image, ImageDraw

from .errors import (InsufficientEvidenceError, InvalidGeometryError,
                     InvalidParameterError, ProtocolError)
from .geometry import BBox, ImageDims, PerturbationRegime, Point2, perturb_bbox
from .pipeline import RunConfig, discover_prompts
from .rle import decode_rle, encode_mask
from .verification import QueryRecord

SCENE_SHAPES = ("ellipse", "rectangle", "blob")

REPORT_COLUMNS = ("strategy", "regime", "eta", "accuracy", "precision",
                  "recall", "f1", "available", "hit_rate", "delta_vs_tight")


@dataclass(frozen=True, eq=False)
class Scene:
    """One benchmark instance: mask, tight box, and the expression to verify."""

    scene_id: str
    dims: ImageDims
    mask: np.ndarray  # (H, W) bool
    gt_bbox: BBox
    expression: str

    def __post_init__(self):
        if self.mask.shape != (self.dims.height, self.dims.width):
            raise InvalidGeometryError(
                f"mask shape {self.mask.shape} does not match dims "
                f"{self.dims.width}x{self.dims.height}")
        if not self.mask.any():
            raise InvalidGeometryError(f"scene {self.scene_id} has empty foreground")

    def contains(self, pt: Point2) -> bool:
        """Mask value at the rounded pixel; False outside the frame."""
        w, h = self.dims.width, self.dims.height
        if not (0.0 <= pt.x <= w and 0.0 <= pt.y <= h):
            return False
        col = min(int(np.rint(pt.x)), w - 1)
        row = min(int(np.rint(pt.y)), h - 1)
        return bool(self.mask[row, col])

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "dims": {"width": self.dims.width, "height": self.dims.height},
            "mask": encode_mask(self.mask),
            "gt_bbox": list(self.gt_bbox.as_tuple()),
            "expression": self.expression,
        }


def tight_bbox_of_mask(mask: np.ndarray) -> BBox:
    """Tight box in edge coordinates: [min_col, min_row, max_col+1, max_row+1]."""
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        raise InvalidGeometryError("mask has no foreground")
    return BBox(float(cols[0]), float(rows[0]),
                float(cols[-1] + 1), float(rows[-1] + 1))


def scene_from_dict(doc: dict) -> Scene:
    """Scene from its JSON form; validates the mask, dims, and box tightness."""
    try:
        dims = ImageDims(int(doc["dims"]["width"]), int(doc["dims"]["height"]))
        mask = decode_rle(doc["mask"])
        bbox = BBox(*(float(v) for v in doc["gt_bbox"]))
        scene = Scene(scene_id=str(doc["scene_id"]), dims=dims, mask=mask,
                      gt_bbox=bbox, expression=str(doc["expression"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed scene document: {exc}")
    tight = tight_bbox_of_mask(mask)
    if tight.as_tuple() != bbox.as_tuple():
        raise InvalidGeometryError(
            f"scene {scene.scene_id}: gt_bbox {bbox.as_tuple()} is not the "
            f"tight box {tight.as_tuple()}")
    return scene


def scenes_to_json(scenes: list[Scene]) -> str:
    import json
    return json.dumps({"scenes": [s.to_dict() for s in scenes]}, indent=2) + "\n"


def scenes_from_json(text: str) -> list[Scene]:
    import json
    doc = json.loads(text)
    items = doc["scenes"] if isinstance(doc, dict) and "scenes" in doc else doc
    if not isinstance(items, list):
        raise ProtocolError("scene file must hold a list of scenes")
    return [scene_from_dict(d) for d in items]


# ===================== synthetic scenes =====================

_AREA_LO, _AREA_HI = 0.05, 0.60
_MAX_TRIES = 64


def _ellipse_mask(dims: ImageDims, rng: np.random.Generator) -> np.ndarray:
    w, h = dims.width, dims.height
    a = rng.uniform(0.16, 0.42) * w
    b = rng.uniform(0.16, 0.42) * h
    cx = rng.uniform(a + 1, w - a - 1)
    cy = rng.uniform(b + 1, h - b - 1)
    x = np.arange(w, dtype=float)
    y = np.arange(h, dtype=float)
    xx, yy = np.meshgrid(x, y)
    return ((xx - cx) / a) ** 2 + ((yy - cy) / b) ** 2 <= 1.0


def _rectangle_mask(dims: ImageDims, rng: np.random.Generator) -> np.ndarray:
    w, h = dims.width, dims.height
    rw = int(rng.uniform(0.25, 0.75) * w)
    rh = int(rng.uniform(0.25, 0.75) * h)
    rw, rh = max(rw, 2), max(rh, 2)
    c0 = int(rng.integers(0, w - rw + 1))
    r0 = int(rng.integers(0, h - rh + 1))
    mask = np.zeros((h, w), dtype=bool)
    mask[r0:r0 + rh, c0:c0 + rw] = True
    return mask


def _blob_mask(dims: ImageDims, rng: np.random.Generator) -> np.ndarray:
    # Star polygon: 8..16 vertices at uniformly spaced angles, radii jittered.
    w, h = dims.width, dims.height
    n_vert = int(rng.integers(8, 17))
    cx = rng.uniform(0.35, 0.65) * w
    cy = rng.uniform(0.35, 0.65) * h
    base_r = rng.uniform(0.28, 0.46) * min(w, h)
    rot = rng.uniform(0.0, 2.0 * math.pi)
    angles = rot + 2.0 * math.pi * np.arange(n_vert) / n_vert
    radii = base_r * rng.uniform(0.35, 1.0, n_vert)
    xs = np.clip(cx + radii * np.cos(angles), 0, w - 1)
    ys = np.clip(cy + radii * np.sin(angles), 0, h - 1)
    img = Image.new("1", (w, h), 0)
    ImageDraw.Draw(img).polygon(list(zip(xs.tolist(), ys.tolist())), fill=1)
    return np.array(img, dtype=bool)


_SHAPE_BUILDERS = {"ellipse": _ellipse_mask, "rectangle": _rectangle_mask,
                   "blob": _blob_mask}


def generate_synthetic_scenes(count: int, shapes=SCENE_SHAPES,
                              dims: ImageDims = ImageDims(192, 144),
                              rng: np.random.Generator | None = None) -> list[Scene]:
    """Seeded scenes cycling through the shape list, area 5..60% of the frame."""
    if count < 1:
        raise InvalidParameterError("count must be >= 1")
    shapes = tuple(shapes)
    for s in shapes:
        if s not in _SHAPE_BUILDERS:
            raise InvalidParameterError(f"unknown shape {s!r}; choose from {SCENE_SHAPES}")
    if rng is None:
        rng = np.random.default_rng(0)
    scenes = []
    for i in range(count):
        shape = shapes[i % len(shapes)]
        build = _SHAPE_BUILDERS[shape]
        for _ in range(_MAX_TRIES):
            mask = build(dims, rng)
            frac = float(mask.mean())
            if mask.any() and _AREA_LO <= frac <= _AREA_HI:
                break
        else:
            raise InvalidParameterError(
                f"could not draw a {shape} mask with area in "
                f"[{_AREA_LO}, {_AREA_HI}] after {_MAX_TRIES} tries")
        scene_id = f"scene-{i:04d}"
        scenes.append(Scene(
            scene_id=scene_id,
            dims=dims,
            mask=mask,
            gt_bbox=tight_bbox_of_mask(mask),
            expression=f"the shaded {shape} region in sample {scene_id}",
        ))
    return scenes


# ===================== metrics =====================


@dataclass(frozen=True)
class MetricsReport:
    """Confusion-matrix metrics over retained verdicts at one eta.

    empty flags an empty retained set; the four rate metrics are then NaN,
    never a silent zero.
    """

    strategy: str
    regime: PerturbationRegime | None
    eta: float
    accuracy: float
    precision: float
    recall: float
    f1: float
    available: float
    n_instances: int
    empty: bool = False


def point_metrics(traces: list[list[QueryRecord]], scenes: list[Scene], eta: float,
                  *, strategy: str = "", regime: PerturbationRegime | None = None
                  ) -> MetricsReport:
    """Score retained verdicts (confidence > eta) against scene masks.

    traces[i] was produced on scenes[i]; predictions are the verdict labels,
    ground truth is mask containment at each queried point.
    """
    if len(traces) != len(scenes):
        raise InvalidParameterError("one scene per trace required")
    tp = fp = tn = fn = 0
    retained = 0
    for trace, scene in zip(traces, scenes):
        for rec in trace:
            if rec.confidence <= eta:
                continue
            retained += 1
            truth = scene.contains(rec.point)
            pred = rec.verdict_label == "positive"
            if pred and truth:
                tp += 1
            elif pred and not truth:
                fp += 1
            elif not pred and not truth:
                tn += 1
            else:
                fn += 1
    n = len(traces)
    if retained == 0:
        nan = float("nan")
        return MetricsReport(strategy=strategy, regime=regime, eta=eta,
                             accuracy=nan, precision=nan, recall=nan, f1=nan,
                             available=0.0, n_instances=n, empty=True)
    accuracy = (tp + tn) / retained
    precision = tp / (tp + fp) if (tp + fp) > 0 else float("nan")
    recall = tp / (tp + fn) if (tp + fn) > 0 else float("nan")
    if math.isnan(precision) or math.isnan(recall) or (precision + recall) == 0:
        f1 = float("nan")
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return MetricsReport(strategy=strategy, regime=regime, eta=eta,
                         accuracy=accuracy, precision=precision, recall=recall,
                         f1=f1, available=retained / n, n_instances=n)


# ===================== comparison harness =====================


@dataclass(frozen=True)
class ComparisonRow:
    report: MetricsReport
    hit_rate: float
    delta_vs_tight: float
    failures: int
    n_runs: int


@dataclass(frozen=True, eq=False)
class _CellResult:
    traces: list
    scene_indices: list[int]
    hits: int
    emitted: int
    failures: int
    n_runs: int


def _run_cell(cell_index: int, strategy: str, regime: PerturbationRegime,
              scenes: list[Scene], config: RunConfig, master_seed: int,
              perturb_seeds: int) -> _CellResult:
    """All runs of one (strategy, regime) cell, rng keyed by indices only.

    Seeding by (cell, scene, rep) keeps results identical however cells are
    scheduled across workers.
    """
    traces = []
    scene_indices = []
    hits = emitted = failures = 0
    for si, scene in enumerate(scenes):
        for rep in range(perturb_seeds):
            ss = np.random.SeedSequence(entropy=master_seed,
                                        spawn_key=(cell_index, si, rep))
            state = ss.generate_state(2, dtype=np.uint64)
            rng_pert = np.random.default_rng(int(state[0]))
            run_seed = int(state[1] >> np.uint64(1))  # keep it in int64 range
            cfg = replace(config,
                          sampler=replace(config.sampler, strategy=strategy,
                                          seed=run_seed))
            box = perturb_bbox(scene.gt_bbox, regime, scene.dims, rng_pert)
            try:
                bundle = discover_prompts(box, scene.dims, scene.expression,
                                          cfg, scene=scene)
                trace = bundle.trace
                for pt in bundle.positive_points:
                    emitted += 1
                    hits += int(scene.contains(pt))
            except InsufficientEvidenceError as exc:
                trace = exc.trace
                failures += 1
            traces.append(trace)
            scene_indices.append(si)
    return _CellResult(traces=traces, scene_indices=scene_indices, hits=hits,
                       emitted=emitted, failures=failures,
                       n_runs=len(scenes) * perturb_seeds)


def run_comparison(scenes: list[Scene], strategies: list[str],
                   regimes: list[PerturbationRegime], config: RunConfig,
                   rng: np.random.Generator | int, *, perturb_seeds: int = 20,
                   etas: list[float] | None = None, jobs: int = 1
                   ) -> list[ComparisonRow]:
    """Full factorial strategy x regime x eta sweep.

    rng may be a Generator or a plain master seed. Results are byte-for-byte
    independent of `jobs`.
    """
    if not scenes:
        raise InvalidParameterError("no scenes to run")
    if not strategies or not regimes:
        raise InvalidParameterError("need at least one strategy and one regime")
    if perturb_seeds < 1:
        raise InvalidParameterError("perturb_seeds must be >= 1")
    if jobs < 1:
        raise InvalidParameterError("jobs must be >= 1")
    if etas is None:
        etas = [config.policy.eta]
    if isinstance(rng, np.random.Generator):
        master_seed = int(rng.integers(0, 2 ** 63))
    else:
        master_seed = int(rng)

    cells = [(ci, strat, regime)
             for ci, (strat, regime) in enumerate(
                 (s, r) for s in strategies for r in regimes)]
    args = [(ci, strat, regime, scenes, config, master_seed, perturb_seeds)
            for ci, strat, regime in cells]
    if jobs > 1 and len(cells) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=min(jobs, len(cells))) as ex:
            results = list(ex.map(_run_cell_star, args))
    else:
        results = [_run_cell(*a) for a in args]

    rows: list[ComparisonRow] = []
    tight_hit: dict[tuple[str, float], float] = {}
    for (ci, strat, regime), res in zip(cells, results):
        if regime.kind == "tight":
            hr = res.hits / res.emitted if res.emitted else float("nan")
            for eta in etas:
                tight_hit[(strat, eta)] = hr
    for (ci, strat, regime), res in zip(cells, results):
        cell_scenes = [scenes[i] for i in res.scene_indices]
        hit_rate = res.hits / res.emitted if res.emitted else float("nan")
        for eta in etas:
            report = point_metrics(res.traces, cell_scenes, eta,
                                   strategy=strat, regime=regime)
            base = tight_hit.get((strat, eta), float("nan"))
            if regime.kind == "tight":
                delta = 0.0 if not math.isnan(hit_rate) else float("nan")
            elif math.isnan(base) or math.isnan(hit_rate):
                delta = float("nan")
            else:
                delta = hit_rate - base
            rows.append(ComparisonRow(report=report, hit_rate=hit_rate,
                                      delta_vs_tight=delta,
                                      failures=res.failures, n_runs=res.n_runs))
    return rows


def _run_cell_star(a):
    return _run_cell(*a)


# ===================== report emission =====================


def _fmt(v: float) -> str:
    if isinstance(v, float) and math.isnan(v):
        return "NA"
    return format(v, ".6f")


def emit_report(rows: list[ComparisonRow], csv_path: str | None = None,
                text_path: str | None = None) -> tuple[str, str]:
    """CSV and aligned-text renderings of comparison rows.

    Column order is fixed; NaN cells render as the literal NA. When paths are
    given the artifacts are also written there.
    """
    records = []
    for row in rows:
        rep = row.report
        records.append({
            "strategy": rep.strategy,
            "regime": rep.regime.kind if rep.regime is not None else "NA",
            "eta": format(rep.eta, "g"),
            "accuracy": _fmt(rep.accuracy),
            "precision": _fmt(rep.precision),
            "recall": _fmt(rep.recall),
            "f1": _fmt(rep.f1),
            "available": _fmt(rep.available),
            "hit_rate": _fmt(row.hit_rate),
            "delta_vs_tight": _fmt(row.delta_vs_tight),
        })

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(REPORT_COLUMNS), lineterminator="\n")
    writer.writeheader()
    writer.writerows(records)
    csv_text = buf.getvalue()

    widths = {c: max(len(c), *(len(r[c]) for r in records)) if records else len(c)
              for c in REPORT_COLUMNS}
    lines = ["  ".join(c.ljust(widths[c]) for c in REPORT_COLUMNS)]
    for r in records:
        lines.append("  ".join(r[c].ljust(widths[c]) for c in REPORT_COLUMNS))
    text = "\n".join(lines) + "\n"

    if csv_path:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text)
    if text_path:
        with open(text_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return csv_text, text
