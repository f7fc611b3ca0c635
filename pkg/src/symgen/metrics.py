"""Evaluation of symmetry predictions and reference loss functions.

Two matching procedures live here on purpose.  Benchmark scores (AP, mAP,
PHC) use greedy confidence-ordered matching, as in detection benchmarks.
The loss components use a minimum-cost one-to-one assignment computed by
:func:`optimal_assignment`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .distance import as_cloud, bbox_diagonal, chamfer
from .formats import format_float
from .symmetry import (AxisSymmetry, GTFormatError, PlaneSymmetry, SymmetrySet,
                       parse_symmetry_line, reflect_points)

log = logging.getLogger(__name__)

__all__ = [
    "chamfer", "asymmetry_score", "MatchThresholds", "PredictedSymmetry",
    "match_predictions", "average_precision", "EvalReport", "evaluate",
    "evaluate_dirs", "write_predictions", "parse_predictions",
    "loss_normal", "loss_distance", "loss_rsd", "loss_confidence", "loss_total",
    "LossWeights", "normal_cost_matrix", "optimal_assignment",
]

CONFIDENCE_EPS = 1e-7


def asymmetry_score(points, squared: bool = True) -> float:
    """Smallest Chamfer distance between the cloud and its mirror images.

    Mirrors are taken across the XY, YZ and XZ planes through the cloud
    centroid.
    """
    pts = as_cloud(points)
    centroid = tuple(pts.mean(axis=0))
    scores = []
    for normal in ((0.0, 0.0, 1.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)):
        mirrored = reflect_points(pts, PlaneSymmetry(normal, centroid))
        scores.append(chamfer(pts, mirrored, squared=squared))
    return min(scores)


@dataclass(frozen=True)
class MatchThresholds:
    max_normal_angle: float = math.radians(1.0)
    max_point_distance: float = 0.01
    period_rel_tol: float = 0.05

    def __post_init__(self):
        if min(self.max_normal_angle, self.max_point_distance, self.period_rel_tol) <= 0:
            raise ValueError("all matching thresholds must be positive")

    def to_dict(self) -> dict:
        return {"max_normal_angle_deg": math.degrees(self.max_normal_angle),
                "max_point_distance": self.max_point_distance,
                "period_rel_tol": self.period_rel_tol}


@dataclass(frozen=True)
class PredictedSymmetry:
    symmetry: object  # PlaneSymmetry | AxisSymmetry
    confidence: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")


def _line_angle(u, v) -> float:
    c = abs(float(np.dot(u, v)))
    return math.acos(min(1.0, c))


def _is_match(pred, gt, th: MatchThresholds, diag: float) -> bool:
    max_dist = th.max_point_distance * diag
    if isinstance(gt, PlaneSymmetry):
        if not isinstance(pred, PlaneSymmetry):
            return False
        if _line_angle(pred.normal, gt.normal) > th.max_normal_angle:
            return False
        dist = abs(float(np.dot(np.subtract(gt.point, pred.point), pred.normal)))
        return dist <= max_dist
    if not isinstance(pred, AxisSymmetry):
        return False
    if _line_angle(pred.direction, gt.direction) > th.max_normal_angle:
        return False
    v = np.subtract(gt.point, pred.point)
    d = np.asarray(pred.direction)
    dist = float(np.linalg.norm(v - np.dot(v, d) * d))
    if dist > max_dist:
        return False
    if gt.is_continuous or pred.is_continuous:
        return gt.is_continuous and pred.is_continuous
    return abs(pred.period / gt.period - 1.0) <= th.period_rel_tol


def _ranked(preds: Sequence[PredictedSymmetry]) -> list:
    # stable sort keeps file order among equal confidences
    return sorted(preds, key=lambda p: -p.confidence)


def match_predictions(preds: Sequence[PredictedSymmetry], gt: SymmetrySet,
                      th: MatchThresholds = MatchThresholds(), diag: float = 1.0):
    """Greedy one-to-one matching in decreasing confidence.

    Returns ``(ranked_predictions, tp_flags, gt_index_per_prediction)``;
    unmatched predictions get ``None``.  Each prediction takes the first
    still-free ground-truth symmetry it matches.
    """
    ranked = _ranked(preds)
    gt_list = list(gt)
    taken = [False] * len(gt_list)
    flags, owners = [], []
    for p in ranked:
        hit = None
        for j, g in enumerate(gt_list):
            if not taken[j] and _is_match(p.symmetry, g, th, diag):
                hit = j
                break
        if hit is not None:
            taken[hit] = True
        flags.append(hit is not None)
        owners.append(hit)
    return ranked, flags, owners


def average_precision(tp_flags: Sequence[bool], n_gt: int) -> float:
    """Ranked AP: mean over ground-truth items of the precision at each hit."""
    if n_gt <= 0:
        raise ValueError("average precision needs at least one ground-truth item")
    hits, total = 0, 0.0
    for k, tp in enumerate(tp_flags, start=1):
        if tp:
            hits += 1
            total += hits / k
    return total / n_gt


@dataclass
class EvalReport:
    shape_ids: list = field(default_factory=list)
    ap: list = field(default_factory=list)
    phc_hits: list = field(default_factory=list)
    classes: list = field(default_factory=list)
    thresholds: Optional[MatchThresholds] = None
    phc_mode: str = "top"
    warnings: list = field(default_factory=list)

    @property
    def mAP(self) -> float:
        return float(np.mean(self.ap)) if self.ap else 0.0

    @property
    def PHC(self) -> float:
        return float(np.mean(self.phc_hits)) if self.phc_hits else 0.0

    def per_class(self) -> dict:
        out = {}
        for cls in sorted(set(self.classes)):
            idx = [i for i, c in enumerate(self.classes) if c == cls]
            out[cls] = {"shapes": len(idx),
                        "mAP": float(np.mean([self.ap[i] for i in idx])),
                        "PHC": float(np.mean([self.phc_hits[i] for i in idx]))}
        return out

    def to_text(self) -> str:
        lines = [f"shapes {len(self.ap)}", f"mAP {self.mAP:.3f}", f"PHC {self.PHC:.3f}",
                 f"phc_mode {self.phc_mode}"]
        if self.thresholds is not None:
            for k, v in self.thresholds.to_dict().items():
                lines.append(f"{k} {format_float(v)}")
        for cls, row in self.per_class().items():
            lines.append(f"class {cls} shapes {row['shapes']} mAP {row['mAP']:.3f} "
                         f"PHC {row['PHC']:.3f}")
        return "\n".join(lines) + "\n"


def evaluate(items: Iterable, th: MatchThresholds = MatchThresholds(),
             phc_mode: str = "top") -> EvalReport:
    """Score predictions against ground truth.

    ``items`` yields ``(shape_id, gt, preds, diag)`` or
    ``(shape_id, gt, preds, diag, class_name)``; ``preds=None`` marks a
    missing prediction file (AP 0, PHC miss, and a warning).  ``phc_mode``
    is ``"top"`` (best-ranked prediction is correct) or ``"any"`` (at least
    one prediction is correct).
    """
    if phc_mode not in ("top", "any"):
        raise ValueError("phc_mode must be 'top' or 'any'")
    report = EvalReport(thresholds=th, phc_mode=phc_mode)
    for item in items:
        shape_id, gt, preds, diag = item[:4]
        cls = item[4] if len(item) > 4 else ""
        report.shape_ids.append(shape_id)
        report.classes.append(cls)
        if preds is None:
            msg = f"no predictions for shape {shape_id}"
            log.warning(msg)
            report.warnings.append(msg)
            report.ap.append(0.0)
            report.phc_hits.append(False)
            continue
        _, flags, _ = match_predictions(preds, gt, th, diag)
        report.ap.append(average_precision(flags, len(gt)))
        if phc_mode == "top":
            report.phc_hits.append(bool(flags) and flags[0])
        else:
            report.phc_hits.append(any(flags))
    return report


def write_predictions(preds: Sequence[PredictedSymmetry]) -> str:
    """Prediction file text: the ground-truth layout plus a confidence column."""
    f = format_float
    lines = [str(len(preds))]
    for p in preds:
        s = p.symmetry
        if isinstance(s, PlaneSymmetry):
            values = (*s.normal, *s.point, p.confidence)
            lines.append("plane " + " ".join(f(x) for x in values))
        else:
            values = (*s.direction, *s.point, s.period, p.confidence)
            lines.append("axis " + " ".join(f(x) for x in values))
    return "\n".join(lines) + "\n"


def parse_predictions(text: str) -> list:
    """Parse a prediction file; a missing confidence column means 1.0."""
    lines = [(i, ln) for i, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    if not lines:
        return []
    lineno, header = lines[0]
    try:
        count = int(header.strip())
    except ValueError:
        raise GTFormatError(f"line {lineno}: expected the prediction count") from None
    if count != len(lines) - 1:
        raise GTFormatError(f"line {lineno}: header announces {count} predictions, "
                            f"file has {len(lines) - 1}")
    out = []
    for lineno, line in lines[1:]:
        sym, extra = parse_symmetry_line(line.split(), lineno, extra=1)
        conf = extra[0] if extra else 1.0
        if not 0.0 <= conf <= 1.0:
            raise GTFormatError(f"line {lineno}: confidence {conf} outside [0, 1]")
        out.append(PredictedSymmetry(sym, conf))
    return out


def _stem(path: Path) -> str:
    name = path.name
    for suffix in ("-sym.txt", "-pred.txt"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return path.stem


def evaluate_dirs(gt_dir, pred_dir, th: MatchThresholds = MatchThresholds(),
                  phc_mode: str = "top") -> EvalReport:
    """Evaluate every ``*-sym.txt`` under ``gt_dir`` against ``pred_dir``.

    Predictions are looked up by file stem anywhere under ``pred_dir``
    (``{stem}-pred.txt`` preferred, ``{stem}-sym.txt`` accepted).  The
    distance threshold is relative to the bounding-box diagonal of the
    matching ``{stem}.xz`` cloud.
    """
    from .formats import read_cloud
    from .pipeline import parse_shape_filename
    from .symmetry import parse_gt

    pred_files = {}
    for path in sorted(Path(pred_dir).rglob("*.txt")):
        stem = _stem(path)
        if path.name.endswith("-pred.txt") or stem not in pred_files:
            pred_files[stem] = path

    def items():
        for gt_path in sorted(Path(gt_dir).rglob("*-sym.txt")):
            stem = _stem(gt_path)
            gt = parse_gt(gt_path.read_text(encoding="ascii"))
            cloud_path = gt_path.with_name(stem + ".xz")
            diag = bbox_diagonal(read_cloud(cloud_path)) if cloud_path.exists() else 1.0
            try:
                cls = parse_shape_filename(gt_path.name)[1]
            except (ValueError, KeyError):
                cls = ""
            pred_path = pred_files.get(stem)
            preds = None if pred_path is None else parse_predictions(pred_path.read_text())
            yield stem, gt, preds, diag, cls

    return evaluate(items(), th, phc_mode)


# --- reference loss components -------------------------------------------------

def _unit_rows(v) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(v, dtype=float))
    return arr / np.linalg.norm(arr, axis=1, keepdims=True)


def loss_normal(pred_normals, gt_normals) -> float:
    """Mean of ``1 - |n_pred . n_gt|`` over matched pairs (sign invariant)."""
    p, g = _unit_rows(pred_normals), _unit_rows(gt_normals)
    if p.shape != g.shape or len(p) == 0:
        raise ValueError("need K >= 1 matched pairs of equal shape")
    return float(np.mean(1.0 - np.abs(np.sum(p * g, axis=1))))


def loss_distance(pred_center, gt_center) -> float:
    return float(np.linalg.norm(np.subtract(pred_center, gt_center, dtype=float)))


def _as_plane(y) -> PlaneSymmetry:
    if isinstance(y, PlaneSymmetry):
        return y
    normal, point = y
    n = np.asarray(normal, dtype=float)
    return PlaneSymmetry(tuple(n / np.linalg.norm(n)), tuple(point))


def reflection_symmetry_distance(points, pred_plane, gt_plane) -> float:
    """Mean over x, y, z of the norm of the coordinate-wise reflection gap."""
    pts = as_cloud(points)
    diff = reflect_points(pts, _as_plane(gt_plane)) - reflect_points(pts, _as_plane(pred_plane))
    return float(np.mean(np.linalg.norm(diff, axis=0)))


def loss_rsd(points, pred_planes: Sequence, gt_planes: Sequence) -> float:
    if len(pred_planes) != len(gt_planes) or not gt_planes:
        raise ValueError("need K >= 1 matched plane pairs")
    return float(np.mean([reflection_symmetry_distance(points, p, g)
                          for p, g in zip(pred_planes, gt_planes)]))


def loss_confidence(targets, probs, eps: float = CONFIDENCE_EPS) -> float:
    """Summed binary cross-entropy with probabilities clamped to [eps, 1-eps]."""
    o = np.asarray(targets, dtype=float)
    q = np.clip(np.asarray(probs, dtype=float), eps, 1.0 - eps)
    if o.shape != q.shape:
        raise ValueError("targets and probabilities must have the same length")
    return float(-np.sum(o * np.log(q) + (1.0 - o) * np.log(1.0 - q)))


@dataclass(frozen=True)
class LossWeights:
    normal: float = 1.0
    distance: float = 1.0
    rsd: float = 0.1
    confidence: float = 1.0


def loss_total(normal: float, distance: float, rsd: float, confidence: float,
               weights: LossWeights = LossWeights()) -> float:
    return (weights.normal * normal + weights.distance * distance
            + weights.rsd * rsd + weights.confidence * confidence)


def normal_cost_matrix(gt_normals, pred_normals) -> np.ndarray:
    """``cost[i, j] = 1 - |n_pred_j . n_gt_i|``."""
    return 1.0 - np.abs(_unit_rows(gt_normals) @ _unit_rows(pred_normals).T)


def optimal_assignment(cost):
    """Minimum-cost assignment of every row to a distinct column.

    Hungarian method with row/column potentials (shortest augmenting
    paths), ``O(K^2 M)`` for a ``K x M`` matrix with ``K <= M``.  Returns
    ``(cols, total)`` where ``cols[i]`` is the column given to row ``i``.
    """
    c = np.asarray(cost, dtype=float)
    if c.ndim != 2:
        raise ValueError("cost must be a 2D matrix")
    k, m = c.shape
    if k > m:
        raise ValueError(f"cannot assign {k} rows to only {m} columns")
    if not np.all(np.isfinite(c)):
        raise ValueError("costs must be finite")
    if k == 0:
        return [], 0.0

    inf = math.inf
    u = [0.0] * (k + 1)          # row potentials (1-based, 0 is the virtual root)
    v = [0.0] * (m + 1)          # column potentials
    owner = [0] * (m + 1)        # owner[j] = row matched to column j (0: free)
    way = [0] * (m + 1)
    rows = c.tolist()
    for i in range(1, k + 1):
        owner[0] = i
        j0 = 0
        minv = [inf] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = owner[j0]
            row = rows[i0 - 1]
            delta, j1 = inf, 0
            for j in range(1, m + 1):
                if not used[j]:
                    cur = row[j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta, j1 = minv[j], j
            for j in range(m + 1):
                if used[j]:
                    u[owner[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1
    cols = [0] * k
    for j in range(1, m + 1):
        if owner[j]:
            cols[owner[j] - 1] = j - 1
    total = math.fsum(rows[i][cols[i]] for i in range(k))
    return cols, total
