"""Scoring symmetry predictions and the training losses.

A toy detector returns the ground truth with increasing angular error, so
mean average precision falls once the error passes the 1 degree threshold.
A Hungarian assignment then pairs shuffled plane predictions with the
ground truth before the training losses are computed.

    python demos/05_evaluation.py
"""

import math

import numpy as np

from symgen.distance import bbox_diagonal
from symgen.metrics import (MatchThresholds, PredictedSymmetry, evaluate, loss_distance,
                            loss_normal, loss_rsd, loss_total, normal_cost_matrix,
                            optimal_assignment)
from symgen.pipeline import DatasetConfig, generate_record
from symgen.symmetry import AxisSymmetry, PlaneSymmetry


def tilt(v, deg, rng):
    v = np.asarray(v)
    w = rng.normal(size=3)
    w -= w.dot(v) * v
    w /= np.linalg.norm(w)
    a = math.radians(deg)
    return tuple(math.cos(a) * v + math.sin(a) * w)


def main():
    cfg = DatasetConfig(tier="intermediate-1", total_size=60, master_seed=5)
    records = [generate_record(cfg, i, keep_clean=True) for i in range(60)]
    th = MatchThresholds()
    print(f"thresholds: {th.to_dict()}")
    for err in (0.0, 0.5, 2.0, 10.0):
        rng = np.random.default_rng(0)
        items = []
        for rec in records:
            preds = []
            for k, s in enumerate(rec.gt):
                if isinstance(s, PlaneSymmetry):
                    guess = PlaneSymmetry(tilt(s.normal, err, rng), s.point)
                else:
                    guess = AxisSymmetry(tilt(s.direction, err, rng), s.point, s.period)
                preds.append(PredictedSymmetry(guess, 1.0 - 0.01 * k))
            items.append((rec.id, rec.gt, preds, bbox_diagonal(rec.cloud), rec.class_name))
        report = evaluate(items, th)
        print(f"tilt {err:4.1f} deg: mAP {report.mAP:.3f}  PHC {report.PHC:.3f}")

    rec = next(r for r in records if len(r.gt.planes) >= 3)
    gt_planes = rec.gt.planes
    rng = np.random.default_rng(1)
    pred_planes = [PlaneSymmetry(tilt(p.normal, 5.0, rng), p.point) for p in reversed(gt_planes)]
    gt_n = [p.normal for p in gt_planes]
    pred_n = [p.normal for p in pred_planes]
    cols, cost = optimal_assignment(normal_cost_matrix(gt_n, pred_n))
    print(f"\nground-truth plane i <- prediction {cols} (total cost {cost:.5f})")
    pred_n = [pred_n[c] for c in cols]
    pred_planes = [pred_planes[c] for c in cols]
    ln = loss_normal(pred_n, gt_n)
    ld = loss_distance(np.zeros(3), np.zeros(3))
    lr = loss_rsd(rec.clean, pred_planes, gt_planes)
    print(f"normal {ln:.4f}  distance {ld:.4f}  reflection {lr:.4f}  "
          f"total (no confidence term) {loss_total(ln, ld, lr, 0.0):.4f}")


if __name__ == "__main__":
    main()
