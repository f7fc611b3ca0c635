import itertools
import math

import numpy as np
import pytest

from symgen.curves import CurveSpec, sample_curve
from symgen.distance import bbox_diagonal
from symgen.metrics import (LossWeights, MatchThresholds, PredictedSymmetry, asymmetry_score,
                            average_precision, chamfer, evaluate, loss_confidence,
                            loss_distance, loss_normal, loss_rsd, loss_total, match_predictions,
                            normal_cost_matrix, optimal_assignment, parse_predictions,
                            reflection_symmetry_distance, write_predictions)
from symgen.solids import ExtrusionSpec, extrude
from symgen.symmetry import AxisSymmetry, PlaneSymmetry, SymmetrySet


def _rng(seed=0):
    return np.random.default_rng(seed)


def _tilt(normal, degrees):
    """Rotate a unit normal by ``degrees`` towards a perpendicular direction."""
    n = np.asarray(normal, dtype=float)
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    perp = np.cross(n, helper)
    perp /= np.linalg.norm(perp)
    a = math.radians(degrees)
    return tuple(math.cos(a) * n + math.sin(a) * perp)


# --- Chamfer / asymmetry -------------------------------------------------------

def test_chamfer_examples():
    p = _rng(1).normal(size=(300, 3))
    q = _rng(2).normal(size=(200, 3))
    assert chamfer(p, p) == 0.0
    assert chamfer([(0, 0, 0)], [(1, 0, 0)]) == 2.0
    assert chamfer([(0, 0, 0)], [(2, 0, 0)], squared=False) == 4.0
    assert chamfer(p, q) == chamfer(q, p)
    assert chamfer(p, np.vstack([p, p])) == 0.0
    with pytest.raises(ValueError):
        chamfer(np.empty((0, 3)), p)


def _mouth_cloud():
    rng = _rng(3)
    return extrude(sample_curve(CurveSpec("mouth", a=1), 6400, rng),
                   ExtrusionSpec("cylindrical", 1.0), rng)


def test_asymmetry_examples():
    assert asymmetry_score([(0, 0, 1), (0, 0, -1)]) == 0.0
    cloud = _mouth_cloud()
    diag = bbox_diagonal(cloud)
    assert asymmetry_score(cloud) < 5e-3 * diag ** 2
    shifted = cloud + np.array([3.0, -1.5, 0.25])
    assert asymmetry_score(shifted) == pytest.approx(asymmetry_score(cloud), rel=1e-9, abs=1e-15)
    lopsided = _rng(4).exponential(size=(2000, 3))
    assert asymmetry_score(lopsided) > 1e-3


# --- matching / AP -------------------------------------------------------------

XZ = PlaneSymmetry((0.0, 1.0, 0.0))
YZ = PlaneSymmetry((1.0, 0.0, 0.0))


def test_match_basic():
    gt = SymmetrySet((XZ,))
    _, flags, _ = match_predictions([PredictedSymmetry(XZ, 1.0)], gt)
    assert flags == [True]
    off = PlaneSymmetry(_tilt(XZ.normal, 30))
    assert match_predictions([PredictedSymmetry(off, 1.0)], gt)[1] == [False]
    flipped = PlaneSymmetry((0.0, -1.0, 0.0))
    assert match_predictions([PredictedSymmetry(flipped, 1.0)], gt)[1] == [True]
    far = PlaneSymmetry((0.0, 1.0, 0.0), (0.0, 0.5, 0.0))
    assert match_predictions([PredictedSymmetry(far, 1.0)], gt, diag=1.0)[1] == [False]


def test_match_is_one_to_one():
    gt = SymmetrySet((XZ,))
    preds = [PredictedSymmetry(XZ, 0.9), PredictedSymmetry(XZ, 0.8)]
    _, flags, owners = match_predictions(preds, gt)
    assert flags == [True, False] and owners == [0, None]


def test_axis_matching():
    z4 = AxisSymmetry((0.0, 0.0, 1.0), (0, 0, 0), math.pi / 2)
    zc = AxisSymmetry((0.0, 0.0, 1.0))
    gt = SymmetrySet((), (z4, zc))
    th = MatchThresholds()
    preds = [PredictedSymmetry(AxisSymmetry((0, 0, -1.0), (0, 0, 5.0), math.pi / 2 * 1.04), 0.9),
             PredictedSymmetry(AxisSymmetry((0, 0, 1.0), (0, 0, 0), math.pi / 2 * 1.2), 0.8),
             PredictedSymmetry(AxisSymmetry((0, 0, 1.0)), 0.7),
             PredictedSymmetry(XZ, 0.6)]
    _, flags, owners = match_predictions(preds, gt, th)
    assert flags == [True, False, True, False] and owners == [0, None, 1, None]


def test_ap_hand_example():
    gt = SymmetrySet((XZ, YZ))
    wrong = PlaneSymmetry((0.0, 0.0, 1.0))
    preds = [PredictedSymmetry(XZ, 0.9), PredictedSymmetry(wrong, 0.8),
             PredictedSymmetry(YZ, 0.7)]
    rep = evaluate([("s", gt, preds, 1.0)])
    assert rep.ap == [pytest.approx(5 / 6, abs=1e-15)]
    assert rep.PHC == 1.0
    assert average_precision([True, False, True], 2) == (1 + 2 / 3) / 2


def test_evaluate_perfect_empty_missing():
    gt = SymmetrySet((XZ, YZ), (AxisSymmetry((0.0, 0.0, 1.0), (0, 0, 0), math.pi),))
    perfect = [PredictedSymmetry(s, 1.0) for s in gt]
    rep = evaluate([("a", gt, perfect, 2.0), ("b", gt, perfect, 2.0)])
    assert rep.mAP == 1.0 and rep.PHC == 1.0
    rep = evaluate([("a", gt, [], 2.0)])
    assert rep.mAP == 0.0 and rep.PHC == 0.0
    rep = evaluate([("a", gt, None, 2.0), ("b", gt, perfect, 2.0)])
    assert rep.ap == [0.0, 1.0] and rep.PHC == 0.5 and len(rep.warnings) == 1


def test_phc_modes():
    gt = SymmetrySet((XZ,))
    preds = [PredictedSymmetry(YZ, 0.9), PredictedSymmetry(XZ, 0.5)]
    assert evaluate([("a", gt, preds, 1.0)]).PHC == 0.0
    assert evaluate([("a", gt, preds, 1.0)], phc_mode="any").PHC == 1.0
    with pytest.raises(ValueError):
        evaluate([], phc_mode="best")


def test_evaluate_permutation_and_scale_invariance():
    rng = _rng(5)
    gt = SymmetrySet((XZ, YZ, PlaneSymmetry((0.0, 0.0, 1.0), (0, 0, 0.3))))
    preds = []
    for s in gt:
        for _ in range(3):
            n = _tilt(s.normal, rng.uniform(0, 2))
            preds.append(PredictedSymmetry(PlaneSymmetry(n, tuple(rng.normal(0, 0.01, 3))),
                                           float(rng.uniform())))
    base = evaluate([("a", gt, preds, 1.0)])
    shuffled = [preds[i] for i in rng.permutation(len(preds))]
    assert evaluate([("a", gt, shuffled, 1.0)]).ap == base.ap
    k = 7.5
    gt_k = SymmetrySet(tuple(PlaneSymmetry(p.normal, tuple(k * c for c in p.point))
                             for p in gt.planes))
    preds_k = [PredictedSymmetry(PlaneSymmetry(p.symmetry.normal,
                                               tuple(k * c for c in p.symmetry.point)),
                                 p.confidence) for p in preds]
    assert evaluate([("a", gt_k, preds_k, k)]).ap == base.ap


def test_corrupted_normals_score_zero():
    rng = _rng(6)
    gt = SymmetrySet((XZ, YZ))
    preds = [PredictedSymmetry(PlaneSymmetry(_tilt(s.normal, rng.uniform(30, 60))), 1.0)
             for s in gt]
    assert evaluate([("a", gt, preds, 1.0)]).mAP == 0.0


def test_prediction_file_roundtrip():
    preds = [PredictedSymmetry(XZ, 0.25),
             PredictedSymmetry(AxisSymmetry((0.0, 0.0, 1.0), (1.5, 0, 0), math.pi / 3), 1.0),
             PredictedSymmetry(AxisSymmetry((0.0, 1.0, 0.0)), 0.5)]
    text = write_predictions(preds)
    assert text.splitlines()[1] == "plane 0 1 0 0 0 0 0.25"
    assert parse_predictions(text) == preds
    # plain ground-truth files are accepted with confidence 1
    assert parse_predictions("1\nplane 0 1 0 0 0 0\n") == [PredictedSymmetry(XZ, 1.0)]


# --- losses --------------------------------------------------------------------

def test_loss_normal():
    n = [(0.0, 0.0, 1.0), (0.6, 0.8, 0.0)]
    assert loss_normal(n, n) == 0.0
    assert loss_normal([(1.0, 0, 0)], [(0, 1.0, 0)]) == 1.0
    assert loss_normal([(0.0, 0.0, -1.0), (-0.6, -0.8, 0.0)], n) == 0.0


def test_loss_distance():
    assert loss_distance((1, 2, 3), (1, 2, 3)) == 0.0
    assert loss_distance((1, 0, 0), (0, 0, 0)) == 1.0
    rng = _rng(7)
    for a, b, c in rng.normal(size=(200, 3, 3)):
        assert loss_distance(a, c) <= loss_distance(a, b) + loss_distance(b, c) + 1e-12


def test_rsd():
    p = [(1.0, 0.0, 0.0)]
    assert reflection_symmetry_distance(p, XZ, YZ) == pytest.approx(2 / 3, abs=1e-15)
    cloud = _rng(8).normal(size=(500, 3))
    a = PlaneSymmetry((0.6, 0.0, 0.8), (0.1, 0, 0))
    assert loss_rsd(cloud, [a], [a]) == 0.0
    assert reflection_symmetry_distance(cloud, a, XZ) == reflection_symmetry_distance(cloud, XZ, a)
    flipped = PlaneSymmetry((-0.6, 0.0, -0.8), (0.1, 0, 0))
    assert loss_rsd(cloud, [flipped, XZ], [a, YZ]) == pytest.approx(
        loss_rsd(cloud, [a, XZ], [a, YZ]), abs=1e-12)
    # tuple form (normal, point) is accepted and need not be unit
    assert loss_rsd(cloud, [((0, 2.0, 0), (0, 0, 0))], [XZ]) == 0.0


def test_loss_confidence():
    eps = 1e-7
    assert loss_confidence([1], [1 - eps]) == pytest.approx(0.0, abs=2e-7)
    assert loss_confidence([1], [0.5]) == pytest.approx(math.log(2), rel=1e-15)
    assert loss_confidence([0, 1], [0.5, 0.5]) == pytest.approx(2 * math.log(2), rel=1e-15)
    assert math.isfinite(loss_confidence([1, 0], [0.0, 1.0]))
    with pytest.raises(ValueError):
        loss_confidence([1, 0], [0.5])


def test_loss_total():
    assert loss_total(0, 0, 0, 0) == 0.0
    assert loss_total(1, 1, 1, 1) == 3.1
    assert LossWeights() == LossWeights(1.0, 1.0, 0.1, 1.0)
    base = loss_total(0.2, 0.3, 0.4, 0.5)
    for i in range(4):
        comps = [0.2, 0.3, 0.4, 0.5]
        comps[i] += 0.1
        assert loss_total(*comps) > base


# --- optimal assignment --------------------------------------------------------

def _brute(cost):
    k, m = cost.shape
    rows = cost.tolist()
    return min(math.fsum(rows[i][c] for i, c in enumerate(cols))
               for cols in itertools.permutations(range(m), k))


def test_assignment_examples():
    cols, total = optimal_assignment([[0, 1], [1, 0]])
    assert cols == [0, 1] and total == 0.0
    cols, total = optimal_assignment([[1, 0], [0, 1]])
    assert cols == [1, 0] and total == 0.0
    assert optimal_assignment(np.empty((0, 3))) == ([], 0.0)
    with pytest.raises(ValueError):
        optimal_assignment(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        optimal_assignment([[0.0, math.nan]])


def test_assignment_4x6_brute_force():
    rng = _rng(9)
    for _ in range(50):
        cost = rng.uniform(size=(4, 6))
        cols, total = optimal_assignment(cost)
        assert len(set(cols)) == 4
        assert total == _brute(cost)


def test_normal_cost_matrix():
    gt = [(1.0, 0, 0), (0, 1.0, 0)]
    pred = [(0, -1.0, 0), (1.0, 0, 0), (0, 0, 1.0)]
    c = normal_cost_matrix(gt, pred)
    assert c.shape == (2, 3)
    cols, total = optimal_assignment(c)
    assert cols == [1, 0] and total == 0.0
