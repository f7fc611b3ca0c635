"""Plane curves and their exact 2D symmetries.

Draws one random curve per family, reports its symmetry group and checks
each reflection line numerically against a dense sample.

    python demos/01_curves.py
"""

import math

import numpy as np
from scipy.spatial import cKDTree

from symgen.curves import CONTINUOUS, CurveFamily, curve_symmetries_2d, sample_curve, sample_params


def mirror(points, theta):
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return points @ np.array([[c, s], [s, -c]]).T


def main():
    rng = np.random.default_rng(1)
    for family in CurveFamily:
        spec = sample_params(family, rng)
        sym = curve_symmetries_2d(spec)
        pts = sample_curve(spec, 2000, rng)
        # distance from each mirrored sample to a much denser copy of the curve
        tree = cKDTree(sample_curve(spec, 200_000, rng))
        diag = np.linalg.norm(pts.max(axis=0) - pts.min(axis=0))
        gap = max((tree.query(mirror(pts, t))[0].max() for t in sym.lines), default=0.0)
        if sym.rotation is None:
            rot = "none"
        elif sym.rotation == CONTINUOUS:
            rot = "continuous"
        else:
            rot = f"{math.degrees(sym.rotation):.1f} deg"
        print(f"{family.value:16s} lines {len(sym.lines):2d}  rotation {rot:12s} "
              f"worst mirror gap / diagonal {gap / diag:.1e}")


if __name__ == "__main__":
    main()
