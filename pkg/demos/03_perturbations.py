"""The six perturbation kinds applied to one clean shape.

    python demos/03_perturbations.py
"""

import numpy as np

from symgen.perturb import PerturbationKind, apply_perturbation
from symgen.pipeline import DatasetConfig, generate_record


def main():
    clean = generate_record(DatasetConfig(tier="easy", total_size=10), 0, keep_clean=True).clean
    print(f"clean cloud: {len(clean)} points")
    for i, kind in enumerate(PerturbationKind):
        out, draw = apply_perturbation(clean, kind, np.random.default_rng(i))
        if len(out) == len(clean):
            moved = np.any(out != clean, axis=1).mean()
            shift = np.abs(out - clean).max()
            detail = f"moved {moved:5.1%} of points, max shift {shift:.3f}"
        else:
            detail = f"kept {len(out)} points"
        print(f"{kind.value:24s} {detail:45s} {draw.to_dict()}")


if __name__ == "__main__":
    main()
