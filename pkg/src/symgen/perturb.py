"""Noise and undersampling applied to clean clouds."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .distance import as_cloud

FRACTION_RANGE = (0.3, 0.8)
UNIFORM_SCALES = (15, 17, 19, 20)
GAUSSIAN_SCALES = (20, 23, 27, 30)
MIN_POINTS = 5


class PerturbationKind(str, enum.Enum):
    # declaration order is the P0..P5 cycle used by the balanced pipeline
    CLEAN = "clean"
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"
    UNDERSAMPLING = "undersampling"
    UNIFORM_UNDER = "undersampling+uniform"
    GAUSSIAN_UNDER = "undersampling+gaussian"

    @property
    def noise(self) -> Optional[str]:
        if self in (PerturbationKind.UNIFORM, PerturbationKind.UNIFORM_UNDER):
            return "uniform"
        if self in (PerturbationKind.GAUSSIAN, PerturbationKind.GAUSSIAN_UNDER):
            return "gaussian"
        return None

    @property
    def undersamples(self) -> bool:
        return self in (PerturbationKind.UNDERSAMPLING, PerturbationKind.UNIFORM_UNDER,
                        PerturbationKind.GAUSSIAN_UNDER)


PERTURBATION_CYCLE = tuple(PerturbationKind)


@dataclass
class PerturbationDraw:
    """Everything random that went into one perturbation.

    ``noise_indices`` index the input cloud; ``kept_indices`` index the
    cloud after the noise stage (same numbering, since noise keeps order).
    """

    kind: PerturbationKind
    noise_fraction: Optional[float] = None
    noise_n: Optional[int] = None
    noise_indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    under_fraction: Optional[float] = None
    kept_indices: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        """Scalar summary for manifests (index arrays are reproducible from the seed)."""
        out = {"kind": self.kind.value, "noise_model": "per-coordinate"}
        if self.noise_fraction is not None:
            out.update(noise_fraction=self.noise_fraction, noise_n=self.noise_n,
                       noise_count=int(len(self.noise_indices)))
        if self.under_fraction is not None:
            out.update(under_fraction=self.under_fraction,
                       kept_count=int(len(self.kept_indices)))
        return out


def _add_noise(pts: np.ndarray, law: str, rng: np.random.Generator, draw: PerturbationDraw):
    n_points = len(pts)
    fraction = float(rng.uniform(*FRACTION_RANGE))
    if law == "uniform":
        n = int(rng.choice(UNIFORM_SCALES))
    else:
        n = int(rng.choice(GAUSSIAN_SCALES))
    count = int(np.floor(n_points * fraction))
    idx = np.sort(rng.choice(n_points, size=count, replace=False))
    if law == "uniform":
        shift = rng.uniform(-1.0 / n, 1.0 / n, (count, 3))
    else:
        shift = rng.normal(0.0, 1.0 / n, (count, 3))
    out = pts.copy()
    out[idx] += shift
    draw.noise_fraction, draw.noise_n, draw.noise_indices = fraction, n, idx
    return out


def _undersample(pts: np.ndarray, rng: np.random.Generator, draw: PerturbationDraw):
    n_points = len(pts)
    fraction = float(rng.uniform(*FRACTION_RANGE))
    remove = int(np.floor(n_points * fraction))
    dropped = rng.choice(n_points, size=remove, replace=False)
    keep = np.ones(n_points, dtype=bool)
    keep[dropped] = False
    kept = np.flatnonzero(keep)
    draw.under_fraction, draw.kept_indices = fraction, kept
    return pts[kept]


def apply_perturbation(points, kind, rng: np.random.Generator):
    """Perturb a cloud; returns ``(new_cloud, draw)``.

    Noise kinds shift a random 30-80 % subset of points independently per
    coordinate; undersampling drops ``floor(len * f)`` points for
    ``f ~ U(0.3, 0.8)``.  Combined kinds add noise first and then
    undersample with independently drawn parameters.
    """
    kind = PerturbationKind(kind)
    pts = as_cloud(points)
    if len(pts) < MIN_POINTS:
        raise ValueError(f"perturbation needs at least {MIN_POINTS} points, got {len(pts)}")
    draw = PerturbationDraw(kind)
    out = pts.copy()
    if kind.noise is not None:
        out = _add_noise(out, kind.noise, rng, draw)
    if kind.undersamples:
        out = _undersample(out, rng, draw)
    return out, draw
