"""Turning plane-curve samples into 3D point clouds.

Closed curves are extruded along Z, either as a straight (cylindrical)
prism or as a cone with its apex at ``z = -l_z/2``.  Bezier profiles are
revolved around the Y axis with jittered angles.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .curves import CurveFamily, CurveSpec, sample_curve


class Construction(str, enum.Enum):
    CYLINDRICAL = "cylindrical"
    CONICAL = "conical"
    REVOLUTION = "revolution"


@dataclass(frozen=True)
class ExtrusionSpec:
    kind: Construction
    l_z: float

    def __post_init__(self):
        kind = Construction(self.kind)
        if kind is Construction.REVOLUTION:
            raise ValueError("extrusion kind must be cylindrical or conical")
        object.__setattr__(self, "kind", kind)
        if not self.l_z > 0:
            raise ValueError("l_z must be positive")


@dataclass(frozen=True)
class RevolutionSpec:
    steps: int = 100
    jitter_deg: float = 3.4

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.jitter_deg < 0:
            raise ValueError("jitter_deg must be >= 0")


@dataclass(frozen=True)
class SolidConfig:
    """Knobs of the curve-to-solid stage.

    ``n`` is the per-side sampling resolution: extrusions get ``n**2``
    points and revolutions ``ceil(n**2 / revolution_steps)`` profile points.
    """

    n: int = 80
    pr_conic: float = 0.5
    lz_range: tuple = (0.5, 2.0)
    revolution_steps: int = 100
    jitter_deg: float = 3.4


def _as_2d(points2d) -> np.ndarray:
    pts = np.asarray(points2d, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) array, got shape {pts.shape}")
    if len(pts) == 0:
        raise ValueError("cannot build a solid from an empty curve sample")
    return pts


def extrude(points2d, spec: ExtrusionSpec, rng: np.random.Generator, z=None) -> np.ndarray:
    """Extrude curve samples along Z, one output point per input point.

    Each point gets its own height fraction ``z ~ U(0, 1)`` (or the values in
    ``z`` when given); the output height is ``l_z * z - l_z / 2``.
    """
    pts = _as_2d(points2d)
    n = len(pts)
    if z is None:
        z = rng.random(n)
    else:
        z = np.broadcast_to(np.asarray(z, dtype=float), (n,))
    out = np.empty((n, 3))
    if spec.kind is Construction.CONICAL:
        out[:, 0] = z * pts[:, 0]
        out[:, 1] = z * pts[:, 1]
    else:
        out[:, :2] = pts
    out[:, 2] = spec.l_z * z - spec.l_z / 2.0
    return out


def revolve(profile, spec: RevolutionSpec, rng: np.random.Generator) -> np.ndarray:
    """Sweep profile points (x, y, 0) around the Y axis.

    Profile point ``i`` is copied ``spec.steps`` times at angles
    ``2*pi*j/steps + sigma`` with an independent ``sigma`` drawn from
    ``U(-jitter, jitter)`` for every copy.  The rotation maps
    ``(x, y, 0)`` to ``(x cos(theta), y, -x sin(theta))``.  Output is
    ordered profile-major.
    """
    pts = _as_2d(profile)
    steps = spec.steps
    jitter = math.radians(spec.jitter_deg)
    theta = 2.0 * math.pi * np.arange(steps) / steps
    sigma = rng.uniform(-jitter, jitter, (len(pts), steps)) if jitter > 0 else 0.0
    angles = theta[None, :] + sigma
    x = pts[:, 0:1]
    out = np.empty((len(pts), steps, 3))
    out[..., 0] = x * np.cos(angles)
    out[..., 1] = pts[:, 1:2]
    out[..., 2] = -x * np.sin(angles)
    return out.reshape(-1, 3)


def build_solid(spec: CurveSpec, cfg: SolidConfig, rng: np.random.Generator):
    """Sample a curve and lift it to a 3D cloud.

    Returns ``(cloud, provenance)`` where provenance names the
    construction and, for extrusions, the drawn ``l_z``.
    """
    if spec.family is CurveFamily.BEZIER:
        rev = RevolutionSpec(cfg.revolution_steps, cfg.jitter_deg)
        count = math.ceil(cfg.n ** 2 / rev.steps)
        profile = sample_curve(spec, count, rng)
        cloud = revolve(profile, rev, rng)
        return cloud, {
            "construction": Construction.REVOLUTION.value,
            "profile_points": count,
            "steps": rev.steps,
            "jitter_deg": rev.jitter_deg,
        }
    points2d = sample_curve(spec, cfg.n ** 2, rng)
    l_z = float(rng.uniform(*cfg.lz_range))
    kind = Construction.CONICAL if rng.random() < cfg.pr_conic else Construction.CYLINDRICAL
    cloud = extrude(points2d, ExtrusionSpec(kind, l_z), rng)
    return cloud, {"construction": kind.value, "l_z": l_z}
