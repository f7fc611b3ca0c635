"""Parametric plane curves, their parameter sampling and 2D symmetry groups."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

#: Rotation value meaning "invariant under every angle".
CONTINUOUS = math.inf

# Half-width of the parameter interval used for the Egg of Keplero.
EGG_T_MAX = 10.0


class CurveDomainError(ValueError):
    """Curve parameter outside the family's domain."""


class CurveFamily(str, enum.Enum):
    CITRUS = "citrus"
    MCONVEXITIES = "mconvexities"
    LEMNISCATE = "lemniscate"
    EGG_KEPLERO = "egg_keplero"
    MOUTH = "mouth"
    GEOMETRIC_PETAL = "geometric_petal"
    ASTROID = "astroid"
    ELLIPSE = "ellipse"
    SQUARE = "square"
    BEZIER = "bezier"


_TRIG_FAMILIES = {
    CurveFamily.MCONVEXITIES,
    CurveFamily.LEMNISCATE,
    CurveFamily.MOUTH,
    CurveFamily.GEOMETRIC_PETAL,
    CurveFamily.ASTROID,
    CurveFamily.ELLIPSE,
    CurveFamily.SQUARE,
}


@dataclass(frozen=True)
class CurveSpec:
    """A curve family together with the concrete parameters of one curve.

    Only the parameters meaningful for ``family`` are set; the rest stay
    ``None``.  ``control_points`` holds the four Bezier control points as
    3-tuples (z is always 0).
    """

    family: CurveFamily
    a: Optional[float] = None
    b: Optional[float] = None
    m: Optional[int] = None
    control_points: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "family", CurveFamily(self.family))
        fam = self.family
        if fam is CurveFamily.BEZIER:
            if self.control_points is None or len(self.control_points) != 4:
                raise ValueError("Bezier curves need exactly four control points")
            pts = tuple(tuple(float(c) for c in p) for p in self.control_points)
            if any(len(p) != 3 for p in pts):
                raise ValueError("control points must be 3D")
            object.__setattr__(self, "control_points", pts)
            return
        if self.a is None or self.a <= 0:
            raise ValueError(f"{fam.value}: parameter a must be positive")
        if fam in (CurveFamily.CITRUS, CurveFamily.ELLIPSE, CurveFamily.SQUARE,
                   CurveFamily.MCONVEXITIES, CurveFamily.GEOMETRIC_PETAL):
            if self.b is None:
                raise ValueError(f"{fam.value}: parameter b is required")
        if fam is CurveFamily.CITRUS and self.b == 0:
            raise ValueError("citrus: b must be non-zero")
        if fam is CurveFamily.MCONVEXITIES and not 0 <= abs(self.b) < 1:
            raise ValueError("mconvexities: |b| must be < 1 to keep the radius finite")
        if fam in (CurveFamily.MCONVEXITIES, CurveFamily.GEOMETRIC_PETAL):
            if self.m is None or int(self.m) != self.m or self.m < 1:
                raise ValueError(f"{fam.value}: m must be a positive integer")
            object.__setattr__(self, "m", int(self.m))

    def to_dict(self) -> dict:
        out = {"family": self.family.value}
        for name in ("a", "b", "m"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        if self.control_points is not None:
            out["control_points"] = [list(p) for p in self.control_points]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "CurveSpec":
        cp = data.get("control_points")
        return cls(
            family=CurveFamily(data["family"]),
            a=data.get("a"),
            b=data.get("b"),
            m=data.get("m"),
            control_points=tuple(tuple(p) for p in cp) if cp is not None else None,
        )


@dataclass(frozen=True)
class Symmetry2D:
    """Symmetries of a plane curve about the origin.

    ``lines`` are the angles in [0, pi) of reflection lines through the
    origin.  ``rotation`` is the smallest rotation angle, ``CONTINUOUS`` for
    a circle, or ``None`` when the curve has no non-trivial rotation.
    """

    lines: tuple = ()
    rotation: Optional[float] = None

    def __post_init__(self):
        lines = tuple(float(x) for x in self.lines)
        if any(not 0.0 <= x < math.pi for x in lines):
            raise ValueError("reflection line angles must lie in [0, pi)")
        if any(b <= a for a, b in zip(lines, lines[1:])):
            raise ValueError("reflection line angles must be strictly increasing")
        object.__setattr__(self, "lines", lines)
        rot = self.rotation
        if rot is not None and rot != CONTINUOUS:
            if not 0 < rot <= TWO_PI:
                raise ValueError("rotation angle must lie in (0, 2pi]")
            k = TWO_PI / rot
            if abs(k - round(k)) > 1e-12 * max(1.0, k):
                raise ValueError("rotation angle must divide 2pi")

    @property
    def is_continuous(self) -> bool:
        return self.rotation == CONTINUOUS


def domain(spec: CurveSpec) -> tuple:
    """Parameter interval ``(lo, hi)`` sampled for the family.

    Trigonometric families use the half-open [0, 2pi); the others are
    closed intervals.
    """
    fam = spec.family
    if fam is CurveFamily.CITRUS:
        return 0.0, float(spec.a)
    if fam is CurveFamily.EGG_KEPLERO:
        return -EGG_T_MAX, EGG_T_MAX
    if fam is CurveFamily.BEZIER:
        return 0.0, 1.0
    return 0.0, TWO_PI


def _check_domain(spec: CurveSpec, t: np.ndarray) -> None:
    lo, hi = domain(spec)
    if spec.family in _TRIG_FAMILIES:
        bad = (t < lo) | (t >= hi)
    else:
        bad = (t < lo) | (t > hi)
    if np.any(bad) or not np.all(np.isfinite(t)):
        raise CurveDomainError(
            f"{spec.family.value}: parameter outside domain [{lo}, {hi}"
            f"{')' if spec.family in _TRIG_FAMILIES else ']'}"
        )


def evaluate(spec: CurveSpec, t, branch=1) -> np.ndarray:
    """Vectorised curve evaluation; returns an ``(n, 2)`` array.

    ``branch`` (scalar or array of +1/-1) picks the sign of the Citrus
    square root and is ignored by the other families.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    _check_domain(spec, t)
    fam = spec.family
    a, b, m = spec.a, spec.b, spec.m

    if fam is CurveFamily.CITRUS:
        radicand = (a - t) ** 3 * t ** 3 / (a ** 4 * b ** 2)
        if np.any(radicand < 0):
            raise AssertionError("negative citrus radicand inside the domain")
        sign = np.where(np.broadcast_to(branch, t.shape) < 0, -1.0, 1.0)
        x = t - a / 2.0
        y = sign * np.sqrt(radicand)
    elif fam is CurveFamily.MCONVEXITIES:
        r = a / (1.0 + b * np.cos(m * t))
        x, y = r * np.cos(t), r * np.sin(t)
    elif fam is CurveFamily.LEMNISCATE:
        s, c = np.sin(t), np.cos(t)
        den = 1.0 + c * c
        x, y = a * s / den, a * s * c / den
    elif fam is CurveFamily.EGG_KEPLERO:
        den = (1.0 + t * t) ** 2
        x, y = a / den, a * t / den
    elif fam is CurveFamily.MOUTH:
        x, y = a * np.cos(t), a * np.sin(t) ** 3
    elif fam is CurveFamily.GEOMETRIC_PETAL:
        r = a + b * np.cos(m * t)
        x, y = r * np.cos(t), r * np.sin(t)
    elif fam is CurveFamily.ASTROID:
        x, y = a * np.cos(t) ** 3, a * np.sin(t) ** 3
    elif fam is CurveFamily.ELLIPSE:
        x, y = a * np.cos(t), b * np.sin(t)
    elif fam is CurveFamily.SQUARE:
        c, s = np.cos(t), np.sin(t)
        den = np.maximum(np.abs(c), np.abs(s))
        x, y = a * c / den, b * s / den
    elif fam is CurveFamily.BEZIER:
        cp = np.asarray(spec.control_points, dtype=float)[:, :2]
        u = 1.0 - t
        basis = np.stack([u ** 3, 3 * u * u * t, 3 * u * t * t, t ** 3], axis=1)
        return basis @ cp
    else:  # pragma: no cover
        raise ValueError(f"unknown family {fam!r}")
    return np.stack([x, y], axis=1)


def eval_curve(spec: CurveSpec, t: float, branch: int = 1) -> tuple:
    """Evaluate a single curve point ``P(t)`` and return ``(x, y)``."""
    x, y = evaluate(spec, float(t), branch)[0]
    return float(x), float(y)


def sample_parameters(spec: CurveSpec, count: int, rng: np.random.Generator):
    """Draw ``count`` parameter values (and Citrus branch signs) uniformly."""
    if count < 1:
        raise ValueError("count must be >= 1")
    lo, hi = domain(spec)
    t = rng.uniform(lo, hi, count)
    if spec.family in _TRIG_FAMILIES:
        # rng.uniform can round up to hi for some (lo, hi); keep the interval half-open
        t[t >= hi] = lo
    branch = None
    if spec.family is CurveFamily.CITRUS:
        branch = np.where(rng.random(count) < 0.5, -1.0, 1.0)
    return t, branch


def sample_curve(spec: CurveSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    """Sample ``count`` points on the curve at uniformly drawn parameters."""
    t, branch = sample_parameters(spec, count, rng)
    return evaluate(spec, t, 1 if branch is None else branch)


def curve_symmetries_2d(spec: CurveSpec) -> Symmetry2D:
    """Reflection lines and rotation order of the concrete curve.

    Returns only symmetries that hold for the given parameters: a
    rectangle or an ellipse with ``a != b`` has the two axis mirrors and a
    half-turn, the square and the astroid have the full dihedral group of
    order 8, and ``m``-fold families have ``m`` mirrors and a ``2pi/m``
    rotation (no rotation entry for ``m == 1``).
    """
    fam = spec.family
    axes = (0.0, math.pi / 2)
    d4 = (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4)

    if fam in (CurveFamily.CITRUS, CurveFamily.LEMNISCATE, CurveFamily.MOUTH):
        return Symmetry2D(axes, math.pi)
    if fam is CurveFamily.EGG_KEPLERO:
        return Symmetry2D((0.0,), None)
    if fam is CurveFamily.ASTROID:
        return Symmetry2D(d4, math.pi / 2)
    if fam is CurveFamily.ELLIPSE:
        return Symmetry2D(axes, CONTINUOUS if spec.a == spec.b else math.pi)
    if fam is CurveFamily.SQUARE:
        if spec.a == spec.b:
            return Symmetry2D(d4, math.pi / 2)
        return Symmetry2D(axes, math.pi)
    if fam in (CurveFamily.MCONVEXITIES, CurveFamily.GEOMETRIC_PETAL):
        m = spec.m
        lines = tuple(math.pi * k / m for k in range(m))
        return Symmetry2D(lines, TWO_PI / m if m > 1 else None)
    return Symmetry2D((), None)


def _uniform_int(rng: np.random.Generator, lo: int, hi: int) -> int:
    return int(rng.integers(lo, hi, endpoint=True))


def sample_params(family, rng: np.random.Generator) -> CurveSpec:
    """Draw a random curve of ``family`` from the dataset parameter ranges."""
    fam = CurveFamily(family)
    if fam is CurveFamily.CITRUS:
        return CurveSpec(fam, a=1.0, b=float(_uniform_int(rng, 1, 13)))
    if fam is CurveFamily.MCONVEXITIES:
        return CurveSpec(
            fam,
            a=float(rng.uniform(0.5, 1.1)),
            b=float(rng.uniform(0.2, 0.9)),
            m=_uniform_int(rng, 3, 9),
        )
    if fam is CurveFamily.GEOMETRIC_PETAL:
        return CurveSpec(
            fam,
            a=float(rng.uniform(1.0, 2.0)),
            b=float(_uniform_int(rng, 1, 6)),
            m=_uniform_int(rng, 1, 6),
        )
    if fam in (CurveFamily.LEMNISCATE, CurveFamily.EGG_KEPLERO,
               CurveFamily.MOUTH, CurveFamily.ASTROID):
        return CurveSpec(fam, a=1.0)
    if fam in (CurveFamily.SQUARE, CurveFamily.ELLIPSE):
        return CurveSpec(fam, a=1.0, b=float(rng.uniform(0.5, 1.5)))
    # Bezier profile: C0 on the line y = 1, C3 pinned at the origin.
    x0, x1, y1, x2 = rng.uniform(0.1, 1.0, 4)
    y2 = rng.uniform(0.0, 1.0)
    return CurveSpec(
        fam,
        control_points=(
            (float(x0), 1.0, 0.0),
            (float(x1), float(y1), 0.0),
            (float(x2), float(y2), 0.0),
            (0.0, 0.0, 0.0),
        ),
    )


def bezier_spec(control_points: Sequence) -> CurveSpec:
    """Convenience constructor accepting 2D or 3D control points."""
    pts = tuple(tuple(p) + (0.0,) * (3 - len(p)) for p in control_points)
    return CurveSpec(CurveFamily.BEZIER, control_points=pts)
