"""Ground-truth symmetries: lifting, rigid transforms, validation and GT files.

A shape's ground truth is a :class:`SymmetrySet` of reflection planes and
rotation axes.  Axes carry their period in radians; ``math.inf`` marks a
continuous rotational symmetry.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np
from scipy.spatial import cKDTree

from .curves import CONTINUOUS, Symmetry2D
from .distance import as_cloud, centroid_span
from .formats import format_float
from .solids import Construction

UNIT_TOL = 1e-9
PARSE_UNIT_TOL = 1e-3
MAX_EXPECTED_COUNT = 14


class GTFormatError(ValueError):
    """Malformed ground-truth text."""


class GTMode(str, enum.Enum):
    MINIMAL = "minimal"
    FULL = "full"


def _snap(v) -> tuple:
    # exact-angle constructions leave 1e-16 residue where a component is zero
    return tuple(0.0 if abs(c) < 1e-15 else float(c) + 0.0 for c in v)


def canonical_sign(v) -> tuple:
    """Flip ``v`` so that its first non-zero component is positive."""
    v = tuple(float(c) for c in v)
    for c in v:
        if c != 0.0:
            if c < 0:
                v = tuple(-x for x in v)
            break
    return tuple(x + 0.0 for x in v)  # turn -0.0 into 0.0


def _check_unit(v, what: str, tol: float = UNIT_TOL) -> None:
    norm = math.sqrt(sum(c * c for c in v))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"{what} must be a unit vector (|v| = {norm!r})")


@dataclass(frozen=True)
class PlaneSymmetry:
    normal: tuple
    point: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        n = tuple(float(c) for c in self.normal)
        p = tuple(float(c) for c in self.point)
        if len(n) != 3 or len(p) != 3:
            raise ValueError("plane normal and point must be 3-vectors")
        _check_unit(n, "plane normal")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "point", p)

    def offset(self) -> float:
        return float(np.dot(self.normal, self.point))


@dataclass(frozen=True)
class AxisSymmetry:
    direction: tuple
    point: tuple = (0.0, 0.0, 0.0)
    period: float = CONTINUOUS

    def __post_init__(self):
        d = tuple(float(c) for c in self.direction)
        p = tuple(float(c) for c in self.point)
        if len(d) != 3 or len(p) != 3:
            raise ValueError("axis direction and point must be 3-vectors")
        _check_unit(d, "axis direction")
        period = float(self.period)
        if period != CONTINUOUS and not 0.0 < period <= 2 * math.pi + 1e-12:
            raise ValueError(f"axis period must be in (0, 2pi] or inf, got {period!r}")
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "period", period)

    @property
    def is_continuous(self) -> bool:
        return self.period == CONTINUOUS


Symmetry = Union[PlaneSymmetry, AxisSymmetry]


@dataclass(frozen=True)
class SymmetrySet:
    planes: tuple = ()
    axes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "planes", tuple(self.planes))
        object.__setattr__(self, "axes", tuple(self.axes))

    def __len__(self) -> int:
        return len(self.planes) + len(self.axes)

    def __iter__(self):
        yield from self.planes
        yield from self.axes

    def has_duplicates(self, tol: float = 1e-6) -> bool:
        for i, p in enumerate(self.planes):
            for q in self.planes[i + 1:]:
                same_normal = abs(abs(np.dot(p.normal, q.normal)) - 1.0) <= tol
                on_plane = abs(np.dot(q.normal, np.subtract(p.point, q.point))) <= tol
                if same_normal and on_plane:
                    return True
        return False

    def summary(self) -> str:
        cont = sum(a.is_continuous for a in self.axes)
        return (f"{len(self)} symmetries: {len(self.planes)} planes, "
                f"{len(self.axes)} axes ({cont} continuous)")


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """``x -> rotation @ x + translation``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-9) or np.linalg.det(r) < 0:
            raise ValueError("rotation must be a proper orthonormal matrix")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    def apply(self, points) -> np.ndarray:
        return as_cloud(points) @ self.rotation.T + self.translation

    def to_dict(self) -> dict:
        return {"rotation": self.rotation.tolist(), "translation": self.translation.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "RigidTransform":
        return cls(np.asarray(data["rotation"]), np.asarray(data["translation"]))


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    if axis == "x":
        return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=float)
    if axis == "y":
        return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=float)
    if axis == "z":
        return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=float)
    raise ValueError(f"unknown axis {axis!r}")


def lift_symmetries(sym2d: Symmetry2D, construction, mode=GTMode.FULL) -> SymmetrySet:
    """3D symmetries of a solid built from a curve with symmetries ``sym2d``.

    The curve lies in the XY plane and the solid is centred on the Z axis.
    A reflection line at angle ``phi`` becomes the vertical plane with
    normal ``(-sin phi, cos phi, 0)`` and a 2D rotation becomes a Z axis.
    In full mode a cylindrical extrusion additionally gets the XY mirror and
    a half-turn axis along every reflection line; conical solids have no
    z-flip, so full and minimal coincide for them.  Revolutions get one
    continuous Y axis.
    """
    construction = Construction(construction)
    mode = GTMode(mode)
    origin = (0.0, 0.0, 0.0)
    if construction is Construction.REVOLUTION:
        return SymmetrySet((), (AxisSymmetry((0.0, 1.0, 0.0), origin, CONTINUOUS),))

    planes = [PlaneSymmetry(canonical_sign(_snap((-math.sin(phi), math.cos(phi), 0.0))), origin)
              for phi in sym2d.lines]
    axes = []
    if sym2d.rotation is not None:
        axes.append(AxisSymmetry((0.0, 0.0, 1.0), origin, sym2d.rotation))
    if mode is GTMode.FULL and construction is Construction.CYLINDRICAL:
        planes.append(PlaneSymmetry((0.0, 0.0, 1.0), origin))
        for phi in sym2d.lines:
            direction = canonical_sign(_snap((math.cos(phi), math.sin(phi), 0.0)))
            axes.append(AxisSymmetry(direction, origin, math.pi))
    return SymmetrySet(tuple(planes), tuple(axes))


def transform_symmetries(s: SymmetrySet, rt: RigidTransform) -> SymmetrySet:
    """Express ``s`` in the frame obtained by applying ``rt`` to the shape."""
    r, t = rt.rotation, rt.translation

    def vec(v):
        w = r @ np.asarray(v)
        norm = np.linalg.norm(w)
        # rotations keep |v| = 1 to round-off; only renormalise real drift
        return tuple(w / norm if abs(norm - 1.0) > 1e-12 else w)

    def pt(p):
        return tuple(r @ np.asarray(p) + t)

    planes = tuple(PlaneSymmetry(canonical_sign(vec(p.normal)), pt(p.point)) for p in s.planes)
    axes = tuple(AxisSymmetry(canonical_sign(vec(a.direction)), pt(a.point), a.period)
                 for a in s.axes)
    return SymmetrySet(planes, axes)


def reflect_points(points, plane: PlaneSymmetry, exact: bool = True) -> np.ndarray:
    """Mirror every point across ``plane``.

    With ``exact`` the projection is divided by ``n.n`` and accumulated in
    extended precision, so reflecting twice returns the input to within
    about one ulp.  ``exact=False`` is the plain float64 formula (about 4x
    faster, used by the validator).
    """
    _check_unit(plane.normal, "plane normal")
    pts = as_cloud(points)
    if not exact:
        n = np.asarray(plane.normal)
        d = (pts - np.asarray(plane.point)) @ n
        return pts - 2.0 * d[:, None] * n
    p = pts.astype(np.longdouble)
    n = np.asarray(plane.normal, dtype=np.longdouble)
    d = (p - np.asarray(plane.point, dtype=np.longdouble)) @ n / (n @ n)
    return (p - 2 * d[:, None] * n).astype(float)


def rotate_about_axis(points, axis: AxisSymmetry, angle: float) -> np.ndarray:
    """Rotate points by ``angle`` around the line through ``axis.point``."""
    _check_unit(axis.direction, "axis direction")
    if not math.isfinite(angle):
        raise ValueError("rotation angle must be finite")
    pts = as_cloud(points)
    k = np.asarray(axis.direction)
    c = np.asarray(axis.point)
    v = pts - c
    cos, sin = math.cos(angle), math.sin(angle)
    rotated = v * cos + np.cross(k, v) * sin + np.outer(v @ k, k) * (1.0 - cos)
    return rotated + c


class SymmetryValidator:
    """Residual of candidate symmetries against one clean cloud.

    The residual is the squared Chamfer distance between the cloud and its
    image under the symmetry, divided by the squared diameter of the
    centroid-centred ball around the cloud.  Unlike an axis-aligned
    bounding box this scale does not change when the cloud is rotated, so
    residuals are invariant under rigid motions.  Continuous axes report the worst of
    ``continuous_trials`` random angles.
    """

    def __init__(self, clean, rng: Optional[np.random.Generator] = None,
                 continuous_trials: int = 8):
        self.points = as_cloud(clean)
        if len(self.points) == 0:
            raise ValueError("cannot validate against an empty cloud")
        self.tree = cKDTree(self.points)
        diam = centroid_span(self.points)
        self.scale = diam * diam if diam > 0 else 1.0
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.continuous_trials = continuous_trials

    # For an isometry g, dist(p, g(P)) == dist(g^-1(p), P), so both Chamfer
    # terms can be answered by the tree of the clean cloud.
    def _term(self, image) -> float:
        d, _ = self.tree.query(image)
        return float(np.mean(d * d))

    def _rotation_residual(self, axis: AxisSymmetry, angle: float) -> float:
        forward = self._term(rotate_about_axis(self.points, axis, angle))
        if math.isclose(abs(angle), math.pi):
            return 2.0 * forward / self.scale
        backward = self._term(rotate_about_axis(self.points, axis, -angle))
        return (forward + backward) / self.scale

    def residual(self, sym: Symmetry) -> float:
        if isinstance(sym, PlaneSymmetry):
            return 2.0 * self._term(reflect_points(self.points, sym, exact=False)) / self.scale
        if sym.is_continuous:
            angles = self.rng.uniform(0.0, 2 * math.pi, self.continuous_trials)
            return max(self._rotation_residual(sym, a) for a in angles)
        return self._rotation_residual(sym, sym.period)

    def residuals(self, syms: Iterable[Symmetry]) -> list:
        return [self.residual(s) for s in syms]


def validate_symmetry(clean, sym: Symmetry, rng: Optional[np.random.Generator] = None) -> float:
    """Normalised residual of one symmetry on a clean cloud (0 means exact)."""
    return SymmetryValidator(clean, rng).residual(sym)


def write_gt(s: SymmetrySet) -> str:
    """Serialise a symmetry set in the ``-sym.txt`` layout."""
    if len(s) > MAX_EXPECTED_COUNT:
        warnings.warn(f"ground truth has {len(s)} symmetries (more than {MAX_EXPECTED_COUNT})",
                      stacklevel=2)
    f = format_float
    lines = [str(len(s))]
    for p in s.planes:
        lines.append("plane " + " ".join(f(x) for x in (*p.normal, *p.point)))
    for a in s.axes:
        lines.append("axis " + " ".join(f(x) for x in (*a.direction, *a.point, a.period)))
    return "\n".join(lines) + "\n"


def _unit_or_fail(v: tuple, lineno: int) -> tuple:
    norm = math.sqrt(sum(c * c for c in v))
    if abs(norm - 1.0) > PARSE_UNIT_TOL:
        raise GTFormatError(f"line {lineno}: vector is not unit length (|v| = {norm:.6g})")
    if abs(norm - 1.0) > UNIT_TOL:
        v = tuple(c / norm for c in v)
    return v


def parse_symmetry_line(tokens: list, lineno: int, extra: int = 0):
    """Parse one ``plane``/``axis`` record; returns ``(symmetry, extra_values)``.

    ``extra`` is the number of optional trailing floats allowed (used by the
    prediction format for the confidence column).
    """
    kind = tokens[0]
    try:
        values = [float(t) for t in tokens[1:]]
    except ValueError:
        raise GTFormatError(f"line {lineno}: non-numeric value") from None
    if kind == "plane":
        base = 6
    elif kind == "axis":
        base = 7
    else:
        raise GTFormatError(f"line {lineno}: unknown symmetry kind {kind!r}")
    if not base <= len(values) <= base + extra:
        raise GTFormatError(f"line {lineno}: {kind} expects {base} values, got {len(values)}")
    if any(math.isnan(v) for v in values) or any(math.isinf(v) for v in values[:6]):
        raise GTFormatError(f"line {lineno}: non-finite geometry value")
    vec = _unit_or_fail(tuple(values[:3]), lineno)
    point = tuple(values[3:6])
    try:
        if kind == "plane":
            sym = PlaneSymmetry(vec, point)
        else:
            sym = AxisSymmetry(vec, point, values[6])
    except ValueError as exc:
        raise GTFormatError(f"line {lineno}: {exc}") from None
    return sym, values[base:]


def parse_gt(text: str) -> SymmetrySet:
    """Parse ``-sym.txt`` content; errors carry the offending line number."""
    lines = [(i, ln) for i, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    if not lines:
        raise GTFormatError("line 1: empty ground-truth file")
    lineno, header = lines[0]
    try:
        count = int(header.strip())
    except ValueError:
        raise GTFormatError(f"line {lineno}: expected the symmetry count, got {header!r}") from None
    body = lines[1:]
    if count != len(body):
        raise GTFormatError(f"line {lineno}: header announces {count} symmetries, "
                            f"file has {len(body)}")
    planes, axes = [], []
    for lineno, line in body:
        sym, _ = parse_symmetry_line(line.split(), lineno)
        (planes if isinstance(sym, PlaneSymmetry) else axes).append(sym)
    return SymmetrySet(tuple(planes), tuple(axes))
