"""End-to-end dataset assembly.

Every record is a pure function of ``(config, record_id)``: each random
stage draws from its own keyed Philox stream (see :mod:`symgen.rng`), so
records can be produced in any order and in any number of worker
processes, and a dataset can be rebuilt byte for byte from its manifest.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .curves import CurveFamily, CurveSpec, curve_symmetries_2d, sample_params
from .formats import DEFAULT_XZ_PRESET, encode_xyz
from .perturb import PERTURBATION_CYCLE, PerturbationDraw, PerturbationKind, apply_perturbation
from .rng import stream
from .solids import Construction, SolidConfig, build_solid
from .symmetry import (GTMode, RigidTransform, SymmetrySet, lift_symmetries,
                       rotation_matrix, transform_symmetries, write_gt)

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
MANIFEST_FORMAT = "symgen-manifest/1"


class Tier(str, enum.Enum):
    EASY = "easy"
    INTERMEDIATE1 = "intermediate-1"
    INTERMEDIATE2 = "intermediate-2"
    HARD = "hard"
    SSL = "ssl"


class Split(str, enum.Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


CLASS_FAMILY = {
    "astroid": CurveFamily.ASTROID,
    "citrus": CurveFamily.CITRUS,
    "egg_keplero": CurveFamily.EGG_KEPLERO,
    "geometric_petal": CurveFamily.GEOMETRIC_PETAL,
    "lemniscate": CurveFamily.LEMNISCATE,
    "mconvexities": CurveFamily.MCONVEXITIES,
    "mouth": CurveFamily.MOUTH,
    "square": CurveFamily.SQUARE,
    "cylinder": CurveFamily.ELLIPSE,
    "revolution": CurveFamily.BEZIER,
}

_EASY = ("astroid", "citrus", "egg_keplero", "geometric_petal",
         "lemniscate", "mconvexities", "mouth")
_INTERMEDIATE = _EASY + ("square", "cylinder")
_HARD = _INTERMEDIATE + ("revolution",)

TIER_CLASSES = {
    Tier.EASY: _EASY,
    Tier.INTERMEDIATE1: _INTERMEDIATE,
    Tier.INTERMEDIATE2: _INTERMEDIATE,
    Tier.HARD: _HARD,
    Tier.SSL: _INTERMEDIATE,
}


@dataclass(frozen=True)
class RotationPolicy:
    axes: tuple
    probability: float

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if not set(self.axes) <= {"x", "y", "z"}:
            raise ValueError(f"rotation axes must be a subset of x, y, z: {self.axes}")
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("rotation probability must lie in [0, 1]")


TIER_ROTATION = {
    Tier.EASY: RotationPolicy(("x",), 0.5),
    Tier.INTERMEDIATE1: RotationPolicy(("x",), 0.5),
    Tier.INTERMEDIATE2: RotationPolicy(("x", "y"), 0.75),
    Tier.HARD: RotationPolicy(("x", "y", "z"), 1.0),
    Tier.SSL: RotationPolicy(("x", "y", "z"), 1.0),
}


def tier_classes(tier) -> list:
    return list(TIER_CLASSES[Tier(tier)])


@dataclass(frozen=True)
class DatasetConfig:
    tier: Tier = Tier.EASY
    total_size: int = 10_000
    split_ratios: tuple = (0.7, 0.2, 0.1)
    master_seed: int = 0
    pr_conic: float = 0.5
    pr_translate: float = 0.8
    rotation_policy: Optional[RotationPolicy] = None
    gt_mode: GTMode = GTMode.FULL
    class_gt_modes: dict = field(default_factory=dict)  # per-class override of gt_mode
    perturbation_mode: str = "balanced"
    pr_perturb: float = 0.8
    n: int = 80
    lz_range: tuple = (0.5, 2.0)
    revolution_steps: int = 100
    jitter_deg: float = 3.4
    output_dir: str = "symgen-data"
    xz_preset: int = DEFAULT_XZ_PRESET

    def __post_init__(self):
        object.__setattr__(self, "tier", Tier(self.tier))
        object.__setattr__(self, "gt_mode", GTMode(self.gt_mode))
        overrides = {str(k): GTMode(v) for k, v in dict(self.class_gt_modes).items()}
        unknown = set(overrides) - set(CLASS_FAMILY)
        if unknown:
            raise ValueError(f"class_gt_modes names unknown classes: {sorted(unknown)}")
        object.__setattr__(self, "class_gt_modes", dict(sorted(overrides.items())))
        object.__setattr__(self, "split_ratios", tuple(float(r) for r in self.split_ratios))
        object.__setattr__(self, "lz_range", tuple(float(r) for r in self.lz_range))
        if isinstance(self.rotation_policy, dict):
            object.__setattr__(self, "rotation_policy", RotationPolicy(**self.rotation_policy))
        if len(self.split_ratios) != 3 or any(r < 0 for r in self.split_ratios):
            raise ValueError("split_ratios must be three non-negative numbers")
        if abs(sum(self.split_ratios) - 1.0) > 1e-9:
            raise ValueError("split_ratios must sum to 1")
        if self.total_size < 10:
            raise ValueError("total_size must be at least 10")
        if self.perturbation_mode not in ("balanced", "probabilistic"):
            raise ValueError("perturbation_mode must be 'balanced' or 'probabilistic'")
        for name in ("pr_conic", "pr_translate", "pr_perturb"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    @property
    def rotation(self) -> RotationPolicy:
        return self.rotation_policy or TIER_ROTATION[self.tier]

    @property
    def classes(self) -> tuple:
        return TIER_CLASSES[self.tier]

    @property
    def solid_config(self) -> SolidConfig:
        return SolidConfig(self.n, self.pr_conic, self.lz_range,
                           self.revolution_steps, self.jitter_deg)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["tier"] = self.tier.value
        out["gt_mode"] = self.gt_mode.value
        out["class_gt_modes"] = {k: v.value for k, v in self.class_gt_modes.items()}
        out["split_ratios"] = list(self.split_ratios)
        out["lz_range"] = list(self.lz_range)
        out["rotation_policy"] = {"axes": list(self.rotation.axes),
                                  "probability": self.rotation.probability}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class ShapeRecord:
    id: int
    class_name: str
    perturbation: PerturbationKind
    transform: RigidTransform
    cloud: np.ndarray
    gt: SymmetrySet
    provenance: dict
    clean: Optional[np.ndarray] = None

    @property
    def filename(self) -> str:
        return shape_filename(self.id, self.class_name, self.perturbation)

    @property
    def gt_filename(self) -> str:
        return gt_filename(self.id, self.class_name, self.perturbation)


def record_class(cfg: DatasetConfig, record_id: int) -> str:
    """Class of a record.

    Ids are grouped in consecutive blocks of ``len(classes)``; each block
    is a random permutation of the tier's classes.  Every record's class is
    uniform over the tier, and class counts never differ by more than one.
    """
    classes = cfg.classes
    c = len(classes)
    block, pos = divmod(record_id, c)
    perm = stream(cfg.master_seed, block, "class-block").permutation(c)
    return classes[perm[pos]]


def record_perturbation(cfg: DatasetConfig, record_id: int) -> PerturbationKind:
    if cfg.perturbation_mode == "balanced":
        return PERTURBATION_CYCLE[record_id % len(PERTURBATION_CYCLE)]
    rng = stream(cfg.master_seed, record_id, "perturbation-kind")
    if rng.random() < cfg.pr_perturb:
        return PERTURBATION_CYCLE[1 + int(rng.integers(len(PERTURBATION_CYCLE) - 1))]
    return PerturbationKind.CLEAN


def sample_transform(cfg: DatasetConfig, record_id: int):
    """Random pose: rotation about the policy axes (x, then y, then z), then translation."""
    policy = cfg.rotation
    rot_rng = stream(cfg.master_seed, record_id, "rotation")
    rotation = np.eye(3)
    angles = {}
    if rot_rng.random() < policy.probability:
        for ax in ("x", "y", "z"):
            if ax in policy.axes:
                angles[ax] = float(rot_rng.uniform(0.0, 2 * math.pi))
                rotation = rotation_matrix(ax, angles[ax]) @ rotation
    tr_rng = stream(cfg.master_seed, record_id, "translation")
    translation = np.zeros(3)
    if tr_rng.random() < cfg.pr_translate:
        translation = tr_rng.uniform(0.0, 1.0, 3)
    info = {"rotation_angles": angles, "translated": bool(translation.any())}
    return RigidTransform(rotation, translation), info


def generate_record(cfg: DatasetConfig, record_id: int, keep_clean: bool = False) -> ShapeRecord:
    """Build one sample; identical inputs give bit-identical records."""
    if not 0 <= record_id < cfg.total_size:
        raise ValueError(f"record id {record_id} outside [0, {cfg.total_size})")
    class_name = record_class(cfg, record_id)
    kind = record_perturbation(cfg, record_id)
    seed = cfg.master_seed

    spec = sample_params(CLASS_FAMILY[class_name], stream(seed, record_id, "params"))
    clean, solid_info = build_solid(spec, cfg.solid_config, stream(seed, record_id, "solid"))
    gt_mode = cfg.class_gt_modes.get(class_name, cfg.gt_mode)
    local_gt = lift_symmetries(curve_symmetries_2d(spec), solid_info["construction"], gt_mode)
    perturbed, draw = apply_perturbation(clean, kind, stream(seed, record_id, "perturbation"))
    transform, pose = sample_transform(cfg, record_id)

    provenance = {
        "curve": spec.to_dict(),
        "solid": solid_info,
        "clean_points": int(len(clean)),
        "perturbation": draw.to_dict(),
        "pose": pose,
        "transform": transform.to_dict(),
    }
    return ShapeRecord(
        id=record_id,
        class_name=class_name,
        perturbation=kind,
        transform=transform,
        cloud=transform.apply(perturbed),
        gt=transform_symmetries(local_gt, transform),
        provenance=provenance,
        clean=transform.apply(clean) if keep_clean else None,
    )


def reconstruct_clean(cfg: DatasetConfig, record_id: int) -> np.ndarray:
    """Unperturbed cloud of a record, in its final (posed) frame."""
    return generate_record(cfg, record_id, keep_clean=True).clean


def _split_quotas(class_sizes: dict, ratios: tuple) -> dict:
    """Per-class split counts.

    Every count is ``floor`` or ``ceil`` of ``ratio * class_size``, each
    class's counts add up to its size, and the split totals equal the
    largest-remainder rounding of ``ratio * total``.
    """
    names = sorted(class_sizes)
    total = sum(class_sizes.values())
    k = len(ratios)
    exact_totals = [r * total for r in ratios]
    totals = [math.floor(x) for x in exact_totals]
    order = sorted(range(k), key=lambda s: (-(exact_totals[s] - totals[s]), s))
    for s in order[: total - sum(totals)]:
        totals[s] += 1

    quotas = {c: [math.floor(class_sizes[c] * r) for r in ratios] for c in names}
    row_need = {c: class_sizes[c] - sum(quotas[c]) for c in names}
    col_need = [totals[s] - sum(quotas[c][s] for c in names) for s in range(k)]
    # Gale-Ryser greedy: biggest row demand first, to the columns with the most demand left
    for c in sorted(names, key=lambda c: (-row_need[c], c)):
        frac = [class_sizes[c] * r - math.floor(class_sizes[c] * r) for r in ratios]
        cols = sorted(range(k), key=lambda s: (-col_need[s], -frac[s], s))
        for s in cols[: row_need[c]]:
            quotas[c][s] += 1
            col_need[s] -= 1
    if any(col_need):
        # Cannot happen for consistent inputs; fall back to per-class largest remainder.
        for c in names:
            size = class_sizes[c]
            q = [math.floor(size * r) for r in ratios]
            rem = sorted(range(k), key=lambda s: (-(size * ratios[s] - q[s]), s))
            for s in rem[: size - sum(q)]:
                q[s] += 1
            quotas[c] = q
    return quotas


def assign_splits(classes_by_id: dict, ratios=(0.7, 0.2, 0.1), seed: int = 0) -> dict:
    """Stratified train/val/test assignment ``{record_id: Split}``.

    Members of each class are shuffled with a seed-keyed stream and cut
    according to :func:`_split_quotas`.
    """
    by_class: dict = {}
    for rid in sorted(classes_by_id):
        by_class.setdefault(classes_by_id[rid], []).append(rid)
    quotas = _split_quotas({c: len(v) for c, v in by_class.items()}, tuple(ratios))
    splits = list(Split)
    out = {}
    for c, members in by_class.items():
        rng = stream(seed, 0, f"split:{c}")
        shuffled = [members[i] for i in rng.permutation(len(members))]
        start = 0
        for s, count in zip(splits, quotas[c]):
            for rid in shuffled[start:start + count]:
                out[rid] = s
            start += count
    return out


def split_assign(record_id: int, classes_by_id: dict, ratios=(0.7, 0.2, 0.1), seed: int = 0) -> Split:
    return assign_splits(classes_by_id, ratios, seed)[record_id]


def shape_filename(record_id: int, class_name: str, perturbation) -> str:
    return f"{record_id:06d}-{class_name}-{PerturbationKind(perturbation).value}.xz"


def gt_filename(record_id: int, class_name: str, perturbation) -> str:
    return shape_filename(record_id, class_name, perturbation)[: -len(".xz")] + "-sym.txt"


def parse_shape_filename(name: str) -> tuple:
    """``'008706-revolution-undersampling+uniform.xz'`` -> ``(8706, 'revolution', kind)``."""
    stem = Path(name).name
    for suffix in ("-sym.txt", "-pred.txt", ".xz"):
        if stem.endswith(suffix):
            stem = stem[: -len(suffix)]
            break
    rid, class_name, pert = stem.split("-", 2)
    return int(rid), class_name, PerturbationKind(pert)


@dataclass(frozen=True)
class PlanEntry:
    id: int
    class_name: str
    perturbation: PerturbationKind
    split: Split

    def relative_dir(self, tier: Tier) -> Path:
        return Path(tier.value) / self.split.value / self.class_name


def plan_dataset(cfg: DatasetConfig) -> list:
    """Class, perturbation and split of every record, without building clouds."""
    classes = {rid: record_class(cfg, rid) for rid in range(cfg.total_size)}
    splits = assign_splits(classes, cfg.split_ratios, cfg.master_seed)
    return [PlanEntry(rid, classes[rid], record_perturbation(cfg, rid), splits[rid])
            for rid in range(cfg.total_size)]


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _write_one(job) -> dict:
    cfg, entry, root = job
    try:
        rec = generate_record(cfg, entry.id)
        rel_dir = Path(entry.split.value) / entry.class_name
        cloud_rel = rel_dir / rec.filename
        gt_rel = rel_dir / rec.gt_filename
        cloud_bytes = encode_xyz(rec.cloud, cfg.xz_preset)
        gt_bytes = write_gt(rec.gt).encode("ascii")
        out_dir = Path(root) / rel_dir
        out_dir.mkdir(parents=True, exist_ok=True)
        (Path(root) / cloud_rel).write_bytes(cloud_bytes)
        (Path(root) / gt_rel).write_bytes(gt_bytes)
    except OSError as exc:
        return {"id": entry.id, "error": f"{type(exc).__name__}: {exc}"}
    return {
        "id": entry.id,
        "class": entry.class_name,
        "perturbation": entry.perturbation.value,
        "split": entry.split.value,
        "cloud": cloud_rel.as_posix(),
        "gt": gt_rel.as_posix(),
        "cloud_sha256": _sha256(cloud_bytes),
        "gt_sha256": _sha256(gt_bytes),
        "points": int(len(rec.cloud)),
        "symmetries": len(rec.gt),
        "provenance": rec.provenance,
    }


@dataclass
class Manifest:
    config: DatasetConfig
    records: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    path: Optional[Path] = None

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        # the output location is not part of the dataset: moved or regenerated
        # trees must have byte-identical manifests
        config = self.config.to_dict()
        config.pop("output_dir")
        return {
            "format": MANIFEST_FORMAT,
            "generator_version": __version__,
            "rng": "philox4x64, key = SeedSequence(master_seed, record_id, blake2b(tag))",
            "config": config,
            "records": self.records,
            "failures": self.failures,
        }

    @classmethod
    def load(cls, path) -> "Manifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        data = json.loads(path.read_text(encoding="utf-8"))
        if data.get("format") != MANIFEST_FORMAT:
            raise ValueError(f"{path}: not a {MANIFEST_FORMAT} manifest")
        config = dict(data["config"], output_dir=str(path.parent.parent))
        return cls(DatasetConfig.from_dict(config), data["records"],
                   data.get("failures", []), path)

    @property
    def root(self) -> Path:
        return self.path.parent


def default_workers() -> int:
    return os.cpu_count() or 1


def generate_dataset(cfg: DatasetConfig, threads: Optional[int] = None,
                     output_dir=None) -> Manifest:
    """Write all records of ``cfg`` plus ``manifest.json``.

    Files go to ``{output_dir}/{tier}/{split}/{class}/``; the manifest sits
    in ``{output_dir}/{tier}/``.  Records are generated in ``threads``
    worker processes (default: all cores).  Per-file I/O errors are
    collected in ``Manifest.failures`` rather than aborting the run.
    """
    root = Path(output_dir if output_dir is not None else cfg.output_dir) / cfg.tier.value
    root.mkdir(parents=True, exist_ok=True)
    plan = plan_dataset(cfg)
    jobs = [(cfg, entry, str(root)) for entry in plan]
    workers = threads or default_workers()
    if workers <= 1:
        results = [_write_one(job) for job in jobs]
    else:
        chunk = max(1, len(jobs) // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_write_one, jobs, chunksize=chunk))
    manifest = Manifest(cfg)
    for res in results:
        (manifest.failures if "error" in res else manifest.records).append(res)
    for failure in manifest.failures:
        log.error("record %06d failed: %s", failure["id"], failure["error"])
    manifest.path = root / MANIFEST_NAME
    manifest.path.write_text(json.dumps(manifest.to_dict(), indent=1) + "\n", encoding="utf-8")
    return manifest


def regenerate(manifest_path, output_dir, threads: Optional[int] = None) -> Manifest:
    """Rebuild a dataset from the configuration stored in its manifest."""
    manifest = Manifest.load(manifest_path)
    return generate_dataset(manifest.config, threads=threads, output_dir=output_dir)


def find_manifests(path) -> list:
    path = Path(path)
    if path.is_file():
        return [path]
    if (path / MANIFEST_NAME).exists():
        return [path / MANIFEST_NAME]
    return sorted(path.rglob(MANIFEST_NAME))
