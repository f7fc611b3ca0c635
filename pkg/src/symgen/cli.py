"""Command-line interface: ``symgen <verb> ...``.

Exit codes: 0 success, 1 partial failure or failed validation, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import collections
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .distance import bbox_diagonal
from .formats import CloudFormatError, read_cloud, write_ply
from .metrics import MatchThresholds, evaluate_dirs
from .pipeline import (DatasetConfig, Manifest, Tier, default_workers, find_manifests,
                       generate_dataset, generate_record)
from .symmetry import GTFormatError, SymmetryValidator, parse_gt

log = logging.getLogger("symgen")

OUTPUT_ENV = "SYMGEN_OUTPUT_DIR"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# flag name -> DatasetConfig field
_GENERATE_FIELDS = {
    "tier": "tier",
    "size": "total_size",
    "seed": "master_seed",
    "out": "output_dir",
    "gt_mode": "gt_mode",
    "mode": "perturbation_mode",
    "pr_conic": "pr_conic",
    "pr_translate": "pr_translate",
    "xz_preset": "xz_preset",
    "n": "n",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symgen", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("generate", help="write a dataset tier to disk")
    g.add_argument("--config", type=Path, help="JSON file with DatasetConfig fields")
    g.add_argument("--tier", choices=[t.value for t in Tier])
    g.add_argument("--size", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.add_argument("--gt-mode", choices=["full", "minimal"])
    g.add_argument("--mode", choices=["balanced", "probabilistic"])
    g.add_argument("--pr-conic", type=float)
    g.add_argument("--pr-translate", type=float)
    g.add_argument("--xz-preset", type=int, choices=range(10), metavar="0-9")
    g.add_argument("--n", type=int, help="sampling resolution (n*n points per shape)")
    g.add_argument("--threads", type=int, help="worker processes (default: all cores)")

    i = sub.add_parser("inspect", help="summarise a cloud or ground-truth file")
    i.add_argument("file", type=Path)

    v = sub.add_parser("validate-gt", help="re-check every GT entry of a generated dataset")
    v.add_argument("dir", type=Path)
    v.add_argument("--threshold", type=float, default=5e-3)
    v.add_argument("--threads", type=int)
    v.add_argument("--limit", type=int, help="only check the first N records")

    e = sub.add_parser("evaluate", help="score prediction files against ground truth")
    e.add_argument("--gt", type=Path, required=True)
    e.add_argument("--pred", type=Path, required=True)
    e.add_argument("--angle-thresh", type=float, default=1.0, help="degrees")
    e.add_argument("--dist-thresh", type=float, default=0.01,
                   help="fraction of the bounding-box diagonal")
    e.add_argument("--period-tol", type=float, default=0.05)
    e.add_argument("--phc-mode", choices=["top", "any"], default="top")

    x = sub.add_parser("export", help="convert a cloud for external viewers")
    x.add_argument("file", type=Path)
    x.add_argument("--format", choices=["ply"], default="ply")
    x.add_argument("--out", type=Path)

    s = sub.add_parser("stats", help="class / perturbation / split histograms")
    s.add_argument("dir", type=Path)

    b = sub.add_parser("bench", help="measure in-memory generation throughput")
    b.add_argument("--tier", choices=[t.value for t in Tier], default="easy")
    b.add_argument("--records", type=int, default=500)
    b.add_argument("--threads", type=int, default=1)
    return parser


def _load_config(args) -> DatasetConfig:
    data = {}
    if args.config is not None:
        data.update(json.loads(args.config.read_text(encoding="utf-8")))
    if os.environ.get(OUTPUT_ENV):
        data["output_dir"] = os.environ[OUTPUT_ENV]
    for flag, name in _GENERATE_FIELDS.items():
        value = getattr(args, flag)
        if value is not None:
            data[name] = value
    return DatasetConfig.from_dict(data)


def cmd_generate(args) -> int:
    try:
        cfg = _load_config(args)
    except (ValueError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    start = time.perf_counter()
    manifest = generate_dataset(cfg, threads=args.threads)
    elapsed = time.perf_counter() - start
    print(f"wrote {len(manifest.records)} records to {manifest.root} "
          f"in {elapsed:.1f}s ({len(manifest.records) / max(elapsed, 1e-9):.1f} records/s)")
    for failure in manifest.failures:
        print(f"FAILED {failure['id']:06d}: {failure['error']}", file=sys.stderr)
    return EXIT_OK if manifest.ok else EXIT_FAIL


def cmd_inspect(args) -> int:
    path = args.file
    if path.name.endswith("-sym.txt"):
        gt = parse_gt(path.read_text(encoding="ascii"))
        print(f"{path.name}: {gt.summary()}")
        return EXIT_OK
    cloud = read_cloud(path)
    print(f"{path.name}: {len(cloud)} points")
    if len(cloud):
        lo, hi = cloud.min(axis=0), cloud.max(axis=0)
        print("bbox min " + " ".join(f"{c:.6g}" for c in lo))
        print("bbox max " + " ".join(f"{c:.6g}" for c in hi))
        print(f"bbox diagonal {bbox_diagonal(cloud):.6g}")
    stem = path.name[:-3] if path.name.endswith(".xz") else path.stem
    gt_path = path.with_name(stem + "-sym.txt")
    if gt_path.exists():
        print("gt " + parse_gt(gt_path.read_text(encoding="ascii")).summary())
    return EXIT_OK


def _validate_one(job):
    cfg, record, root, threshold = job
    gt_path = Path(root) / record["gt"]
    try:
        gt = parse_gt(gt_path.read_text(encoding="ascii"))
    except (OSError, GTFormatError) as exc:
        return record["id"], math.inf, f"{gt_path}: {exc}"
    clean = generate_record(cfg, record["id"], keep_clean=True).clean
    residuals = SymmetryValidator(clean).residuals(gt)
    worst = max(residuals) if residuals else 0.0
    problem = None if worst < threshold else f"{gt_path.name}: residual {worst:.3e}"
    return record["id"], worst, problem


def validate_dataset(path, threshold: float = 5e-3, threads=None, limit=None):
    """Return ``(n_checked, max_residual, problems)`` for all manifests under ``path``."""
    manifests = find_manifests(path)
    if not manifests:
        raise FileNotFoundError(f"no manifest found under {path}")
    jobs = []
    for mpath in manifests:
        manifest = Manifest.load(mpath)
        records = manifest.records[:limit] if limit else manifest.records
        jobs += [(manifest.config, r, str(manifest.root), threshold) for r in records]
    workers = threads or default_workers()
    if workers <= 1:
        results = [_validate_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_validate_one, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    worst = max((r[1] for r in results), default=0.0)
    problems = [r[2] for r in results if r[2]]
    return len(results), worst, problems


def cmd_validate(args) -> int:
    try:
        n, worst, problems = validate_dataset(args.dir, args.threshold, args.threads, args.limit)
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    for p in problems:
        print(f"FAIL {p}")
    print(f"checked {n} records, max residual {worst:.3e} (threshold {args.threshold:g})")
    return EXIT_FAIL if problems else EXIT_OK


def cmd_evaluate(args) -> int:
    try:
        th = MatchThresholds(math.radians(args.angle_thresh), args.dist_thresh, args.period_tol)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = evaluate_dirs(args.gt, args.pred, th, args.phc_mode)
    sys.stdout.write(report.to_text())
    return EXIT_OK


def cmd_export(args) -> int:
    try:
        cloud = read_cloud(args.file)
    except (OSError, CloudFormatError) as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    out = args.out
    if out is None:
        name = args.file.name[:-3] if args.file.name.endswith(".xz") else args.file.stem
        out = args.file.with_name(name + ".ply")
    write_ply(out, cloud)
    print(f"wrote {len(cloud)} points to {out}")
    return EXIT_OK


def cmd_stats(args) -> int:
    manifests = find_manifests(args.dir)
    if not manifests:
        print(f"no manifest found under {args.dir}", file=sys.stderr)
        return EXIT_USAGE
    counters = {k: collections.Counter() for k in ("class", "perturbation", "split", "symmetries")}
    for mpath in manifests:
        for rec in Manifest.load(mpath).records:
            for key in counters:
                counters[key][rec[key]] += 1
    total = sum(counters["class"].values())
    print(f"records {total}")
    for key, counter in counters.items():
        print(f"[{key}]")
        for value, count in sorted(counter.items(), key=lambda kv: str(kv[0])):
            print(f"  {value}: {count}")
    return EXIT_OK


def _bench_chunk(job):
    cfg, ids = job
    for rid in ids:
        generate_record(cfg, rid)
    return len(ids)


def bench(tier="easy", records=500, threads=1) -> float:
    """Records per second of in-memory generation."""
    cfg = DatasetConfig(tier=tier, total_size=max(records, 10))
    ids = list(range(records))
    start = time.perf_counter()
    if threads <= 1:
        _bench_chunk((cfg, ids))
    else:
        chunks = [(cfg, ids[k::threads]) for k in range(threads)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            list(pool.map(_bench_chunk, chunks))
    return records / (time.perf_counter() - start)


def cmd_bench(args) -> int:
    rate = bench(args.tier, args.records, args.threads)
    print(f"{rate:.1f} records/s with {args.threads} worker(s) "
          f"({rate / args.threads:.1f} records/s/worker)")
    return EXIT_OK


_COMMANDS = {
    "generate": cmd_generate,
    "inspect": cmd_inspect,
    "validate-gt": cmd_validate,
    "evaluate": cmd_evaluate,
    "export": cmd_export,
    "stats": cmd_stats,
    "bench": cmd_bench,
}


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return _COMMANDS[args.verb](args)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
