import json
import shutil
import subprocess
import sys

import pytest

from symgen.cli import run
from symgen.pipeline import Manifest


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "d"
    code = run(["generate", "--tier", "hard", "--size", "24", "--seed", "7",
                "--out", str(out), "--threads", "1"])
    assert code == 0
    return out


def _digests(root):
    return {r["cloud"]: (r["cloud_sha256"], r["gt_sha256"]) for r in Manifest.load(root).records}


def test_generate_is_reproducible(dataset, tmp_path):
    again = tmp_path / "again"
    assert run(["generate", "--tier", "hard", "--size", "24", "--seed", "7",
                "--out", str(again), "--threads", "1"]) == 0
    assert _digests(dataset / "hard") == _digests(again / "hard")
    assert (dataset / "hard" / "manifest.json").read_bytes() == \
        (again / "hard" / "manifest.json").read_bytes()


def test_validate_gt(dataset, capsys):
    assert run(["validate-gt", str(dataset), "--threads", "1"]) == 0
    out = capsys.readouterr().out
    assert "checked 24 records" in out
    worst = float(out.split("max residual ")[1].split()[0])
    assert worst < 5e-3


def test_validate_gt_flags_bad_file(dataset, tmp_path, capsys):
    copy = tmp_path / "copy"
    shutil.copytree(dataset, copy)
    rec = Manifest.load(copy / "hard").records[0]
    gt = copy / "hard" / rec["gt"]
    gt.write_text("1\nplane 0.6 0.8 0 0 0 0\n")
    assert run(["validate-gt", str(copy), "--threads", "1"]) == 1
    assert "FAIL " + gt.name in capsys.readouterr().out


def test_inspect_and_export(dataset, tmp_path, capsys):
    rec = Manifest.load(dataset / "hard").records[0]
    cloud = dataset / "hard" / rec["cloud"]
    assert run(["inspect", str(cloud)]) == 0
    out = capsys.readouterr().out
    assert f"{rec['points']} points" in out and "bbox diagonal" in out and "gt " in out
    assert run(["inspect", str(dataset / "hard" / rec["gt"])]) == 0
    assert f"{rec['symmetries']} symmetries" in capsys.readouterr().out

    target = tmp_path / "x.ply"
    assert run(["export", str(cloud), "--format", "ply", "--out", str(target)]) == 0
    text = target.read_text()
    assert f"element vertex {rec['points']}\n" in text
    assert len(text.splitlines()) == 7 + rec["points"]


def test_stats(dataset, capsys):
    assert run(["stats", str(dataset)]) == 0
    out = capsys.readouterr().out
    assert "records 24" in out and "[perturbation]" in out and "[split]" in out


def test_evaluate_gt_as_predictions(dataset, capsys):
    assert run(["evaluate", "--gt", str(dataset), "--pred", str(dataset),
                "--angle-thresh", "1", "--dist-thresh", "0.01"]) == 0
    out = capsys.readouterr().out
    assert "mAP 1.000" in out and "PHC 1.000" in out and "shapes 24" in out


def test_usage_errors(tmp_path, capsys):
    assert run(["generate", "--bogus"]) == 2
    assert run([]) == 2
    assert run(["validate-gt", str(tmp_path)]) == 2
    bad = tmp_path / "cfg.json"
    bad.write_text(json.dumps({"tier": "easy", "total_size": 3}))
    assert run(["generate", "--config", str(bad)]) == 2
    capsys.readouterr()


def test_config_file_and_env(tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"tier": "easy", "total_size": 10, "master_seed": 3,
                               "output_dir": str(tmp_path / "from-file")}))
    monkeypatch.setenv("SYMGEN_OUTPUT_DIR", str(tmp_path / "from-env"))
    assert run(["generate", "--config", str(cfg), "--threads", "1", "--size", "12"]) == 0
    m = Manifest.load(tmp_path / "from-env" / "easy")
    assert m.config.total_size == 12 and m.config.master_seed == 3
    assert not (tmp_path / "from-file").exists()
    assert run(["generate", "--config", str(cfg), "--threads", "1",
                "--out", str(tmp_path / "from-flag")]) == 0
    assert (tmp_path / "from-flag" / "easy" / "manifest.json").exists()


def test_partial_failure_exit_code(tmp_path):
    from symgen.pipeline import DatasetConfig, plan_dataset, shape_filename
    victim = plan_dataset(DatasetConfig(tier="easy", total_size=10))[0]
    (tmp_path / "easy" / victim.split.value / victim.class_name /
     shape_filename(victim.id, victim.class_name, victim.perturbation)).mkdir(parents=True)
    assert run(["generate", "--tier", "easy", "--size", "10", "--out", str(tmp_path),
                "--threads", "1"]) == 1


def test_bench(capsys):
    assert run(["bench", "--records", "20"]) == 0
    assert "records/s" in capsys.readouterr().out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "symgen", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "validate-gt" in res.stdout
