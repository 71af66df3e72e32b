import json

import pytest

from swarmtopo.cli import main
from swarmtopo.metrics import MetricSeries
from swarmtopo.tree import path_tree, star_tree


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def tree_files(tmp_path):
    star = tmp_path / "star.txt"
    path = tmp_path / "path.txt"
    small = tmp_path / "small.txt"
    star.write_text(star_tree(6).to_text())
    path.write_text(path_tree(6).to_text())
    small.write_text(path_tree(5).to_text())
    return star, path, small


def test_plan_identical_is_empty(capsys, tmp_path, tree_files):
    star, _, _ = tree_files
    out = tmp_path / "p.txt"
    code, stdout, _ = _run(capsys, "plan", star, star, "--out", out)
    assert code == 0 and "steps: 0" in stdout


def test_plan_then_replay(capsys, tmp_path, tree_files):
    star, path, _ = tree_files
    out = tmp_path / "p.txt"
    assert _run(capsys, "plan", star, path, "--out", out)[0] == 0
    code, stdout, _ = _run(capsys, "replay", out)
    assert code == 0 and "reach the target" in stdout


def test_replay_detects_tampering(capsys, tmp_path, tree_files):
    star, path, _ = tree_files
    out = tmp_path / "p.txt"
    _run(capsys, "plan", star, path, "--out", out)
    lines = out.read_text().splitlines()
    # drop the last step so the replay stops short of the target
    out.write_text("\n".join(lines[:-1]) + "\n")
    code, stdout, _ = _run(capsys, "replay", out)
    assert code == 1 and "FAIL" in stdout


def test_size_mismatch_is_usage_error(capsys, tree_files):
    star, _, small = tree_files
    code, _, err = _run(capsys, "plan", star, small)
    assert code == 2 and "SizeMismatch" in err


def test_missing_file_is_usage_error(capsys, tmp_path):
    assert _run(capsys, "replay", tmp_path / "nope")[0] == 2
    assert _run(capsys, "audit", tmp_path / "nope")[0] == 2


def test_run_two_robots(capsys, tmp_path):
    code, stdout, _ = _run(capsys, "run", "--n", 2, "--out", tmp_path)
    assert code == 0 and "rounds=0" in stdout


def test_run_writes_artifacts_and_audits_clean(capsys, tmp_path):
    code, _, _ = _run(capsys, "run", "--n", 15, "--protocol", "line", "--trials", 2,
                      "--out", tmp_path)
    assert code == 0
    for seed in (0, 1):
        stem = tmp_path / f"line_n15_s{seed}"
        series = MetricSeries.from_csv(stem.with_name(stem.name + "_metrics.csv").read_text())
        assert series.rows[-1].deg1_count == 2 and series.rows[-1].deg2_count == 13
        assert stem.with_name(stem.name + "_paths.svg").exists()
        assert stem.with_name(stem.name + "_trajectory.csv").read_text().startswith("t,robot_id")
        log = stem.with_name(stem.name + "_events.log")
        assert _run(capsys, "audit", log)[0] == 0


def test_run_is_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert _run(capsys, "run", "--n", 15, "--protocol", "star", "--seed", 3,
                    "--out", d)[0] == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_audit_injected_three_hop_rewire(capsys, tmp_path):
    log = tmp_path / "bad.log"
    log.write_text("n=5\ninitial 1-2 2-3 3-4 4-5\nprotocol line\n"
                   "R 1 OP LT 1 2 3 | -1-2 | +1-4\nR 1 END 1\nR 2 END 0\n")
    code, stdout, _ = _run(capsys, "audit", log)
    assert code == 1
    assert len(stdout.strip().splitlines()) == 1 and "two hops" in stdout


def test_audit_empty_log(capsys, tmp_path):
    log = tmp_path / "empty.log"
    log.write_text("")
    assert _run(capsys, "audit", log)[0] == 0


def test_audit_garbage_is_usage_error(capsys, tmp_path):
    log = tmp_path / "junk.log"
    log.write_text("this is not a log\n")
    assert _run(capsys, "audit", log)[0] == 2


def test_config_file_and_overrides(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 6, "protocol": "star", "range": {"v_max": 0.08}}))
    code, stdout, _ = _run(capsys, "run", "--config", cfg, "--out", tmp_path / "o")
    assert code == 0 and (tmp_path / "o" / "star_n6_s0_metrics.csv").exists()
    code, _, _ = _run(capsys, "run", "--config", cfg, "--n", 7, "--out", tmp_path / "o")
    assert (tmp_path / "o" / "star_n7_s0_metrics.csv").exists()
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colour": "red"}))
    assert _run(capsys, "run", "--config", bad)[0] == 2
    bad.write_text(json.dumps({"range": {"delta": -1}}))
    assert _run(capsys, "run", "--config", bad)[0] == 2


def test_run_rejects_tiny_n(capsys):
    assert _run(capsys, "run", "--n", 1)[0] == 2


def test_sweep_single_cell(capsys, tmp_path):
    code, stdout, _ = _run(capsys, "sweep", "--n", 8, "--protocol", "star", "--trials", 2,
                           "--out", tmp_path)
    assert code == 0
    rows = stdout.strip().splitlines()
    assert rows[0].startswith("n,protocol,trials,rounds_mean")
    assert len(rows) == 2 and rows[1].startswith("8,star,2,")
    assert (tmp_path / "summary.csv").read_text() == stdout


def test_sweep_star_lambda2_same_for_all_n(capsys, tmp_path):
    code, stdout, _ = _run(capsys, "sweep", "--n", 6, 10, "--protocol", "star",
                           "--trials", 2, "--jobs", 2, "--out", tmp_path)
    assert code == 0
    head, *rows = stdout.strip().splitlines()
    col = head.split(",").index("lambda2_final_mean")
    vals = [float(r.split(",")[col]) for r in rows]
    assert len(vals) == 2 and all(abs(v - 1.0) <= 1e-9 for v in vals)
