import math
from dataclasses import replace

import numpy as np
import pytest

from crancache.cli import (ALGORITHMS, _parse, build_instance, main,
                           run_allocate, run_analyze, run_sweep, run_validate,
                           write_csv)
from crancache.errors import ParameterError
from crancache.scenario import Scenario


def _read_csv(path):
    """Rows of a written CSV, as (columns, list-of-string-tuples)."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if not ln.startswith("#")]
    cols = lines[0].split(",")
    return cols, [tuple(ln.split(",")) for ln in lines[1:]]


def test_write_csv_format(tmp_path):
    path = tmp_path / "x.csv"
    write_csv(str(path), ["# hello"], ["a", "b"], [(1, 1.0 / 3.0), (2, 1e6)])
    text = path.read_text()
    assert text == "# hello\na,b\n1,0.333333333\n2,1000000\n"


def test_run_analyze_outputs(tmp_path):
    out = run_analyze(Scenario(), str(tmp_path))
    cols, rows = _read_csv(tmp_path / "effcap_vs_theta.csv")
    assert cols == ["theta_per_bit", "effcap_beta4", "effcap_beta6", "effcap_beta8"]
    assert len(rows) == 25
    # steeper pathloss cuts interference faster than signal at 50 m, so the
    # per-user curve must order beta4 < beta6 < beta8 on every row
    for row in rows:
        b4, b6, b8 = (float(v) for v in row[1:])
        assert b4 < b6 < b8

    cols, rows = _read_csv(tmp_path / "cluster_vs_cache.csv")
    assert cols[:3] == ["zipf_s", "cache_k", "hit_ratio"]
    assert len(rows) == 4 * 6
    by_s = {}
    for row in rows:
        by_s.setdefault(float(row[0]), []).append([float(v) for v in row[1:]])
    assert sorted(by_s) == [0.0, 0.5, 1.0, 2.0]
    for s, grid in by_s.items():
        ks = [g[0] for g in grid]
        assert ks == [0, 1, 2, 3, 4, 5]
        caps = [g[2] for g in grid]
        assert all(b >= a for a, b in zip(caps, caps[1:]))   # caching never hurts
        gains = [g[3] for g in grid]
        assert gains[0] == 0.0 and all(g >= 0.0 for g in gains)
    assert out["peak_gain"] == pytest.approx(48.7429, rel=1e-3)


def test_run_analyze_is_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_analyze(Scenario(), str(a))
    run_analyze(Scenario(), str(b))
    for name in ("effcap_vs_theta.csv", "cluster_vs_cache.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_run_validate_and_negative_control(tmp_path):
    s = replace(Scenario(), mc_trials=20_000)
    assert run_validate(s, str(tmp_path / "ok")) is True
    cols, rows = _read_csv(tmp_path / "ok" / "validation.csv")
    assert cols == ["check", "analytic", "reference", "std_error", "status"]
    statuses = {r[-1] for r in rows}
    assert statuses <= {"PASS", "INFO"}
    # a wrong interference constant must be caught by the outage checks
    assert run_validate(s, str(tmp_path / "bad"),
                        corrupt_geometry_factor=1.3) is False


def test_build_instance_rejects_empty_field():
    s = replace(Scenario(), lambda_rrh=1e-12, lambda_user=1e-12)
    with pytest.raises(ParameterError):
        build_instance(s)


def test_run_allocate_files(tmp_path):
    s = Scenario()
    result = run_allocate(s, "nested", str(tmp_path))
    instance = build_instance(s)

    cols, rows = _read_csv(tmp_path / "assignment.csv")
    assert cols == ["rru", "content", "rrh", "active"]
    rrhs = sorted(int(r[2]) for r in rows)
    assert rrhs == list(range(instance.n_rrh))     # every RRH placed once
    assert sum(int(r[3]) for r in rows) == len(result.active)

    cols, rows = _read_csv(tmp_path / "steps.csv")
    assert cols == ["step", "op", "partition", "welfare"]
    assert rows[0][1] == "init"
    welfares = [float(r[3]) for r in rows]
    assert all(b > a for a, b in zip(welfares, welfares[1:]))
    assert "," not in rows[0][2]                   # block separator swapped out

    summary = (tmp_path / "summary.txt").read_text().splitlines()
    fields = dict(line.split(" ", 1) for line in summary[:6])
    assert fields["algorithm"] == "nested"
    assert int(fields["active"]) + int(fields["asleep"]) == instance.n_rrh
    assert float(fields["welfare"]) == pytest.approx(result.welfare, rel=1e-8)


def test_run_sweep_shares_seeds_across_algorithms(tmp_path):
    s = Scenario()
    out = run_sweep(s, str(tmp_path), 3, algorithms=("orthogonal", "full_reuse"))
    cols, rows = _read_csv(tmp_path / "sweep.csv")
    assert cols == ["seed", "algorithm", "welfare", "rru_count", "active", "asleep"]
    seeds = {r[0] for r in rows}
    for seed in seeds:
        algs = [r[1] for r in rows if r[0] == seed]
        assert sorted(algs) == ["full_reuse", "orthogonal"]
    assert set(out["mean_welfare"]) == {"orthogonal", "full_reuse"}
    assert not math.isnan(out["mean_welfare"]["orthogonal"])
    with pytest.raises(ParameterError):
        run_sweep(s, str(tmp_path), 0)
    with pytest.raises(ParameterError):
        run_sweep(s, str(tmp_path), 1, algorithms=("bogus",))


def test_parser_accepts_shared_options_on_both_sides():
    assert _parse(["--out", "x", "analyze"]).out == "x"
    assert _parse(["analyze", "--out", "y"]).out == "y"
    args = _parse(["analyze"])
    assert args.out == "out" and args.seed is None and not args.paper_exact
    assert _parse(["allocate"]).algorithm == "nested"
    assert _parse(["sweep", "--instances", "7"]).instances == 7
    args = _parse(["--seed", "9", "validate", "--paper-exact"])
    assert args.seed == 9 and args.paper_exact


def test_main_exit_codes(tmp_path):
    assert main(["analyze", "--out", str(tmp_path / "m")]) == 0
    assert main(["--config", "/nonexistent.ini", "analyze"]) == 2
    with pytest.raises(SystemExit):
        main(["allocate", "--algorithm", "annealing"])
    with pytest.raises(SystemExit):
        main([])                                    # a subcommand is required


def test_main_seed_override(tmp_path):
    cfg = tmp_path / "s.ini"
    cfg.write_text("[run]\nmc_trials = 20000\n[content]\ncount = 2\ncache_size = 2\n")
    code = main(["--config", str(cfg), "--seed", "4", "allocate",
                 "--algorithm", "orthogonal", "--out", str(tmp_path / "o")])
    assert code == 0
    header = (tmp_path / "o" / "assignment.csv").read_text()
    assert "# seed = 4" in header
    assert "# content_count = 2" in header
