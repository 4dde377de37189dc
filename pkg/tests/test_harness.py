import io
import json
import math

import numpy as np
import pytest

from treetrace.channel import derive_rng
from treetrace.harness import bounds as bounds_mod
from treetrace.harness import cli
from treetrace.harness.bounds import BoundsGrid, translate_for_arc, verify_bounds, w0_point
from treetrace.harness.calibration import calibrate_string_budget, fit_exponential_constant, string_success_rate
from treetrace.harness.experiment import (
    ALGORITHMS,
    ExperimentConfig,
    aggregate,
    read_csv,
    run_experiment,
    trial_labels,
)
from treetrace.harness.stats import total_variation, two_proportion_z, wilson_interval
from treetrace.harness.trace_counts import load_calibration, string_budget, theorem_trace_count
from treetrace.spider_recon import eval_generating
from treetrace.trees import TreeShape

# ---------------------------------------------------------------------------
# trace counts


def test_ted_small_count_hand_value():
    # s = 1 here, so the exponent is d k + s^2 k = 6 + 2
    want = math.ceil(10 * math.log(14) * 0.9**-8)
    assert want == 62
    assert theorem_trace_count("ted_small", TreeShape.kary(2, 3), 0.1, {"C": 10}) == 62


def test_lp_small_count_hand_value():
    assert theorem_trace_count("lp_small", TreeShape.kary(2, 4), 0.1, {"C": 10, "c_prime": 2}) == 80


def test_lp_small_exponent_matches_power_form():
    q, c_prime = 0.1, 2.0
    for k, d in [(2, 4), (3, 3), (8, 2), (4, 5)]:
        shape = TreeShape.kary(k, d)
        n = shape.n
        ours = math.log(1 / (1 - q)) * (d + c_prime * k)
        power = math.log(1 / (1 - q)) * (c_prime * k / math.log(n) + 1 / math.log(k)) * math.log(n)
        # the two differ only through d versus log_k n, which are within one of each other
        assert abs(ours - power) <= math.log(1 / (1 - q)) * 1.0 + 1e-12
        assert abs(d - math.log(n) / math.log(k)) <= 1


@pytest.mark.parametrize("theorem,shape", [("ted_small", TreeShape.kary(2, 3)), ("lp_small", TreeShape.kary(3, 2))])
def test_q_zero_count_is_log_factor(theorem, shape):
    assert theorem_trace_count(theorem, shape, 0.0, {"C": 7}) == math.ceil(7 * math.log(shape.n))


def test_spider_counts():
    assert theorem_trace_count("spider_meanbased", TreeShape.spider(9, 3), 0.2) == math.ceil(math.exp(3 * (9 * 0.008) ** (1 / 3)))
    assert theorem_trace_count("spider_meanbased", TreeShape.spider(30, 3), 0.9, {"c": 5, "cap": 1000}) == 1000
    assert theorem_trace_count("spider_large_depth", TreeShape.spider(16, 8), 0.5) == 2 * string_budget(8, 0.5)
    with pytest.raises(ValueError):
        theorem_trace_count("nope", TreeShape.spider(4, 2), 0.1)
    with pytest.raises(KeyError):
        string_budget(13, 0.77)


def test_calibration_fixture_contents():
    table = load_calibration()
    assert string_budget(6, 0.36) == table["string_budgets"]["m=6,q=0.36"]["T"]
    assert table["constants"]["findpaths"]["frequency"] >= 0.99
    assert 0 < table["constants"]["lp_caterpillar"]["frequency"] <= 1


# ---------------------------------------------------------------------------
# statistics


def test_wilson_interval_values():
    lo, hi = wilson_interval(5, 10)
    assert lo == pytest.approx(0.2366, abs=1e-4) and hi == pytest.approx(0.7634, abs=1e-4)
    assert wilson_interval(0, 10)[0] == 0.0
    assert wilson_interval(10, 10)[1] == pytest.approx(1.0)
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_two_proportion_z():
    assert two_proportion_z(10, 10, 10, 10) == (0.0, 1.0)
    z, p = two_proportion_z(90, 100, 60, 100)
    assert z > 0 and p < 1e-5
    assert two_proportion_z(50, 100, 50, 100)[1] == pytest.approx(1.0)


def test_total_variation():
    assert total_variation({"a": 0.5, "b": 0.5}, {"a": 0.5, "b": 0.5}) == 0
    assert total_variation({"a": 1.0}, {"b": 1.0}) == 1


def test_calibration_helpers():
    assert fit_exponential_constant(1.0, 3.0) == math.inf
    assert fit_exponential_constant(1 - math.exp(-2), 1.0) == pytest.approx(2.0)
    assert string_success_rate(3, 0.0, 1, 5, seed=0) == 1.0
    entry = calibrate_string_budget(3, 0.1, trials=10, grid=(50, 100, 200))
    assert entry["T"] in (50, 100)


# ---------------------------------------------------------------------------
# experiments

Q0_CASES = {
    "ted_large": {"kind": "kary", "k": 3, "d": 2},
    "ted_small": {"kind": "kary", "k": 2, "d": 3},
    "lp_large": {"kind": "kary", "k": 3, "d": 2},
    "lp_small": {"kind": "kary", "k": 2, "d": 3},
    "spider_meanbased": {"kind": "spider", "n": 6, "d": 2},
    "spider_large_depth": {"kind": "spider", "n": 8, "d": 4},
    "spider_rows": {"kind": "spider", "n": 6, "d": 2},
    "string": {"kind": "spider", "n": 5, "d": 5},
}


@pytest.mark.parametrize("algo", sorted(ALGORITHMS))
def test_q_zero_single_trace_always_succeeds(algo):
    model = "lp" if algo.startswith("lp") else "ted"
    report = run_experiment({"shape": Q0_CASES[algo], "algo": algo, "model": model, "q": 0.0, "trace_counts": [1], "trials": 4})
    assert report.rate(1) == 1.0


def test_config_validation():
    base = {"shape": {"kind": "kary", "k": 2, "d": 2}, "algo": "ted_small", "q": 0.1}
    ExperimentConfig.from_dict(base)
    bad = [
        {"algo": "spider_meanbased"},
        {"algo": "nope"},
        {"trials": 0},
        {"trace_counts": []},
        {"q": 1.0},
        {"gamma": 1.0},
        {"label_mode": "fixed", "labels": [0, 1]},
        {"label_mode": "whatever"},
        {"surprise": 1},
        {"trace_counts": [0]},
        {"algo": "ted_large", "trace_counts": ["auto"]},
    ]
    for patch in bad:
        with pytest.raises((ValueError, TypeError)):
            ExperimentConfig.from_dict({**base, **patch})
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"shape": {"kind": "spider", "n": 6, "d": 2}, "algo": "string", "q": 0.1})


def test_auto_counts_resolve():
    cfg = ExperimentConfig.from_dict({"shape": {"kind": "spider", "n": 12, "d": 2}, "algo": "spider_rows", "q": 0.2, "trace_counts": ["auto"]})
    assert cfg.trace_counts == [string_budget(6, 0.36)]
    cfg = ExperimentConfig.from_dict({"shape": {"kind": "kary", "k": 2, "d": 3}, "algo": "ted_small", "q": 0.1, "trace_counts": ["auto", 5]})
    assert cfg.trace_counts == [62, 5]


def test_label_modes():
    base = {"shape": {"kind": "spider", "n": 3, "d": 3}, "algo": "string", "q": 0.1}
    cfg = ExperimentConfig.from_dict({**base, "label_mode": "worst_case_enumerate"})
    assert [trial_labels(cfg, t).tolist() for t in range(9)][:3] == [[0, 0, 0], [0, 0, 1], [0, 1, 0]]
    assert trial_labels(cfg, 8).tolist() == [0, 0, 0]
    cfg = ExperimentConfig.from_dict({**base, "label_mode": "fixed", "labels": [1, 0, 1]})
    assert trial_labels(cfg, 3).tolist() == [1, 0, 1]


SWEEP = {
    "shape": {"kind": "kary", "k": 2, "d": 3},
    "algo": "ted_small",
    "q": 0.15,
    "trace_counts": [3, 10, 40],
    "trials": 12,
    "master_seed": 3,
    "timing": False,
}


def test_rerun_is_byte_identical_and_round_trips():
    a, b = run_experiment(SWEEP), run_experiment(SWEEP)
    assert a.csv_body() == b.csv_body()
    assert a.to_json() == b.to_json()
    assert aggregate(read_csv(a.csv_body())) == a.aggregates
    assert a.csv_body().splitlines()[0] == "T,trial,success,millis"


def test_worker_pool_does_not_change_output():
    assert run_experiment({**SWEEP, "workers": 2}).csv_body() == run_experiment(SWEEP).csv_body()


def test_rate_trend_is_monotone_within_noise():
    report = run_experiment({**SWEEP, "trace_counts": [2, 5, 20, 62], "trials": 30, "q": 0.1})
    aggs = report.aggregates
    for early, late in zip(aggs, aggs[1:]):
        assert late["wilson_high"] >= early["wilson_low"]
    assert aggs[-1]["rate"] >= aggs[0]["rate"]


def test_trial_streams_do_not_collide():
    prefixes = set()
    for T in (10, 20):
        for trial in range(500):
            prefixes.add(tuple(derive_rng(0, 1, T, trial, 0).integers(0, 2**63, 2)))
    assert len(prefixes) == 1000


def test_retries_and_termination_recorded():
    cfg = {**SWEEP, "trace_counts": [1], "q": 0.5, "trials": 10}
    rows = run_experiment(cfg).rows
    assert any(r["terminated"] == "NoStableTraces" for r in rows)
    retried = run_experiment({**cfg, "retries": 3}).rows
    assert sum(r["success"] for r in retried) >= sum(r["success"] for r in rows)


def test_censored_string_experiment():
    cfg = {"shape": {"kind": "spider", "n": 4, "d": 4}, "algo": "string", "q": 0.1, "gamma": 0.5, "trace_counts": [400], "trials": 5}
    assert run_experiment(cfg).rate(400) == 1.0


# ---------------------------------------------------------------------------
# bounds


def test_bounds_small_grid_clean():
    report = verify_bounds({"qs": [0.2, 0.4], "ds": [20], "points": 200, "label_vectors": 5})
    assert report.total_violations == 0
    assert {c["check"] for c in report.to_dict()["checks"]} == {"arc_modulus", "factored_at_w0", "growth", "disc_gap", "arc_sup"}
    assert all(c["points"] > 0 for c in report.to_dict()["checks"])


@pytest.mark.parametrize("patch", [{"qs": [0.75]}, {"ds": [10]}, {"L": 10}, {"points": 1}, {"n": 30, "ds": [20]}, {"bogus": 1}])
def test_bounds_grid_outside_hypotheses(patch):
    with pytest.raises(ValueError):
        verify_bounds(patch)


def test_bound_trivial_points():
    shape = TreeShape.spider(20, 20)
    a = np.zeros(20)
    a[3] = 1
    assert abs(eval_generating(a, shape, 0.3, 0.0).A_tilde_value) <= 1 / 0.7
    q, d, L = 0.3, 20, 20
    assert abs((1 - q**d) * 1.0**d + q**d) == pytest.approx(1.0)
    assert math.exp(-2 * math.pi**2 * q**d * (1 - q**d) * d * d / L**2) <= 1.0
    assert 0 < translate_for_arc(20) <= 0.1
    assert w0_point(0.3, 21) == -0.3
    assert abs(w0_point(0.3, 20)) == pytest.approx(0.3)


def test_bounds_grid_defaults():
    grid = BoundsGrid()
    assert len(grid.qs) == 5 and grid.ds == [20, 21] and grid.points == 1000 and grid.label_vectors == 50


# ---------------------------------------------------------------------------
# command line


def run_cli(argv, stdin="", monkeypatch=None, capsys=None):
    if monkeypatch is not None:
        monkeypatch.setattr("sys.stdin", io.StringIO(stdin))
    code = cli.main(argv)
    out = capsys.readouterr() if capsys is not None else None
    return code, out


def test_cli_generate_corrupt_reconstruct(monkeypatch, capsys):
    code, out = run_cli(["generate", "--shape", "kary:2,3", "--labels", "0x2a5f"], monkeypatch=monkeypatch, capsys=capsys)
    assert code == 0
    gen = json.loads(out.out)
    assert gen["labels"] == format(0x2A5F, "014b")
    code, out = run_cli(
        ["corrupt", "--shape", "kary:2,3", "--labels", gen["labels"], "--q", "0.1", "--count", "80", "--seed", "2"],
        monkeypatch=monkeypatch,
        capsys=capsys,
    )
    assert code == 0 and len(out.out.splitlines()) == 80
    traces = out.out
    code, out = run_cli(["reconstruct", "--model", "ted", "--algo", "small", "--shape", "kary:2,3", "--q", "0.1"], traces, monkeypatch, capsys)
    assert code == 0 and out.out.strip() == gen["labels"]


def test_cli_string_and_spider(monkeypatch, capsys):
    lines = "\n".join(json.dumps(t) for t in [[1, 0, 1], [1, 1], None, [1, 0, 1]])
    code, out = run_cli(["reconstruct", "--model", "string", "--shape", '{"kind": "spider", "n": 3, "d": 3}', "--q", "0.0"], lines, monkeypatch, capsys)
    assert code == 0 and out.out.strip() == "101"
    code, out = run_cli(["corrupt", "--shape", "spider:6,2", "--labels", "110100", "--q", "0.0", "--count", "2"], monkeypatch=monkeypatch, capsys=capsys)
    code, out = run_cli(["reconstruct", "--model", "spider", "--algo", "meanbased", "--shape", "spider:6,2", "--q", "0.0"], out.out, monkeypatch, capsys)
    assert code == 0 and out.out.strip() == "110100"


def test_cli_exit_codes(monkeypatch, capsys, tmp_path):
    assert run_cli(["generate", "--shape", "blob"], capsys=capsys)[0] == 1
    assert run_cli(["generate", "--shape", "kary:2,2", "--labels", "01"], capsys=capsys)[0] == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 1
    assert run_cli(["reconstruct", "--model", "ted", "--algo", "small", "--shape", "kary:2,2", "--q", "0.1"], "", monkeypatch, capsys)[0] == 1
    assert run_cli(["reconstruct", "--model", "ted", "--algo", "weird", "--shape", "kary:2,2", "--q", "0.1"], "null\n", monkeypatch, capsys)[0] == 1
    lonely = json.dumps({"label": None, "children": [{"label": 1, "children": []}]})
    code, out = run_cli(["reconstruct", "--model", "ted", "--algo", "small", "--shape", "kary:2,2", "--q", "0.1"], lonely, monkeypatch, capsys)
    assert code == 2 and "terminated" in out.err
    bad = tmp_path / "bad.json"
    bad.write_text('{"algo": "nope"}')
    assert run_cli(["experiment", "--config", str(bad)], capsys=capsys)[0] == 1


def test_cli_experiment_outputs(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(SWEEP))
    csv_path, json_path = tmp_path / "out.csv", tmp_path / "out.json"
    assert cli.main(["experiment", "--config", str(cfg), "--csv", str(csv_path), "--json", str(json_path)]) == 0
    first = csv_path.read_text()
    assert cli.main(["experiment", "--config", str(cfg), "--csv", str(csv_path), "--workers", "1"]) == 0
    assert csv_path.read_text() == first
    summary = json.loads(json_path.read_text())
    assert summary["config"]["algo"] == "ted_small" and len(summary["aggregates"]) == 3
    assert cli.main(["experiment", "--config", str(cfg)]) == 0
    assert capsys.readouterr().out == first


def test_cli_verify_bounds(tmp_path, capsys, monkeypatch):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"qs": [0.3], "ds": [21], "points": 50, "label_vectors": 2}))
    assert cli.main(["verify-bounds", "--config", str(grid)]) == 0
    assert json.loads(capsys.readouterr().out)["total_violations"] == 0

    def failing(grid):
        report = bounds_mod.BoundsReport({"growth": bounds_mod.BoundCheck("growth", points=1, violations=1, worst_margin=-1.0)})
        return report

    monkeypatch.setattr(cli, "verify_bounds", failing)
    assert cli.main(["verify-bounds", "--config", str(grid)]) == cli.EXIT_VIOLATION
