import csv
import io
import json

import pytest

from mlst.harness import (
    ConfigError,
    ExperimentRecord,
    StatsSummary,
    emit_boxplot_data,
    emit_csv,
    load_config,
    run_experiment,
    summarize,
    summarize_all,
    write_outputs,
)


def rec(instance, algorithm, ratio, **kw):
    base = dict(generator="er", n=8, ell=2, tsm="linear", te="prop", seed=0, cost=ratio or 0.0,
                opt=1.0, feasible=True, within_bound=True, num_terminals=4, num_edges=10)
    base.update(kw)
    return ExperimentRecord(instance, algorithm=algorithm, ratio=ratio, **base)


SMALL = {"generators": "er", "n": 8, "ell": 2, "algorithms": ["kruskal", "c2a"], "compare": ["kruskal", "c2a"]}


def test_single_instance_config():
    records = run_experiment({**SMALL, "algorithms": ["kruskal"], "compare": None})
    assert len(records) == 1
    r = records[0]
    assert r.feasible and r.ratio >= 1 - 1e-9 and r.within_bound


def test_desk_sweep_counts():
    cfg = {"generators": "er", "n": [8, 10, 12], "ell": [2, 3], "tsm": ["linear", "exponential"],
           "te": ["prop", "nonprop"], "repetitions": 5, "algorithms": ["kruskal", "c2a"]}
    records = run_experiment(cfg)
    for algo in ("kruskal", "c2a"):
        rows = [r for r in records if r.algorithm == algo]
        assert len(rows) == 120
        assert all(r.feasible and r.ratio is not None and r.ratio >= 1 - 1e-9 for r in rows)
    assert len({r.instance for r in records}) == 120


def test_proportional_only_algorithms_skip_nonprop():
    records = run_experiment({"generators": "er", "n": 8, "ell": 2, "te": "nonprop",
                              "algorithms": ["kruskal", "roundup"]})
    assert [r.algorithm for r in records] == ["kruskal"]


def test_over_budget_leaves_ratio_blank():
    records = run_experiment({**SMALL, "n": 10, "exact_budget": {"method": "dp", "max_vertices": 4}})
    assert all(r.opt is None and r.ratio is None for r in records)
    assert ",,," in emit_csv(records).splitlines()[1]


# ---- statistics -----------------------------------------------------------------------

def test_equal_ratios_have_no_winner():
    records = [rec("a", "x", 1.0), rec("a", "y", 1.0), rec("b", "x", 1.3), rec("b", "y", 1.3)]
    sa, sb = summarize(records, "x", "y")
    assert sa.best_approx == 0 and sb.best_approx == 0
    assert sa.equal_to_opt == 1 and sa.count == 2


def test_split_wins():
    records = [rec("a", "x", 1.0), rec("b", "x", 1.2), rec("a", "y", 1.1), rec("b", "y", 1.1)]
    sa, sb = summarize(records, "x", "y")
    assert (sa.best_approx, sb.best_approx) == (50.0, 50.0)
    assert sa.mean == pytest.approx(1.1) and sa.median == pytest.approx(1.1)
    assert (sa.min, sa.max) == (1.0, 1.2)


def test_summary_ignores_unpaired_instances():
    records = [rec("a", "x", 1.0), rec("a", "y", 2.0), rec("b", "x", 5.0)]
    sa, _ = summarize(records, "x", "y")
    assert sa.count == 1 and sa.max == 1.0


def test_empty_summary_raises():
    with pytest.raises(ValueError):
        summarize([], "x", "y")


def test_summarize_all_groups_by_generator():
    records = [rec("a", "x", 1.0), rec("a", "y", 1.5), rec("b", "x", 1.2, generator="ws"),
               rec("b", "y", 1.0, generator="ws")]
    rows = summarize_all(records, ["x", "y"])
    assert [(s.group, s.algorithm) for s in rows] == [
        ("all", "x"), ("all", "y"), ("er", "x"), ("er", "y"), ("ws", "x"), ("ws", "y")]
    assert rows[0].best_approx == 50.0


# ---- CSV output -------------------------------------------------------------------------

def test_empty_csv_is_header_only():
    text = emit_csv([])
    assert text.count("\n") == 1 and text.startswith("instance,")
    assert "alg_time" not in text
    assert "alg_time" in emit_csv([], timing=True)
    assert emit_boxplot_data([]) == "group_by,value,algorithm,count,min,q1,median,q3,max\n"


def test_summary_csv_header():
    text = emit_csv([], kind=StatsSummary)
    assert text == "algorithm,group,count,equal_to_opt,mean,median,min,max,best_approx\n"


def test_single_record_boxplot_has_equal_quartiles():
    row = emit_boxplot_data([rec("a", "x", 1.25)]).splitlines()[1].split(",")
    assert row[:4] == ["ell", "2", "x", "1"]
    assert set(row[4:]) == {"1.25"}


def test_boxplot_by_level_golden():
    records = [rec(f"i{k}", "x", r, ell=2) for k, r in enumerate([1.0, 1.1, 1.2, 1.3, 1.4])]
    records += [rec("j0", "x", 1.0, ell=3), rec("j1", "x", 2.0, ell=3), rec("j0", "y", 1.5, ell=3)]
    expected = (
        "group_by,value,algorithm,count,min,q1,median,q3,max\n"
        "ell,2,x,5,1,1.1,1.2,1.3,1.4\n"
        "ell,3,x,2,1,1.25,1.5,1.75,2\n"
        "ell,3,y,1,1.5,1.5,1.5,1.5,1.5\n"
    )
    assert emit_boxplot_data(records, "ell") == expected


def test_boxplot_rejects_unknown_dimension():
    with pytest.raises(ValueError):
        emit_boxplot_data([], "colour")


def test_reruns_are_byte_identical(tmp_path):
    cfg = {**SMALL, "n": [8, 10], "ell": [2, 3], "te": ["prop", "nonprop"], "repetitions": 2}
    a = write_outputs(run_experiment(cfg), tmp_path / "a", cfg["compare"])
    b = write_outputs(run_experiment(cfg), tmp_path / "b", cfg["compare"])
    assert [p.name for p in a] == ["records.csv", "summary.csv", "boxplot_n.csv", "boxplot_ell.csv", "boxplot_tsm.csv"]
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()
    rows = list(csv.DictReader(io.StringIO(a[0].read_text())))
    assert len(rows) == 16 * 2


def test_parallel_matches_serial():
    cfg = {**SMALL, "generators": ["er", "ba"], "n": [8, 9], "repetitions": 2}
    serial = emit_csv(run_experiment(cfg))
    parallel = emit_csv(run_experiment({**cfg, "workers": 2}))
    assert serial == parallel


def test_master_seed_changes_instances():
    a = run_experiment({**SMALL, "master_seed": 1})
    b = run_experiment({**SMALL, "master_seed": 2})
    assert a[0].seed != b[0].seed


# ---- config validation ------------------------------------------------------------------

@pytest.mark.parametrize("bad", [
    {"generators": "er", "n": 8},
    {**SMALL, "colour": 1},
    {**SMALL, "algorithms": ["kruskal", "quantum"]},
    {**SMALL, "tsm": "cubic"},
    {**SMALL, "te": "flat"},
    {**SMALL, "generators": "grid"},
    {**SMALL, "n": "eight"},
    {**SMALL, "repetitions": 0},
    {**SMALL, "workers": True},
    {**SMALL, "compare": ["kruskal", "prim"]},
    {**SMALL, "exact_budget": 3},
])
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        load_config(bad)


def test_config_from_json_text_and_file(tmp_path):
    text = json.dumps(SMALL)
    path = tmp_path / "cfg.json"
    path.write_text(text)
    assert load_config(text) == load_config(str(path)) == load_config(SMALL)
    with pytest.raises(ConfigError):
        load_config("{not json")
    with pytest.raises(ConfigError):
        load_config("[1, 2]")
