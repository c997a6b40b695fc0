import logging

import pytest

from approxinc.bench import (CSV_FIELDS, BenchConfig, bench_one, read_csv, records_to_csv, run_algorithm,
                             run_benchmark, summarize)
from approxinc.errors import ParameterError
from approxinc.instances import gen_random_instance


@pytest.fixture(scope="module")
def sweep():
    cfg = BenchConfig("line2d", ["naive", "efficient"], [1000, 2000], epss=[0.002], equal_mn=True)
    return run_benchmark(cfg)


def test_sweep_rows_and_monotone_candidates(sweep):
    assert len(sweep) == 4
    for algo in ("naive", "efficient"):
        rows = [r for r in sweep if r.algo == algo]
        assert [r.n for r in rows] == [1000, 2000]
        assert rows[0].candidates < rows[1].candidates
        assert rows[0].cells_visited < rows[1].cells_visited


def test_sweep_complete_and_ratio(sweep):
    for r in sweep:
        assert r.k_true is not None and r.k_filtered == r.k_true
        assert r.ratio >= 1
        assert r.max_distortion >= 1
        assert r.k_true <= r.candidates


def test_csv_schema_and_determinism(sweep):
    text = records_to_csv(sweep)
    rows = read_csv(text)
    assert tuple(rows[0].keys()) == CSV_FIELDS
    assert len(rows) == 4
    cfg = BenchConfig("line2d", ["naive", "efficient"], [1000, 2000], epss=[0.002], equal_mn=True)
    again = read_csv(records_to_csv(run_benchmark(cfg)))
    strip = [{k: v for k, v in r.items() if k != "elapsed_ms"} for r in rows]
    assert strip == [{k: v for k, v in r.items() if k != "elapsed_ms"} for r in again]


@pytest.mark.parametrize("kind", ["plane3", "congruent2", "circle3", "triangle"])
def test_count_and_report_modes_agree(kind):
    inst = gen_random_instance(kind, 150 if kind == "triangle" else 200, 20 if kind == "triangle" else 200, 3)
    eps = 0.005
    report = run_algorithm(inst, "efficient", eps, "filtered")
    assert run_algorithm(inst, "efficient", eps, "count") == len(report)
    a = bench_one(inst, "efficient", eps, "count")
    b = bench_one(inst, "efficient", eps, "report")
    assert a.k_filtered == b.k_filtered == a.k_true == len(report)


def test_oracle_budget_leaves_k_true_blank(caplog):
    inst = gen_random_instance("line2d", 4000, 3000, 0)
    with caplog.at_level(logging.WARNING):
        rec = bench_one(inst, "efficient", 0.01, "count")
    assert rec.k_true is None and "k_true left blank" in caplog.text
    assert records_to_csv([rec]).splitlines()[1].split(",")[10] == ""


def test_config_errors():
    with pytest.raises(ParameterError):
        BenchConfig("nope")
    with pytest.raises(ParameterError):
        BenchConfig("line2d", algos=["magic"])
    with pytest.raises(ParameterError):
        BenchConfig("line2d", ms=[])
    with pytest.raises(ParameterError):
        BenchConfig("line2d", mode="fast")
    inst = gen_random_instance("line2d", 5, 5, 0)
    with pytest.raises(ParameterError):
        run_algorithm(inst, "large-n", 0.01)
    with pytest.raises(ParameterError):
        run_algorithm(inst, "dual", 0.01)


def test_product_sweep_and_summary():
    cfg = BenchConfig("congruent2", ["efficient", "dual"], [100], [50, 80], [0.01], seeds=[0, 1])
    recs = run_benchmark(cfg)
    assert len(recs) == 8
    assert {(r.m, r.n) for r in recs} == {(100, 50), (100, 80)}
    assert all(r.param == "0.3" for r in recs)
    summ = summarize(recs)
    assert set(summ) == {("congruent2", "efficient", 0.01), ("congruent2", "dual", 0.01)}
    assert all(v["runs"] == 4 and v["min"] <= v["median"] <= v["max"] for v in summ.values())
