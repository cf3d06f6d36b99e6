import csv
import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lkcand.bench import (BenchReport, export_missing_histogram, export_scatter, export_summary, par10,
                          read_manifest, read_records_csv, run_matrix, write_records_csv, write_report)
from lkcand.candidates import alpha_candidates, union_from_tours
from lkcand.exact import held_karp_dp
from lkcand.instance import Tour, gen_random_uniform, write_tour_file, write_tsplib
from lkcand.solver import RunRecord, SolverConfig, Strategy

from conftest import FIVE_OPT


def rec(inst, cfg, fold, solved, elapsed, missing=None):
    return RunRecord(inst, cfg, "d", fold, solved, 1.0, elapsed, 1, 0, 1_000_000 * fold, missing)


def test_par10_examples():
    assert par10([(10, True), (20, True), (100, False)], 100) == pytest.approx(1030 / 3, abs=1e-9)
    assert par10([(5, True), (5, True)], 100) == 5.0
    assert par10([(3600, False)], 3600) == pytest.approx(36_000.0, abs=1e-9)


def test_par10_errors():
    with pytest.raises(ValueError):
        par10([], 10)
    with pytest.raises(ValueError):
        par10([(11, True)], 10)


@given(st.lists(st.tuples(st.floats(0, 60), st.booleans()), min_size=1, max_size=20))
def test_par10_monotone_and_mean(runs):
    base = par10(runs, 60)
    if all(s for _, s in runs):
        assert base == pytest.approx(sum(e for e, _ in runs) / len(runs))
    for i, (e, s) in enumerate(runs):
        if s:
            worse = runs[:i] + [(e, False)] + runs[i + 1:]
            assert par10(worse, 60) > base


def test_report_rejects_duplicates():
    with pytest.raises(ValueError):
        BenchReport([rec("a", "x", 1, True, 1), rec("a", "x", 1, True, 2)], 10)


def test_run_matrix_seeds_and_determinism(square):
    cfg = SolverConfig(target=4)
    r1 = run_matrix([square], [cfg], [1, 2], cutoff=5)
    assert [r.seed_initial for r in r1.records] == [1_000_000, 2_000_000]
    r2 = run_matrix([square], [cfg], [1, 2], cutoff=5)
    assert [(r.solved, r.trials_used, r.seed_initial) for r in r1.records] == \
           [(r.solved, r.trials_used, r.seed_initial) for r in r2.records]


def test_run_matrix_empty_axes(square):
    with pytest.raises(ValueError):
        run_matrix([square], [], [1])
    with pytest.raises(ValueError):
        run_matrix([], [SolverConfig()], [1])
    with pytest.raises(ValueError):
        run_matrix([square], [SolverConfig(), SolverConfig()], [1])


def test_run_matrix_records_load_errors(square, tmp_path):
    report = run_matrix([square, tmp_path / "nope.tsp"], [SolverConfig(target=4)], [1], cutoff=2)
    assert len(report.records) == 1
    assert len(report.errors) == 1 and "nope.tsp" in report.errors[0][0]


def test_run_matrix_workers_match_serial():
    insts = [gen_random_uniform(20, s) for s in range(2)]
    cfgs = [SolverConfig(Strategy.ALPHA_FIXED, trials_per_run=5, max_restarts=1),
            SolverConfig(Strategy.TWO_OPT_FIXED, m_two_opt_tours=10, trials_per_run=5, max_restarts=1)]
    a = run_matrix(insts, cfgs, [1, 2], cutoff=20)
    b = run_matrix(insts, cfgs, [1, 2], cutoff=20, workers=2)
    key = lambda r: (r.instance, r.config, r.fold, r.solved, r.trials_used, r.best_length)
    assert [key(r) for r in a.records] == [key(r) for r in b.records]


def test_manifest_run(tmp_path, five_city):
    (tmp_path / "f.tsp").write_text(write_tsplib(five_city))
    (tmp_path / "f.opt.tour").write_text(write_tour_file(Tour.from_order(five_city, FIVE_OPT), "f"))
    (tmp_path / "m.csv").write_text("instance,group,size,opt_tour\nf.tsp,tiny,5,f.opt.tour\n")
    entries = read_manifest(tmp_path / "m.csv")
    assert entries[0].group == "tiny" and entries[0].size == 5
    report = run_matrix(entries, [SolverConfig(Strategy.TWO_OPT_FIXED, m_two_opt_tours=100)], [1], cutoff=5)
    r = report.records[0]
    assert r.solved and r.missing_edges_at_start == 0
    assert report.groups[r.instance] == "tiny"


def test_scatter_rows():
    records = [rec("i1", "x", 1, True, 4, 0), rec("i1", "y", 1, True, 4),
               rec("i2", "x", 1, False, 10, 2), rec("i2", "y", 1, True, 3)]
    report = BenchReport(records, 10, {"i1": "g", "i2": "g"}, {"i1": 5, "i2": 5})
    rows = list(csv.DictReader(io.StringIO(export_scatter(report, "x", "y"))))
    assert len(rows) == 2
    assert float(rows[0]["par10_x"]) == float(rows[0]["par10_y"])
    assert float(rows[1]["par10_x"]) == 100.0 and rows[1]["missing_edges"] == "2"
    with pytest.raises(ValueError):
        export_scatter(report, "x", "z")


def test_histogram_five_city_alpha(five_city):
    cand = alpha_candidates(five_city, 1, use_subgradient=False)
    opt = Tour.from_order(five_city, FIVE_OPT)
    text = export_missing_histogram([("five_city", "tiny", 5, cand, opt)])
    assert text == "group,size,missing_count,share\ntiny,5,2,1.0\n"


def test_histogram_complete_sets_and_skip(five_city):
    opt = Tour.from_order(five_city, FIVE_OPT)
    full = union_from_tours(five_city, [opt])
    text = export_missing_histogram([("a", "g", 5, full, opt), ("b", "g", 5, full, opt),
                                     ("c", "g", 5, full, None)])
    assert text.splitlines() == ["group,size,missing_count,share", "g,5,0,1.0",
                                 "# skipped c: no optimal tour"]


def test_histogram_shares_sum_to_one():
    entries = []
    for s in range(12):
        inst = gen_random_uniform(9, s)
        entries.append((f"r{s}", "u" if s % 2 else "v", 9, alpha_candidates(inst, 2), held_karp_dp(inst).tour))
    rows = list(csv.DictReader(io.StringIO(export_missing_histogram(entries))))
    for g in ("u", "v"):
        assert sum(float(r["share"]) for r in rows if r["group"] == g) == pytest.approx(1.0, abs=1e-9)


def test_summary():
    records = [rec("i1", "x", 1, True, 4), rec("i1", "x", 2, True, 4), rec("i2", "x", 1, False, 10)]
    report = BenchReport(records, 10, {"i1": "g", "i2": "g"}, {"i1": 5, "i2": 5})
    rows = list(csv.DictReader(io.StringIO(export_summary(report))))
    assert len(rows) == 1
    assert float(rows[0]["mean_par10"]) == pytest.approx((4 + 100) / 2)
    assert rows[0]["timeout_count"] == "1"
    with pytest.raises(ValueError):
        export_summary(BenchReport([], 10))


def test_records_csv_round_trip_and_report_files(tmp_path):
    records = [rec("i1", "x", 1, True, 4, 1), rec("i1", "y", 1, False, 10)]
    assert read_records_csv(write_records_csv(records)) == records
    report = BenchReport(records, 10)
    paths = write_report(report, tmp_path / "out", scatter=("x", "y"))
    assert sorted(p.name for p in paths) == ["records.csv", "scatter_x_y.csv", "summary.csv"]
    again = write_report(report, tmp_path / "out2", scatter=("x", "y"))
    assert [p.read_bytes() for p in paths] == [p.read_bytes() for p in again]
