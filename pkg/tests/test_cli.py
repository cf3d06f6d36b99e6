import csv
import io

import pytest

from lkcand.candidates import alpha_candidates, write_candidate_file
from lkcand.cli import main
from lkcand.instance import Tour, parse_tsplib, read_tour_order, write_tour_file, write_tsplib

from conftest import FIVE_OPT, square_text


@pytest.fixture
def files(tmp_path, five_city):
    (tmp_path / "sq.tsp").write_text(square_text())
    (tmp_path / "f.tsp").write_text(write_tsplib(five_city))
    (tmp_path / "f.opt.tour").write_text(write_tour_file(Tour.from_order(five_city, FIVE_OPT), "f"))
    (tmp_path / "f.cand").write_text(write_candidate_file(alpha_candidates(five_city, 1, use_subgradient=False)))
    return tmp_path


def test_exact_square(files, capsys):
    assert main(["exact", "--instance", str(files / "sq.tsp")]) == 0
    out = capsys.readouterr().out
    assert "length 40" in out
    assert sorted(read_tour_order(out, 4)) == [0, 1, 2, 3]


def test_analyze_five_city(files, capsys):
    rc = main(["analyze", "--candidates", str(files / "f.cand"), "--opt-tour", str(files / "f.opt.tour")])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "missing: 2"
    assert sorted(lines[1:]) == ["2 5", "3 4"]


def test_bad_strategy_is_usage_error(files):
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--instance", str(files / "sq.tsp"), "--strategy", "NOPE"])
    assert exc.value.code == 1


def test_missing_file_is_input_error(files, capsys):
    assert main(["exact", "--instance", str(files / "none.tsp")]) == 2
    assert "input error" in capsys.readouterr().err


def test_solve_exit_codes(files, capsys):
    sq = str(files / "sq.tsp")
    assert main(["solve", "--instance", sq, "--strategy", "ALPHA_FIXED", "--target", "40", "--budget", "5"]) == 0
    row = next(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert row["solved"] == "1" and row["seed_initial"] == "1000000"
    rc = main(["solve", "--instance", sq, "--strategy", "ALPHA_FIXED", "--target", "10",
               "--budget", "0.2", "--trials", "2"])
    assert rc == 3


def test_solve_with_opt_tour_and_output(files, capsys):
    out = files / "best.tour"
    rc = main(["solve", "--instance", str(files / "f.tsp"), "--strategy", "TWO_OPT_FIXED", "--m", "100",
               "--opt-tour", str(files / "f.opt.tour"), "--budget", "5", "--out-tour", str(out)])
    assert rc == 0
    row = next(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert row["missing_edges_at_start"] == "0"
    assert out.exists()


def test_candidates_deterministic(files, capsys):
    args = ["candidates", "--instance", str(files / "f.tsp"), "--generator", "two_opt_union", "-m", "50"]
    main(args)
    a = capsys.readouterr().out
    main(args)
    assert capsys.readouterr().out == a
    assert a.splitlines()[0] == "5" and a.splitlines()[-1] == "-1"


def test_gen_round_trip(files, capsys):
    out = files / "g.tsp"
    assert main(["gen", "--kind", "clustered", "--n", "30", "--seed", "2", "--name", "g30",
                 "--out", str(out)]) == 0
    inst = parse_tsplib(out.read_text())
    assert inst.n == 30 and inst.name == "g30"


def test_bench_writes_reports(files, capsys):
    (files / "m.csv").write_text("instance,group,size,opt_tour\nf.tsp,tiny,5,f.opt.tour\n")
    rc = main(["bench", "--manifest", str(files / "m.csv"), "--configs", "TWO_OPT_FIXED,POP_FIXED",
               "--folds", "2", "--cutoff", "5", "--m", "100", "--out-dir", str(files / "rep")])
    assert rc == 0
    assert (files / "rep" / "scatter_TWO_OPT_FIXED_POP_FIXED.csv").exists()
    rows = list(csv.DictReader(open(files / "rep" / "records.csv")))
    assert len(rows) == 4 and all(r["solved"] == "1" for r in rows)
