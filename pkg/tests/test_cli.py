import subprocess
import sys

from approxinc.bench import CSV_FIELDS, read_csv
from approxinc.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_then_pairs_from_files(tmp_path, capsys):
    prefix = tmp_path / "inst"
    code, _, err = run(["gen", "--kind", "line2d", "--m", "200", "--n", "50", "--seed", "3", "--out", str(prefix)],
                       capsys)
    assert code == 0 and "inst.points" in err
    base = ["--kind", "line2d", "--in-points", f"{prefix}.points", "--in-objects", f"{prefix}.objects",
            "--eps", "0.01"]
    code, out, _ = run(["pairs", *base], capsys)
    assert code == 0
    got = out.splitlines()
    code, out, _ = run(["oracle", *base], capsys)
    assert code == 0
    truth = out.splitlines()
    assert got[0] == truth[0] == "point,object,distance"
    key = lambda rows: sorted(tuple(r.split(",")[:2]) for r in rows[1:])
    assert key(got) == key(truth)
    code, out, _ = run(["pairs", "--mode", "count", *base], capsys)
    assert int(out) == len(truth) - 1


def test_run_writes_csv(tmp_path, capsys):
    out = tmp_path / "b.csv"
    code, _, _ = run(["run", "--kind", "plane3", "--m", "100,200", "--algo", "naive,efficient", "--eps", "0.01",
                      "--out", str(out)], capsys)
    assert code == 0
    rows = read_csv(out.read_text())
    assert len(rows) == 4 and tuple(rows[0]) == CSV_FIELDS
    assert all(r["k_true"] == r["k_filtered"] for r in rows)


def test_triangle_pairs_output(capsys):
    code, out, _ = run(["pairs", "--kind", "triangle", "--m", "50", "--n", "3", "--eps", "0.005"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "p,q,o,max_deviation" and len(lines) >= 4


def test_parameter_errors_exit_2(capsys):
    assert run(["pairs", "--kind", "congruent2", "--r", "0.9", "--eps", "0.01", "--m", "5"], capsys)[0] == 2
    assert run(["pairs", "--kind", "line2d", "--eps", "0.01", "--algo", "large-n", "--m", "5"], capsys)[0] == 2
    assert run(["pairs", "--kind", "line2d", "--eps", "0", "--m", "5"], capsys)[0] == 2
    assert run(["run", "--kind", "nope"], capsys)[0] == 2
    assert run(["run", "--kind", "line2d", "--eps", "x"], capsys)[0] == 2
    assert run([], capsys)[0] == 2


def test_io_errors_exit_3(tmp_path, capsys):
    missing = ["pairs", "--kind", "line2d", "--eps", "0.01", "--in-points", str(tmp_path / "none"),
               "--in-objects", str(tmp_path / "none2")]
    assert run(missing, capsys)[0] == 3
    bad = tmp_path / "bad.points"
    bad.write_text("0.1,0.1\n0.2;0.3\n")
    obj = tmp_path / "o"
    obj.write_text("line2d\n0.1,0.0\n")
    code, _, err = run(["pairs", "--kind", "line2d", "--eps", "0.01", "--in-points", str(bad),
                        "--in-objects", str(obj)], capsys)
    assert code == 3 and "line 2" in err


def test_budget_refusal_exit_4(capsys):
    assert run(["oracle", "--kind", "line2d", "--m", "4000", "--n", "3000", "--eps", "0.01"], capsys)[0] == 4


def test_normalized_input_rescales_eps(tmp_path, capsys):
    pts = tmp_path / "p"
    pts.write_text("10,0\n-10,0\n0,3\n")
    obj = tmp_path / "o"
    obj.write_text("line2d\n0,0\n")
    code, out, err = run(["pairs", "--kind", "line2d", "--eps", "0.5", "--in-points", str(pts),
                          "--in-objects", str(obj)], capsys)
    assert code == 0 and "normalized" in err and "eps rescaled" in err
    assert sorted(r.split(",")[0] for r in out.splitlines()[1:]) == ["0", "1"]


def test_console_script_runs():
    res = subprocess.run([sys.executable, "-m", "approxinc.cli", "pairs", "--kind", "circle2", "--m", "50",
                          "--eps", "0.01", "--mode", "count"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip().isdigit()
