import pytest

from conftest import random_instance
from main import exit_code, run_command
from exceptions import InfeasibleError, InternalAssertionError, ParseError, SizeLimitError
from utils.files import read_text, write_text
from utils.formats import parse_instance, parse_solution, render_instance

LINE = "2 2 3 1 2\n0 0\n10 0\n0 0\n10 0\n5 0\n"


@pytest.fixture
def line_file(tmp_path):
    path = str(tmp_path / "line.txt")
    write_text(path, LINE)
    return path


@pytest.fixture
def random_file(tmp_path):
    path = str(tmp_path / "random.txt")
    write_text(path, render_instance(random_instance(2, n=9, m=6, k=2)))
    return path


def test_exact_prints_the_optimum(line_file, capsys):
    assert run_command(["exact", line_file]) == 0
    solution, value = parse_solution(capsys.readouterr().out)
    assert value == 50.0
    assert solution.center_indices == (2,)


def test_exact_cap(line_file):
    assert run_command(["exact", line_file, "--cap", "2"]) == 2


def test_solve_output(random_file, tmp_path, capsys):
    out = str(tmp_path / "solution.txt")
    report = str(tmp_path / "report.json")
    args = ["--threads", "1", "solve", random_file, "--eps", "0.3", "--trials", "2"]
    assert run_command(args + ["--out", out, "--report", report]) == 0
    assert capsys.readouterr().out == ""
    solution, value = parse_solution(read_text(out))
    assert 1 <= solution.size <= 2
    assert value >= 0.0
    assert '"winner"' in read_text(report)


def test_solve_is_reproducible(random_file, capsys):
    args = ["solve", random_file, "--eps", "0.3", "--trials", "7", "--seed", "1"]
    assert run_command(args) == 0
    first = capsys.readouterr().out
    assert run_command(["--threads", "1"] + args) == 0
    assert capsys.readouterr().out == first


def test_baseline(random_file, capsys):
    assert run_command(["baseline", random_file, "--seed", "3"]) == 0
    solution, _ = parse_solution(capsys.readouterr().out)
    assert solution.size <= 2


def test_parameter_errors(random_file, tmp_path):
    assert run_command(["solve", random_file, "--eps", "1.5"]) == 1
    assert run_command(["solve", random_file, "--trials", "0"]) == 1
    assert run_command(["frobnicate"]) == 1
    assert run_command(["gen", "--n", "3", "--m", "2", "--k", "5"]) == 1
    broken = str(tmp_path / "broken.txt")
    write_text(broken, "2 2 1 1 2\n0 0\n")
    assert run_command(["exact", broken]) == 1


def test_gen_round_trip(tmp_path, capsys):
    path = str(tmp_path / "gen.txt")
    assert run_command(["gen", "--n", "12", "--m", "5", "--k", "2", "--seed", "9", "--out", path]) == 0
    instance = parse_instance(read_text(path))
    assert (instance.n, instance.m, instance.k) == (12, 5, 2)
    assert read_text(path).startswith("# gen n=12")

    assert run_command(["gen", "--n", "12", "--m", "5", "--k", "2", "--seed", "9"]) == 0
    assert capsys.readouterr().out == read_text(path)


def test_solve_continuous_generates_candidates(tmp_path, capsys):
    path = str(tmp_path / "line.txt")
    write_text(path, "1 5 1 1 2\n0\n1\n3\n7\n12\n100\n")
    discretised = str(tmp_path / "discretised.txt")
    args = ["--threads", "1", "solve", path, "--eps", "0.5", "--trials", "2", "--continuous"]
    assert run_command(args + ["--candidates", discretised]) == 0
    solution, value = parse_solution(capsys.readouterr().out)
    instance = parse_instance(read_text(discretised))
    assert instance.clients.ravel().tolist() == [0.0, 1.0, 3.0, 7.0, 12.0]
    assert instance.m > 5
    assert all(c < instance.m for c in solution.center_indices)
    # the 1-mean sits at the centroid 4.6 with cost 97.2
    assert value <= 1.5 * 97.2

    assert run_command(["solve", path, "--candidates", discretised]) == 1


def test_gen_continuous(tmp_path):
    path = str(tmp_path / "gen.txt")
    args = ["gen", "--n", "6", "--k", "2", "--seed", "3", "--continuous", "--eps", "0.5"]
    assert run_command(args + ["--out", path]) == 0
    instance = parse_instance(read_text(path))
    assert instance.n == 6 and instance.k == 2
    for p in instance.clients:
        assert (instance.candidates == p).all(axis=1).any()
    assert "continuous eps=0.5" in read_text(path).splitlines()[0]
    assert run_command(["gen", "--n", "6", "--k", "2"]) == 1


def test_diagnose_cutprob(random_file, tmp_path, capsys):
    rows = str(tmp_path / "rows.csv")
    markdown = str(tmp_path / "summary.md")
    args = ["--threads", "2", "diagnose", random_file, "--check", "cutprob", "--seeds", "100"]
    assert run_command(args + ["--out", rows, "--markdown", markdown]) == 0
    summary = capsys.readouterr().out.splitlines()
    assert summary[0] == "check,probe,seeds,frequency,sigma,bound,fitted_constant"
    assert len(summary) == 6
    assert all(line.startswith("cutprob,") for line in summary[1:])
    assert len(read_text(rows).splitlines()) == 1 + 5 * 100
    assert read_text(markdown).startswith("# diagnose cutprob")


def test_diagnose_needs_enough_seeds(random_file):
    assert run_command(["diagnose", random_file, "--check", "cutprob", "--seeds", "10"]) == 1


def test_bench(tmp_path, capsys):
    rows = str(tmp_path / "bench.csv")
    args = ["--threads", "1", "bench", "--sizes", "6,8", "--runs", "2", "--k", "2", "--out", rows]
    assert run_command(args) == 0
    summary = capsys.readouterr().out.splitlines()
    assert summary[0].startswith("size,runs,median_seconds")
    assert [line.split(",")[:2] for line in summary[1:]] == [["6", "2"], ["8", "2"]]
    assert len(read_text(rows).splitlines()) == 5


def test_bench_rejects_bad_sizes():
    assert run_command(["bench", "--sizes", "ten"]) == 1


@pytest.mark.parametrize(
    "exc, code",
    [
        (ParseError(3, "bad"), 1),
        (SizeLimitError(10, 5), 2),
        (InfeasibleError("no table entry"), 2),
        (InternalAssertionError("broken"), 3),
        (RuntimeError("boom"), 3),
    ],
)
def test_exit_codes(exc, code):
    assert exit_code(exc) == code
