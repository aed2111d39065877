"""Command-line driver tests: input validation, counting semantics,
report round-trips, parallel determinism and exit codes.

Reports must be byte-reproducible: no timestamps, no thread count, and
decimal bound strings that parse back to enclosures of the binary boxes.
"""

import json
from fractions import Fraction

import pytest

from krawcert import (
    RunOptions,
    SolutionsFormatError,
    load_solutions,
    run,
    write_report,
)
from krawcert.cli import main

SQRT2 = "variables: x\nx^2 - 2\n"
SQRT2_ROOTS = [[[1.41421356, 0.0]], [[-1.41421356, 0.0]]]


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def _setup(tmp_path, system=SQRT2, rows=SQRT2_ROOTS):
    sys_path = _write(tmp_path, "system.txt", system)
    sol_path = _write(tmp_path, "solutions.json", json.dumps(rows))
    return sys_path, sol_path


# ---------------------------------------------------------------------------
# solutions loading


def test_load_solutions_basic(tmp_path):
    path = _write(tmp_path, "s.json", "[[[1.5, -2.0]], [[0.0, 1.0]]]")
    cands = load_solutions(path)
    assert len(cands) == 2
    assert cands[0].x == (1.5 - 2j,)
    assert cands[1].x == (1j,)
    assert [c.index for c in cands] == [0, 1]


def test_load_solutions_requires_array(tmp_path):
    path = _write(tmp_path, "s.json", '{"rows": []}')
    with pytest.raises(SolutionsFormatError, match="JSON array"):
        load_solutions(path)


def test_load_solutions_rejects_invalid_json(tmp_path):
    path = _write(tmp_path, "s.json", "not json")
    with pytest.raises(SolutionsFormatError, match="not valid JSON"):
        load_solutions(path)


def test_load_solutions_rejects_malformed_pairs(tmp_path):
    for text in ('[[[1, 2], [3]]]', '[[[1, "x"]]]', '[[[1, true]]]', '[[1, 2]]'):
        path = _write(tmp_path, "s.json", text)
        with pytest.raises(SolutionsFormatError, match="row 0"):
            load_solutions(path)


def test_load_solutions_rejects_empty_row(tmp_path):
    path = _write(tmp_path, "s.json", "[[]]")
    with pytest.raises(SolutionsFormatError, match="nonempty"):
        load_solutions(path)


def test_load_solutions_rejects_nonfinite(tmp_path):
    for text in ("[[[1e400, 0]]]", "[[[NaN, 0]]]"):
        path = _write(tmp_path, "s.json", text)
        with pytest.raises(SolutionsFormatError, match="non-finite"):
            load_solutions(path)


def test_load_solutions_names_inconsistent_row(tmp_path):
    path = _write(tmp_path, "s.json", "[[[1, 2]], [[1, 2], [3, 4]]]")
    with pytest.raises(SolutionsFormatError, match="row 1"):
        load_solutions(path)


# ---------------------------------------------------------------------------
# run counting semantics


def test_run_counts_both_square_roots(tmp_path):
    summary = run(*_setup(tmp_path))
    assert summary.total_candidates == 2
    assert summary.certified_count == 2
    assert summary.distinct_count == 2
    assert summary.real_count == 2
    assert summary.positive_count == 1


def test_run_counts_duplicates_once(tmp_path):
    rows = [[[1.41421356, 0.0]], [[1.41421357, 0.0]], [[1.4142135, 0.0]]]
    summary = run(*_setup(tmp_path, rows=rows))
    assert summary.certified_count == 3
    assert summary.distinct_count == 1
    # reality and positivity are counted per distinct zero
    assert summary.real_count == 1
    assert summary.positive_count == 1
    assert summary.distinctness.groups == ((0, 1, 2),)
    assert summary.distinctness.representatives == (0,)


def test_run_count_chain_is_monotone(tmp_path):
    system = "variables: x\nx^4 - 5*x^2 + 4\n"  # roots +-1, +-2
    rows = [[[1.0, 0.0]], [[-1.0, 0.0]], [[2.0, 0.0]], [[-2.0, 0.0]], [[0.0, 0.0]]]
    summary = run(*_setup(tmp_path, system=system, rows=rows))
    assert summary.total_candidates == 5
    assert summary.certified_count == 4  # the derivative vanishes at 0
    assert summary.distinct_count == 4
    assert summary.real_count == 4
    assert summary.positive_count == 2
    assert (summary.positive_count <= summary.real_count
            <= summary.distinct_count <= summary.certified_count
            <= summary.total_candidates)


def test_run_empty_solutions(tmp_path):
    summary = run(*_setup(tmp_path, rows=[]))
    assert summary.total_candidates == 0
    assert summary.certified_count == 0
    assert summary.distinct_count == 0


def test_run_rejects_width_mismatch(tmp_path):
    with pytest.raises(SolutionsFormatError, match="1 variables"):
        run(*_setup(tmp_path, rows=[[[1.0, 0.0], [2.0, 0.0]]]))


def test_run_group_indices_are_candidate_indices(tmp_path):
    # candidate 1 fails; groups must still name original indices 0 and 2
    rows = [[[1.41421356, 0.0]], [[1e280, 0.0]], [[1.41421357, 0.0]]]
    summary = run(*_setup(tmp_path, rows=rows))
    assert summary.certified_count == 2
    assert summary.distinctness.groups == ((0, 2),)
    assert summary.distinctness.representatives == (0,)


def test_run_respects_max_bits(tmp_path):
    src = ("variables: x\nx^2 - 2*x/100000000 + 1/10000000000000000"
           " - 1/1000000000000000000000000000000\n")
    rows = [[[1.0000001e-08, 0.0]], [[0.9999999e-08, 0.0]]]
    low = run(*_setup(tmp_path, system=src, rows=rows),
              options=RunOptions(max_bits=53))
    assert low.certified_count == 0
    high = run(*_setup(tmp_path, system=src, rows=rows),
               options=RunOptions(max_bits=256))
    assert high.certified_count == 2
    assert high.distinct_count == 2


# ---------------------------------------------------------------------------
# report output


def test_report_shape_and_roundtrip(tmp_path):
    out = str(tmp_path / "report.json")
    summary = run(*_setup(tmp_path), options=RunOptions(output=out))
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["counts"] == {
        "total_candidates": 2, "certified": 2, "distinct": 2,
        "real": 2, "positive": 1,
    }
    assert doc["config"]["ladder_bits"] == [53, 128, 256, 512]
    assert "threads" not in doc["config"]
    assert "time" not in json.dumps(doc).lower()
    row = doc["results"][0]
    assert row["status"] == "certified"
    assert row["precision_bits"] == 53
    assert row["reality"] == "real" and row["positive"] == "yes"
    assert row["representative"] is True
    # decimal bound strings must enclose the binary box outward and
    # still parse back to the exact binary bounds
    (re_lo, re_hi, im_lo, im_hi), = row["box"]
    entry = summary.results[0].box.entries[0]
    assert Fraction(re_lo) <= entry.re.lo_fraction()
    assert entry.re.hi_fraction() <= Fraction(re_hi)
    assert Fraction(im_lo) <= entry.im.lo_fraction() <= entry.im.hi_fraction() <= Fraction(im_hi)
    assert float(re_lo) == entry.re.lo and float(re_hi) == entry.re.hi
    assert float(im_lo) == entry.im.lo and float(im_hi) == entry.im.hi
    # and still bracket the true root tightly
    assert Fraction(re_lo) ** 2 < 2 < Fraction(re_hi) ** 2


def test_report_failed_rows_carry_reason(tmp_path):
    out = str(tmp_path / "report.json")
    run(*_setup(tmp_path, system="variables: x\nx^2\n", rows=[[[0.0, 0.0]]]),
        options=RunOptions(output=out))
    row = json.loads((tmp_path / "report.json").read_text())["results"][0]
    assert row["status"] == "not_certified"
    assert row["reason"] == "singular Jacobian"
    assert "box" not in row


def test_report_mp_bounds_use_enough_digits(tmp_path):
    src = ("variables: x\nx^2 - 2*x/100000000 + 1/10000000000000000"
           " - 1/1000000000000000000000000000000\n")
    rows = [[[1.0000001e-08, 0.0]]]
    out = str(tmp_path / "report.json")
    summary = run(*_setup(tmp_path, system=src, rows=rows),
                  options=RunOptions(max_bits=128, output=out))
    row = json.loads((tmp_path / "report.json").read_text())["results"][0]
    assert row["precision_bits"] == 128
    (re_lo, re_hi, _, _), = row["box"]
    entry = summary.results[0].box.entries[0]
    assert Fraction(re_lo) <= entry.re.lo_fraction() < entry.re.hi_fraction() <= Fraction(re_hi)
    # the printed pair must separate the two clustered roots
    assert Fraction(re_hi) - Fraction(re_lo) < Fraction(1, 10**15)


def test_parallel_report_matches_serial(tmp_path):
    rows = [[[1.41421356, 0.0]], [[-1.41421356, 0.0]], [[1.4142136, 0.0]],
            [[-1.4142136, 0.0]], [[3.0, 0.0]]]
    serial_out = str(tmp_path / "serial.json")
    par_out = str(tmp_path / "parallel.json")
    run(*_setup(tmp_path, rows=rows), options=RunOptions(output=serial_out, threads=1))
    run(*_setup(tmp_path, rows=rows), options=RunOptions(output=par_out, threads=4))
    serial_text = (tmp_path / "serial.json").read_bytes()
    par_text = (tmp_path / "parallel.json").read_bytes()
    assert serial_text == par_text


def test_write_report_is_deterministic(tmp_path):
    summary = run(*_setup(tmp_path))
    a = str(tmp_path / "a.json")
    b = str(tmp_path / "b.json")
    write_report(summary, a)
    write_report(summary, b)
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


# ---------------------------------------------------------------------------
# argument parsing and exit codes


def _argv(tmp_path, out_name="report.json", extra=()):
    sys_path, sol_path = _setup(tmp_path)
    return ["--system", sys_path, "--solutions", sol_path,
            "--output", str(tmp_path / out_name), *extra]


def test_main_happy_path(tmp_path, capsys):
    rc = main(_argv(tmp_path))
    out = capsys.readouterr().out
    assert rc == 0
    assert "candidates: 2" in out
    assert "certified:  2" in out
    assert "positive:   1" in out
    assert "report written to" in out


def test_main_missing_system_file(tmp_path, capsys):
    rc = main(["--system", str(tmp_path / "nope.txt"),
               "--solutions", _write(tmp_path, "s.json", "[]"),
               "--output", str(tmp_path / "r.json")])
    assert rc == 1
    assert "certify:" in capsys.readouterr().err


def test_main_bad_solutions(tmp_path, capsys):
    rc = main(["--system", _write(tmp_path, "sys.txt", SQRT2),
               "--solutions", _write(tmp_path, "s.json", "not json"),
               "--output", str(tmp_path / "r.json")])
    assert rc == 1
    assert "not valid JSON" in capsys.readouterr().err


def test_main_parse_error_in_system(tmp_path, capsys):
    rc = main(["--system", _write(tmp_path, "sys.txt", "variables: x\nx + y\n"),
               "--solutions", _write(tmp_path, "s.json", "[]"),
               "--output", str(tmp_path / "r.json")])
    assert rc == 1
    assert "unknown identifier" in capsys.readouterr().err


def test_main_max_bits_flag(tmp_path):
    rc = main(_argv(tmp_path, extra=["--max-bits", "128"]))
    assert rc == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["config"]["ladder_bits"] == [53, 128]


def test_main_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("CERTIFY_MAX_BITS", "128")
    rc = main(_argv(tmp_path))
    assert rc == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["config"]["ladder_bits"] == [53, 128]


def test_main_flag_overrides_env(tmp_path, monkeypatch):
    monkeypatch.setenv("CERTIFY_MAX_BITS", "128")
    rc = main(_argv(tmp_path, extra=["--max-bits", "256"]))
    assert rc == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["config"]["ladder_bits"] == [53, 128, 256]


def test_main_invalid_env_value(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("CERTIFY_MAX_BITS", "banana")
    rc = main(_argv(tmp_path))
    assert rc == 1
    assert "CERTIFY_MAX_BITS" in capsys.readouterr().err


def test_main_no_horner_flag(tmp_path):
    rc = main(_argv(tmp_path, extra=["--no-horner"]))
    assert rc == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["config"]["horner"] is False
    assert doc["counts"]["certified"] == 2


def test_main_seed_is_recorded(tmp_path):
    rc = main(_argv(tmp_path, extra=["--seed", "9"]))
    assert rc == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["config"]["seed"] == 9
