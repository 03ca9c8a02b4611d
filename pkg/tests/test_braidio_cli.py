from __future__ import annotations

import hashlib
import io

import numpy as np
import pytest

from braidsketch.braidio import (
    BraidHeader,
    BraidReader,
    ForwardOnlyError,
    format_braid,
    read_braid,
    write_braid,
)
from braidsketch.cli import EXIT_CAPABILITY, EXIT_FORMAT, EXIT_OK, EXIT_USAGE, main
from braidsketch.core import MAX, MEDIAN, BraidFormatError
from braidsketch.datagen import GenSpec, generate
from braidsketch.oracle import MaterializedBraid


def sha(path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture
def small_braid(tmp_path):
    path = tmp_path / "u.braid"
    assert main(["gen", "--dist", "uniform", "--m", "10", "--items", "100", "--seed", "1",
                 "--U", "1024", "--out", str(path)]) == EXIT_OK
    return path


@pytest.mark.parametrize("spec", [
    GenSpec(kind="uniform", m=7, items_per_stream=30, U=256, seed=2, interleave="random"),
    GenSpec(kind="adv-median", m=9, t=3, p=2, U=2, seed=4, instance="no"),
    GenSpec(kind="adv-secondmax", m=6, t=3, seed=1, instance="no"),
])
def test_round_trip(tmp_path, spec):
    braid = generate(spec)
    path = tmp_path / "b.braid"
    write_braid(path, braid)
    back = read_braid(path)
    assert back == braid
    assert back.values.dtype == braid.values.dtype or not braid.real
    assert back.label == braid.label
    assert format_braid(back) == path.read_text()


def test_header_parse():
    h = BraidHeader.parse("# braid v1 m=6 U=2 shift=1 gen=abc label=no\n")
    assert (h.m, h.U, h.shift, h.gen, h.real, h.extra) == (6, 2, 1, "abc", False, {"label": "no"})
    assert BraidHeader.parse(h.line()) == h
    for bad in ("braid v1 m=1 U=2 shift=0", "# braid v1 m=1 U=2", "# braid v1 m=x U=2 shift=0",
                "# braid v1 m=1 U=2 shift=0 vals=complex"):
        with pytest.raises(BraidFormatError):
            BraidHeader.parse(bad)


def test_reader_is_forward_only():
    text = "# braid v1 m=2 U=8 shift=0 gen=-\n1 3\n2 5\n"
    reader = BraidReader(io.StringIO(text))
    with pytest.raises(ForwardOnlyError):
        reader.seek(0)
    with pytest.raises(ForwardOnlyError):
        reader.tell()
    chunks = list(reader.chunks())
    assert [c[0].tolist() for c in chunks] == [[1, 2]]
    with pytest.raises(ForwardOnlyError):
        list(reader.chunks())


def test_reader_chunks_preserve_order():
    braid = generate(GenSpec(kind="uniform", m=5, items_per_stream=11, U=64, seed=3))
    reader = BraidReader(io.StringIO(format_braid(braid)), chunk_lines=4)
    parts = list(reader.chunks())
    assert len(parts) == 14
    assert np.array_equal(np.concatenate([p[0] for p in parts]), braid.stream_ids)
    assert reader.records == 55


@pytest.mark.parametrize("body", ["1 3 4\n", "0 3\n", "3 3\n", "1 9\n", "1 x\n"])
def test_reader_rejects_bad_records(body):
    reader = BraidReader(io.StringIO("# braid v1 m=2 U=8 shift=0 gen=-\n" + body))
    with pytest.raises(BraidFormatError):
        list(reader.chunks())


def test_gen_record_count_and_determinism(small_braid, tmp_path):
    lines = small_braid.read_text().splitlines()
    assert len(lines) == 1 + 1000
    again = tmp_path / "again.braid"
    main(["gen", "--dist", "uniform", "--m", "10", "--items", "100", "--seed", "1",
          "--U", "1024", "--out", str(again)])
    assert sha(again) == sha(small_braid)


def test_gen_table_instance_via_cli(tmp_path):
    path = tmp_path / "adv.braid"
    assert main(["gen", "--dist", "adv-median", "--m", "30", "--t", "4", "--p", "2",
                 "--instance", "no", "--seed", "5", "--out", str(path)]) == EXIT_OK
    b = read_braid(path)
    assert b.label == "no" and b.shift == 1
    assert MaterializedBraid.from_braid(b).topk(MEDIAN, 1)[0][1] == 2


def test_run_extremes_equals_oracle(small_braid, tmp_path):
    outs = {}
    for algo in ("extremes", "oracle"):
        out = tmp_path / f"{algo}.csv"
        assert main(["run", "--algo", algo, "--weight", "max", "--k", "5", "--in",
                     str(small_braid), "--out", str(out)]) == EXIT_OK
        outs[algo] = out.read_text()
    assert outs["extremes"] == outs["oracle"]
    assert outs["oracle"].splitlines()[0] == "rank,stream_id,estimate"


def test_run_varb_emits_k_rows(small_braid, tmp_path):
    out = tmp_path / "v.csv"
    assert main(["run", "--algo", "varb", "--weight", "median", "--k", "7", "--in",
                 str(small_braid), "--out", str(out)]) == EXIT_OK
    assert len(out.read_text().splitlines()) == 1 + 7


def test_eval_rows_and_oracle_self_score(small_braid, tmp_path):
    out = tmp_path / "e.csv"
    assert main(["eval", "--algo", "oracle", "--weight", "q:0.95", "--k-list", "1,2,5,10",
                 "--in", str(small_braid), "--out", str(out)]) == EXIT_OK
    rows = out.read_text().splitlines()
    assert len(rows) == 5
    head = rows[0].split(",")
    for row in rows[1:]:
        rec = dict(zip(head, row.split(",")))
        assert (rec["precision"], rec["distortion"], rec["avg_value_error"]) == ("1", "1", "0")


def test_memstat_rows(tmp_path):
    out = tmp_path / "m.csv"
    assert main(["memstat", "--algo", "varb", "--m-list", "10,20,30", "--items", "20",
                 "--U", "1024", "--width", "16", "--depth", "4", "--out", str(out)]) == EXIT_OK
    rows = out.read_text().splitlines()
    assert len(rows) == 4
    ids = [int(r.split(",")[5]) for r in rows[1:]]
    assert ids == [8 + 8 * m for m in (10, 20, 30)]


def test_capability_and_usage_errors(small_braid, capsys):
    assert main(["run", "--algo", "expb", "--weight", "spread", "--in", str(small_braid)]) \
        == EXIT_CAPABILITY
    assert "spread" in capsys.readouterr().err
    assert main(["run", "--algo", "varb", "--weight", "secondmax", "--in", str(small_braid)]) \
        == EXIT_CAPABILITY
    assert main(["run", "--algo", "varb", "--weight", "median", "--k", "0",
                 "--in", str(small_braid)]) == EXIT_USAGE
    assert main(["run", "--algo", "varb", "--weight", "median", "--eps", "2",
                 "--in", str(small_braid)]) == EXIT_USAGE
    assert main(["gen", "--dist", "outlier", "--a", "0.95"]) == EXIT_USAGE
    assert main(["bogus"]) == EXIT_USAGE
    assert main(["run", "--algo", "varb", "--weight", "median", "--in", "/nonexistent"]) == EXIT_USAGE


def test_format_error(tmp_path):
    bad = tmp_path / "bad.braid"
    bad.write_text("# braid v1 m=2 U=8 shift=0 gen=-\n1 3\n5 5\n")
    assert main(["run", "--algo", "varb", "--weight", "median", "--in", str(bad)]) == EXIT_FORMAT
    bad.write_text("not a braid\n")
    assert main(["eval", "--algo", "oracle", "--weight", "avg", "--in", str(bad)]) == EXIT_FORMAT


def test_real_valued_braid_only_for_exact_paths(tmp_path):
    path = tmp_path / "sm.braid"
    main(["gen", "--dist", "adv-secondmax", "--m", "8", "--t", "3", "--instance", "no",
          "--seed", "2", "--out", str(path)])
    assert main(["run", "--algo", "varb", "--weight", "median", "--in", str(path)]) == EXIT_CAPABILITY
    out = tmp_path / "o.csv"
    assert main(["run", "--algo", "oracle", "--weight", "secondmax", "--k", "1",
                 "--in", str(path), "--out", str(out)]) == EXIT_OK
    assert out.read_text().splitlines()[1].endswith(",3")


def test_extremes_rejects_median(small_braid):
    assert main(["run", "--algo", "extremes", "--weight", "median", "--in", str(small_braid)]) \
        == EXIT_CAPABILITY


def test_stdout_when_no_out(small_braid, capsys):
    assert main(["run", "--algo", "oracle", "--weight", MAX.label, "--k", "2",
                 "--in", str(small_braid)]) == EXIT_OK
    assert len(capsys.readouterr().out.splitlines()) == 3
