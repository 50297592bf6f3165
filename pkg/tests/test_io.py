from __future__ import annotations

import json
import logging

import numpy as np
import pytest

from catseg.domain import CategoricalSequence
from catseg.errors import FastaFormatError, LengthPolicyError, OutputError
from catseg.io import (apply_length_policy, crop_partition, read_estimate, read_fasta,
                       read_labels, read_segments, write_estimate, write_fasta, write_labels,
                       write_segments)
from catseg.segmentation import Partition


def fasta(tmp_path, text, name="x.fa"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_read_fasta_mapping(tmp_path):
    seq = read_fasta(fasta(tmp_path, ">x\nACGT\n"))
    assert seq.values.tolist() == [1, 2, 3, 4] and seq.r == 4
    assert read_fasta(fasta(tmp_path, ">x\nacgt\n")) == seq
    assert read_fasta(fasta(tmp_path, ">x\nAC\nGT\n")) == seq


def test_read_fasta_invalid_character(tmp_path):
    with pytest.raises(FastaFormatError) as info:
        read_fasta(fasta(tmp_path, ">x\nACNT\n"))
    assert info.value.position == 3 and info.value.character == "N"
    assert "position 3" in str(info.value)


def test_read_fasta_drop_policy(tmp_path, caplog):
    with caplog.at_level(logging.WARNING, logger="catseg"):
        seq = read_fasta(fasta(tmp_path, ">x\nACNTN\n"), on_invalid="drop")
    assert seq.values.tolist() == [1, 2, 4]
    assert "dropped 2" in caplog.text


def test_read_fasta_empty(tmp_path):
    with pytest.raises(FastaFormatError):
        read_fasta(fasta(tmp_path, ">x\n\n"))
    with pytest.raises(FastaFormatError):
        read_fasta(fasta(tmp_path, ""))


def test_read_fasta_records(tmp_path, caplog):
    p = fasta(tmp_path, ">one first\nAAAA\n>two\nCCCC\n")
    with caplog.at_level(logging.WARNING, logger="catseg"):
        assert read_fasta(p).values.tolist() == [1] * 4
    assert "2 records" in caplog.text
    assert read_fasta(p, record="two").values.tolist() == [2] * 4
    with pytest.raises(FastaFormatError):
        read_fasta(p, record="three")


def test_fasta_and_label_round_trip(tmp_path):
    seq = CategoricalSequence(np.random.default_rng(0).integers(1, 5, 150), 4)
    write_fasta(seq, tmp_path / "s.fa")
    assert read_fasta(tmp_path / "s.fa") == seq
    write_labels(seq, tmp_path / "s.csv")
    assert read_labels(tmp_path / "s.csv") == seq


def test_length_policies(caplog):
    seq = CategoricalSequence(np.arange(1000) % 4 + 1, 4)
    with caplog.at_level(logging.WARNING, logger="catseg"):
        t = apply_length_policy(seq, "truncate")
    assert t.n == 512 and "1000 -> 512" in caplog.text
    p = apply_length_policy(seq, "pad-repeat-last")
    assert p.n == 1024 and p.original_n == 1000
    assert (p.sequence.values[1000:] == seq.values[-1]).all()
    assert p.meta()["original_length"] == 1000
    with pytest.raises(LengthPolicyError):
        apply_length_policy(seq, "reject")
    with pytest.raises(LengthPolicyError):
        apply_length_policy(seq, "stretch")


def test_dyadic_length_unchanged():
    seq = CategoricalSequence(np.ones(2 ** 21, dtype=np.int64), 4)
    for policy in ("truncate", "pad-repeat-last", "reject"):
        adj = apply_length_policy(seq, policy)
        assert adj.n == 2 ** 21 and not adj.changed


def test_estimate_csv_text(tmp_path):
    write_estimate(np.eye(2), tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == "i,p1,p2\n1,1,0\n2,0,1\n"


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_estimate_round_trip(tmp_path, fmt):
    est = np.random.default_rng(1).dirichlet([1, 1, 1], size=64).T
    write_estimate(est, tmp_path / f"e.{fmt}", fmt, meta={"k": 1})
    back, meta = read_estimate(tmp_path / f"e.{fmt}")
    np.testing.assert_allclose(back, est, atol=1e-10)
    if fmt == "json":
        assert meta == {"k": 1}
        assert json.loads((tmp_path / "e.json").read_text())["r"] == 3


def test_segments_text(tmp_path):
    est = np.tile([[0.75], [0.25]], 4)
    write_segments(Partition((1,), 4), est, tmp_path / "a.tsv")
    assert (tmp_path / "a.tsv").read_text() == "1\t4\t0.75\t0.25\n"
    est = np.array([[1, 1, 0.5, 0.5], [0, 0, 0.5, 0.5]])
    write_segments(Partition((1, 3), 4), est, tmp_path / "b.tsv")
    rows = (tmp_path / "b.tsv").read_text().splitlines()
    assert rows[0].startswith("1\t2\t") and rows[1].startswith("3\t4\t")
    back = read_segments(tmp_path / "b.tsv")
    np.testing.assert_allclose(back[1][2], [0.5, 0.5])


def test_crop_partition():
    assert crop_partition(Partition((1, 500, 1001), 1024), 1000) == Partition((1, 500), 1000)


def test_output_error(tmp_path):
    with pytest.raises(OutputError):
        write_estimate(np.eye(2), tmp_path / "missing" / "e.csv")
