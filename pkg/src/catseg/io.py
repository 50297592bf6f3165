"""FASTA ingestion, dyadic-length policies and on-disk formats."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .domain import CategoricalSequence
from .errors import FastaFormatError, LengthPolicyError, OutputError
from .segmentation import Partition

log = logging.getLogger("catseg")

DNA_ALPHABET = "ACGT"
FASTA_SUFFIXES = {".fa", ".fasta", ".fna", ".fas"}
LENGTH_POLICIES = ("truncate", "pad-repeat-last", "reject")

_LOOKUP = np.zeros(256, dtype=np.int64)
for _code, _ch in enumerate(DNA_ALPHABET, start=1):
    _LOOKUP[ord(_ch)] = _code
    _LOOKUP[ord(_ch.lower())] = _code


def is_fasta(path) -> bool:
    return Path(path).suffix.lower() in FASTA_SUFFIXES


def _records(text: str):
    header, chunks = None, []
    for line in text.splitlines():
        if line.startswith(">"):
            if header is not None or chunks:
                yield header, "".join(chunks)
            header, chunks = line[1:].strip(), []
        elif not line.startswith(";"):
            chunks.append(line.strip())
    if header is not None or chunks:
        yield header, "".join(chunks)


def read_fasta(path, on_invalid: str = "error", record: str | None = None) -> CategoricalSequence:
    """Read one FASTA record as labels ``A=1, C=2, G=3, T=4``.

    The first record is used unless ``record`` names a header (matched
    against its first word or the whole line). ``on_invalid="drop"``
    removes non-ACGT symbols instead of raising; the count is logged.
    """
    if on_invalid not in ("error", "drop"):
        raise ValueError(f"on_invalid must be 'error' or 'drop', got {on_invalid!r}")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FastaFormatError(f"cannot read {path}: {exc}") from exc
    records = list(_records(text))
    if not records:
        raise FastaFormatError(f"{path}: empty FASTA file")
    if record is None:
        if len(records) > 1:
            log.warning("%s: %d records found, using the first (%s)",
                        path, len(records), records[0][0])
        header, seq = records[0]
    else:
        matches = [r for r in records
                   if r[0] is not None and (r[0] == record or r[0].split()[0] == record)]
        if not matches:
            raise FastaFormatError(f"{path}: no record with header {record!r}")
        header, seq = matches[0]
    raw = np.frombuffer(seq.encode("ascii", errors="replace"), dtype=np.uint8)
    values = _LOOKUP[raw]
    bad = np.flatnonzero(values == 0)
    if bad.size:
        if on_invalid == "error":
            pos = int(bad[0])
            raise FastaFormatError(
                f"{path}: invalid character {seq[pos]!r} at position {pos + 1}",
                position=pos + 1, character=seq[pos])
        log.warning("%s: dropped %d non-ACGT positions", path, bad.size)
        values = values[values != 0]
    if values.size == 0:
        raise FastaFormatError(f"{path}: empty sequence")
    return CategoricalSequence(values, len(DNA_ALPHABET))


def write_fasta(seq: CategoricalSequence, path, header: str = "sequence", width: int = 70):
    if seq.r > len(DNA_ALPHABET):
        raise ValueError(f"FASTA output supports r <= 4, got r={seq.r}")
    letters = np.frombuffer(DNA_ALPHABET.encode(), dtype=np.uint8)[seq.values - 1].tobytes().decode()
    lines = [f">{header}"] + [letters[i:i + width] for i in range(0, len(letters), width)]
    _write_text(path, "\n".join(lines) + "\n")


def read_labels(path, r: int | None = None) -> CategoricalSequence:
    """Read a label table written by :func:`write_labels` (``i,y`` rows)."""
    declared = None
    values = []
    with open(path, newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key.strip() == "r":
                    declared = int(val)
                continue
            if line.startswith("i,"):
                continue
            values.append(int(line.split(",")[-1]))
    if not values:
        raise FastaFormatError(f"{path}: no labels")
    values = np.array(values, dtype=np.int64)
    r = r or declared or max(2, int(values.max()))
    return CategoricalSequence(values, r)


def write_labels(seq: CategoricalSequence, path) -> None:
    rows = "\n".join(f"{i},{v}" for i, v in enumerate(seq.values.tolist(), start=1))
    _write_text(path, f"# r={seq.r}\ni,y\n{rows}\n")


def read_sequence(path, on_invalid: str = "error", record: str | None = None,
                  r: int | None = None) -> CategoricalSequence:
    if is_fasta(path):
        return read_fasta(path, on_invalid=on_invalid, record=record)
    return read_labels(path, r=r)


@dataclass(frozen=True)
class AdjustedSequence:
    """A sequence brought to dyadic length, with the length it came from."""

    sequence: CategoricalSequence
    original_n: int
    policy: str

    @property
    def n(self) -> int:
        return self.sequence.n

    @property
    def changed(self) -> bool:
        return self.n != self.original_n

    def meta(self) -> dict:
        return {"original_length": self.original_n, "effective_length": self.n,
                "length_policy": self.policy}


def apply_length_policy(seq: CategoricalSequence, policy: str = "truncate") -> AdjustedSequence:
    """Bring ``seq`` to a power-of-two length.

    ``truncate`` keeps the first ``2**floor(log2 n)`` symbols,
    ``pad-repeat-last`` repeats the final symbol up to ``2**ceil(log2 n)``,
    ``reject`` raises unless ``n`` is already dyadic. Any change is logged.
    """
    if policy not in LENGTH_POLICIES:
        raise LengthPolicyError(f"unknown length policy {policy!r}; expected {LENGTH_POLICIES}")
    n = seq.n
    if n < 2:
        raise LengthPolicyError(f"sequence of length {n} is too short for the Haar basis")
    if n & (n - 1) == 0:
        return AdjustedSequence(seq, n, policy)
    if policy == "reject":
        raise LengthPolicyError(f"length {n} is not a power of two (policy 'reject')")
    if policy == "truncate":
        m = 1 << (n.bit_length() - 1)
        values = seq.values[:m]
        log.warning("length policy truncate: %d -> %d symbols", n, m)
    else:
        m = 1 << n.bit_length()
        values = np.concatenate([seq.values, np.full(m - n, seq.values[-1])])
        log.warning("length policy pad-repeat-last: %d -> %d symbols (crop marker %d)", n, m, n)
    return AdjustedSequence(CategoricalSequence(values, seq.r), n, policy)


def _write_text(path, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_estimate(est, path, fmt: str = "csv", meta: dict | None = None) -> None:
    """Write an ``(r, n)`` estimate.

    CSV: header ``i,p1,...,pr`` then one row per position, 12 significant
    digits. JSON: ``{"n", "r", "columns", "meta"}`` with full precision.
    """
    est = np.asarray(est, dtype=np.float64)
    r, n = est.shape
    if fmt == "csv":
        header = ",".join(["i"] + [f"p{j}" for j in range(1, r + 1)])
        rows = [f"{i}," + ",".join(_fmt(v) for v in col)
                for i, col in enumerate(est.T.tolist(), start=1)]
        _write_text(path, "\n".join([header] + rows) + "\n")
    elif fmt == "json":
        doc = {"n": n, "r": r, "columns": est.T.tolist(), "meta": meta or {}}
        _write_text(path, json.dumps(doc))
    else:
        raise ValueError(f"unknown format {fmt!r}")


def read_estimate(path) -> tuple[np.ndarray, dict]:
    """Inverse of :func:`write_estimate`; the format is sniffed from content."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        est = np.array(doc["columns"], dtype=np.float64).T.reshape(doc["r"], doc["n"])
        return est, doc.get("meta", {})
    rows = list(csv.reader(text.splitlines()))
    body = np.array([[float(v) for v in row[1:]] for row in rows[1:] if row], dtype=np.float64)
    return body.T.copy(), {}


def write_segments(partition: Partition, est, path) -> None:
    """Tab-separated ``start end p1 ... pr`` per segment (1-based, inclusive)."""
    est = np.asarray(est, dtype=np.float64)
    if est.shape[1] != partition.n:
        raise ValueError(f"estimate has {est.shape[1]} columns, partition covers {partition.n}")
    lines = []
    for a, b in partition.segments():
        probs = "\t".join(_fmt(v) for v in est[:, a - 1].tolist())
        lines.append(f"{a}\t{b}\t{probs}")
    _write_text(path, "\n".join(lines) + "\n")


def read_segments(path) -> list[tuple[int, int, np.ndarray]]:
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            parts = line.split("\t")
            out.append((int(parts[0]), int(parts[1]), np.array([float(p) for p in parts[2:]])))
    return out


def write_json(doc, path) -> None:
    _write_text(path, json.dumps(doc))


def write_table(rows: Iterable[dict], path, fmt: str = "csv") -> None:
    rows = list(rows)
    if fmt == "json":
        _write_text(path, json.dumps(rows))
        return
    if not rows:
        _write_text(path, "")
        return
    fields = list(rows[0])
    lines = [",".join(fields)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row.values()))
    _write_text(path, "\n".join(lines) + "\n")


def crop_partition(partition: Partition, n: int) -> Partition:
    """Restrict a partition of a padded sequence to its first ``n`` positions."""
    return Partition(tuple(b for b in partition.breakpoints if b <= n), n)
