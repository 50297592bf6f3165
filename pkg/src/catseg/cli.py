"""Command-line interface.

Subcommands: ``estimate``, ``segment``, ``calibrate``, ``simulate`` and
``risk``. Every failure prints one ``catseg: error: ...`` line on stderr
and exits with the code attached to the exception class.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import __version__
from .calibration import DEFAULT_CALIBRATION_JMAX, DEFAULT_GRID_STEP, calibrate_neh, calibrate_segmentation
from .domain import CategoricalSequence, encode, simplex_project
from .errors import CatsegError
from .evaluation import (DEFAULT_MAX_REPS, DEFAULT_MIN_REPS, SIGNAL_IDS, frange, grid_sweep,
                         penalty_grid, sample_labels, test_signal)
from .haar import transform_matrix
from .io import (apply_length_policy, crop_partition, is_fasta, read_sequence, write_estimate,
                 write_fasta, write_json, write_labels, write_segments, write_table)
from .segmentation import EI_CALIBRATIONS, ei_select, hybrid_detect
from .selection import PenaltyFamily, PenaltySpec, eh_select, neh_select

log = logging.getLogger("catseg")

COMMANDS = ("estimate", "segment", "calibrate", "simulate", "risk")
DEFAULT_EI_DMAX = 64


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    out: str | None = None
    strategy: str | None = None
    penalty: str | None = None
    c1: float = 1.0
    c2: float = 2.0
    c: float | None = None
    ei_c: float | None = None
    ei_calibration: str = "neh"
    jmax: int | None = None
    dmax: int | None = None
    n_policy: str = "truncate"
    seed: int = 0
    grid_step: float = DEFAULT_GRID_STEP
    format: str = "csv"
    path_out: str | None = None
    estimate_out: str | None = None
    project: bool = False
    on_invalid: str = "error"
    record: str | None = None
    r: int | None = None
    signal: str = "s1"
    n: int = 1024
    min_reps: int = DEFAULT_MIN_REPS
    max_reps: int = DEFAULT_MAX_REPS
    c_grid: str = "0:4:0.1"
    c1_grid: str = "0:1:0.1"
    c2_grid: str = "0:6:0.1"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.strategy:
            self.strategy = self.strategy.upper()

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in vars(ns).items() if k in names})


def _parse_grid(spec: str) -> np.ndarray:
    parts = [float(p) for p in spec.split(":")]
    if len(parts) == 1:
        return np.array(parts)
    if len(parts) != 3 or parts[2] <= 0:
        raise ValueError(f"grid must be 'start:stop:step' or a single value, got {spec!r}")
    return frange(*parts)


def _penalty(cfg: RunConfig, default_family: str) -> PenaltySpec:
    family = PenaltyFamily(cfg.penalty or default_family)
    if family is PenaltyFamily.LINEAR:
        return PenaltySpec.linear(1.0 if cfg.c is None else cfg.c)
    return PenaltySpec.two_constant(cfg.c1, cfg.c2)


def _load(cfg: RunConfig) -> CategoricalSequence:
    if not cfg.input:
        raise ValueError("an input file is required")
    return read_sequence(cfg.input, on_invalid=cfg.on_invalid, record=cfg.record, r=cfg.r)


def _require_out(cfg: RunConfig) -> str:
    if not cfg.out:
        raise ValueError("--out is required")
    return cfg.out


def _dyadic(cfg: RunConfig, seq: CategoricalSequence):
    adjusted = apply_length_policy(seq, cfg.n_policy)
    return adjusted, encode(adjusted.sequence)


def _cmd_estimate(cfg: RunConfig) -> None:
    out = _require_out(cfg)
    strategy = cfg.strategy or "NEH"
    seq = _load(cfg)
    meta = {"strategy": strategy}
    if strategy in ("EH", "NEH"):
        adjusted, X = _dyadic(cfg, seq)
        meta.update(adjusted.meta())
        coeffs = transform_matrix(X)
        if strategy == "EH":
            pen = _penalty(cfg, "log2const")
            res = eh_select(coeffs, pen)
        else:
            pen = _penalty(cfg, "linear")
            res = neh_select(coeffs, pen, cfg.jmax)
            meta["level"] = res.level
        est = res.estimate[:, :adjusted.original_n]
        path_rows = [{"candidate": k, "criterion": float(v)} for k, v in res.criterion_path]
        meta["dimension"] = res.dimension
    elif strategy == "EI":
        X = encode(seq)
        pen = _penalty(cfg, "log2const")
        dmax = cfg.dmax or min(seq.n, DEFAULT_EI_DMAX)
        res = ei_select(X, pen, D_max=dmax)
        est = res.estimate
        path_rows = [{"candidate": k, "criterion": float(v)} for k, v in res.criterion_path]
        meta.update(dimension=res.dimension, breakpoints=list(res.partition.breakpoints))
    else:
        raise ValueError(f"estimate supports EH, NEH or EI, got {strategy}")
    meta["penalty"] = pen.describe()
    if cfg.project:
        est = simplex_project(est)
        meta["projected"] = True
    write_estimate(est, out, cfg.format, meta)
    write_table(path_rows, cfg.path_out or f"{out}.path.csv")
    log.info("%s selected dimension %d with %s", strategy, meta["dimension"], meta["penalty"])


def _ei_step_penalty(cfg: RunConfig) -> PenaltySpec | None:
    if cfg.penalty == PenaltyFamily.TWO_CONSTANT_LOG.value:
        return PenaltySpec.two_constant(cfg.c1, cfg.c2)
    return None if cfg.ei_c is None else PenaltySpec.linear(cfg.ei_c)


def _cmd_segment(cfg: RunConfig) -> None:
    out = _require_out(cfg)
    strategy = cfg.strategy or "HYBRID"
    seq = _load(cfg)
    if strategy == "HYBRID":
        adjusted, X = _dyadic(cfg, seq)
        neh_pen = None if cfg.c is None else PenaltySpec.linear(cfg.c)
        jmax = DEFAULT_CALIBRATION_JMAX if cfg.jmax is None else cfg.jmax
        res = hybrid_detect(X, neh_pen, _ei_step_penalty(cfg), D_max=cfg.dmax, J_max=jmax,
                            grid_step=cfg.grid_step, ei_calibration=cfg.ei_calibration)
        partition, est = res.partition, res.estimate
        n0 = adjusted.original_n
        if adjusted.changed and n0 < adjusted.n:
            partition = crop_partition(partition, n0)
            est = est[:, :n0]
        log.info("hybrid: %d NEH jumps, %d segments (NEH %s, EI %s)", res.jumps.size,
                 partition.dimension, res.neh_penalty.describe(),
                 res.ei_penalty.describe() if res.ei_penalty else "none")
        meta = {**adjusted.meta(), "strategy": "HYBRID", "neh_penalty": res.neh_penalty.describe(),
                "ei_penalty": res.ei_penalty.describe() if res.ei_penalty else None,
                "jumps": int(res.jumps.size)}
    elif strategy == "EI":
        X = encode(seq)
        pen = _penalty(cfg, "linear" if cfg.c is not None else "log2const")
        dmax = cfg.dmax or min(seq.n, DEFAULT_EI_DMAX)
        res = ei_select(X, pen, D_max=dmax)
        partition, est = res.partition, res.estimate
        meta = {"strategy": "EI", "penalty": pen.describe()}
    else:
        raise ValueError(f"segment supports HYBRID or EI, got {strategy}")
    write_segments(partition, est, out)
    if cfg.estimate_out:
        write_estimate(est, cfg.estimate_out, cfg.format, meta)


def _path_doc(path) -> dict:
    return {"grid": path.grid.tolist(), "dims": path.dims.tolist(),
            "selected": path.selected.tolist(), "c_hat": path.c_hat, "retained": path.retained}


def _cmd_calibrate(cfg: RunConfig) -> None:
    out = _require_out(cfg)
    strategy = cfg.strategy or "NEH"
    seq = _load(cfg)
    jmax = DEFAULT_CALIBRATION_JMAX if cfg.jmax is None else cfg.jmax
    if strategy == "NEH":
        _, X = _dyadic(cfg, seq)
        stages = {"neh": calibrate_neh(transform_matrix(X), jmax, cfg.grid_step)}
    elif strategy == "EI":
        X = encode(seq)
        dmax = cfg.dmax or min(seq.n, DEFAULT_EI_DMAX)
        stages = {"ei": calibrate_segmentation(X, None, dmax, cfg.grid_step)}
    elif strategy == "HYBRID":
        _, X = _dyadic(cfg, seq)
        res = hybrid_detect(X, None, None, D_max=cfg.dmax, J_max=jmax, grid_step=cfg.grid_step,
                            ei_calibration=cfg.ei_calibration)
        stages = res.calibration
    else:
        raise ValueError(f"calibrate supports NEH, EI or HYBRID, got {strategy}")
    if cfg.format == "json":
        doc = {"grid_step": cfg.grid_step, "stages": {k: _path_doc(v) for k, v in stages.items()}}
        write_json(doc, out)
    else:
        rows = []
        for stage, path in stages.items():
            for c, d, sel in zip(path.grid.tolist(), path.dims.tolist(), path.selected.tolist()):
                rows.append({"stage": stage, "c": c, "dimension": d, "selected": sel})
        write_table(rows, out)
    for stage, path in stages.items():
        print(f"{stage}\tc_hat={path.c_hat:.12g}\tretained={path.retained:.12g}")


def _cmd_simulate(cfg: RunConfig) -> None:
    out = _require_out(cfg)
    s = test_signal(cfg.signal, cfg.n)
    seq = CategoricalSequence(sample_labels(s, cfg.seed) + 1, s.shape[0])
    if is_fasta(out):
        write_fasta(seq, out, header=f"{cfg.signal} n={cfg.n} seed={cfg.seed}")
    else:
        write_labels(seq, out)


def _cmd_risk(cfg: RunConfig) -> None:
    out = _require_out(cfg)
    strategy = cfg.strategy or "NEH"
    s = test_signal(cfg.signal, cfg.n)
    if strategy == "NEH" or (strategy == "EI" and cfg.penalty == "linear"):
        pens = penalty_grid("linear", c=_parse_grid(cfg.c_grid))
    else:
        pens = penalty_grid("log2const", c1=_parse_grid(cfg.c1_grid), c2=_parse_grid(cfg.c2_grid))
    dmax = cfg.dmax or (min(cfg.n, DEFAULT_EI_DMAX) if strategy == "EI" else None)
    res = grid_sweep(s, strategy, pens, seed=cfg.seed, min_reps=cfg.min_reps,
                     max_reps=cfg.max_reps, D_max=dmax, J_max=cfg.jmax)
    write_table(res.rows(), out, cfg.format)
    pen, risk = res.best
    print(f"best\t{pen.describe()}\trisk={risk.value:.6g}\treplicates={risk.replicates}")


_DISPATCH = {
    "estimate": _cmd_estimate,
    "segment": _cmd_segment,
    "calibrate": _cmd_calibrate,
    "simulate": _cmd_simulate,
    "risk": _cmd_risk,
}


def run(config: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    try:
        _DISPATCH[config.command](config)
    except CatsegError as exc:
        print(f"catseg: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, KeyError) as exc:
        print(f"catseg: error: {exc}", file=sys.stderr)
        return 64
    except OSError as exc:
        print(f"catseg: error: {exc}", file=sys.stderr)
        return 74
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="primary output path")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--strategy", type=str.upper,
                        choices=("EH", "NEH", "EI", "HYBRID"))
    common.add_argument("--penalty", choices=("log2const", "linear"))
    common.add_argument("--c1", type=float, default=1.0)
    common.add_argument("--c2", type=float, default=2.0)
    common.add_argument("--c", type=float, default=None,
                        help="linear constant (NEH, or the EI step of a plain EI run)")
    common.add_argument("--ei-c", dest="ei_c", type=float, default=None,
                        help="linear constant of the hybrid's EI step (default: see --ei-calibration)")
    common.add_argument("--ei-calibration", dest="ei_calibration", choices=EI_CALIBRATIONS,
                        default="neh",
                        help="hybrid EI constant: reuse the NEH constant or sweep the EI criterion")
    common.add_argument("--jmax", type=int, default=None)
    common.add_argument("--dmax", type=int, default=None)
    common.add_argument("--n-policy", dest="n_policy", default="truncate",
                        choices=("truncate", "pad-repeat-last", "reject"))
    common.add_argument("--grid-step", dest="grid_step", type=float, default=DEFAULT_GRID_STEP)
    common.add_argument("-v", "--verbose", action="store_true")

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("input", help="FASTA file (.fa/.fasta/.fna) or label table")
    source.add_argument("--on-invalid", dest="on_invalid", choices=("error", "drop"),
                        default="error")
    source.add_argument("--record", help="FASTA header of the record to use")
    source.add_argument("--r", type=int, default=None, help="alphabet size of a label table")

    parser = argparse.ArgumentParser(prog="catseg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", parents=[common, source], help="estimate the distribution matrix")
    p.add_argument("--path-out", dest="path_out", help="criterion path CSV (default: OUT.path.csv)")
    p.add_argument("--project", action="store_true", help="project columns onto the simplex")

    p = sub.add_parser("segment", parents=[common, source], help="detect change points")
    p.add_argument("--estimate-out", dest="estimate_out")

    sub.add_parser("calibrate", parents=[common, source], help="dimension-jump calibration")

    p = sub.add_parser("simulate", parents=[common], help="sample a sequence from a test signal")
    p.add_argument("--signal", choices=SIGNAL_IDS, default="s1")
    p.add_argument("--n", type=int, default=1024)

    p = sub.add_parser("risk", parents=[common], help="Monte Carlo risk over a constant grid")
    p.add_argument("--signal", choices=SIGNAL_IDS, default="s1")
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--min-reps", dest="min_reps", type=int, default=DEFAULT_MIN_REPS)
    p.add_argument("--max-reps", dest="max_reps", type=int, default=DEFAULT_MAX_REPS)
    p.add_argument("--c-grid", dest="c_grid", default="0:4:0.1")
    p.add_argument("--c1-grid", dest="c1_grid", default="0:1:0.1")
    p.add_argument("--c2-grid", dest="c2_grid", default="0:6:0.1")
    return parser


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="catseg: %(message)s", stream=sys.stderr)
    return run(RunConfig.from_namespace(ns))


if __name__ == "__main__":
    sys.exit(main())
