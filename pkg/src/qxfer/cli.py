"""Command-line entry point.

    qxfer decay      --paper --c 0.0025 --seed 7 --out runs/
    qxfer mi         --paper --c 0.0025 --seed 7 --out runs/
    qxfer sweep      --paper --c-list paper --target 0.8 --out runs/
    qxfer additivity --paper --c 0.0025 --seed 7 --out runs/
    qxfer band       --paper --c 0.0025 --seed 7 --out runs/

Exit status: 0 on success, 1 on configuration errors, 2 on numerical
failures such as a decay target that is never reached.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .exper import (
    DecayTimeNotReached,
    coupling_sweep,
    default_time_grid,
    find_decay_time,
    paper_couplings,
    pathway_additivity_check,
    run_full_series,
)
from .model import derive_seeds, model_from_config, paper_figure_model
from .perturb import BandSpec, band_rate_estimate, fgr_rate
from .plot import emit_plot
from .records import fit_block, write_metadata, write_series_csv, write_sweep_csv

log = logging.getLogger("qxfer")

OUT_ENV = "QXFER_OUT"
DEFAULT_C = 1 / 400


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--paper", action="store_true", help="qubit + 7-qubit environment model (default)")
    src.add_argument("--model", metavar="PATH", help="JSON model configuration file")
    p.add_argument("--c", type=float, help=f"coupling (default {DEFAULT_C:g} for --paper)")
    p.add_argument("--seed", type=int, default=0, help="experiment seed; derives the A and B seeds")
    p.add_argument("--tmax", type=float, help="end of the time grid (default from the FGR rate)")
    p.add_argument("--samples", type=int, default=400, help="number of time samples")
    p.add_argument("--target", "--targets", dest="target", type=float, default=0.8,
                   help="decay probability defining the decay time")
    p.add_argument("--out", default=os.environ.get(OUT_ENV, "runs"),
                   help=f"output directory (default ${OUT_ENV} or ./runs)")
    p.add_argument("--no-plot", action="store_true", help="skip the SVG figure")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qxfer", description="Entanglement transfer between coupled subsystems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common()
    sub.add_parser("decay", parents=[common], help="decay probability P(t), exact vs first order")
    sub.add_parser("mi", parents=[common], help="mutual information I(B, Abar), exact vs qubit model")
    sweep = sub.add_parser("sweep", parents=[common], help="decay time versus coupling")
    sweep.add_argument("--c-list", default="paper", help="'paper' or comma-separated couplings")
    sweep.add_argument("--workers", type=int, default=1)
    add = sub.add_parser("additivity", parents=[common], help="two-pathway rate additivity")
    add.add_argument("--c2", type=float, help="coupling of the second pathway (default: same as --c)")
    sub.add_parser("band", parents=[common], help="FGR and band-model rate estimates")
    return parser


def parse_c_list(spec: str) -> list[float]:
    if spec == "paper":
        return paper_couplings()
    try:
        values = [float(x) for x in spec.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"invalid --c-list {spec!r}") from None
    if not values or any(v <= 0 for v in values):
        raise ConfigError("--c-list needs positive couplings")
    return values


class ModelSource:
    """Builds models for a given coupling from --paper or --model."""

    def __init__(self, args):
        self.seed_a, self.seed_b = derive_seeds(args.seed)
        self.config = None
        if args.model:
            try:
                with open(args.model, encoding="utf-8") as fh:
                    self.config = json.load(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read model file: {exc}") from None
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{args.model}: invalid JSON ({exc})") from None
            if not isinstance(self.config, dict):
                raise ConfigError(f"{args.model}: top level must be an object")
            self.config.setdefault("seedA", self.seed_a)
            self.config.setdefault("seedB", self.seed_b)
            self.seed_a, self.seed_b = self.config["seedA"], self.config["seedB"]

    def build(self, c: float | None):
        if self.config is None:
            return paper_figure_model(DEFAULT_C if c is None else c, self.seed_a, self.seed_b)
        config = dict(self.config)
        if c is not None:
            config["pathways"] = [dict(p, c=c) for p in config.get("pathways", [])]
        try:
            return model_from_config(config)
        except ValueError as exc:
            raise ConfigError(f"invalid model: {exc}") from None

    def describe(self) -> dict:
        return {"source": "config" if self.config else "paper", "config": self.config,
                "seedA": self.seed_a, "seedB": self.seed_b}


def _grid(model, args) -> np.ndarray:
    if args.samples < 2:
        raise ConfigError("--samples must be at least 2")
    if args.tmax is not None:
        if args.tmax <= 0:
            raise ConfigError("--tmax must be positive")
        return np.linspace(0.0, args.tmax, args.samples)
    return default_time_grid(model, samples=args.samples, target=args.target)


def _run_meta(args, source: ModelSource) -> dict:
    return {"command": args.command, "seed": args.seed, "model": source.describe(), "target": args.target}


def cmd_series(args, source: ModelSource, out: Path) -> None:
    model = source.build(args.c)
    grid = _grid(model, args)
    series = run_full_series(model, grid)
    name = args.command
    write_series_csv(series, out / f"{name}.csv")
    meta = _run_meta(args, source)
    meta.update(couplings=[p.c for p in model.pathways], grid=series.metadata["grid"])
    p_num = series["P_numeric"]
    meta["summary"] = {
        "max_P_numeric": float(p_num.max()),
        "max_abs_I_model_minus_I_numeric": float(np.max(np.abs(series["I_model"] - series["I_numeric"]))),
        "max_I_numeric": float(series["I_numeric"].max()),
    }
    write_metadata(meta, out / f"{name}.json")
    if not args.no_plot:
        emit_plot(series, out / f"{name}.svg", style=name, title=f"c = {model.pathways[0].c:g}")
    print(f"wrote {out / (name + '.csv')}")


def cmd_sweep(args, source: ModelSource, out: Path) -> int:
    couplings = parse_c_list(args.c_list)
    result = coupling_sweep(
        couplings, source.seed_a, source.seed_b, target=args.target,
        factory=source.build, samples=args.samples, workers=args.workers,
    )
    write_sweep_csv(result, out / "sweep.csv")
    meta = _run_meta(args, source)
    meta["fit"] = fit_block(result.fit)
    meta["rows"] = [{"c": r.c, "T_target": r.t_target, "valid": r.valid, "error": r.error} for r in result.rows]
    if result.valid_rows:
        meta["K_per_row"] = result.k_values().tolist()
        meta["K_spread"] = result.k_spread()
    write_metadata(meta, out / "sweep.json")
    if not args.no_plot and result.valid_rows:
        emit_plot(result, out / "sweep.svg", title=f"seed {args.seed}")
    print(f"wrote {out / 'sweep.csv'}")
    if not result.valid_rows:
        print("error: no coupling reached the target", file=sys.stderr)
        return 2
    return 0


def cmd_additivity(args, source: ModelSource, out: Path) -> None:
    if source.config is not None:
        raise ConfigError("additivity runs on the --paper model only")
    c1 = DEFAULT_C if args.c is None else args.c
    c2 = c1 if args.c2 is None else args.c2
    rep = pathway_additivity_check(c1, c2, source.seed_a, source.seed_b, target=args.target)
    meta = _run_meta(args, source)
    meta["additivity"] = {
        "c1": rep.c1, "c2": rep.c2, "T_single": list(rep.t_single), "T_combined": rep.t_combined,
        "inverse_sum": rep.inverse_sum, "inverse_combined": rep.inverse_combined, "ratio": rep.ratio,
    }
    write_metadata(meta, out / "additivity.json")
    print(f"ratio combined/sum of inverse decay times: {rep.ratio:.6g}")


def cmd_band(args, source: ModelSource, out: Path) -> None:
    model = source.build(args.c)
    k = model.dim_a - 1
    rate = fgr_rate(model, k)
    t_dec = find_decay_time(model, args.target, _grid(model, args), extend=3)
    band = BandSpec(initial=range(model.dim_a), final=[0])
    info_rate, band_rate = band_rate_estimate(model, band, t_dec)
    meta = _run_meta(args, source)
    meta["band"] = {
        "fgr_rate": rate,
        "T_target": t_dec,
        "band_rate": band_rate,
        "information_rate": info_rate,
        "measured_information_rate": 2 * math.log(band.n_initial / band.n_final) / t_dec,
    }
    write_metadata(meta, out / "band.json")
    print(f"FGR rate {rate:.6g}, band information rate {info_rate:.6g}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"qxfer: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise ConfigError(f"output directory {out} is not writable")
        source = ModelSource(args)
        if args.command in ("decay", "mi"):
            cmd_series(args, source, out)
        elif args.command == "sweep":
            return cmd_sweep(args, source, out)
        elif args.command == "additivity":
            cmd_additivity(args, source, out)
        elif args.command == "band":
            cmd_band(args, source, out)
    except ConfigError as exc:
        print(f"qxfer: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"qxfer: error: {exc}", file=sys.stderr)
        return 1
    except (DecayTimeNotReached, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"qxfer: numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"qxfer: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
