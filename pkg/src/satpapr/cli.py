"""Command-line entry point: ``satpapr <command> [flags]``.

Exit codes: 0 success, 1 usage/config error, 2 numerical failure,
3 NN training stopped before reaching the goal MSE.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments as ex
from .channel import ChannelConfig, run_ber
from .config import ExperimentConfig, load_config
from .errors import InvalidInputError, UndefinedPaprError
from .metrics import INFINITE_DB_TOKEN, chernoff_union_bound_ber
from .nn import save_model
from .sat import FILTERS
from .techniques import parse_techniques

log = logging.getLogger("satpapr")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_NOT_CONVERGED = 0, 1, 2, 3

DEFAULT_TRIALS = {"ccdf": 100_000, "compare": 100_000, "k-sweep": 20_000, "ber": 1000,
                  "denoise-eval": 100, "train-nn": 100}

CCDF_HEADER_PREFIX = "ccdf_"
BER_HEADER_PREFIX = "ber_"
BOUND_COLUMN = "ber_chernoff_bound"
DENOISE_HEADER = ["family", "level", "input_snr_db", "trials", "mse_before", "snr_before_db", "psnr_before_db",
                  "mse_after", "snr_after_db", "psnr_after_db"]
COMPARE_HEADER = ["data_source", "technique", "papr_db_at_2pct", "reduction_percent"]
KSWEEP_HEADER = ["k", "mean_threshold_rel", "mean_peaks", "papr_db_at_2pct"]
TRAIN_HEADER = ["epoch", "mse"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def fmt(v) -> str:
    """Locale-free number formatting with 10 significant digits."""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isinf(v):
        return INFINITE_DB_TOKEN if v > 0 else "-" + INFINITE_DB_TOKEN
    return format(v, ".10g")


def _write_csv(path, header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([c if isinstance(c, str) else fmt(c) for c in r])
    text = buf.getvalue()
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return text


def _report(args, line: str) -> None:
    # summaries go to stdout only when the CSV itself went to a file
    print(line, file=sys.stdout if args.cfg.out else sys.stderr)


def cmd_ccdf(args) -> int:
    cfg = args.cfg
    grid = cfg.thresholds_db if cfg.thresholds_db is not None else ex.DEFAULT_THRESHOLDS
    curves, samples = ex.ccdf_sweep(cfg.techniques, cfg.trials, cfg.seed, grid, cfg.ofdm,
                                    cfg.reducer_settings(), cfg.threads)
    header = ["threshold_db"] + [CCDF_HEADER_PREFIX + t for t in cfg.techniques]
    rows = [[th] + [curves[t].probabilities[i] for t in cfg.techniques] for i, th in enumerate(grid)]
    _write_csv(cfg.out, header, rows)
    for t in cfg.techniques:
        _report(args, f"papr_at_2pct {t} {fmt(ex.papr_at_probability(samples[t]))} dB")
    return EXIT_OK


def cmd_ber(args) -> int:
    cfg = args.cfg
    settings = cfg.reducer_settings()
    curves = {t: run_ber(t, cfg.channel, cfg.snr_db, cfg.trials, cfg.seed, cfg.ofdm, settings, cfg.threads)
              for t in cfg.techniques}
    bound = chernoff_union_bound_ber(np.where(np.isinf(cfg.snr_db), 1e3, cfg.snr_db), cfg.ofdm.modulation_order)
    header = ["snr_db"] + [BER_HEADER_PREFIX + t for t in cfg.techniques] + [BOUND_COLUMN]
    rows = [[s] + [curves[t].curve.points[i].ber for t in cfg.techniques] + [bound[i]]
            for i, s in enumerate(cfg.snr_db)]
    _write_csv(cfg.out, header, rows)
    return EXIT_OK


def cmd_denoise_eval(args) -> int:
    cfg = args.cfg
    d = cfg.denoise
    ofdm = replace(cfg.ofdm, oversampling=d.oversampling)
    rows = ex.denoise_eval(d.families, d.levels, d.input_snr_db, cfg.trials, cfg.seed, ofdm, d.rule, cfg.threads)
    _write_csv(cfg.out, DENOISE_HEADER,
               [[r.family, r.level, r.input_snr_db, r.trials, *r.before, *r.after] for r in rows])
    return EXIT_OK


def cmd_train_nn(args) -> int:
    cfg = args.cfg
    model, report = ex.train_nn(cfg.trials, cfg.seed, cfg.train, cfg.ofdm, cfg.reducer_settings())
    model_path = cfg.model_path or (str(Path(cfg.out).with_suffix(".mlp")) if cfg.out else "satpapr-model.mlp")
    save_model(model, model_path)
    _write_csv(cfg.out, TRAIN_HEADER, [[i, m] for i, m in enumerate(report.mse_history)])
    _report(args, f"final_mse {fmt(report.final_mse)} epochs {report.epochs_used} model {model_path}")
    if not report.converged:
        print(f"satpapr: training stopped at MSE {fmt(report.final_mse)} above goal {fmt(cfg.train.goal_mse)}",
              file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = args.cfg
    rows = ex.compare(cfg.techniques, cfg.trials, cfg.seed, cfg.ofdm, cfg.reducer_settings(), cfg.threads)
    _write_csv(cfg.out, COMPARE_HEADER,
               [[cfg.data_source, r.technique, r.papr_db, r.reduction_percent] for r in rows])
    return EXIT_OK


def cmd_k_sweep(args) -> int:
    cfg = args.cfg
    rows = ex.k_sweep(cfg.k_values, cfg.trials, cfg.seed, cfg.ofdm, cfg.reducer_settings(), cfg.threads)
    _write_csv(cfg.out, KSWEEP_HEADER, [[r.k, r.mean_threshold_rel, r.mean_peaks, r.papr_db_at_2pct] for r in rows])
    return EXIT_OK


COMMANDS = {"ccdf": cmd_ccdf, "ber": cmd_ber, "denoise-eval": cmd_denoise_eval, "train-nn": cmd_train_nn,
            "compare": cmd_compare, "k-sweep": cmd_k_sweep}


def _float_list(text: str) -> list[float]:
    return [float(v) if v.strip().lower() not in ("inf", "noiseless") else math.inf for v in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON experiment config; flags override its keys")
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int, help="symbols (or seeds for denoise-eval)")
    common.add_argument("--out", metavar="PATH", help="CSV output path (stdout if omitted)")
    common.add_argument("--technique", metavar="LIST", help=f"comma-separated subset of none,sat,clip,slm,pts,nn")
    common.add_argument("--k", type=float, help="SAT threshold constant")
    common.add_argument("--filter", choices=FILTERS, help="SAT averaging filter")
    common.add_argument("--threads", type=int)
    common.add_argument("--clip-ratio", type=float, dest="clip_ratio", help="clipping level in dB above rms")
    common.add_argument("--model", metavar="PATH", help="NN weight file (read by 'nn', written by train-nn)")
    common.add_argument("--snr", type=_float_list, metavar="LIST", help="SNR grid in dB; 'inf' is noiseless")
    common.add_argument("--channel", choices=("awgn", "rayleigh_multipath"))
    common.add_argument("--lr", type=float, help="NN learning rate")
    common.add_argument("--goal-mse", type=float, dest="goal_mse")
    common.add_argument("--max-epochs", type=int, dest="max_epochs")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="satpapr", description="OFDM PAPR reduction experiments (SAT, NN, clipping, SLM, PTS)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.trials is not None:
        cfg.trials = args.trials
    if cfg.trials is None:
        cfg.trials = DEFAULT_TRIALS[args.command]
    if args.out is not None:
        cfg.out = args.out
    if args.technique is not None:
        cfg.techniques = parse_techniques(args.technique)
    if args.threads is not None:
        cfg.threads = args.threads
    if args.k is not None:
        cfg.sat = replace(cfg.sat, k=args.k)
    if args.filter is not None:
        cfg.sat = replace(cfg.sat, filter=args.filter)
    if args.clip_ratio is not None:
        cfg.clip_ratio_db = args.clip_ratio
    if args.model is not None:
        cfg.model_path = args.model
    if args.snr is not None:
        cfg.snr_db = tuple(args.snr)
    if args.channel is not None:
        cfg.channel = ChannelConfig(args.channel, cfg.channel.snr_db, cfg.channel.tap_powers, cfg.channel.seed)
    train_over = {k: v for k, v in (("learning_rate", args.lr), ("goal_mse", args.goal_mse),
                                     ("max_epochs", args.max_epochs)) if v is not None}
    if train_over:
        cfg.train = replace(cfg.train, **train_over)
    return cfg.validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.cfg = resolve_config(args)
        with np.errstate(over="raise", invalid="raise", divide="raise"):
            return COMMANDS[args.command](args)
    except UndefinedPaprError as exc:
        print(f"satpapr: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvalidInputError as exc:
        print(f"satpapr: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"satpapr: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
