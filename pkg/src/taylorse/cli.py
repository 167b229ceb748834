"""Command-line entry point: ``taylorse {train,enhance,eval,inspect,selftest}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .checkpoint import CheckpointError, load_checkpoint
from .dsp import Waveform, read_wav, write_spectrogram_csv, write_wav
from .metrics import MetricReport, evaluate_pair
from .pipeline import CLASSICAL_METHODS, enhance_classical, enhance_waveform, order_exports
from .training import ConfigError, NumericalError, dump_config, load_config, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("taylorse")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _require_file(path, what):
    p = Path(path)
    if not p.is_file():
        raise DataError(f"{what} not found: {p}")
    return p


def _load_model(path):
    _require_file(path, "checkpoint")
    try:
        return load_checkpoint(path)
    except CheckpointError as exc:
        raise DataError(str(exc)) from exc


def _read(path):
    _require_file(path, "input WAV")
    try:
        return read_wav(path)
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def cmd_train(args) -> int:
    _require_file(args.config, "config file")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "train.cfg").write_text(dump_config(cfg))
    result = train(cfg, out)
    from .plotting import plot_training_curves

    if result.history:
        plot_training_curves(result.history, out / "training_curves.png")
    print(f"checkpoint: {result.checkpoint}")
    print(f"metrics: {out / 'metrics.csv'}")
    return EXIT_OK


def _enhancer(args):
    if args.classical:
        if args.ckpt:
            raise UsageError("--classical and --ckpt are mutually exclusive")
        return lambda w: enhance_classical(w, args.classical)
    if not args.ckpt:
        raise UsageError("either --ckpt or --classical is required")
    model = _load_model(args.ckpt)
    return lambda w: enhance_waveform(w, model)


def cmd_enhance(args) -> int:
    wave = _read(args.inp)
    enhance = _enhancer(args)
    out = enhance(wave)
    write_wav(args.out, Waveform(out.samples, wave.sample_rate))
    return EXIT_OK


def _read_manifest(path):
    path = _require_file(path, "manifest")
    pairs, missing = [], []
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected 'noisy_path,clean_path'")
        resolved = [Path(p) if Path(p).is_absolute() else path.parent / p for p in parts]
        missing += [str(p) for p in resolved if not p.is_file()]
        pairs.append(tuple(resolved))
    if missing:
        raise DataError("missing files listed in manifest:\n" + "\n".join(f"  {m}" for m in missing))
    return pairs


def cmd_eval(args) -> int:
    pairs = _read_manifest(args.pairs)
    enhance = _enhancer(args) if (args.ckpt or args.classical) else None
    noisy_rep, enh_rep = MetricReport(), MetricReport()
    for noisy_path, clean_path in pairs:
        noisy, clean = _read(noisy_path), _read(clean_path)
        if len(noisy) != len(clean):
            raise DataError(f"length mismatch between {noisy_path} and {clean_path}")
        utt = noisy_path.stem
        evaluate_pair(utt, noisy, clean, noisy_rep)
        if enhance is not None:
            evaluate_pair(utt, enhance(noisy), clean, enh_rep)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    noisy_rep.write_csv(out / "unenhanced.csv")
    reports = {"unenhanced": noisy_rep}
    if enhance is not None:
        enh_rep.write_csv(out / "enhanced.csv")
        reports["enhanced"] = enh_rep
    if pairs:
        from .plotting import plot_metric_report

        plot_metric_report(reports, out / "sisnr.png")
    for name, rep in reports.items():
        print(f"{name}: n={len(rep)} mean SISNR {rep.mean_sisnr:.3f} dB, mean LSD {rep.mean_lsd:.3f} dB")
    return EXIT_OK


def cmd_inspect(args) -> int:
    wave = _read(args.inp)
    model = _load_model(args.ckpt)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    from .plotting import plot_order_grids, write_pgm

    grids = order_exports(wave, model)
    ref = max(float(g.magnitude.max()) for _, g in grids)
    for name, g in grids:
        write_spectrogram_csv(out / f"{name}.csv", g)
        write_pgm(out / f"{name}.pgm", g.magnitude, ref=ref)
    plot_order_grids(grids, out / "orders.png")
    print(f"wrote {len(grids)} spectrogram exports to {out}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    ok = run_selftest(quick=args.quick, stream=sys.stdout)
    return EXIT_OK if ok else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="taylorse", description="Taylor-unfolding speech enhancement")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="train a model from a key=value config")
    t.add_argument("--config", required=True, help="key = value config file")
    t.add_argument("--out", required=True, help="output directory for checkpoint, metrics and plot")
    t.add_argument("--seed", type=int, help="override the config seed")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("enhance", help="enhance one WAV file")
    e.add_argument("--in", dest="inp", required=True, help="16 kHz mono PCM16 WAV")
    e.add_argument("--out", required=True, help="enhanced WAV path")
    e.add_argument("--ckpt", help="model.json written by train")
    e.add_argument("--classical", choices=CLASSICAL_METHODS, help="use a classical baseline instead of a model")
    e.set_defaults(func=cmd_enhance)

    v = sub.add_parser("eval", help="SISNR/LSD over a manifest of noisy,clean pairs")
    v.add_argument("--pairs", required=True, help="manifest with one 'noisy_path,clean_path' per line")
    v.add_argument("--ckpt", help="also score a trained model")
    v.add_argument("--classical", choices=CLASSICAL_METHODS, help="also score a classical baseline")
    v.add_argument("--out", default="eval_report", help="report directory (default: eval_report)")
    v.set_defaults(func=cmd_eval)

    i = sub.add_parser("inspect", help="export per-order spectra of one file")
    i.add_argument("--in", dest="inp", required=True, help="16 kHz mono PCM16 WAV")
    i.add_argument("--ckpt", required=True, help="model.json written by train")
    i.add_argument("--out", required=True, help="directory for order_q.csv/.pgm exports")
    i.set_defaults(func=cmd_inspect)

    s = sub.add_parser("selftest", help="run invariant and gradient checks")
    s.add_argument("--quick", action="store_true", help="fewer random seeds, about a second")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"taylorse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"taylorse: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, FloatingPointError) as exc:
        print(f"taylorse: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
