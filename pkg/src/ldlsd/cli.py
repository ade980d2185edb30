"""Command-line interface: ``enhance``, ``mix``, ``eval`` and ``demo``.

Exit codes: 0 success, 1 I/O error, 2 invalid arguments or input,
3 solver stopped before convergence (output still written), 4 a demo check failed.
"""

import argparse
import csv
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from .audio_io import WORKING_RATE, AudioError, mix_at_snr, read_wav, resample, write_wav
from .metrics import METRIC_HEADER, format_metric_row, sdr, write_metric_table
from .pipeline import EnhancementConfig, enhance
from .spectrogram import write_matrix_csv
from .synthetic import harmonic_speech, pink_noise, white_noise

log = logging.getLogger("ldlsd")

EXIT_IO = 1
EXIT_ARGS = 2
EXIT_NOT_CONVERGED = 3
EXIT_DEMO_FAILED = 4

TRACE_HEADER = ("iteration", "primal_residual", "sa_residual", "rho")

# (name, noise generator, snr_db, minimum delta SDR for ldlsd)
DEMO_CASES = (("white_0dB", white_noise, 0.0, 2.0), ("pink_5dB", pink_noise, 5.0, 1.5))
DEMO_ORDER_SLACK_DB = 0.5


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------- config


def config_items(cfg, prefix=""):
    """Flatten a nested config dataclass into ``(dotted_key, value)`` pairs."""
    out = []
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if dataclasses.is_dataclass(value):
            out.extend(config_items(value, prefix + f.name + "."))
        else:
            out.append((prefix + f.name, value))
    return out


def _format_value(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_config(cfg):
    return "".join(f"{k}={_format_value(v)}\n" for k, v in config_items(cfg))


def _parse_value(text, current, field):
    t = text.strip()
    low = t.lower()
    if isinstance(current, bool):
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {t!r}")
    if isinstance(current, int):
        return int(t)
    if isinstance(current, float):
        return float(t)
    if field.type is str:
        return t
    if low == "none":
        return None
    return int(t) if int in getattr(field.type, "__args__", ()) else float(t)


def set_key(cfg, key, text):
    """Return a copy of ``cfg`` with the dotted ``key`` parsed from ``text``."""
    head, _, rest = key.partition(".")
    names = {f.name: f for f in dataclasses.fields(cfg)}
    if head not in names:
        raise CliError(f"unknown config key {key!r}", EXIT_ARGS)
    current = getattr(cfg, head)
    if dataclasses.is_dataclass(current):
        if not rest:
            raise CliError(f"config key {key!r} names a section, not a value", EXIT_ARGS)
        return dataclasses.replace(cfg, **{head: set_key(current, rest, text)})
    if rest:
        raise CliError(f"unknown config key {key!r}", EXIT_ARGS)
    try:
        value = _parse_value(text, current, names[head])
    except ValueError as exc:
        raise CliError(f"bad value for {key}: {exc}", EXIT_ARGS) from None
    return dataclasses.replace(cfg, **{head: value})


def parse_assignment(line):
    key, sep, value = line.partition("=")
    if not sep or not key.strip():
        raise CliError(f"expected key=value, got {line!r}", EXIT_ARGS)
    return key.strip(), value.strip()


def read_config_file(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read config file: {exc}", EXIT_IO) from None
    pairs = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            pairs.append(parse_assignment(line))
    return pairs


def build_config(args):
    """Defaults, then the config file, then ``--set`` pairs, then dedicated flags."""
    cfg = EnhancementConfig()
    pairs = read_config_file(args.config) if getattr(args, "config", None) else []
    pairs += [parse_assignment(s) for s in getattr(args, "set", None) or []]
    if getattr(args, "method", None):
        pairs.append(("method", args.method))
    for key, value in pairs:
        cfg = set_key(cfg, key, value)
    try:
        cfg.check()
        cfg.stft.validate(WORKING_RATE)
    except ValueError as exc:
        raise CliError(f"invalid configuration: {exc}", EXIT_ARGS) from None
    return cfg


# ---------------------------------------------------------------- helpers


def load_audio(path):
    try:
        sig = read_wav(path)
    except (OSError, AudioError) as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from None
    return resample(sig, WORKING_RATE)


def save_audio(path, sig):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        write_wav(path, sig)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from None


def _out_dir(path):
    d = Path(path)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {d}: {exc}", EXIT_IO) from None
    return d


def write_trace_csv(path, trace):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for k, primal, coupling, rho in trace:
            w.writerow([k, f"{primal:.9e}", f"{coupling:.9e}", f"{rho:.9e}"])


def write_dumps(args, bundle):
    times = bundle.spec.frame_times()
    try:
        if args.dump_spec:
            write_matrix_csv(_out_dir(args.dump_spec) / "spectrogram.csv", bundle.spec.mag, times)
        if args.dump_spp:
            write_matrix_csv(_out_dir(args.dump_spp) / "spp.csv", bundle.spp, times)
        if args.dump_decomp:
            d = _out_dir(args.dump_decomp)
            for name, m in (("S", bundle.s), ("L", bundle.l), ("E", bundle.e)):
                write_matrix_csv(d / f"{name}.csv", m, times)
        if args.trace_solver:
            write_trace_csv(_out_dir(args.trace_solver) / "solver_trace.csv", bundle.trace)
    except OSError as exc:
        raise CliError(f"cannot write diagnostics: {exc}", EXIT_IO) from None


# ---------------------------------------------------------------- commands


def cmd_enhance(args):
    cfg = build_config(args)
    if args.print_config:
        sys.stdout.write(format_config(cfg))
        return 0
    if not args.inp or not args.out:
        raise CliError("enhance needs --in and --out", EXIT_ARGS)
    noisy = load_audio(args.inp)
    need = cfg.stft.win_samples(WORKING_RATE)
    if len(noisy) < need:
        raise CliError(f"input has {len(noisy)} samples at {WORKING_RATE} Hz, "
                       f"shorter than one {need}-sample analysis window", EXIT_ARGS)
    out, bundle = enhance(noisy, cfg)
    save_audio(args.out, out)
    write_dumps(args, bundle)
    for msg in bundle.warnings:
        log.warning(msg)
    if not bundle.converged:
        return EXIT_NOT_CONVERGED
    return 0


def cmd_mix(args):
    speech = load_audio(args.speech)
    noise = load_audio(args.noise)
    try:
        noisy = mix_at_snr(speech, noise, args.snr)
    except AudioError as exc:
        raise CliError(str(exc), EXIT_ARGS) from None
    save_audio(args.out, noisy)
    return 0


def cmd_eval(args):
    ref = load_audio(args.ref)
    est = load_audio(args.est)
    noisy = load_audio(args.noisy) if args.noisy else None
    try:
        sdr_out = sdr(ref, est).sdr_db
        sdr_in = sdr(ref, noisy).sdr_db if noisy is not None else None
    except ValueError as exc:
        raise CliError(str(exc), EXIT_ARGS) from None
    row = (str(args.est), args.method, args.snr, sdr_in, sdr_out)
    sys.stdout.write(",".join(METRIC_HEADER) + "\n")
    sys.stdout.write(",".join(format_metric_row(*row)) + "\n")
    if args.table:
        try:
            write_metric_table(args.table, [row], append=True)
        except OSError as exc:
            raise CliError(f"cannot write {args.table}: {exc}", EXIT_IO) from None
    return 0


def run_demo(cfg, out_dir=None, emit=print):
    """Synthetic end-to-end checks. Returns ``(all_passed, rows)``."""
    clean = harmonic_speech()
    rows, checks = [], []
    for name, make_noise, snr_db, min_gain in DEMO_CASES:
        noisy = mix_at_snr(clean, make_noise(len(clean)), snr_db)
        sdr_in = sdr(clean, noisy).sdr_db
        outs = {}
        for method in ("ldlsd", "rpca"):
            enhanced, _ = enhance(noisy, dataclasses.replace(cfg, method=method))
            outs[method] = sdr(clean, enhanced).sdr_db
            rows.append((f"{name}.wav", method, snr_db, sdr_in, outs[method]))
            if out_dir is not None:
                save_audio(Path(out_dir) / f"{name}_{method}.wav", enhanced)
        if out_dir is not None:
            save_audio(Path(out_dir) / f"{name}_noisy.wav", noisy)
        gain = outs["ldlsd"] - sdr_in
        checks.append((f"{name} ldlsd delta_sdr {gain:+.2f} dB >= {min_gain:+.2f} dB",
                       gain >= min_gain))
    lds = [r[4] for r in rows if r[1] == "ldlsd"]
    rps = [r[4] for r in rows if r[1] == "rpca"]
    order_ok = (all(a >= b - DEMO_ORDER_SLACK_DB for a, b in zip(lds, rps))
                and any(a > b for a, b in zip(lds, rps)))
    diffs = " ".join(f"{a - b:+.2f}" for a, b in zip(lds, rps))
    checks.append((f"ldlsd minus rpca sdr [{diffs}] dB, none below -{DEMO_ORDER_SLACK_DB:.2f}, "
                   "one above 0", order_ok))
    if out_dir is not None:
        save_audio(Path(out_dir) / "clean.wav", clean)
        write_metric_table(Path(out_dir) / "metrics.csv", rows)
    emit(",".join(METRIC_HEADER))
    for r in rows:
        emit(",".join(format_metric_row(*r)))
    for text, ok in checks:
        emit(f"{'PASS' if ok else 'FAIL'} {text}")
    return all(ok for _, ok in checks), rows


def cmd_demo(args):
    cfg = build_config(args)
    if args.print_config:
        sys.stdout.write(format_config(cfg))
        return 0
    ok, _ = run_demo(cfg, args.out_dir, emit=lambda s: sys.stdout.write(s + "\n"))
    return 0 if ok else EXIT_DEMO_FAILED


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(f"{self.prog}: error: {message}", EXIT_ARGS)


def _config_flags(p):
    p.add_argument("--config", help="file of key=value lines, applied before --set")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override one config value; repeatable; wins over --config")
    p.add_argument("--print-config", action="store_true",
                   help="print the effective configuration and exit")


def build_parser():
    parser = _Parser(prog="ldlsd", description="Dictionary low-rank/sparse speech enhancement.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("enhance", help="enhance a noisy WAV file")
    p.add_argument("--in", dest="inp", help="noisy input WAV")
    p.add_argument("--out", help="enhanced output WAV (16-bit, 8 kHz)")
    p.add_argument("--method", choices=("ldlsd", "rpca"))
    p.add_argument("--dump-spec", metavar="DIR", help="write spectrogram.csv")
    p.add_argument("--dump-spp", metavar="DIR", help="write spp.csv")
    p.add_argument("--dump-decomp", metavar="DIR", help="write S.csv, L.csv and E.csv")
    p.add_argument("--trace-solver", metavar="DIR", help="write solver_trace.csv")
    _config_flags(p)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("mix", help="mix speech and noise at a target SNR (noise is looped if short)")
    p.add_argument("--speech", required=True)
    p.add_argument("--noise", required=True)
    p.add_argument("--snr", type=float, required=True, help="target SNR in dB")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("eval", help="print an SDR metric line")
    p.add_argument("--ref", required=True, help="clean reference WAV")
    p.add_argument("--est", required=True, help="estimate WAV")
    p.add_argument("--noisy", help="noisy input WAV, fills sdr_in and delta_sdr")
    p.add_argument("--method", default="", help="label for the method column")
    p.add_argument("--snr", type=float, default=None, help="label for the snr_db column")
    p.add_argument("--table", help="append the row to this CSV table")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("demo", help="run the synthetic end-to-end checks")
    p.add_argument("--out-dir", help="also write WAVs and metrics.csv here")
    _config_flags(p)
    p.set_defaults(func=cmd_demo)

    parser.add_argument("--print-config", action="store_true",
                        help="print the default configuration and exit")
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="warning: %(message)s", stream=sys.stderr)
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            if args.print_config:
                sys.stdout.write(format_config(EnhancementConfig()))
                return 0
            raise CliError("ldlsd: error: a subcommand is required", EXIT_ARGS)
        code = args.func(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"ldlsd: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    if code == EXIT_NOT_CONVERGED:
        print("warning: solver did not converge; output written anyway", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
