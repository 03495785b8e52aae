"""Command-line driver.

Subcommands: calibrate, train, recognize, evaluate, simulate,
export-templates. Exit codes:

    0  success
    2  usage error
    3  unreadable input, bad audio, or bad configuration
    4  no speech found / query rejected / training inconsistent
    5  vocabulary file corrupt or wrong version
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field

from .config import (DEFAULT_CONFIG_FILENAME, Config, apply_assignments,
                     load_config, validate, write_config)
from .errors import (ConfigError, CorruptEntry, FrameTooShort,
                     InconsistentTraining, IoFailure, MalformedContainer,
                     NoSpeech, SpeechServoError, TooFewFrames,
                     TooFewFramesForM, UnsupportedChannels, UnsupportedRate,
                     UnsupportedVersion)
from .pipeline import (load_utterance, recognize_file, resolve_thresholds,
                       short_time_profile, train_from_files)
from .endpoint import calibrate_noise
from .servo import (Command, SurfaceState, apply_command, format_state,
                    parse_state, write_waveform_csv)
from .store import export_text, load_vocabulary, save_vocabulary

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_REJECTED = 4
EXIT_STORE = 5

REJECTED_COL = "(rejected)"


@dataclass
class EvalReport:
    """Per-label and overall recognition outcome over one manifest."""

    true_labels: list[str]                       # sorted unique labels under test
    predicted_labels: list[str]                  # sorted vocabulary labels
    results: list[tuple[str, str, str | None]] = field(default_factory=list)

    @property
    def total(self) -> int:
        return len(self.results)

    def trials(self, label: str) -> int:
        return sum(1 for _, true, _ in self.results if true == label)

    def correct(self, label: str) -> int:
        return sum(1 for _, true, pred in self.results if true == label and pred == true)

    def rejections(self, label: str) -> int:
        return sum(1 for _, true, pred in self.results if true == label and pred is None)

    def confusion(self, true_label: str, predicted: str) -> int:
        if predicted == REJECTED_COL:
            return self.rejections(true_label)
        return sum(1 for _, true, pred in self.results
                   if true == true_label and pred == predicted)

    @property
    def total_correct(self) -> int:
        return sum(1 for _, true, pred in self.results if pred == true)

    def to_text(self) -> str:
        lines = []
        if not self.results:
            return "no entries\noverall rate: n/a (0 files)\n"
        width = max(len(l) for l in self.true_labels + ["label"]) + 2
        lines.append(f"{'label':<{width}}trials  correct  rejected  rate")
        for label in self.true_labels:
            n = self.trials(label)
            ok = self.correct(label)
            rej = self.rejections(label)
            rate = 100.0 * ok / n
            lines.append(f"{label:<{width}}{n:>6}  {ok:>7}  {rej:>8}  {rate:5.1f}%")
        rate = 100.0 * self.total_correct / self.total
        lines.append(f"overall rate: {rate:.1f}% ({self.total_correct}/{self.total})")
        lines.append("")
        cols = self.predicted_labels + [REJECTED_COL]
        cw = max(len(c) for c in cols) + 2
        lines.append("confusion (rows true, cols predicted)")
        lines.append(" " * width + "".join(f"{c:>{cw}}" for c in cols))
        for label in self.true_labels:
            row = "".join(f"{self.confusion(label, c):>{cw}}" for c in cols)
            lines.append(f"{label:<{width}}{row}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        cols = self.predicted_labels + [REJECTED_COL]
        head = "true_label,trials,correct,rejected,rate"
        head += "".join(f",pred:{c}" for c in cols)
        rows = [head]
        for label in self.true_labels:
            n = self.trials(label)
            ok = self.correct(label)
            row = f"{label},{n},{ok},{self.rejections(label)},{ok / n:.4f}"
            row += "".join(f",{self.confusion(label, c)}" for c in cols)
            rows.append(row)
        if self.results:
            rate = f"{self.total_correct / self.total:.4f}"
        else:
            rate = "n/a"
        totals = f"TOTAL,{self.total},{self.total_correct},," + rate
        totals += "".join(
            f",{sum(self.confusion(l, c) for l in self.true_labels)}" for c in cols)
        rows.append(totals)
        return "\n".join(rows) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="speechservo",
        description="isolated-word speech commands driving simulated servo surfaces")
    parser.add_argument("--config", help="config file (key = value lines)")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override one config key")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="derive detection thresholds from room tone")
    p.add_argument("wav")

    p = sub.add_parser("train", help="build one word template from recordings")
    p.add_argument("label")
    p.add_argument("wavs", nargs="+")
    p.add_argument("--vocab", help="vocabulary file to create or update")

    p = sub.add_parser("recognize", help="match one recording against the vocabulary")
    p.add_argument("wav")
    p.add_argument("--vocab")
    p.add_argument("--actuate", action="store_true",
                   help="apply the recognized command to the surface state file")
    p.add_argument("--state", help="surface state file")
    p.add_argument("--all-distances", action="store_true")

    p = sub.add_parser("evaluate", help="batch recognition over a manifest")
    p.add_argument("manifest", help="CSV lines of <path>,<true-label>")
    p.add_argument("--vocab")
    p.add_argument("--csv", help="also write the report as CSV")

    p = sub.add_parser("simulate", help="apply a command sequence to the surfaces")
    p.add_argument("commands", nargs="+", choices=[c.value for c in Command])
    p.add_argument("--state")
    p.add_argument("--pwm-csv", help="dump the resulting PWM waveforms")
    p.add_argument("--pwm-rate", type=int, default=100_000)
    p.add_argument("--pwm-periods", type=int, default=1)

    p = sub.add_parser("export-templates", help="print a vocabulary as text")
    p.add_argument("--vocab")
    p.add_argument("--out", help="write to a file instead of stdout")

    return parser


def _resolve_config(args) -> Config:
    if args.config:
        cfg = load_config(args.config)
    elif os.path.exists(DEFAULT_CONFIG_FILENAME):
        cfg = load_config(DEFAULT_CONFIG_FILENAME)
    else:
        cfg = Config()
    pairs = []
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        pairs.append((key, value))
    cfg = apply_assignments(cfg, pairs)
    vocab = getattr(args, "vocab", None)
    if vocab:
        cfg.vocab_path = vocab
    state = getattr(args, "state", None)
    if state:
        cfg.state_path = state
    return validate(cfg)


def _load_state(cfg: Config) -> SurfaceState:
    if os.path.exists(cfg.state_path):
        with open(cfg.state_path, "r", encoding="utf-8") as fh:
            try:
                return parse_state(fh.read().strip(), cfg.step_deg)
            except ValueError as exc:
                raise IoFailure(f"{cfg.state_path}: {exc}") from exc
    return SurfaceState.neutral(cfg.step_deg)


def _save_state(state: SurfaceState, cfg: Config) -> None:
    with open(cfg.state_path, "w", encoding="utf-8") as fh:
        fh.write(format_state(state) + "\n")


def cmd_calibrate(args, cfg: Config) -> int:
    buf = load_utterance(args.wav, cfg)
    _, profile = short_time_profile(buf, cfg)
    noise = calibrate_noise(profile, cfg.noise_frames)
    fresh = validate(apply_assignments(cfg, [("m1", "none"), ("m2", "none"), ("m3", "none")]))
    thr = resolve_thresholds(profile, fresh)
    print(f"noise: mean_energy={noise.mean_energy:.6g} mean_zcr={noise.mean_zcr:.6g} "
          f"frames={noise.frames_used}")
    print(f"thresholds: m1={thr.m1:.6g} m2={thr.m2:.6g} m3={thr.m3:.6g}")
    cfg.m1, cfg.m2, cfg.m3 = thr.m1, thr.m2, thr.m3
    target = args.config or DEFAULT_CONFIG_FILENAME
    write_config(cfg, target)
    print(f"wrote {target}")
    return EXIT_OK


def cmd_train(args, cfg: Config) -> int:
    if len(args.wavs) != cfg.train_count:
        print(f"error: training takes exactly {cfg.train_count} recordings, "
              f"got {len(args.wavs)}", file=sys.stderr)
        return EXIT_USAGE
    template = train_from_files(args.wavs, args.label, cfg)
    vocab = load_vocabulary(cfg.vocab_path) if os.path.exists(cfg.vocab_path) else {}
    vocab[args.label] = template
    save_vocabulary(vocab, cfg.vocab_path)
    print(f"template '{args.label}' successfully modified "
          f"({template.trained_from} utterances) -> {cfg.vocab_path}")
    return EXIT_OK


def cmd_recognize(args, cfg: Config) -> int:
    vocab = load_vocabulary(cfg.vocab_path)
    result = recognize_file(args.wav, vocab, cfg)
    if args.all_distances:
        for label in sorted(result.all_distances):
            print(f"  {label}: {result.all_distances[label]:.6f}")
    if result.rejected:
        print(f"rejected min_distance={result.distance:.6f} "
              f"(threshold {cfg.reject_threshold:.6f})")
        return EXIT_REJECTED
    print(f"label={result.label} distance={result.distance:.6f}")
    if args.actuate:
        try:
            cmd = Command(result.label)
        except ValueError:
            print(f"error: label {result.label!r} is not an actuation command",
                  file=sys.stderr)
            return EXIT_INPUT
        state = apply_command(_load_state(cfg), cmd, cfg.actuation_mode)
        _save_state(state, cfg)
        print(format_state(state))
    return EXIT_OK


def _read_manifest(path) -> list[tuple[str, str]]:
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if "," not in text:
                raise ConfigError(f"{path}:{lineno}: expected <path>,<label>")
            wav, _, label = text.partition(",")
            wav = wav.strip()
            if not os.path.isabs(wav):
                wav = os.path.join(base, wav)
            entries.append((wav, label.strip()))
    return entries


def cmd_evaluate(args, cfg: Config) -> int:
    vocab = load_vocabulary(cfg.vocab_path)
    entries = _read_manifest(args.manifest)
    unknown = sorted({label for _, label in entries} - set(vocab))
    if unknown:
        print(f"error: manifest labels not in vocabulary: {unknown}", file=sys.stderr)
        return EXIT_INPUT

    report = EvalReport(
        true_labels=sorted({label for _, label in entries}),
        predicted_labels=sorted(vocab),
    )
    for wav, true_label in entries:
        try:
            result = recognize_file(wav, vocab, cfg)
            predicted = result.label
        except (NoSpeech, TooFewFramesForM, TooFewFrames, FrameTooShort,
                MalformedContainer, UnsupportedRate, UnsupportedChannels,
                OSError) as exc:
            print(f"note: {wav}: {exc}", file=sys.stderr)
            predicted = None  # failures count as rejections
        report.results.append((wav, true_label, predicted))

    print(f"evaluated {report.total} files against {len(vocab)} templates")
    print(report.to_text(), end="")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
        print(f"wrote {args.csv}")
    return EXIT_OK


def cmd_simulate(args, cfg: Config) -> int:
    state = _load_state(cfg)
    for name in args.commands:
        state = apply_command(state, Command(name), cfg.actuation_mode)
        print(f"{name:<11} {format_state(state)}")
    _save_state(state, cfg)
    if args.pwm_csv:
        with open(args.pwm_csv, "w", newline="", encoding="utf-8") as fh:
            write_waveform_csv(state, args.pwm_rate, args.pwm_periods, fh)
        print(f"wrote {args.pwm_csv}")
    return EXIT_OK


def cmd_export(args, cfg: Config) -> int:
    vocab = load_vocabulary(cfg.vocab_path)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            export_text(vocab, fh)
        print(f"wrote {args.out}")
    else:
        export_text(vocab, sys.stdout)
    return EXIT_OK


_HANDLERS = {
    "calibrate": cmd_calibrate,
    "train": cmd_train,
    "recognize": cmd_recognize,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
    "export-templates": cmd_export,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        cfg = _resolve_config(args)
        return _HANDLERS[args.command](args, cfg)
    except (CorruptEntry, UnsupportedVersion) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STORE
    except (NoSpeech, TooFewFramesForM, InconsistentTraining) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    except (MalformedContainer, UnsupportedRate, UnsupportedChannels, IoFailure,
            TooFewFrames, FrameTooShort, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SpeechServoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
