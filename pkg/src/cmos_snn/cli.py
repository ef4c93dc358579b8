"""Command-line front end.

Every command is a pure function of the configuration, its input files and
the seed.  Each run writes ``<command>.manifest.json`` next to its outputs
listing the config digest, seed, version and the SHA-256 of every output.

Exit codes: 0 success, 1 configuration error, 2 input-data error,
3 internal invariant violation.  Failures print one ``key=value`` line on
standard error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, Settings, load_settings
from .ecg import NoBeatsError, classify_heart_rate, detect_beats, load_ecg_csv
from .engine import SimulationError
from .network import (Crossbar, infer_batch, load_weights, save_weights, train_all)
from .patterns import Pattern, load_corpus
from .synapse import bcm_curve, delta_w_curve, find_zero_crossing, simulate_pair
from .tasks import JUDGES, perturb_sweep, recognition_sweep

EXIT_OK, EXIT_CONFIG, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(ValueError):
    """Bad command-line values or unreadable input files."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


# ---------------------------------------------------------------------------
# helpers


def _range(text: str, name: str) -> np.ndarray:
    """``a:b:n`` -> ``n`` evenly spaced values from ``a`` to ``b`` inclusive."""
    parts = text.split(":")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except (IndexError, ValueError):
        raise InputError(f"{name} must look like a:b:n, got {text!r}") from None
    if len(parts) != 3 or n < 2 or not a < b:
        raise InputError(f"{name} needs a < b and n >= 2, got {text!r}")
    return np.linspace(a, b, n)


def _pattern(text: str) -> Pattern:
    src = text
    path = Path(text)
    if path.is_file():
        src = path.read_text()
    try:
        return Pattern.from_string("".join(src.split()))
    except ValueError as exc:
        raise InputError(f"bad pattern {text!r}: {exc}") from None


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Run:
    """Per-command context: settings, output directory and produced files."""

    def __init__(self, args, settings: Settings):
        self.args = args
        self.settings = settings
        self.out_dir = Path(args.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.outputs: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        self.outputs.append(p)
        return p

    def add(self, p: Path) -> None:
        self.outputs.append(p)

    def manifest(self) -> Path:
        opts = {k: v for k, v in sorted(vars(self.args).items())
                if k not in ("func", "out_dir", "threads")}
        files = []
        for p in self.outputs:
            try:
                rel = p.resolve().relative_to(self.out_dir.resolve()).as_posix()
            except ValueError:
                rel = str(p)
            files.append({"path": rel, "sha256": _sha256(p)})
        doc = {
            "command": self.args.command,
            "options": opts,
            "config_sha256": self.settings.digest,
            "seed": self.settings.seed,
            "version": __version__,
            "outputs": files,
        }
        path = self.out_dir / f"{self.args.command}.manifest.json"
        _write_json(path, doc)
        return path


def _trained(run: Run, corpus=None) -> Crossbar:
    s = run.settings
    corpus = s.corpus if corpus is None else corpus
    return train_all(Crossbar.fresh(s.network), corpus.array(), params=s.network)


# ---------------------------------------------------------------------------
# commands


def cmd_train(run: Run) -> int:
    s = run.settings
    corpus = s.corpus
    if run.args.corpus is not None:
        try:
            corpus = load_corpus(run.args.corpus)
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot load corpus {run.args.corpus}: {exc}") from None
    xb = _trained(run, corpus)
    out = Path(run.args.out) if run.args.out else run.out_dir / "weights.csv"
    save_weights(out, xb)
    run.add(out)
    lrs = int(np.sum(xb.v_g >= s.network.wmap.v_hi))
    print(f"trained {xb.shape[1]} columns; {lrs} synapses at LRS; weights -> {out}")
    return EXIT_OK


def cmd_infer(run: Run) -> int:
    s = run.settings
    try:
        xb = load_weights(run.args.weights, s.network)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot load weights {run.args.weights}: {exc}") from None
    pat = _pattern(run.args.pattern)
    trace = ("sum.v_ff", "output.v_u", "wta.inhibit")
    res, raw = infer_batch(xb.set_mode("infer"), pat.array(), params=s.network,
                           trace=trace, decimation=run.args.decimation)
    r = res[0]
    verdict = int(r.verdict)
    winner = "none" if verdict < 0 else str(verdict)
    latency = None if np.isnan(r.latency) else float(r.latency)
    _write_json(run.path("infer.json"), {
        "pattern": str(pat), "winner": None if verdict < 0 else verdict, "tie": bool(r.tie),
        "latency_s": latency, "counts": [int(c) for c in r.counts],
    })
    with open(run.path("infer_trace.csv"), "w") as fh:
        raw.trace.to_csv(fh)
    print(f"winner={winner}" + (" tie" if r.tie else ""))
    return EXIT_OK


def cmd_sweep_noise(run: Run) -> int:
    s = run.settings
    judges = JUDGES if run.args.judge == "both" else (run.args.judge,)
    xb = None
    if "circuit" in judges:
        xb = load_weights(run.args.weights, s.network) if run.args.weights else _trained(run)
    results = {}
    for judge in judges:
        res = recognition_sweep(s.corpus, run.args.k, judge, xb, s.network)
        results[judge] = res
        res.write_csv(run.path(f"sweep_k{run.args.k}_{judge}.csv"))
        res.write_json(run.path(f"sweep_k{run.args.k}_{judge}.json"))
        print(json.dumps({"judge": judge, **res.summary()}, sort_keys=True))
    if len(results) == 2:
        a = [c.judged for c in results["oracle"].cases]
        b = [c.judged for c in results["circuit"].cases]
        agree = sum(x == y for x, y in zip(a, b))
        print(json.dumps({"agreement": agree, "total": len(a)}, sort_keys=True))
    return EXIT_OK


def cmd_stdp_curve(run: Run) -> int:
    s = run.settings
    p = s.network.stdp
    lags = _range(run.args.dt_range, "--dt-range")
    rows = []
    for lag in lags:
        sim = simulate_pair(p, None, float(lag), s.network.dt)
        rows.append([repr(float(lag)), repr(float(delta_w_curve(p, lag))), repr(float(sim))])
    _write_csv(run.path("stdp_curve.csv"), ["delta_t_s", "dw_closed_form_v", "dw_simulated_v"],
               rows)
    print(f"{len(rows)} points -> {run.out_dir / 'stdp_curve.csv'}")
    return EXIT_OK


def cmd_bcm_curve(run: Run) -> int:
    s = run.settings
    p = s.hr.theta_low if run.args.theta == 1 else s.hr.theta_high
    freqs = _range(run.args.freqs, "--freqs")
    if freqs[0] <= 0:
        raise InputError("--freqs must be positive")
    drift = bcm_curve(p, freqs, protocol=run.args.protocol, seed=s.seed, events=run.args.events)
    expected = [f * f * p.step_gain * (p.a_plus / (f + 1 / p.tau_plus)
                                        - p.a_minus / (f + 1 / p.tau_minus)) for f in freqs]
    _write_csv(run.path(f"bcm_curve_theta{run.args.theta}.csv"),
               ["f_hz", "drift_per_s", "poisson_expectation_per_s"],
               [[repr(float(f)), repr(float(d)), repr(float(e))]
                for f, d, e in zip(freqs, drift, expected)])
    zero = find_zero_crossing(freqs, drift)
    print(json.dumps({"theta": run.args.theta, "bcm_theta_hz": p.theta(),
                      "zero_crossing_hz": zero}, sort_keys=True))
    return EXIT_OK


def cmd_hr_classify(run: Run) -> int:
    s = run.settings
    try:
        rec = load_ecg_csv(run.args.ecg, run.args.sample_rate)
    except (OSError, ValueError, StopIteration, IndexError) as exc:
        raise InputError(f"cannot read ECG {run.args.ecg}: {exc}") from None
    hr = s.hr
    if run.args.mode is not None:
        hr = replace(hr, mode=run.args.mode)
    beats = detect_beats(rec, s.beat_refractory, s.beat_rel_height)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = classify_heart_rate(hr, beats)
    for w in caught:
        print(f"warning=boundary reason={str(w.message)!r}", file=sys.stderr)
    doc = {"label": res.label, "rate_hz": res.rate_hz, "bpm": res.bpm, "beats": len(beats),
           "dw1": res.dw_low, "dw2": res.dw_high, "theta1_hz": res.theta_low,
           "theta2_hz": res.theta_high, "mode": hr.mode, "boundary": res.boundary}
    _write_json(run.path("hr_classify.json"), doc)
    print(f"label={res.label} bpm={res.bpm:.3f} dw1={res.dw_low:.6g} dw2={res.dw_high:.6g} "
          f"theta1={res.theta_low:.5f}Hz theta2={res.theta_high:.5f}Hz"
          + (" boundary" if res.boundary else ""))
    return EXIT_OK


def cmd_perturb(run: Run) -> int:
    s = run.settings
    pct = run.args.pct
    if not 0 <= pct <= 0.3:
        raise InputError("--pct must lie in [0, 0.3]")
    if run.args.seeds < 1:
        raise InputError("--seeds must be >= 1")
    res = perturb_sweep(s.corpus, pct, run.args.seeds, s.seed, s.network, run.args.threads)
    _write_csv(run.path("perturb_seeds.csv"), ["seed", "survived", "verdicts", "error"],
               [[o.seed, int(o.survived), ";".join(map(str, o.verdicts)), o.error]
                for o in res.outcomes])
    _write_json(run.path("perturb.json"), res.summary())
    print(json.dumps(res.summary(), sort_keys=True))
    return EXIT_OK


def cmd_demo(run: Run) -> int:
    s = run.settings
    xb = _trained(run)
    pats = s.corpus.array()
    verdict = infer_batch(xb.set_mode("infer"), pats, params=s.network).verdict
    lines = []
    for k, v in enumerate(verdict):
        winner = "none" if v < 0 else str(int(v))
        lines.append(f"digit={k} winner={winner} {'OK' if v == k else 'FAIL'}")
    run.path("demo.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK if all(v == k for k, v in enumerate(verdict)) else EXIT_INTERNAL


# ---------------------------------------------------------------------------
# parser


def _global_flags(parser: argparse.ArgumentParser, defaults: bool) -> None:
    def d(value):
        return value if defaults else argparse.SUPPRESS
    parser.add_argument("--config", metavar="FILE", default=d(None), help="YAML configuration file")
    parser.add_argument("--seed", type=int, default=d(None),
                        help="root seed (overrides engine.seed)")
    parser.add_argument("--threads", type=int, default=d(1),
                        help="worker processes for sweeps (does not change outputs)")
    parser.add_argument("--out-dir", default=d("results"), metavar="DIR",
                        help="directory for outputs and the run manifest (default: results)")


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand
    common = _Parser(add_help=False)
    _global_flags(common, defaults=False)

    parser = _Parser(prog="cmos-snn", description="CMOS spiking neural network simulator")
    _global_flags(parser, defaults=True)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", parents=[common], help="train the crossbar on the digit corpus")
    p.add_argument("--corpus", metavar="FILE", help="corpus file (six 15-character lines)")
    p.add_argument("--out", metavar="W.csv", help="weight file (default: OUT_DIR/weights.csv)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", parents=[common], help="present one pattern to a trained crossbar")
    p.add_argument("--weights", required=True, metavar="W.csv", help="weight file from train")
    p.add_argument("--pattern", required=True, metavar="P",
                   help="15 pixels as 0/1 (row-major, 1 = black) or a file holding them")
    p.add_argument("--decimation", type=int, default=10,
                   help="trace every N-th step in infer_trace.csv (default: 10)")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("sweep-noise", parents=[common], help="recognition rate with k flipped pixels")
    p.add_argument("--k", type=int, required=True, choices=range(4), help="flipped pixels (0-3)")
    p.add_argument("--judge", choices=JUDGES + ("both",), default="both",
                   help="oracle, circuit or both (default: both)")
    p.add_argument("--weights", metavar="W.csv",
                   help="weights for the circuit judge (default: train from scratch)")
    p.set_defaults(func=cmd_sweep_noise)

    p = sub.add_parser("stdp-curve", parents=[common], help="weight change versus pair timing")
    p.add_argument("--dt-range", default="-5e-6:5e-6:101", metavar="A:B:N",
                   help="t_post - t_pre grid in seconds (default: -5e-6:5e-6:101)")
    p.set_defaults(func=cmd_stdp_curve)

    p = sub.add_parser("bcm-curve", parents=[common], help="rate-mode weight drift versus frequency")
    p.add_argument("--theta", type=int, choices=(1, 2), default=1,
                   help="1 = low heart-rate threshold set, 2 = high")
    p.add_argument("--freqs", default="0.2:4:39", metavar="A:B:N",
                   help="frequency grid in Hz (default: 0.2:4:39)")
    p.add_argument("--protocol", choices=("poisson", "periodic-offset"), default="poisson",
                   help="spike-train protocol (default: poisson)")
    p.add_argument("--events", type=int, default=20000,
                   help="expected spikes per train at each frequency (default: 20000)")
    p.set_defaults(func=cmd_bcm_curve)

    p = sub.add_parser("hr-classify", parents=[common], help="classify heart rate from an ECG CSV")
    p.add_argument("--ecg", required=True, metavar="F.csv", help="CSV with time_s,amplitude_mv")
    p.add_argument("--mode", choices=("analytic", "simulated"),
                   help="weight-change model (default: tasks.hr_mode)")
    p.add_argument("--sample-rate", type=float, metavar="HZ",
                   help="sample rate when the CSV has no usable time column")
    p.set_defaults(func=cmd_hr_classify)

    p = sub.add_parser("perturb", parents=[common], help="Monte Carlo parameter perturbation")
    p.add_argument("--pct", type=float, required=True, help="relative spread, e.g. 0.1 for +-10%%")
    p.add_argument("--seeds", type=int, default=100, help="number of perturbed systems")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("demo", parents=[common], help="train and recognise all six digits")
    p.set_defaults(func=cmd_demo)
    return parser


def _fail(code: int, kind: str, msg: str) -> int:
    one_line = " ".join(str(msg).split())
    print(f"error={kind} code={code} reason={one_line!r}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except InputError as exc:
        return _fail(EXIT_INPUT, "usage", exc)
    try:
        settings = load_settings(args.config, args.seed)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", exc)
    try:
        run = Run(args, settings)
        code = args.func(run)
        run.manifest()
        return code
    except (InputError, NoBeatsError) as exc:
        return _fail(EXIT_INPUT, "input", exc)
    except OSError as exc:
        return _fail(EXIT_INPUT, "input", f"{exc.filename}: {exc.strerror}")
    except (SimulationError, RuntimeError, AssertionError) as exc:
        return _fail(EXIT_INTERNAL, "internal", exc)
    except ValueError as exc:
        return _fail(EXIT_INPUT, "input", exc)


if __name__ == "__main__":
    sys.exit(main())
