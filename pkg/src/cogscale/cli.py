"""Command-line entry points.

Every command reads a flat ``key = value`` config (``--config``), accepts
``--set key=value`` overrides and ``--seed``, and writes its artifacts into
``--out``. Artifacts are staged in a temporary directory and moved into
place only when the command succeeds.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import shutil
import sys
import tempfile
import time
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import mixer
from . import model as M
from . import scenarios
from .audio_io import MUSIC_KINDS, AudioBuffer, load_music, read_wav, synth_music, write_wav
from .bench import benchmark
from .config import RunConfig, load_config
from .dsp import rfft_mag, xcorr_profile
from .loss import LossWeights, target_bins_for, total_loss
from .signal import PCM_MAX, SensingSpec, frame, gen_window, gen_windows, quantize
from .train import ABLATION_FIELDS, HISTORY_FIELDS, TrainingDiverged, ablate, evaluate, train_model, write_rows

log = logging.getLogger("cogscale")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@contextmanager
def staged(out_dir: Path):
    """Yield a scratch directory whose files move into ``out_dir`` on success."""
    out_dir.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".staging-", dir=out_dir))
    try:
        yield tmp
        for p in sorted(tmp.iterdir()):
            p.replace(out_dir / p.name)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


def _csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.10g}" if isinstance(v, float) else v for v in r])


def _spec_meta(spec: SensingSpec) -> dict:
    return {"kind": spec.kind, "f": spec.f, "f0": spec.f0, "f1": spec.f1}


def _music_windows(args, cfg: RunConfig) -> np.ndarray:
    win = cfg.window
    if getattr(args, "music", None):
        buf = load_music(args.music, win.sample_rate)
    else:
        buf = synth_music(cfg.music_kind, cfg.music_duration, cfg.seed, win.sample_rate)
    return frame(buf.samples, win).windows


def _load_checkpoint(path, cfg: RunConfig):
    params, mcfg, meta = M.load_params(path)
    if "spec" in meta and meta["spec"] != _spec_meta(cfg.spec):
        raise ValueError(f"checkpoint was trained for {meta['spec']}, config asks for {_spec_meta(cfg.spec)}")
    if mcfg.window != cfg.window:
        raise ValueError("checkpoint window does not match the config window")
    return params, mcfg


def _params_or_train(args, cfg: RunConfig):
    if args.checkpoint:
        return _load_checkpoint(args.checkpoint, cfg)
    log.info("no checkpoint given; training one from the config")
    music = _music_windows(argparse.Namespace(), cfg)
    res = train_model(music, cfg.spec, cfg.train, cfg.model)
    return res.params, cfg.model


# -- commands --------------------------------------------------------------


def cmd_generate(args, cfg: RunConfig, out: Path) -> None:
    win = cfg.window
    if args.what == "sensing":
        n = max(1, int(round(args.duration / win.duration)))
        samples = gen_windows(cfg.spec, win, n).reshape(-1)
    else:
        samples = synth_music(cfg.music_kind, args.duration, cfg.seed, win.sample_rate).samples
    write_wav(out / f"{args.what}.wav", AudioBuffer(samples, win.sample_rate))


def cmd_train(args, cfg: RunConfig, out: Path) -> None:
    music = _music_windows(args, cfg)
    res = train_model(music, cfg.spec, cfg.train, cfg.model)
    rows = [{"epoch": 0, "split": s, **b.as_dict()} for s, b in res.initial.items()] + res.history
    write_rows(out / "loss_history.csv", rows, HISTORY_FIELDS)
    meta = {"spec": _spec_meta(cfg.spec), "best_epoch": res.best_epoch, "seed": cfg.seed}
    M.save_params(out / "checkpoint.json", res.params, cfg.model, meta)
    (out / "run.cfg").write_text(cfg.dumps())
    print(f"trained {cfg.train.epochs} epochs in {res.seconds:.1f} s; best epoch {res.best_epoch}")


def cmd_adapt(args, cfg: RunConfig, out: Path) -> None:
    params, mcfg = _load_checkpoint(args.checkpoint, cfg)
    win = mcfg.window
    buf = load_music(args.music, win.sample_rate)
    framed = frame(buf.samples, win)
    x = gen_windows(cfg.spec, win, len(framed))
    strat = mixer.Cognitive(params, mcfg)
    mixed = np.empty_like(framed.windows)
    rows = []
    for i, z in enumerate(framed.windows):
        t0 = time.perf_counter()
        mixed[i] = quantize(mixer.mix_float(x[i], z, strat))
        ms = 1e3 * (time.perf_counter() - t0)
        b = total_loss(x[i], mixed[i] - z, z, cfg.spec, cfg.weights, win, cfg.recovery_mode)
        rows.append([i, *b.as_dict().values(), float(np.max(np.abs(mixed[i]))), ms])
    write_wav(out / "adapted.wav", AudioBuffer(mixed.reshape(-1)[: framed.length], win.sample_rate))
    _csv(out / "adapt_metrics.csv",
         ["window", "target", "recovery", "amplitude", "variance", "total", "peak", "latency_ms"], rows)
    mean_ms = float(np.mean([r[-1] for r in rows]))
    budget = 1e3 * win.duration
    print(f"mean latency {mean_ms:.3f} ms per window; budget {budget:.2f} ms; "
          f"{'within' if mean_ms < budget else 'OVER'} budget")


def cmd_mix(args, cfg: RunConfig, out: Path) -> None:
    name = args.strategy or cfg.strategy
    if name not in ("clip", "down2", "down4"):
        raise UsageError(f"baseline strategy must be clip, down2 or down4, got {name!r}")
    win = cfg.window
    buf = load_music(args.music, win.sample_rate)
    framed = frame(buf.samples, win)
    x = gen_windows(cfg.spec, win, len(framed))
    strat = scenarios.strategy_for(name)
    bins = target_bins_for(cfg.spec, win)
    rows, mixed = [], np.empty_like(framed.windows)
    for i, z in enumerate(framed.windows):
        r = mixer.mix(x[i], z, strat, cfg.spec, win)
        mixed[i] = r.mixed
        d = mixer.distortion_energy(r.mixed, x[i] + z, bins, win)
        rows.append([i, int(r.overloaded), r.peak_level, r.sensing_attenuation_db, d])
    write_wav(out / f"mix_{name}.wav", AudioBuffer(mixed.reshape(-1)[: framed.length], win.sample_rate))
    _csv(out / f"mix_{name}.csv", ["window", "overloaded", "peak", "attenuation_db", "distortion"], rows)


def cmd_evaluate(args, cfg: RunConfig, out: Path) -> None:
    from .train import split

    params, mcfg = _load_checkpoint(args.checkpoint, cfg)
    music = _music_windows(args, cfg)
    s = split(len(music), cfg.seed)
    rows = []
    for name, idx in (("train", s.train), ("valid", s.valid), ("test", s.test)):
        b = evaluate(params, music, cfg.spec, cfg.weights, mcfg, idx, cfg.recovery_mode)
        rows.append([name, *b.as_dict().values()])
    _csv(out / "evaluation.csv", ["split", "target", "recovery", "amplitude", "variance", "total"], rows)


def cmd_analyze(args, cfg: RunConfig, out: Path) -> None:
    win = cfg.window
    buf = read_wav(args.wav)
    if len(buf.samples) == 0:
        raise ValueError(f"{args.wav} contains no samples")
    windows = frame(buf.samples, win).windows
    mags = rfft_mag(windows, win=win).mags
    with open(out / "spectrum.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["window", "bin", "freq_hz", "magnitude"])
        for i, row in enumerate(mags):
            for k, v in enumerate(row):
                w.writerow([i, k, f"{k * win.bin_hz:g}", f"{v:.10g}"])
    template = gen_window(cfg.spec, win, 0)
    shifts = [int(s) for s in args.shifts.split(",")]
    with open(out / "xcorr.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["shift", "lag", "value"])
        for s in shifts:
            prof = xcorr_profile(template, np.roll(windows[0], s))
            for lag, v in enumerate(prof):
                w.writerow([s, lag, f"{v:.10g}"])


def cmd_simulate(args, cfg: RunConfig, out: Path) -> None:
    params, mcfg = _params_or_train(args, cfg)
    rows, series_rows = [], []
    for bpm in cfg.bpms:
        for r in scenarios.run_respiration(bpm, params, mcfg, duration=cfg.sim_duration, seed=cfg.seed,
                                           channel=cfg.channel, music_kind=cfg.music_kind, spec=cfg.spec):
            rows.append([r.scenario, bpm, r.mae, r.mean_amplitude])
            series_rows += [[r.scenario, bpm, t, v] for t, v in zip(r.series.times, r.series.values)]
    _csv(out / "bpm_report.csv", ["scenario", "bpm_true", "mae", "mean_amplitude"], rows)
    _csv(out / "breath_series.csv", ["scenario", "bpm_true", "time_s", "amplitude"], series_rows)
    for r in rows:
        print(f"{r[0]:>10s} {r[1]:5.1f} BPM  MAE {r[2]:.3f}")


def cmd_bench(args, cfg: RunConfig, out: Path) -> None:
    if args.checkpoint:
        params, mcfg = _load_checkpoint(args.checkpoint, cfg)
    else:
        mcfg = cfg.model
        params = M.init_params(mcfg, cfg.seed)
    rep = benchmark(params, mcfg, args.windows, cfg.spec, cfg.seed)
    d = rep.as_dict()
    _csv(out / "bench.csv", list(d), [list(d.values())])
    print(f"single {rep.single_fps:.0f} win/s, batched {rep.batched_fps:.0f} win/s, "
          f"latency {rep.mean_latency_ms:.3f} ms (budget {rep.budget_ms:.2f} ms), "
          f"params {rep.param_count} = {rep.param_bytes} bytes")


def cmd_ablate(args, cfg: RunConfig, out: Path) -> None:
    music = _music_windows(args, cfg)
    rows = ablate(music, cfg.spec, cfg.train, cfg.model)
    write_rows(out / "ablation.csv", rows, ABLATION_FIELDS)


COMMANDS = {
    "generate": cmd_generate, "train": cmd_train, "adapt": cmd_adapt, "mix": cmd_mix,
    "evaluate": cmd_evaluate, "analyze": cmd_analyze, "simulate": cmd_simulate,
    "bench": cmd_bench, "ablate": cmd_ablate,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="config override")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="cogscale", description="Cognitive scaling of acoustic sensing signals.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("generate", parents=[common], help="write a sensing or synthetic music WAV")
    s.add_argument("what", choices=["sensing", "music"])
    s.add_argument("--duration", type=float, default=5.0)

    for name, help_ in (("train", "train a model; writes checkpoint.json and loss_history.csv"),
                        ("ablate", "recovery-weight, volume-ratio and sinc sweeps")):
        s = sub.add_parser(name, parents=[common], help=help_)
        s.add_argument("--music", type=Path, help="music WAV; synthesized from the config if omitted")

    s = sub.add_parser("adapt", parents=[common], help="cognitive mixing of a music WAV")
    s.add_argument("--checkpoint", type=Path, required=True)
    s.add_argument("--music", type=Path, required=True)

    s = sub.add_parser("mix", parents=[common], help="baseline mixing (clip, down2, down4)")
    s.add_argument("--strategy", choices=["clip", "down2", "down4"])
    s.add_argument("--music", type=Path, required=True)

    s = sub.add_parser("evaluate", parents=[common], help="loss breakdown per dataset split")
    s.add_argument("--checkpoint", type=Path, required=True)
    s.add_argument("--music", type=Path)

    s = sub.add_parser("analyze", parents=[common], help="spectra and xcorr-vs-shift tables of a WAV")
    s.add_argument("--wav", type=Path, required=True)
    s.add_argument("--shifts", default="0,16,64,128,256")

    s = sub.add_parser("simulate", parents=[common], help="closed-loop respiration simulation")
    s.add_argument("--checkpoint", type=Path)

    s = sub.add_parser("bench", parents=[common], help="throughput and latency")
    s.add_argument("--checkpoint", type=Path)
    s.add_argument("--windows", type=int, default=200)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        overrides = {}
        for item in args.set:
            if "=" not in item:
                raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            overrides[k.strip()] = v
        if args.seed is not None:
            overrides["seed"] = str(args.seed)
        cfg = load_config(args.config, overrides)
        _ = cfg.spec, cfg.model, cfg.train, cfg.channel  # validate eagerly
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (UsageError, KeyError, ValueError, TypeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        with staged(args.out) as tmp:
            COMMANDS[args.command](args, cfg, tmp)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (TrainingDiverged, FloatingPointError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
