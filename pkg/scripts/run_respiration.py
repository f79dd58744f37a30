"""Closed-loop breathing-rate simulation for every mixer scenario."""

import argparse
import csv
from pathlib import Path

from cogscale.audio_io import synth_music
from cogscale.model import load_params
from cogscale.scenarios import run_respiration
from cogscale.sensing import ChannelSpec
from cogscale.signal import SensingSpec, frame
from cogscale.train import TrainConfig, train_model


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--checkpoint", type=Path, help="trained on the fly when omitted")
    ap.add_argument("--bpm", type=float, nargs="+", default=[12, 15, 18])
    ap.add_argument("--reflector-gain", type=float, default=ChannelSpec.reflector_gain)
    ap.add_argument("--noise", type=float, default=ChannelSpec.noise_level)
    ap.add_argument("--seconds", type=float, default=60.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("runs/respiration.csv"))
    args = ap.parse_args()

    if args.checkpoint:
        params, config, _ = load_params(args.checkpoint)
    else:
        music = frame(synth_music("low_tones", 20.0, args.seed).samples).windows
        params, config = train_model(music, SensingSpec(), TrainConfig(seed=args.seed)).params, None
    channel = ChannelSpec(reflector_gain=args.reflector_gain, noise_level=args.noise)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["bpm_true", "scenario", "mae", "mean_amplitude", "reports"])
        for bpm in args.bpm:
            for r in run_respiration(bpm, params, config, duration=args.seconds, seed=args.seed, channel=channel):
                w.writerow([bpm, r.scenario, f"{r.mae:.6g}", f"{r.mean_amplitude:.6g}",
                            " ".join(f"{b:.2f}" for _, b in r.reports)])
                print(f"{bpm:5.1f} BPM {r.scenario:>10s}  MAE {r.mae:.3f}  amplitude {r.mean_amplitude:.3f}")


if __name__ == "__main__":
    main()
