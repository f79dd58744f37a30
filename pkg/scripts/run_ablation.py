"""Recovery-weight, volume-ratio and sinc on/off sweeps, one training budget per cell."""

import argparse
from pathlib import Path

from cogscale.audio_io import synth_music
from cogscale.signal import SensingSpec, frame
from cogscale.train import ABLATION_FIELDS, TrainConfig, ablate, write_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seconds", type=float, default=20.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("runs/ablation.csv"))
    args = ap.parse_args()

    music = frame(synth_music("low_tones", args.seconds, args.seed).samples).windows
    rows = ablate(music, SensingSpec(), TrainConfig(seed=args.seed))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_rows(args.out, rows, ABLATION_FIELDS)
    for r in rows:
        print(f"{r['axis']:>16s} {str(r['value']):>8s}  recovery {r['recovery']:.6f}  total {r['total']:.6f}")


if __name__ == "__main__":
    main()
