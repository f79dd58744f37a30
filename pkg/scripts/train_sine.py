"""Train the desk-scale sine model and write its checkpoint and loss history."""

import argparse
import logging
from pathlib import Path

from cogscale.audio_io import synth_music
from cogscale.model import ModelConfig, save_params
from cogscale.signal import SensingSpec, frame
from cogscale.train import TrainConfig, train_model, write_history


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kind", default="sine", choices=["sine", "chirp"])
    ap.add_argument("--music", default="low_tones")
    ap.add_argument("--seconds", type=float, default=20.0)
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("runs/train"))
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    spec = SensingSpec(kind=args.kind)
    music = frame(synth_music(args.music, args.seconds, args.seed).samples).windows
    res = train_model(music, spec, TrainConfig(epochs=args.epochs, seed=args.seed), ModelConfig())
    args.out.mkdir(parents=True, exist_ok=True)
    save_params(args.out / "checkpoint.json", res.params, ModelConfig(),
                {"spec": {"kind": spec.kind, "f": spec.f, "f0": spec.f0, "f1": spec.f1}, "best_epoch": res.best_epoch})
    write_history(args.out / "loss_history.csv", res.history)
    best = [h for h in res.history if h["split"] == "valid"]
    print(f"{res.seconds:.1f} s, best epoch {res.best_epoch}")
    for h in best:
        print(f"epoch {h['epoch']:2d}  target {h['target']:+.4f}  recovery {h['recovery']:.5f}  "
              f"amplitude {h['amplitude']:.5f}  variance {h['variance']:.4f}  total {h['total']:.5f}")


if __name__ == "__main__":
    main()
