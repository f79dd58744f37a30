"""Why the cognitive mixer does not beat clipping on distortion.

Compares clip and cognitive mixes on overloading windows against two
references (the unclipped sum and the sensing signal alone), reports how
much music survives in each mix, and runs the model-free per-window
optimizer to show where the objective's optimum lies.
"""

import argparse

import numpy as np

from cogscale import mixer
from cogscale.audio_io import synth_music
from cogscale.dsp import rfft_mag
from cogscale.loss import total_loss, target_bins_for
from cogscale.model import ModelConfig, direct_window_optimize, load_params
from cogscale.signal import PCM_MAX, SensingSpec, frame, gen_window
from cogscale.train import TrainConfig, train_model


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--checkpoint")
    ap.add_argument("--windows", type=int, default=40)
    args = ap.parse_args()

    spec = SensingSpec()
    bins = target_bins_for(spec)
    if args.checkpoint:
        params, config, _ = load_params(args.checkpoint)
    else:
        music = frame(synth_music("low_tones", 20.0, 0).samples).windows
        params, config = train_model(music, spec, TrainConfig()).params, ModelConfig()
    z_all = frame(synth_music("tone_cluster", 5.0, 7).samples).complete
    rows = []
    for j, z in enumerate(z_all):
        x = gen_window(spec, index=j)
        if not np.any(np.abs(x + z) > PCM_MAX):
            continue
        clip = mixer.mix(x, z, mixer.Clip()).mixed.astype(float)
        cog = mixer.mix(x, z, mixer.Cognitive(params, config)).mixed.astype(float)
        low = slice(1, 171)  # below 16 kHz, where the music lives
        zm = rfft_mag(z).mags[low]
        keep = lambda w: float(np.dot(rfft_mag(w).mags[low], zm) / np.dot(zm, zm))
        rows.append((mixer.distortion_energy(clip, x + z, bins), mixer.distortion_energy(cog, x + z, bins),
                     mixer.distortion_energy(clip, x, bins), mixer.distortion_energy(cog, x, bins),
                     keep(clip), keep(cog)))
        if len(rows) == args.windows:
            break
    r = np.array(rows)
    print(f"{len(r)} overloading windows")
    print(f"distortion vs x+z : clip {np.median(r[:, 0]):.4f}  cognitive {np.median(r[:, 1]):.4f}")
    print(f"distortion vs x   : clip {np.median(r[:, 2]):.4f}  cognitive {np.median(r[:, 3]):.4f}")
    print(f"music kept (<16k) : clip {np.median(r[:, 4]):.3f}  cognitive {np.median(r[:, 5]):.3f}")

    x = gen_window(spec)
    xhat = direct_window_optimize(x, np.zeros(512), spec, steps=500)
    b = total_loss(x, xhat, np.zeros(512), spec)
    print(f"direct optimum on silence: target {b.target:+.4f} recovery {b.recovery:.5f} amplitude {b.amplitude:.5f}; "
          f"min |x̂|/m = {np.min(np.abs(xhat)) / PCM_MAX:.3f}")


if __name__ == "__main__":
    main()
