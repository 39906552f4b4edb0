"""Semi-supervised GAN walkthrough (configuration 1, 32x32).

Trains briefly on a synthetic corpus, prints the layer tables and loss
trajectory, and writes a grid of generated samples.
"""

import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from affmt.models import build_discriminator_c1, build_generator_c1, render_table
from affmt.preprocessing import load_corpus, synth_corpus
from affmt.preprocessing.image import from_unit_range
from affmt.training import GANTrainConfig, GANTrainer

print(render_table(build_generator_c1()))
print(render_table(build_discriminator_c1()))

out = Path(tempfile.mkdtemp(prefix="affmt_gan_"))
synth_corpus(out / "corpus", n_subjects=4, frames_per_subject=96,
             resolution=32, seed=0)
corpus = load_corpus(out / "corpus")

config = GANTrainConfig(configuration=1, batch=64, steps=100, seed=0)
trainer = GANTrainer(config)
reports = trainer.run(corpus)

print(f"updates: generator {trainer.gen_steps}, discriminator "
      f"{trainer.disc_steps} (1 per {config.gen_steps_per_disc_step} calls)")
for r in reports[::20]:
    disc = f"{float(r.disc.total):+.3f}" if r.disc else "   -  "
    print(f"call {r.call:>4}: gen {float(r.gen.total):+.3f} "
          f"(log {float(r.gen.components['gen']):+.3f}, "
          f"recon {float(r.gen.components['recon']):.3f}, w_r {r.recon_weight:.3f}) "
          f"disc {disc} | post-clip grad norm {r.gen_grad_norm[1]:.2f}")

images = trainer.sample_images(16, seed=7)
pixels = from_unit_range(np.transpose(images.numpy(), (0, 2, 3, 1)))
grid = np.concatenate(
    [np.concatenate(list(pixels[i * 4:(i + 1) * 4]), axis=1) for i in range(4)],
    axis=0,
)
Image.fromarray(grid).save(out / "samples.png")
print(f"\nsample grid written to {out / 'samples.png'}")
print(f"sample range: [{float(images.min()):.3f}, {float(images.max()):.3f}]")
