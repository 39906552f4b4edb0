"""Semi-supervised GAN training loop.

Each train_step call performs one generator update; every
``gen_steps_per_disc_step``-th call additionally updates the
discriminator first, so the generator is updated more frequently (the
stated remedy for the discriminator converging too fast). Gradients of
both networks are clipped to global norm 20 before their separate Adam
updates. Fake-image targets use label smoothing (VA/AU 0.01, fake 0.9);
real images keep true targets with a fake-class target of exactly 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import torch

from affmt.errors import TrainingDiverged, ValidationError
from affmt.losses import (
    AnnealSchedule,
    LossBundle,
    anneal_weight,
    discriminator_loss,
    generator_loss,
)
from affmt.models import (
    build_discriminator_c1,
    build_discriminator_c2,
    build_generator_c1,
    build_generator_c2,
    materialize,
)
from affmt.preprocessing.batches import Corpus, FrameBatch, FrameSampler
from affmt.training.config import GANTrainConfig
from affmt.training.optim import Adam, clip_global_norm


@dataclass
class GANStepReport:
    call: int
    gen: LossBundle
    disc: Optional[LossBundle]
    gen_grad_norm: Tuple[float, float]            # (pre clip, post clip)
    disc_grad_norm: Optional[Tuple[float, float]]
    recon_weight: float


class GANTrainer:
    kind = "gan"

    def __init__(self, config: GANTrainConfig):
        self.config = config
        if config.configuration == 1:
            gen_spec = build_generator_c1()
            disc_spec = build_discriminator_c1()
        else:
            gen_spec = build_generator_c2(config.kernel)
            disc_spec = build_discriminator_c2(config.kernel)
        self.generator = materialize(gen_spec, seed=config.seed)
        self.discriminator = materialize(disc_spec, seed=config.seed + 1)
        self.generator.train()
        self.discriminator.train()
        self.gen_opt = Adam(
            list(self.generator.named_parameters()),
            config.gen_lr, config.adam_beta1, config.adam_beta2, config.adam_eps,
        )
        self.disc_opt = Adam(
            list(self.discriminator.named_parameters()),
            config.disc_lr, config.adam_beta1, config.adam_beta2, config.adam_eps,
        )
        self.schedule = AnnealSchedule(
            config.recon_initial, config.recon_floor, config.recon_horizon
        )
        self.z_rng = torch.Generator().manual_seed(config.seed + 0x5EED)
        self.call_count = 0
        self.gen_steps = 0
        self.disc_steps = 0

    @property
    def step(self) -> int:
        return self.call_count

    def _check_finite(self, bundle: LossBundle, which: str):
        if not torch.isfinite(bundle.total):
            raise TrainingDiverged(
                f"non-finite {which} loss at call {self.call_count}",
                diagnostics=bundle.component_floats(),
            )

    def train_step(self, batch: FrameBatch) -> GANStepReport:
        images = torch.from_numpy(np.ascontiguousarray(batch.images))
        va_t = torch.from_numpy(np.ascontiguousarray(batch.va))
        au_t = torch.from_numpy(np.ascontiguousarray(batch.aus))
        if images.shape[-1] != self.discriminator.resolution:
            raise ValidationError(
                f"batch resolution {images.shape[-1]} does not match the "
                f"configuration's {self.discriminator.resolution}"
            )
        n = images.shape[0]
        self.call_count += 1

        disc_bundle = None
        disc_norms = None
        if self.call_count % self.config.gen_steps_per_disc_step == 0:
            z = self.generator.sample_latent(n, self.z_rng)
            with torch.no_grad():
                fake_images = self.generator(z)
            real_out = self.discriminator(images)
            fake_out = self.discriminator(fake_images)
            disc_bundle = discriminator_loss(
                real_out, va_t, au_t, fake_out,
                va_mode=self.config.va_mode, heads=self.config.heads,
            )
            self._check_finite(disc_bundle, "discriminator")
            self.disc_opt.zero_grad()
            self.gen_opt.zero_grad()
            disc_bundle.total.backward()
            disc_norms = clip_global_norm(
                self.disc_opt.params, self.config.grad_clip
            )
            self.disc_opt.step()
            self.disc_steps += 1

        z = self.generator.sample_latent(n, self.z_rng)
        fake_images = self.generator(z)
        fake_out = self.discriminator(fake_images)
        w_r = anneal_weight(self.gen_steps, self.schedule)
        gen_bundle = generator_loss(fake_out.fake, fake_images, images, w_r)
        self._check_finite(gen_bundle, "generator")
        self.gen_opt.zero_grad()
        self.disc_opt.zero_grad()  # backward also reaches the discriminator
        gen_bundle.total.backward()
        gen_norms = clip_global_norm(self.gen_opt.params, self.config.grad_clip)
        self.gen_opt.step()
        self.gen_steps += 1

        return GANStepReport(
            call=self.call_count,
            gen=gen_bundle.detach(),
            disc=None if disc_bundle is None else disc_bundle.detach(),
            gen_grad_norm=gen_norms,
            disc_grad_norm=disc_norms,
            recon_weight=w_r,
        )

    def run(self, corpus: Corpus, steps: Optional[int] = None) -> List[GANStepReport]:
        """Train for ``steps`` calls, resuming from the current call count."""
        steps = self.config.steps if steps is None else steps
        sampler = FrameSampler(corpus, self.config.batch, self.config.seed)
        reports = []
        for _ in range(steps):
            batch = sampler.batch(self.call_count)
            reports.append(self.train_step(batch))
        return reports

    def sample_images(self, n: int, seed: int) -> torch.Tensor:
        """Generate n images from a fresh uniform latent batch (inference mode)."""
        was_training = self.generator.training
        self.generator.eval()
        with torch.no_grad():
            z = self.generator.sample_latent(n, torch.Generator().manual_seed(seed))
            images = self.generator(z)
        if was_training:
            self.generator.train()
        return images

    def predict_frames(self, images_uint8: np.ndarray, batch: int = 128) -> Dict[str, np.ndarray]:
        """Discriminator predictions (va, aus) for uint8 HxWx3 frames."""
        was_training = self.discriminator.training
        self.discriminator.eval()
        vas, aus = [], []
        with torch.no_grad():
            for i in range(0, len(images_uint8), batch):
                chunk = images_uint8[i:i + batch].astype(np.float32) / 127.5 - 1.0
                out = self.discriminator(
                    torch.from_numpy(np.transpose(chunk, (0, 3, 1, 2)))
                )
                vas.append(out.va.numpy())
                aus.append(out.aus.numpy())
        if was_training:
            self.discriminator.train()
        return {"va": np.concatenate(vas), "aus": np.concatenate(aus)}

    # --- checkpoint plumbing -------------------------------------------------

    def named_tensors(self) -> Dict[str, torch.Tensor]:
        out = {}
        for name, t in self.generator.state_dict().items():
            out[f"gen.{name}"] = t
        for name, t in self.discriminator.state_dict().items():
            out[f"disc.{name}"] = t
        out.update(self.gen_opt.state_tensors("adam_gen"))
        out.update(self.disc_opt.state_tensors("adam_disc"))
        return out

    def load_tensors(self, tensors: Dict[str, torch.Tensor]):
        gen_sd = {k[len("gen."):]: v for k, v in tensors.items()
                  if k.startswith("gen.")}
        disc_sd = {k[len("disc."):]: v for k, v in tensors.items()
                   if k.startswith("disc.")}
        self.generator.load_state_dict(gen_sd)
        self.discriminator.load_state_dict(disc_sd)
        self.gen_opt.load_state_tensors("adam_gen", tensors)
        self.disc_opt.load_state_tensors("adam_disc", tensors)

    def counters(self) -> Dict[str, int]:
        return {
            "call_count": self.call_count,
            "gen_steps": self.gen_steps,
            "disc_steps": self.disc_steps,
            "adam_gen_t": self.gen_opt.t,
            "adam_disc_t": self.disc_opt.t,
        }

    def set_counters(self, counters: Dict[str, int]):
        self.call_count = counters["call_count"]
        self.gen_steps = counters["gen_steps"]
        self.disc_steps = counters["disc_steps"]
        self.gen_opt.t = counters["adam_gen_t"]
        self.disc_opt.t = counters["adam_disc_t"]

    def rng_state(self) -> bytes:
        return bytes(self.z_rng.get_state().numpy().tobytes())

    def set_rng_state(self, raw: bytes):
        state = torch.from_numpy(np.frombuffer(raw, dtype=np.uint8).copy())
        self.z_rng.set_state(state)
