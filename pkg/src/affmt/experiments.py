"""Experiment grid runner.

Three experiment families at desk scale, each mirroring one results
table:

* ``gan_table9``  - the discriminator as regressor-only (VA), classifier-
  only (AU) or both, under CCC- and MSE-based VA losses.
* ``mt_table10``  - the multi-task CNN-RNN across VA-loss/expression-loss
  combinations and learning rates (alpha = beta = 0.5).
* ``mt_table11``  - the (alpha, beta) task-weight grid.

One row per grid point; per-seed metric reports plus the per-seed median
(medians resist GAN-training outliers). Runs are deterministic: the same
spec and corpus yield byte-identical results JSON.
"""

from __future__ import annotations

import importlib.resources
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional

import jsonschema

from affmt.data import SplitManifest, split_subject_independent
from affmt.errors import ValidationError
from affmt.metrics import evaluate, median_report
from affmt.preprocessing import Corpus, load_corpus, load_index
from affmt.training import (
    GANTrainConfig,
    GANTrainer,
    MTTrainConfig,
    MultiTaskTrainer,
)

FAMILIES = ("gan_table9", "mt_table10", "mt_table11")

DEFAULT_GRIDS: Dict[str, List[dict]] = {
    "gan_table9": [
        {"heads": "va", "va_mode": "ccc"},
        {"heads": "va", "va_mode": "mse"},
        {"heads": "au"},
        {"heads": "joint", "va_mode": "ccc"},
        {"heads": "joint", "va_mode": "mse"},
    ],
    "mt_table10": [
        {"va_mode": va, "expr_mode": ex, "lr": lr}
        for va in ("ccc", "mse")
        for ex in ("xent", "mse_pre", "mse_post")
        for lr in (1e-3, 1e-4)
    ],
    "mt_table11": [
        {"alpha": 0.0, "beta": 1.0},
        {"alpha": 1.0, "beta": 0.0},
        {"alpha": 0.25, "beta": 0.75},
        {"alpha": 0.75, "beta": 0.25},
        {"alpha": 0.5, "beta": 0.5},
        {"alpha": 0.75, "beta": 0.75},
        {"alpha": 1.0, "beta": 1.0},
    ],
}


# accepted aliases for the loss-mode keys in spec files
_LOSS_KEY_ALIASES = {"va_loss": "va_mode", "expr_loss": "expr_mode"}


def _normalize_loss_keys(overrides: dict) -> dict:
    out = {}
    for key, value in overrides.items():
        canonical = _LOSS_KEY_ALIASES.get(key, key)
        if canonical in out and out[canonical] != value:
            raise ValidationError(
                f"conflicting values for {canonical!r} via alias {key!r}"
            )
        out[canonical] = value
    return out


@dataclass
class ExperimentSpec:
    name: str
    family: str
    corpus: str
    seeds: List[int]
    grid: List[dict] = field(default_factory=list)
    base: dict = field(default_factory=dict)
    split_fractions: tuple = (0.6, 0.2, 0.2)
    split_seed: int = 0
    split_manifest: Optional[str] = None  # path; overrides fractions

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}")
        if not self.seeds:
            raise ValidationError("seeds must be non-empty")
        if not self.grid:
            self.grid = [dict(g) for g in DEFAULT_GRIDS[self.family]]
        self.grid = [_normalize_loss_keys(g) for g in self.grid]
        self.base = _normalize_loss_keys(self.base)
        config_cls = GANTrainConfig if self.family == "gan_table9" else MTTrainConfig
        allowed = {f.name for f in fields(config_cls)}
        for point in self.grid:
            unknown = set(point) - allowed
            if unknown:
                raise ValidationError(
                    f"grid override keys {sorted(unknown)} not in "
                    f"{config_cls.__name__}"
                )
        unknown = set(self.base) - allowed
        if unknown:
            raise ValidationError(
                f"base override keys {sorted(unknown)} not in {config_cls.__name__}"
            )

    @classmethod
    def from_file(cls, path) -> "ExperimentSpec":
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ValidationError(f"experiment spec not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ValidationError(f"experiment spec is not valid JSON: {e}") from e
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"unknown spec keys: {sorted(unknown)}")
        if "split_fractions" in raw:
            raw["split_fractions"] = tuple(raw["split_fractions"])
        return cls(**raw)


def _task_for(family: str, config) -> str:
    if family == "gan_table9":
        return {"va": "va", "au": "au", "joint": "joint"}[config.heads]
    if config.alpha == 0:
        return "expr"
    if config.beta == 0:
        return "va"
    return "joint"


def _grid_key(point: dict) -> str:
    return json.dumps(point, sort_keys=True)


def resolve_split(spec: ExperimentSpec) -> SplitManifest:
    if spec.split_manifest:
        return SplitManifest.from_dict(
            json.loads(Path(spec.split_manifest).read_text())
        )
    videos = load_index(spec.corpus)
    return split_subject_independent(
        videos, spec.split_fractions, seed=spec.split_seed
    )


def run_single(family: str, config, train_corpus: Corpus, test_corpus: Corpus):
    """Train one configuration and evaluate it on the test corpus."""
    task = _task_for(family, config)
    if family == "gan_table9":
        trainer = GANTrainer(config)
        trainer.run(train_corpus)
        preds = trainer.predict_frames(test_corpus.all_images())
        return evaluate(preds, test_corpus.all_frames(), task=task), trainer
    trainer = MultiTaskTrainer(config)
    trainer.run(train_corpus)
    preds = trainer.predict_frames(test_corpus)
    lookup = test_corpus.frame_lookup()
    frames = [lookup[k] for k in preds["keys"]]
    report = evaluate(
        {"va": preds["va"], "expr": preds["expr"]}, frames, task=task
    )
    return report, trainer


def run_experiment(spec: ExperimentSpec, checkpoint_root=None) -> dict:
    """Run the full grid; returns the results document (schema-validated).

    When checkpoint_root is given, each (grid point, seed) trainer is
    saved under ``<root>/row<i>_seed<k>/`` for later evaluate/sample use.
    """
    from affmt.training import save_checkpoint

    manifest = resolve_split(spec)
    train_corpus = load_corpus(spec.corpus, video_ids=sorted(manifest.train))
    test_corpus = load_corpus(spec.corpus, video_ids=sorted(manifest.test))
    if not train_corpus.videos or not test_corpus.videos:
        raise ValidationError(
            "split left train or test empty; regenerate the corpus with "
            "the synth-data command or adjust fractions"
        )

    config_cls = GANTrainConfig if spec.family == "gan_table9" else MTTrainConfig
    rows = []
    for i, point in enumerate(sorted(spec.grid, key=_grid_key)):
        per_seed = {}
        for seed in spec.seeds:
            kwargs = dict(spec.base)
            kwargs.update(point)
            kwargs["seed"] = seed
            config = config_cls(**kwargs)
            report, trainer = run_single(
                spec.family, config, train_corpus, test_corpus
            )
            per_seed[str(seed)] = report
            if checkpoint_root is not None:
                save_checkpoint(
                    trainer, Path(checkpoint_root) / f"row{i:02d}_seed{seed}"
                )
        rows.append(
            {
                "grid": point,
                "per_seed": {k: r.to_dict() for k, r in per_seed.items()},
                "median": median_report(per_seed.values()).to_dict(),
            }
        )

    results = {
        "name": spec.name,
        "family": spec.family,
        "corpus": str(spec.corpus),
        "seeds": list(spec.seeds),
        "split": manifest.to_dict(),
        "rows": rows,
    }
    validate_results(results)
    return results


def results_json(results: dict) -> str:
    return json.dumps(results, sort_keys=True, indent=2) + "\n"


def load_schema(family: str) -> dict:
    ref = importlib.resources.files("affmt") / "schemas" / f"{family}.json"
    return json.loads(ref.read_text())


def validate_results(results: dict) -> None:
    """Drift guard: the emitted document must match the checked-in schema."""
    jsonschema.validate(results, load_schema(results["family"]))


def _fmt(v, width=8) -> str:
    return ("-" if v is None else f"{v:.3f}").ljust(width)


def results_table(results: dict) -> str:
    """Aligned text table mirroring the family's table layout."""
    family = results["family"]
    lines = [f"{results['name']} ({family}), median over seeds {results['seeds']}"]
    if family == "gan_table9":
        lines.append(
            "heads    va loss  CCC-V    CCC-A    F1 wght  F1 macro Total Acc"
        )
        for row in results["rows"]:
            g, m = row["grid"], row["median"]
            lines.append(
                f"{g.get('heads', 'joint'):<8} {g.get('va_mode', '-'):<8} "
                f"{_fmt(m['ccc_v'])} {_fmt(m['ccc_a'])} {_fmt(m['f1_weighted'])} "
                f"{_fmt(m['f1_macro'])} {_fmt(m['total_accuracy'])}"
            )
    elif family == "mt_table10":
        lines.append(
            "va loss  expr loss  lr       CCC-V    CCC-A    Accuracy "
            "F1 wght  F1 macro"
        )
        for row in results["rows"]:
            g, m = row["grid"], row["median"]
            lines.append(
                f"{g['va_mode']:<8} {g['expr_mode']:<10} {g['lr']:<8.0e} "
                f"{_fmt(m['ccc_v'])} {_fmt(m['ccc_a'])} {_fmt(m['total_accuracy'])} "
                f"{_fmt(m['f1_weighted'])} {_fmt(m['f1_macro'])}"
            )
    else:
        lines.append(
            "alpha  beta   CCC-V    CCC-A    Accuracy F1 wght  F1 macro"
        )
        for row in results["rows"]:
            g, m = row["grid"], row["median"]
            lines.append(
                f"{g['alpha']:<6.2f} {g['beta']:<6.2f} "
                f"{_fmt(m['ccc_v'])} {_fmt(m['ccc_a'])} {_fmt(m['total_accuracy'])} "
                f"{_fmt(m['f1_weighted'])} {_fmt(m['f1_macro'])}"
            )
    return "\n".join(lines) + "\n"
