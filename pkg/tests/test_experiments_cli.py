import json

import jsonschema
import pytest

from affmt.cli import main
from affmt.errors import ValidationError
from affmt.experiments import (
    DEFAULT_GRIDS,
    ExperimentSpec,
    load_schema,
    results_json,
    results_table,
    run_experiment,
    validate_results,
)

MT_BASE = {
    "steps": 4,
    "n_sequences": 2,
    "seq_length": 8,
    "attention_length": 4,
    "backbone": "tiny",
    "gru_units": 16,
    "feature_dim": 32,
    "resolution": 32,
}

GAN_BASE = {"configuration": 1, "batch": 4, "steps": 3}


def mt_spec(corpus, grid=None):
    return ExperimentSpec(
        name="tiny-mt",
        family="mt_table11",
        corpus=str(corpus),
        seeds=[0],
        grid=grid or [{"alpha": 0.5, "beta": 0.5}, {"alpha": 0.0, "beta": 1.0}],
        base=dict(MT_BASE),
        split_fractions=(0.5, 0.25, 0.25),
    )


def test_spec_validation():
    with pytest.raises(ValidationError):
        ExperimentSpec(name="x", family="nope", corpus="c", seeds=[0])
    with pytest.raises(ValidationError):
        ExperimentSpec(name="x", family="mt_table11", corpus="c", seeds=[])
    with pytest.raises(ValidationError):
        ExperimentSpec(
            name="x", family="mt_table11", corpus="c", seeds=[0],
            grid=[{"bogus_key": 1}],
        )


def test_loss_key_aliases_accepted():
    spec = ExperimentSpec(
        name="alias", family="mt_table10", corpus="c", seeds=[0],
        grid=[{"va_loss": "ccc", "expr_loss": "xent", "lr": 1e-3}],
    )
    assert spec.grid == [{"va_mode": "ccc", "expr_mode": "xent", "lr": 1e-3}]
    with pytest.raises(ValidationError):
        ExperimentSpec(
            name="alias", family="mt_table10", corpus="c", seeds=[0],
            grid=[{"va_loss": "ccc", "va_mode": "mse", "expr_mode": "xent",
                   "lr": 1e-3}],
        )


def test_default_grids_match_table_rows():
    assert len(DEFAULT_GRIDS["mt_table11"]) == 7
    assert {(g["alpha"], g["beta"]) for g in DEFAULT_GRIDS["mt_table11"]} == {
        (0.0, 1.0), (1.0, 0.0), (0.25, 0.75), (0.75, 0.25),
        (0.5, 0.5), (0.75, 0.75), (1.0, 1.0),
    }
    assert len(DEFAULT_GRIDS["mt_table10"]) == 12
    gan = DEFAULT_GRIDS["gan_table9"]
    assert {(g.get("heads"), g.get("va_mode")) for g in gan} == {
        ("va", "ccc"), ("va", "mse"), ("au", None),
        ("joint", "ccc"), ("joint", "mse"),
    }


def test_run_experiment_mt(corpus32_dir, tmp_path):
    spec = mt_spec(corpus32_dir)
    results = run_experiment(spec, checkpoint_root=tmp_path / "ck")
    validate_results(results)
    assert len(results["rows"]) == 2
    # rows sorted by canonical grid key
    alphas = [row["grid"]["alpha"] for row in results["rows"]]
    assert alphas == sorted(alphas)
    expr_only = [r for r in results["rows"] if r["grid"]["alpha"] == 0.0][0]
    assert expr_only["median"]["ccc_v"] is None
    assert expr_only["median"]["total_accuracy"] is not None
    joint = [r for r in results["rows"] if r["grid"]["alpha"] == 0.5][0]
    assert joint["median"]["ccc_v"] is not None
    # checkpoints saved per (row, seed)
    assert (tmp_path / "ck" / "row00_seed0" / "manifest.json").exists()
    assert (tmp_path / "ck" / "row01_seed0" / "manifest.json").exists()
    table = results_table(results)
    assert "alpha" in table and "CCC-V" in table


def test_run_experiment_gan(corpus32_dir, tmp_path):
    spec = ExperimentSpec(
        name="tiny-gan",
        family="gan_table9",
        corpus=str(corpus32_dir),
        seeds=[0],
        grid=[{"heads": "joint", "va_mode": "mse"}],
        base=dict(GAN_BASE),
        split_fractions=(0.5, 0.25, 0.25),
    )
    results = run_experiment(spec, checkpoint_root=tmp_path / "ck")
    validate_results(results)
    row = results["rows"][0]
    assert row["median"]["ccc_v"] is not None
    assert row["median"]["total_accuracy"] is not None
    assert "Total Acc" in results_table(results)


def test_results_schema_rejects_drift(corpus32_dir):
    spec = mt_spec(corpus32_dir, grid=[{"alpha": 0.5, "beta": 0.5}])
    results = run_experiment(spec)
    broken = json.loads(results_json(results))
    del broken["rows"][0]["median"]["ccc_v"]
    with pytest.raises(jsonschema.ValidationError):
        validate_results(broken)
    broken2 = json.loads(results_json(results))
    broken2["rows"][0]["unexpected"] = 1
    with pytest.raises(jsonschema.ValidationError):
        validate_results(broken2)


def test_schema_files_load():
    for family in ("gan_table9", "mt_table10", "mt_table11"):
        schema = load_schema(family)
        jsonschema.Draft202012Validator.check_schema(schema)


# --- CLI ----------------------------------------------------------------

def run_cli(*argv):
    return main([str(a) for a in argv])


def test_cli_pipeline(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    assert run_cli("--seed", 1, "--out", corpus, "synth-data",
                   "--subjects", 4, "--frames-per-subject", 24) == 0
    assert run_cli("consolidate", "--store", corpus) == 0
    assert (corpus / "consolidated").is_dir()

    split_file = tmp_path / "split.json"
    assert run_cli("--seed", 0, "--out", split_file, "split",
                   "--store", corpus, "--fractions", 0.5, 0.25, 0.25) == 0
    manifest = json.loads(split_file.read_text())
    assert set(manifest) == {"train", "val", "test"}

    spec = {
        "name": "cli-mt",
        "family": "mt_table11",
        "corpus": str(corpus),
        "seeds": [0],
        "grid": [{"alpha": 0.5, "beta": 0.5}],
        "base": dict(MT_BASE, seq_length=8, steps=3),
        "split_manifest": str(split_file),
    }
    spec_file = tmp_path / "spec.json"
    spec_file.write_text(json.dumps(spec))
    out_dir = tmp_path / "results"
    assert run_cli("--out", out_dir, "run", "--spec", spec_file) == 0
    assert (out_dir / "results.json").exists()
    assert (out_dir / "results.txt").exists()

    ck = out_dir / "checkpoints" / "row00_seed0"
    report_file = tmp_path / "report.json"
    assert run_cli("--out", report_file, "evaluate", "--checkpoint", ck,
                   "--store", corpus, "--split", split_file) == 0
    report = json.loads(report_file.read_text())
    assert "ccc_v" in report


def test_cli_sample_from_gan_checkpoint(tmp_path):
    corpus = tmp_path / "corpus"
    run_cli("--seed", 2, "--out", corpus, "synth-data",
            "--subjects", 4, "--frames-per-subject", 16)
    spec = {
        "name": "cli-gan",
        "family": "gan_table9",
        "corpus": str(corpus),
        "seeds": [0],
        "grid": [{"heads": "au"}],
        "base": dict(GAN_BASE, steps=2),
        "split_fractions": [0.5, 0.25, 0.25],
    }
    spec_file = tmp_path / "spec.json"
    spec_file.write_text(json.dumps(spec))
    out_dir = tmp_path / "results"
    assert run_cli("--out", out_dir, "run", "--spec", spec_file) == 0

    ck = out_dir / "checkpoints" / "row00_seed0"
    samples = tmp_path / "samples"
    assert run_cli("--seed", 5, "--out", samples, "sample",
                   "--checkpoint", ck, "--n", 9) == 0
    assert (samples / "grid.png").exists()
    assert len(list(samples.glob("sample_*.png"))) == 9

    # identical seed reproduces identical files
    samples2 = tmp_path / "samples2"
    run_cli("--seed", 5, "--out", samples2, "sample", "--checkpoint", ck, "--n", 9)
    assert (samples / "grid.png").read_bytes() == (samples2 / "grid.png").read_bytes()


def test_cli_sample_rejects_mt_checkpoint(tmp_path, corpus32_dir):
    spec = mt_spec(corpus32_dir, grid=[{"alpha": 0.5, "beta": 0.5}])
    run_experiment(spec, checkpoint_root=tmp_path / "ck")
    rc = run_cli("--out", tmp_path / "s", "sample",
                 "--checkpoint", tmp_path / "ck" / "row00_seed0", "--n", 4)
    assert rc == 2


def test_cli_run_missing_corpus_names_synth_data(tmp_path, capsys):
    spec_file = tmp_path / "spec.json"
    spec_file.write_text(json.dumps({
        "name": "x", "family": "mt_table11", "corpus": str(tmp_path / "nope"),
        "seeds": [0], "grid": [{"alpha": 0.5, "beta": 0.5}],
    }))
    assert run_cli("run", "--spec", spec_file) == 2
    assert "synth-data" in capsys.readouterr().err


def test_cli_serve_refuses_missing_store(tmp_path):
    assert run_cli("serve-annotation", "--store", tmp_path / "missing") == 2


def test_cli_config_file_defaults(tmp_path):
    corpus = tmp_path / "c"
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"subjects": 3, "frames_per_subject": 10}))
    assert run_cli("--config", config, "--out", corpus, "synth-data") == 0
    index = json.loads((corpus / "index.json").read_text())
    assert len(index) == 3
    # explicit flag beats the config file
    corpus2 = tmp_path / "c2"
    assert run_cli("--config", config, "--out", corpus2, "synth-data",
                   "--subjects", 5) == 0
    assert len(json.loads((corpus2 / "index.json").read_text())) == 5
