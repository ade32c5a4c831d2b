import csv
import hashlib
import io
import json
from pathlib import Path

import pytest

from pqdlab.exceptions import ConfigError
from pqdlab.experiment_cli import available, config_hash, load_model, load_regression, validate
from pqdlab.experiment_cli.cli import main
from pqdlab.experiment_cli.config import dump_text, model_from_config

MINIMAL = """\
[experiment]
kind = slln
master_seed = 42

[model]
preset = paper_bernoulli
"""


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _csv(path):
    return list(csv.DictReader(io.StringIO(Path(path).read_text())))


def _sha(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def test_minimal_config_is_filled_with_defaults():
    cfg = validate(MINIMAL)
    assert cfg["slln"] == {"normalizer": "kolmogorov_n", "n_max": 16384, "paths": 100, "probe": False}
    assert cfg["experiment"]["formats"] == ["csv"]
    echo = dump_text(cfg)
    assert "n_max = 16384" in echo
    assert validate(echo) == cfg


def test_missing_master_seed_names_the_field():
    with pytest.raises(ConfigError) as info:
        validate("[experiment]\nkind = slln\n[model]\npreset = paper_bernoulli\n")
    assert any("master_seed" in e and "missing" in e for e in info.value.errors)


def test_moment_order_range_error():
    text = MINIMAL + "[slln]\nnormalizer = mz_p(2.5)\n"
    with pytest.raises(ConfigError) as info:
        validate(text)
    (err,) = info.value.errors
    assert "1 < p < 2" in err and err.startswith("line 8: [slln] normalizer")


def test_unknown_keys_and_sections_are_rejected_with_lines():
    text = MINIMAL + "colour = red\n[plots]\nx = 1\n"
    with pytest.raises(ConfigError) as info:
        validate(text)
    errs = info.value.errors
    assert any(e.startswith("line 7: [model] colour: unknown key") for e in errs)
    assert any(e.startswith("line 8: [plots]: unknown section") for e in errs)


@pytest.mark.parametrize(
    "extra,needle",
    [
        ("[slln]\nn_max = 3000\n", "power of two"),
        ("[slln]\npaths = 5\n", ">= 30"),
        ("[diagnose]\npairs = 10\n", ">= 1000"),
        ("[weights]\nkind = custom_table\n", "custom_table"),
    ],
)
def test_field_checks(extra, needle):
    with pytest.raises(ConfigError) as info:
        validate(MINIMAL + extra)
    assert any(needle in e for e in info.value.errors)


def test_unknown_preset_and_conflicting_model():
    with pytest.raises(ConfigError, match="unknown preset"):
        validate(MINIMAL.replace("paper_bernoulli", "nope"))
    with pytest.raises(ConfigError, match="not both"):
        validate(MINIMAL + "family = independent\n")


def test_json_and_text_are_equivalent():
    as_json = json.dumps({"experiment": {"kind": "slln", "master_seed": 42}, "model": {"preset": "paper_bernoulli"}})
    assert validate(as_json) == validate(MINIMAL)
    assert config_hash(validate(as_json)) == config_hash(validate(MINIMAL))


def test_config_hash_ignores_workers_and_output():
    a = validate(MINIMAL)
    b = validate(MINIMAL.replace("master_seed = 42", "master_seed = 42\nworkers = 4\nout = elsewhere"))
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(validate(MINIMAL.replace("42", "43")))


def test_inline_model():
    cfg = validate(
        "[experiment]\nkind = sample\nmaster_seed = 1\n[model]\nfamily = fgm_copula\ntheta = 0.5\n"
        "[weights]\nkind = bounded_sinusoid\nbase = 1\namplitude = 0.5\n"
    )
    model, weights = model_from_config(cfg)
    assert model.family == "fgm_copula" and model.theta == 0.5
    assert weights.scheme_id == "bounded_sinusoid(1,0.5)"


def test_all_shipped_presets_load():
    models = available("model")
    regressions = available("regression")
    assert {"paper_bernoulli", "gaussian_geometric_half", "independent_pareto_1_8"} <= set(models)
    for name in models:
        load_model(name)
    for name in regressions:
        load_regression(name)


def test_preset_directory_override(tmp_path, monkeypatch):
    custom = {"type": "model", "model": {"family": "independent", "marginal": {"kind": "point_mass", "param": 3.0}}}
    (tmp_path / "paper_bernoulli.json").write_text(json.dumps(custom))
    monkeypatch.setenv("PQDLAB_PRESET_DIR", str(tmp_path))
    model, _ = load_model("paper_bernoulli")
    assert model.marginal.param == 3.0
    load_model("independent_uniform")  # built-ins remain reachable


def test_slln_run_is_reproducible(tmp_path):
    cfg = _write(tmp_path, "s.ini", MINIMAL + "[slln]\nn_max = 2048\npaths = 30\n")
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["slln", "--config", cfg, "--out", str(out1), "--workers", "1"]) == 0
    assert main(["slln", "--config", cfg, "--out", str(out2), "--workers", "4"]) == 0
    assert _sha(out1 / "slln.csv") == _sha(out2 / "slln.csv")
    assert (out1 / "manifest.json").read_bytes() == (out2 / "manifest.json").read_bytes()


def test_manifest_lists_every_output(tmp_path):
    cfg = _write(tmp_path, "s.ini", MINIMAL)
    out = tmp_path / "o"
    rc = main(["slln", "--config", cfg, "--out", str(out), "--n-max", "1024", "--paths", "30",
               "--format", "csv", "--format", "json", "--svg", "--seed", "7"])
    assert rc == 0
    man = json.loads((out / "manifest.json").read_text())
    files = sorted(p.name for p in out.iterdir() if p.name != "manifest.json")
    assert sorted(man["files"]) == files == ["slln.csv", "slln.json", "slln.svg"]
    for name, digest in man["files"].items():
        assert _sha(out / name) == digest
    assert man["master_seed"] == 7 and man["config"]["slln"]["n_max"] == 1024
    assert "version" in man and len(man["config_sha256"]) == 64


def test_conditions_on_independent_preset(tmp_path):
    cfg = _write(tmp_path, "c.ini", "[experiment]\nkind = conditions\nmaster_seed = 1\n"
                 "[model]\npreset = independent_uniform\n[conditions]\nids = c2_2\n")
    assert main(["conditions", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = _csv(tmp_path / "o" / "conditions.csv")
    assert float(rows[-1]["partial_sum"]) == 0.0 and rows[-1]["verdict"] == "converges"
    assert rows[-1]["K"] == "100"


def _regress(tmp_path, preset):
    cfg = _write(tmp_path, f"{preset}.json", json.dumps({
        "experiment": {"kind": "regress", "master_seed": 3, "formats": ["csv", "json"]},
        "regress": {"preset": preset, "n_grid": [100, 1000], "replicates": 4},
    }))
    assert main(["regress", "--config", cfg, "--out", str(tmp_path / preset)]) == 0
    rows = _csv(tmp_path / preset / "trace.csv")
    return [float(r["median_abs_err"]) for r in rows], json.loads((tmp_path / preset / "trace.json").read_text())


@pytest.mark.parametrize("preset", ["eiv_zero_noise", "ridge_zero_noise", "shrinkage_zero_noise"])
def test_regress_zero_noise_is_exact(tmp_path, preset):
    med, data = _regress(tmp_path, preset)
    assert med == [0.0, 0.0]
    assert data["verdict"] == "exact"


def test_regress_zero_noise_least_squares(tmp_path):
    med, data = _regress(tmp_path, "ls_zero_noise")
    assert max(med) < 1e-12
    assert data["hypotheses"]["design"]["design_condition"] is True


def test_sample_and_diagnose(tmp_path):
    cfg = _write(tmp_path, "d.ini", "[experiment]\nkind = diagnose\nmaster_seed = 2\n[model]\n"
                 "preset = fgm_uniform_decay_half\n[diagnose]\npairs_list = 1-2\nt = 1\npairs = 20000\nbootstrap = 8\n")
    assert main(["diagnose", "--config", cfg, "--out", str(tmp_path / "d")]) == 0
    (row,) = _csv(tmp_path / "d" / "diagnose.csv")
    assert float(row["g_analytic"]) == pytest.approx(1 / 36)
    assert abs(float(row["z_score"])) < 5
    cfg = _write(tmp_path, "s.ini", "[experiment]\nkind = sample\nmaster_seed = 2\n[model]\npreset = paper_bernoulli\n")
    assert main(["sample", "--config", cfg, "--out", str(tmp_path / "s"), "--n-max", "8", "--paths", "2"]) == 0
    rows = _csv(tmp_path / "s" / "samples.csv")
    assert len(rows) == 16 and {r["x"] for r in rows} <= {"0", "1"}


def test_validate_subcommand(tmp_path, capsys):
    cfg = _write(tmp_path, "s.ini", MINIMAL)
    assert main(["validate", "--config", cfg]) == 0
    assert "normalizer = kolmogorov_n" in capsys.readouterr().out


def test_exit_codes(tmp_path, capsys):
    bad = _write(tmp_path, "bad.ini", MINIMAL.replace("master_seed = 42\n", ""))
    assert main(["slln", "--config", bad]) == 2
    assert "master_seed" in capsys.readouterr().err
    assert main(["slln", "--config", str(tmp_path / "missing.ini")]) == 4
    pre = _write(tmp_path, "p.ini", "[experiment]\nkind = conditions\nmaster_seed = 1\n"
                 "[model]\npreset = gaussian_geometric_half\n[conditions]\nids = c2_16\n")
    assert main(["conditions", "--config", pre, "--out", str(tmp_path / "p")]) == 3
    blocker = tmp_path / "file"
    blocker.write_text("")
    cfg = _write(tmp_path, "c.ini", "[experiment]\nkind = conditions\nmaster_seed = 1\n"
                 "[model]\npreset = independent_uniform\n[conditions]\nK = 4\n")
    assert main(["conditions", "--config", cfg, "--out", str(blocker / "sub")]) == 4
    assert main(["conditions", "--config", cfg, "--paths", "3"]) == 2
    assert main(["slln", "--config", _write(tmp_path, "k.ini", MINIMAL), "--out", str(tmp_path / "k"), "--n-max", "1000"]) == 2


def test_subcommand_must_match_config_kind(tmp_path):
    cfg = _write(tmp_path, "s.ini", MINIMAL)
    assert main(["regress", "--config", cfg]) == 2
