"""Config parsing, presets, run execution, and CSV emission."""

import csv
import dataclasses
from pathlib import Path

import numpy as np
import pytest

from spintherm.cli import (
    ConfigError,
    RunConfig,
    SAMPLES_HEADER,
    SUMMARY_HEADER,
    emit_results,
    load_run_json,
    main,
    parse_config,
    preset,
    preset_variants,
    run_experiment,
    validate_config,
)
from spintherm.estimators import SampleRecord, efficiency, simple_expectation, weighted_expectation, weights
from spintherm.hamiltonian import ModelSpec
from spintherm.imagtime import BetaGrid

MINIMAL = """
system.kind = heisenberg
init_class = haar
beta_grid = 1.0,2.0
L_list = 4
M = 8
master_seed = 3
"""

TINY_RUN = """
system.kind = heisenberg
init_class = trotter_rpps
trotter.kind = mixed_ising
trotter.h_x = 1.0
trotter.h_z = 1.0
beta_grid = 0.5,1.0
L_list = 3,4
M = 6
master_seed = 7
n_resamples = 50
"""


def test_parse_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.system == ModelSpec(kind="heisenberg", L=4, J=1.0)
    assert cfg.trotter is None
    assert cfg.init_class == "haar"
    assert cfg.beta_grid == BetaGrid((1.0, 2.0))
    assert cfg.L_list == (4,)
    assert cfg.M == 8
    assert cfg.master_seed == 3
    assert cfg.tau == 10.0
    assert cfg.n_reps_rule == "2L"
    assert cfg.n_resamples == 4000
    assert cfg.threads is None
    assert cfg.full_scale is False
    assert cfg.resolved_label() == "haar"
    assert cfg.reps_for(6) == 12


def test_parse_comments_and_range_grid():
    cfg = parse_config(
        """
        system.kind = heisenberg  # the chain under study
        init_class = haar
        beta_grid = 0.1:3.0:0.1
        L_list = 4
        M = 2
        master_seed = 0
        """
    )
    assert len(cfg.beta_grid.checkpoints) == 30
    assert cfg.beta_grid.checkpoints[0] == pytest.approx(0.1)
    assert cfg.beta_grid.checkpoints[-1] == pytest.approx(3.0)


def test_parse_rejects_unknown_missing_duplicate():
    with pytest.raises(ConfigError, match="unknown keys: systm.kind"):
        parse_config(MINIMAL + "\nsystm.kind = heisenberg")
    with pytest.raises(ConfigError, match="missing keys: master_seed"):
        parse_config("\n".join(l for l in MINIMAL.splitlines() if "master_seed" not in l))
    with pytest.raises(ConfigError, match="M: duplicated"):
        parse_config(MINIMAL + "\nM = 9")
    with pytest.raises(ConfigError, match="key = value"):
        parse_config(MINIMAL + "\njust words")


def test_parse_rejects_bad_values():
    with pytest.raises(ConfigError, match="beta_grid"):
        parse_config(MINIMAL.replace("beta_grid = 1.0,2.0", "beta_grid = 1.0,zz"))
    with pytest.raises(ConfigError, match="full_scale"):
        parse_config(MINIMAL + "\nfull_scale = maybe")
    with pytest.raises(ConfigError, match="M"):
        parse_config(MINIMAL.replace("M = 8", "M = eight"))
    with pytest.raises(ConfigError, match="system"):
        parse_config(MINIMAL.replace("heisenberg", "heisenbrg"))


def test_validate_collects_all_problems():
    cfg = parse_config(MINIMAL)
    bad = dataclasses.replace(cfg, init_class="trotter_rpps", M=0, threads=0)
    with pytest.raises(ConfigError) as exc:
        validate_config(bad)
    msg = str(exc.value)
    assert "trotter" in msg and "M" in msg and "threads" in msg


def test_validate_full_scale_gate():
    cfg = dataclasses.replace(parse_config(MINIMAL), L_list=(16,))
    with pytest.raises(ConfigError, match="full_scale"):
        validate_config(cfg)
    validate_config(dataclasses.replace(cfg, full_scale=True))


def test_validate_rejects_tiny_chain():
    with pytest.raises(ConfigError, match="L"):
        validate_config(dataclasses.replace(parse_config(MINIMAL), L_list=(1,)))


def test_preset_fields():
    cfg = preset("fig1")
    assert cfg.system.kind == "heisenberg"
    assert cfg.system.delta == 5.0
    assert cfg.trotter.kind == "xxz_staggered"
    assert cfg.trotter.delta == 5.0
    assert cfg.trotter.h_stag == 1.0
    assert cfg.tau == 10.0
    assert cfg.n_reps_rule == "2L"
    assert cfg.M == 1024
    assert cfg.n_resamples == 4000
    assert cfg.L_list == (6, 8, 10, 12)
    assert cfg.beta_grid == BetaGrid((3.0,))
    assert cfg.label == "xxz_stagger"

    fig3 = preset("fig3")
    assert fig3.L_list == (12,)
    assert len(fig3.beta_grid.checkpoints) == 30

    fig4 = preset("fig4")
    assert fig4.L_list == (10, 12)
    assert len(fig4.beta_grid.checkpoints) == 30

    with pytest.raises(ConfigError, match="preset"):
        preset("fig9")


def test_preset_variant_labels():
    assert [v.resolved_label() for v in preset_variants("fig1")] == [
        "xxz_stagger", "xxz_nostagger", "haar"]
    assert [v.resolved_label() for v in preset_variants("fig2")] == [
        "ising_mixed", "ising_transverse", "haar"]
    assert [v.resolved_label() for v in preset_variants("fig3")] == [
        "ising_mixed", "ising_transverse"]
    assert [v.resolved_label() for v in preset_variants("fig4")] == ["ising_mixed"]
    haar = preset_variants("fig2")[2]
    assert haar.init_class == "haar"
    assert haar.trotter is None
    for v in preset_variants("fig1") + preset_variants("fig2"):
        validate_config(v)


def tiny_config(out):
    return parse_config(TINY_RUN + f"\noutput_path = {out}")


def test_run_outputs_are_reproducible(tmp_path):
    paths_a = run_experiment(tiny_config(tmp_path / "a"))
    paths_b = run_experiment(tiny_config(tmp_path / "b"))
    for key in ("summary", "samples"):
        assert paths_a[key].read_bytes() == paths_b[key].read_bytes()


def test_run_outputs_independent_of_thread_count(tmp_path):
    one = dataclasses.replace(tiny_config(tmp_path / "t1"), threads=1)
    two = dataclasses.replace(tiny_config(tmp_path / "t2"), threads=2)
    paths_one = run_experiment(one)
    paths_two = run_experiment(two)
    assert paths_one["samples"].read_bytes() == paths_two["samples"].read_bytes()
    assert paths_one["summary"].read_bytes() == paths_two["summary"].read_bytes()


def test_run_json_round_trip(tmp_path):
    cfg = tiny_config(tmp_path / "r")
    paths = run_experiment(cfg)
    assert load_run_json(paths["run_json"]) == cfg


def test_output_shape_and_sorting(tmp_path):
    cfg = tiny_config(tmp_path / "s")
    paths = run_experiment(cfg)
    summary = paths["summary"].read_text().splitlines()
    samples = paths["samples"].read_text().splitlines()
    assert summary[0] == SUMMARY_HEADER
    assert samples[0] == SAMPLES_HEADER
    assert len(summary) == 1 + len(cfg.L_list) * len(cfg.beta_grid.checkpoints)
    assert len(samples) == 1 + len(cfg.L_list) * cfg.M * len(cfg.beta_grid.checkpoints)
    keys = []
    for line in samples[1:]:
        parts = line.split(",")
        keys.append((int(parts[0]), int(parts[1]), float(parts[2])))
    assert keys == sorted(keys)
    assert {k[0] for k in keys} == set(cfg.L_list)
    assert {k[1] for k in keys} == set(range(cfg.M))


def test_summary_recomputable_from_samples(tmp_path):
    cfg = tiny_config(tmp_path / "agg")
    paths = run_experiment(cfg)
    with paths["samples"].open() as fh:
        sample_rows = list(csv.DictReader(fh))
    with paths["summary"].open() as fh:
        summary_rows = list(csv.DictReader(fh))
    betas = np.array(cfg.beta_grid.checkpoints)
    for srow in summary_rows:
        L = int(srow["L"])
        beta = float(srow["beta"])
        per_sample = {}
        for row in sample_rows:
            if int(row["L"]) != L:
                continue
            per_sample.setdefault(int(row["sample_index"]), []).append(row)
        records = []
        for m, rows in sorted(per_sample.items()):
            rows = sorted(rows, key=lambda r: float(r["beta"]))
            records.append(SampleRecord(
                m,
                betas,
                np.array([float(r["log_sq_norm"]) for r in rows]),
                np.array([float(r["obs_value"]) for r in rows]),
                float(rows[0]["init_entropy"]),
            ))
        assert efficiency(weights(records, beta)).eta == pytest.approx(float(srow["eta"]), abs=1e-10)
        assert weighted_expectation(records, beta) == pytest.approx(
            float(srow["energy_weighted"]), abs=1e-10)
        assert simple_expectation(records, beta) == pytest.approx(
            float(srow["energy_simple"]), abs=1e-10)
        entropies = np.mean([r.init_entropy for r in records])
        assert entropies == pytest.approx(float(srow["S_ini_mean"]), abs=1e-10)


def test_single_sample_run(tmp_path):
    cfg = dataclasses.replace(tiny_config(tmp_path / "m1"), M=1, L_list=(4,), n_resamples=0)
    paths = run_experiment(cfg)
    with paths["summary"].open() as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        assert float(row["eta"]) == pytest.approx(1.0, abs=1e-12)
        assert float(row["energy_weighted"]) == pytest.approx(float(row["energy_simple"]), abs=1e-12)


def test_emit_results_header_only(tmp_path):
    paths = emit_results([], [], preset("fig2"), tmp_path / "empty")
    assert paths["summary"].read_text() == SUMMARY_HEADER + "\n"
    assert paths["samples"].read_text() == SAMPLES_HEADER + "\n"


def test_main_validate(tmp_path, capsys):
    good = tmp_path / "good.cfg"
    good.write_text(MINIMAL)
    assert main(["validate", "--config", str(good)]) == 0
    assert capsys.readouterr().out.strip() == "ok"
    bad = tmp_path / "bad.cfg"
    bad.write_text(MINIMAL.replace("M = 8", "M = 0"))
    assert main(["validate", "--config", str(bad)]) == 2
    assert "invalid" in capsys.readouterr().err


def test_main_run_config_and_overrides(tmp_path, capsys):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text(TINY_RUN + f"\noutput_path = {tmp_path / 'direct'}")
    rc = main(["run", "--config", str(cfg_file), "--L", "4", "--samples", "2",
               "--seed", "11", "--threads", "1"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "summary.csv" in out
    run_cfg = load_run_json(tmp_path / "direct" / "run.json")
    assert run_cfg.L_list == (4,)
    assert run_cfg.M == 2
    assert run_cfg.master_seed == 11


def test_main_run_preset_writes_variant_directories(tmp_path):
    rc = main(["run", "--preset", "fig2", "--L", "4", "--samples", "4",
               "--seed", "3", "--threads", "1", "--out", str(tmp_path / "fig2")])
    assert rc == 0
    for label in ("ising_mixed", "ising_transverse", "haar"):
        base = tmp_path / "fig2" / label
        assert (base / "summary.csv").exists()
        assert (base / "samples.csv").exists()
        cfg = load_run_json(base / "run.json")
        assert cfg.resolved_label() == label
