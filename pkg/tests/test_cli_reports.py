import json

import numpy as np
import pytest
from click.testing import CliRunner

from skilift.circuit_ir import rotation_depth, swap_depth, width
from skilift.cli import main
from skilift.hamiltonian import dense_hamiltonian, emit_hamiltonian, random_hamiltonian
from skilift.reports import (baseline_metrics, baseline_pauli_counts, baseline_step_circuit, bench,
                             format_bench)
from skilift.rotation_passes import PIPELINE, run_pipeline
from skilift.scheduler import build_schedule
from skilift.trotter_qpe import sweep_circuit


@pytest.fixture
def ham(tmp_path):
    def make(m, seed=0, scale=1.0):
        p = tmp_path / f"h{m}_{seed}.txt"
        p.write_text(emit_hamiltonian(random_hamiltonian(m, np.random.default_rng(seed), scale=scale)))
        return str(p)
    return make


def run(args, out):
    return CliRunner().invoke(main, ["--output-dir", str(out)] + args, catch_exceptions=False)


def test_baseline_counts_small():
    assert baseline_pauli_counts(4) == {"singleton": 4, "hopping": 12, "density": 18, "triple": 48, "quad": 24}


@pytest.mark.parametrize("m,b", [(5, 1), (6, 2), (8, 1)])
def test_bench_formula_matches_materialized(m, b):
    h = dense_hamiltonian(m)
    sch = build_schedule(h)
    opt = run_pipeline(sweep_circuit(h, sch, 1.0), PIPELINE, b)
    row = bench(m, (b,))["rows"][0]
    assert row["optimized"]["rotation_depth"] == rotation_depth(opt)
    assert row["optimized"]["width"] == width(opt)
    base = baseline_step_circuit(h, b)
    assert row["baseline"]["rotation_depth"] == rotation_depth(base)
    assert row["baseline"]["width"] == width(base)
    # the bench routes dense stages only; the materialized sweep may skip a few swaps
    assert abs(row["optimized"]["swap_layers"] - swap_depth(opt)) <= 0.05 * swap_depth(opt)


def test_bench_factors_multiply_out():
    row = bench(8, (2,))["rows"][0]
    f = row["factors"]
    assert f["product"] == pytest.approx(row["ratios"]["rotation_depth"])
    assert f["precision_serial"] == 2 and f["template"] == 8
    assert "factors" in format_bench({"rows": [row]})


def test_baseline_scales_with_b():
    a, b = baseline_metrics(10, 1), baseline_metrics(10, 3)
    assert b["rotation_depth"] == 3 * a["rotation_depth"]
    assert b["width"] == a["width"] + 2


def test_synth_both_writes_files(ham, tmp_path):
    r = run(["--format", "json", "synth", ham(4), "--mode", "both", "--b", "1"], tmp_path)
    assert r.exit_code == 0, r.output
    rec = json.loads(r.output)
    assert rec["optimized"]["schema"] == 1 and rec["optimized"]["m"] == 4
    assert rec["optimized"]["ratios"]["rotation_depth"] > 1
    for name in ("optimized.circuit.json", "baseline.circuit.json", "optimized.metrics.json"):
        assert (tmp_path / name).exists()


def test_synth_is_deterministic(ham, tmp_path):
    path = ham(5)
    run(["--seed", "3", "--format", "json", "synth", path], tmp_path / "a")
    run(["--seed", "3", "--format", "json", "synth", path], tmp_path / "b")
    assert (tmp_path / "a/optimized.circuit.json").read_text() == (tmp_path / "b/optimized.circuit.json").read_text()


def test_schedule_and_verify_round_trip(ham, tmp_path):
    path = ham(6)
    r = run(["schedule", path, "--verify"], tmp_path)
    assert r.exit_code == 0, r.output
    r = run(["--format", "json", "verify", str(tmp_path / "schedule.json"), "--hamiltonian", path], tmp_path)
    assert r.exit_code == 0, r.output
    rec = json.loads(r.output)
    assert rec["pass"] and rec["unitary_max_dev"] < 1e-9 and rec["routing_sign_max_dev"] < 1e-12


def test_verify_rejects_duplicated_block(tmp_path):
    run(["schedule", "--m", "6"], tmp_path)
    p = tmp_path / "schedule.json"
    d = json.loads(p.read_text())
    quads = [s for s in d["stages"] if s["kind"] == "Quad"]
    quads[-1]["blocks"].append(quads[0]["blocks"][0])
    p.write_text(json.dumps(d))
    r = run(["verify", str(p)], tmp_path)
    assert r.exit_code == 1
    assert "appears 2 times" in r.output


def test_verify_circuit_file(ham, tmp_path):
    run(["--format", "json", "synth", ham(3)], tmp_path)
    r = run(["verify", str(tmp_path / "optimized.circuit.json")], tmp_path)
    assert r.exit_code == 0, r.output


def test_bad_input_exit_code(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("this is not a hamiltonian\n")
    r = CliRunner().invoke(main, ["--output-dir", str(tmp_path), "synth", str(p)])
    assert r.exit_code == 2


def test_bench_cli_small(tmp_path):
    r = run(["bench", "--m", "6", "--b", "1", "--b", "2"], tmp_path)
    assert r.exit_code == 0, r.output
    rep = json.loads((tmp_path / "bench_m6.json").read_text())
    assert [row["b"] for row in rep["rows"]] == [1, 2]
    assert "ratios" in r.output


def test_qpe_cli_ground_energy(ham, tmp_path):
    path = ham(3, seed=2, scale=0.5)
    r = run(["--format", "json", "qpe", path, "--b", "5", "--init", "ground", "--steps", "8"], tmp_path)
    assert r.exit_code == 0, r.output
    rec = json.loads(r.output)
    from skilift.hamiltonian import parse_hamiltonian
    from skilift.simulator import exact_ground_energy
    e0 = exact_ground_energy(parse_hamiltonian(open(path).read()))
    assert abs(rec["energy"] - e0) <= 1.5 * rec["resolution"]


def test_qpe_shots_follow_seed(ham, tmp_path):
    path = ham(2, seed=1)
    args = ["--format", "json", "qpe", path, "--b", "3", "--shots", "200", "--steps", "2"]
    a = json.loads(run(["--seed", "5"] + args, tmp_path).output)
    b = json.loads(run(["--seed", "5"] + args, tmp_path).output)
    assert a["counts"] == b["counts"] and sum(a["counts"]) == 200
