from dataclasses import replace

import numpy as np
import pytest

from skilift.circuit_ir import ANCILLA, Circuit, Gate, ORBITAL, PRECISION, rotation_depth
from skilift.errors import StructuralError
from skilift.rotation_passes import (PIPELINE, consolidate_controls, expand_precision_controls,
                                     lower_crz, merge_same_target, merge_same_target_gates,
                                     parallelize_shared_controls, parse_passes, run_pipeline)
from skilift.simulator import apply, full_unitary
from skilift.templates import CORE, pair_template, quad_template, singleton_template, triple_template

TOL = 1e-12


def on_clean_ancillas(before, after, trials=4, seed=0):
    """Deviation of ``after`` from ``before`` on random inputs with added ancillas in |0>.

    Dirty ancillas show up as amplitude outside the zero block.
    """
    n, k = before.n, after.n - before.n
    assert all(q.role == ANCILLA for q in after.qubits[n:])
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        v = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
        v /= np.linalg.norm(v)
        want = np.kron(apply(before, v), np.eye(2 ** k)[0])
        got = apply(after, np.kron(v, np.eye(2 ** k)[0]))
        worst = max(worst, np.abs(got - want).max())
    return worst


def random_rotation_circuit(rng, n=5, layers=4, max_controls=3, same_target=False):
    """Clifford layers between moments of simultaneous (multi-)controlled rotations."""
    c = Circuit([PRECISION] + [ORBITAL] * (n - 1))
    for _ in range(layers):
        for q in range(n):
            r = rng.integers(3)
            if r == 0:
                c.append(Gate("H", (q,)))
            elif r == 1:
                c.append(Gate("S", (q,)))
        a, b = (int(x) for x in rng.choice(n, 2, replace=False))
        c.append(Gate("CX", (a, b)))
        rots = []
        ntarg = 1 if same_target else int(rng.integers(1, 3))
        targets = [int(x) for x in rng.choice(range(1, n), ntarg, replace=False)]
        for t in targets:
            for _ in range(int(rng.integers(1, 4))):
                pool = [q for q in range(n) if q not in targets]
                nc = int(rng.integers(1, min(max_controls, len(pool)) + 1))
                ctrls = tuple(int(x) for x in rng.choice(pool, nc, replace=False))
                states = tuple(int(x) for x in rng.integers(0, 2, nc))
                kind = "CRz" if nc == 1 else "MultiCRz"
                rots.append(Gate(kind, ctrls + (t,), float(rng.normal()), states, (CORE, 0.0)))
        c.append_layer(rots)
    c.global_phase = float(rng.normal())
    return c


def single_control(c):
    """Same circuit with every rotation reduced to one control (for merge/lower inputs)."""
    gs = []
    for g in c.gates():
        if g.kind == "MultiCRz":
            g = Gate("CRz", (g.controls[0], g.targets[0]), g.angle, (g.states[0],), g.tag)
        gs.append(g)
    out = Circuit([q.role for q in c.qubits])
    out.global_phase = c.global_phase
    for mo in c.moments:
        out.append_layer([Gate("CRz", (g.controls[0], g.targets[0]), g.angle, (g.states[0],), g.tag)
                          if g.kind == "MultiCRz" else g for g in mo])
    return out


@pytest.mark.parametrize("pass_fn,prep", [
    (parallelize_shared_controls, None),
    (consolidate_controls, None),
    (merge_same_target, single_control),
    (lower_crz, single_control),
])
def test_pass_preserves_unitary(pass_fn, prep):
    rng = np.random.default_rng(11)
    worst = 0.0
    for i in range(50):
        c = random_rotation_circuit(rng, same_target=(i % 2 == 0))
        if prep:
            c = prep(c)
        out = pass_fn(c)
        out.check_moments()
        worst = max(worst, on_clean_ancillas(c, out))
    assert worst <= TOL


def controlled_reference(c, b):
    """sum_t |t><t| (x) U(t theta) with precision wire 0 most significant."""
    d = 2 ** c.n
    out = np.zeros((2 ** b * d,) * 2, complex)
    for t in range(2 ** b):
        s = c.rebuilt([replace(g, angle=g.angle * t) if g.tag and g.tag[0] == CORE else g
                       for g in c.gates()])
        s.global_phase = c.global_phase * t
        out[t * d:(t + 1) * d, t * d:(t + 1) * d] = full_unitary(s)
    return out


def random_template_circuit(rng, m=4):
    c = Circuit([ORBITAL] * m)
    for _ in range(3):
        r = rng.integers(4)
        if r == 0:
            t = singleton_template(int(rng.integers(m)), float(rng.normal()))
        elif r == 1:
            w = int(rng.integers(m - 1))
            t = pair_template((w, w + 1), float(rng.normal()), float(rng.normal()))
        elif r == 2:
            w = int(rng.integers(m - 2))
            t = triple_template((w, w + 1, w + 2), rng.normal(size=3))
        else:
            t = quad_template((0, 1, 2, 3), rng.normal(size=3))
        c.extend(t.gates())
        c.global_phase += t.global_phase
    return c


def test_expand_matches_controlled_evolution():
    rng = np.random.default_rng(12)
    worst = 0.0
    for i in range(50):
        c = random_template_circuit(rng)
        b = 1 + i % 2
        out = expand_precision_controls(c, b)
        worst = max(worst, np.abs(full_unitary(out) - controlled_reference(c, b)).max())
    assert worst <= TOL


def test_full_pipeline_matches_expanded_circuit():
    rng = np.random.default_rng(13)
    worst = 0.0
    for i in range(10):
        c = random_template_circuit(rng)
        b = 1 + i % 2
        worst = max(worst, on_clean_ancillas(expand_precision_controls(c, b), run_pipeline(c, PIPELINE, b)))
    assert worst <= TOL


def test_expand_block_structure():
    c = quad_template((0, 1, 2, 3), [0.1, 0.2, 0.3]).circuit()
    out = expand_precision_controls(c, 2)
    cores = [g for g in out.gates() if g.kind == "MultiCRz"]
    assert len(cores) == 6
    by_prec = {}
    for g in cores:
        by_prec.setdefault(g.qubits[0], []).append(g.angle)
    assert np.allclose(by_prec[0], [2 * x for x in by_prec[1]])
    assert [q.role for q in out.qubits[:2]] == [PRECISION, PRECISION]
    with pytest.raises(StructuralError):
        expand_precision_controls(c, 0)


def test_expand_moves_phase_to_precision_wires():
    c = singleton_template(0, 0.7).circuit(2)
    out = expand_precision_controls(c, 3)
    prz = [g for g in out.gates() if g.kind == "Rz" and g.qubits[0] < 3]
    assert [g.angle for g in sorted(prz, key=lambda g: g.qubits)] == pytest.approx([-0.35 * 4, -0.35 * 2, -0.35])


def test_merge_emits_n_plus_one_rz():
    rng = np.random.default_rng(14)
    for n in range(1, 6):
        c = Circuit([ORBITAL] * (n + 1))
        rots = [Gate("CRz", (i + 1, 0), float(rng.normal()), (int(rng.integers(2)),)) for i in range(n)]
        c.append_layer(rots)
        seq = merge_same_target_gates(rots)
        assert sum(g.kind == "Rz" for g in seq) == n + 1
        assert not any(g.kind == "CRz" for g in seq)
        out = Circuit([ORBITAL] * (n + 1))
        out.extend(seq)
        assert np.abs(full_unitary(out) - full_unitary(c)).max() <= TOL
        assert rotation_depth(out) == 1


def test_merge_rejects_mixed_targets():
    with pytest.raises(StructuralError):
        merge_same_target_gates([Gate("CRz", (0, 1), 0.1), Gate("CRz", (0, 2), 0.1)])


def test_consolidate_two_controls():
    c = Circuit([ORBITAL] * 3)
    c.append(Gate("MultiCRz", (0, 1, 2), 0.4, (1, 0), (CORE, 0.4)))
    out = consolidate_controls(c)
    counts = out.gate_counts()
    assert out.n - c.n == 1
    assert counts["Toffoli"] == 2 and counts["CRz"] == 1
    assert on_clean_ancillas(c, out) <= TOL


def test_consolidate_three_controls():
    c = Circuit([ORBITAL] * 4)
    c.append(Gate("MultiCRz", (0, 1, 2, 3), 0.4, (1, 1, 0), (CORE, 0.4)))
    out = consolidate_controls(c)
    assert out.n - c.n == 2
    assert out.gate_counts()["CRz"] == 1
    assert on_clean_ancillas(c, out) <= TOL


def test_parallelize_gives_private_copies():
    c = Circuit([PRECISION] + [ORBITAL] * 4)
    c.append_layer([Gate("CRz", (0, 1), 0.3, (1,), (CORE, 0.3)),
                    Gate("CRz", (0, 3), 0.5, (1,), (CORE, 0.5))])
    out = parallelize_shared_controls(c)
    rots = [g for g in out.gates() if g.kind == "CRz"]
    assert len({g.controls[0] for g in rots}) == 2
    assert rotation_depth(out) == 1
    assert on_clean_ancillas(c, out) <= TOL


def test_quad_stage_is_one_rotation_moment():
    c = quad_template((0, 1, 2, 3), [0.1, 0.2, 0.3]).circuit()
    for b in (1, 2, 4):
        out = run_pipeline(c, PIPELINE, b)
        assert rotation_depth(out) == 1
        assert not any(g.kind in ("CRz", "MultiCRz") for g in out.gates())


def test_pass_subset_and_parse():
    assert parse_passes("all") == list(PIPELINE)
    assert parse_passes(None) == list(PIPELINE)
    assert parse_passes("expand_precision_controls,lower_crz") == ["expand_precision_controls", "lower_crz"]
    with pytest.raises(ValueError):
        parse_passes("nope")
    c = pair_template((0, 1), 0.3, 0.2).circuit()
    out = run_pipeline(c, ["expand_precision_controls"], 1)
    assert any(g.kind == "CRz" for g in out.gates())
