import numpy as np
import pytest

from skilift.circuit_ir import (ANCILLA, Circuit, Gate, ORBITAL, cost_model, from_json,
                                rotation_depth, swap_depth, to_json, to_text, total_depth,
                                unitary_of, width)
from skilift.errors import StructuralError
from skilift.fermion_algebra import fermionic_permutation_matrix
from skilift.templates import baseline_pauli_template, quad_template
from skilift.simulator import equal_up_to_phase
from scipy.linalg import expm
from skilift.fermion_algebra import term_matrix

GATES1 = ["H", "S", "Sdg", "X"]


def random_circuit(n, depth, rng):
    c = Circuit([ORBITAL] * n)
    for _ in range(depth):
        r = rng.integers(5)
        q = [int(x) for x in rng.permutation(n)]
        if r == 0:
            c.append(Gate(GATES1[rng.integers(4)], (q[0],)))
        elif r == 1:
            c.append(Gate("CX", (q[0], q[1])))
        elif r == 2:
            c.append(Gate("Rz", (q[0],), float(rng.normal())))
        elif r == 3:
            c.append(Gate("CRz", (q[0], q[1]), float(rng.normal())))
        else:
            c.append(Gate("CZ", (q[0], q[1])))
    return c


def test_asap_disjoint():
    c = Circuit([ORBITAL] * 3)
    c.append(Gate("CX", (0, 1)))
    c.append(Gate("Rz", (2,), 0.1))
    assert len(c.moments) == 1


def test_asap_shared_qubit():
    c = Circuit([ORBITAL] * 3)
    c.append(Gate("CX", (0, 1)))
    c.append(Gate("CZ", (1, 2)))
    assert len(c.moments) == 2


def test_fermionic_swap_adjacency():
    c = Circuit([ORBITAL] * 6)
    with pytest.raises(StructuralError):
        c.append(Gate("FermionicSwap", (3, 5)))


@pytest.mark.parametrize("g", [("CX", (0,)), ("Rz", (0,)), ("CX", (0, 0)), ("Bogus", (0,))])
def test_bad_gates(g):
    with pytest.raises(StructuralError):
        Gate(*g)


def test_nonfinite_angle():
    with pytest.raises(StructuralError):
        Gate("Rz", (0,), float("inf"))


def test_rotation_depth_basics():
    assert rotation_depth(Circuit([ORBITAL] * 2)) == 0
    assert rotation_depth(baseline_pauli_template((0, 1, 3, 2), 0.3)) == 8
    assert rotation_depth(quad_template((0, 1, 2, 3), [0.1, 0.2, 0.3]).circuit()) == 1


def test_rotation_depth_ignores_inserted_cliffords():
    c = Circuit([ORBITAL] * 3)
    c.append(Gate("Rz", (0,), 0.1))
    before = rotation_depth(c)
    c.moments[0].append(Gate("H", (1,)))
    assert rotation_depth(c) == before


def test_width_counts_all_roles():
    assert width(Circuit([ORBITAL] * 4)) == 4
    assert width(Circuit.with_registers(2, 4, 3)) == 9


def test_unitary_single_h():
    c = Circuit([ORBITAL])
    c.append(Gate("H", (0,)))
    assert np.allclose(unitary_of(c), np.array([[1, 1], [1, -1]]) / np.sqrt(2))


def test_fermionic_swap_unitary():
    c = Circuit([ORBITAL] * 2)
    c.append(Gate("FermionicSwap", (0, 1)))
    assert np.allclose(unitary_of(c), fermionic_permutation_matrix([1, 0], 2))


def test_quad_rotation_circuit_unitary():
    th = 0.41
    u = unitary_of(quad_template((0, 1, 2, 3), [th, 0, 0]).circuit())
    ok, _, dev = equal_up_to_phase(expm(-1j * th * term_matrix((0, 1, 3, 2), 4)), u)
    assert ok, dev


def test_unitary_multiplicative():
    rng = np.random.default_rng(2)
    for _ in range(10):
        a, b = random_circuit(3, 8, rng), random_circuit(3, 8, rng)
        ab = a.copy().compose(b)
        assert np.abs(unitary_of(ab) - unitary_of(b) @ unitary_of(a)).max() < 1e-12


def test_moments_disjoint_after_appends():
    rng = np.random.default_rng(4)
    assert random_circuit(5, 60, rng).check_moments()


def test_append_layer_aligns_and_rejects_conflicts():
    c = Circuit([ORBITAL] * 4)
    c.append(Gate("H", (0,)))
    c.append_layer([Gate("Rz", (0,), 0.1), Gate("Rz", (3,), 0.2)])
    assert len(c.moments) == 2 and len(c.moments[1]) == 2
    with pytest.raises(StructuralError):
        c.append_layer([Gate("H", (1,)), Gate("CX", (1, 2))])


def test_mode_labels_follow_swaps():
    c = Circuit([ORBITAL] * 3)
    c.append(Gate("FermionicSwap", (0, 1)))
    c.append(Gate("FermionicSwap", (1, 2)))
    labels = c.mode_labels()
    assert labels[0] == [0, 1, 2]
    assert labels[-1] == [1, 2, 0]
    assert all(sorted(l) == [0, 1, 2] for l in labels)


def test_cost_models():
    c = Circuit([ORBITAL] * 4)
    c.append(Gate("MultiCX", (0, 1, 2, 3)))
    c.append(Gate("Rz", (1,), 0.3))
    assert total_depth(c, cost_model("circuit")) == 4
    assert total_depth(c, cost_model("lattice-surgery")) == 2
    assert rotation_depth(c, cost_model("lattice-surgery")) == 1
    with pytest.raises(ValueError):
        cost_model("nope")


def test_swap_depth():
    c = Circuit([ORBITAL] * 4)
    c.append(Gate("FermionicSwap", (0, 1)))
    c.append(Gate("FermionicSwap", (2, 3)))
    c.append(Gate("FermionicSwap", (1, 2)))
    assert swap_depth(c) == 2


def test_json_round_trip():
    rng = np.random.default_rng(5)
    c = random_circuit(4, 20, rng)
    c.add_qubit(ANCILLA)
    c.append(Gate("MultiCRz", (0, 1, 4), 0.2, (0, 1)))
    d = from_json(to_json(c))
    assert [q.role for q in d.qubits] == [q.role for q in c.qubits]
    assert [[(g.kind, g.qubits, g.angle, g.ctrl_state) for g in mo] for mo in d.moments] == \
        [[(g.kind, g.qubits, g.angle, g.ctrl_state) for g in mo] for mo in c.moments]
    assert np.allclose(unitary_of(c), unitary_of(d))


def test_text_format():
    c = Circuit.with_registers(1, 2, 1)
    c.append(Gate("CRz", (0, 1), 0.5))
    c.append(Gate("MultiCRz", (0, 2, 3), 0.25, (0, 1)))
    lines = to_text(c).splitlines()
    assert lines[0] == "qubits 4 precision 1 orbitals 2 ancillas 1"
    assert lines[1] == "0 CRz 0 1 0.5"
    # both gates are diagonal, so they share moment 0
    assert lines[2] == "0 MultiCRz !0 2 3 0.25"
