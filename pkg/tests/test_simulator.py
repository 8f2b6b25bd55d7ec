import numpy as np
import pytest

from skilift.circuit_ir import Circuit, Gate, ORBITAL
from skilift.errors import ResourceError, StructuralError
from skilift.hamiltonian import from_terms, random_hamiltonian
from skilift.simulator import (apply, basis_state, equal_up_to_phase, exact_ground_energy,
                               full_unitary, ground_state, hamiltonian_matrix)
from skilift.templates import quad_template
from test_circuit_ir import random_circuit


def test_hadamard_on_zero():
    c = Circuit([ORBITAL])
    c.append(Gate("H", (0,)))
    assert np.allclose(apply(c, basis_state("0")), np.array([1, 1]) / np.sqrt(2))


def test_quad_flip():
    c = quad_template((0, 1, 2, 3), [np.pi / 2, 0, 0]).circuit()
    out = apply(c, basis_state("0011"))
    assert np.allclose(out, -1j * basis_state("1100"))


def test_norm_preserved():
    rng = np.random.default_rng(0)
    for _ in range(10):
        c = random_circuit(6, 40, rng)
        psi = rng.normal(size=64) + 1j * rng.normal(size=64)
        psi /= np.linalg.norm(psi)
        assert abs(np.linalg.norm(apply(c, psi)) - 1) < 1e-12


def test_identity():
    assert np.allclose(full_unitary(Circuit([ORBITAL] * 3)), np.eye(8))


def test_moment_equals_tensor_product():
    c = Circuit([ORBITAL] * 2)
    c.append(Gate("H", (0,)))
    c.append(Gate("S", (1,)))
    assert len(c.moments) == 1
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    assert np.allclose(full_unitary(c), np.kron(h, np.diag([1, 1j])))


def test_unitarity_8_qubits():
    rng = np.random.default_rng(1)
    u = full_unitary(random_circuit(8, 60, rng))
    assert np.abs(u.conj().T @ u - np.eye(256)).max() < 1e-11


def test_order_inside_moment_irrelevant():
    rng = np.random.default_rng(2)
    c = random_circuit(5, 40, rng)
    d = c.copy()
    d.moments = [list(reversed(mo)) for mo in d.moments]
    psi = basis_state("10110")
    assert np.abs(apply(c, psi) - apply(d, psi)).max() < 1e-12


def test_dimension_mismatch():
    with pytest.raises(StructuralError):
        apply(Circuit([ORBITAL] * 2), np.ones(8))


def test_cap(monkeypatch):
    monkeypatch.setenv("SKILIFT_SIM_CAP", "4")
    with pytest.raises(ResourceError):
        full_unitary(Circuit([ORBITAL] * 5))


def test_ground_energy_examples():
    assert exact_ground_energy(from_terms(2)) == 0
    assert exact_ground_energy(from_terms(1, [(0, 0, -1.0)])) == pytest.approx(-2)


def test_ground_vector_rayleigh():
    h = random_hamiltonian(4, np.random.default_rng(3))
    e, v = ground_state(h)
    H = hamiltonian_matrix(h)
    assert abs(np.vdot(v, H @ v).real - e) < 1e-10
    assert np.abs(np.linalg.eigvals(H).imag).max() < 1e-10


def test_equal_up_to_phase_reports_phase():
    u = np.eye(2)
    ok, ph, dev = equal_up_to_phase(u, 1j * u)
    assert ok and abs(ph - 1j) < 1e-12 and dev < 1e-12
