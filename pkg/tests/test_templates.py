import numpy as np
import pytest
from scipy.linalg import expm

from skilift.circuit_ir import rotation_depth, unitary_of
from skilift.errors import StructuralError
from skilift.fermion_algebra import term_matrix
from skilift.hamiltonian import quad_keys, triple_keys
from skilift.simulator import apply, basis_state, equal_up_to_phase
from skilift.templates import (BASELINE_PAULIS, baseline_pauli_template, pair_template,
                               pauli_decomposition, quad_template, quad_template_for_terms,
                               singleton_template, triple_template, triple_template_for_terms)


def exact(template, n):
    return unitary_of(template.circuit(n))


def oracle(pairs, n):
    """Ordered product of exp(-i theta H) for (key, theta) pairs."""
    u = np.eye(2 ** n, dtype=complex)
    for key, th in pairs:
        u = expm(-1j * th * term_matrix(key, n)) @ u
    return u


def close(u, v, tol=1e-10):
    return np.abs(u - v).max() <= tol


def trials(seed, n=20):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        m = int(rng.integers(4, 7))
        yield rng, m


def test_singleton_exact():
    for rng, m in trials(1):
        w = int(rng.integers(m))
        th = float(rng.normal())
        assert close(exact(singleton_template(w, th), m), oracle([((w, w), th / 2)], m))


def test_hopping_exact():
    for rng, m in trials(2):
        w = int(rng.integers(m - 1))
        th = float(rng.normal())
        assert close(exact(pair_template((w, w + 1), th), m), oracle([((w, w + 1), th)], m))


def test_density_exact():
    for rng, m in trials(3):
        w = int(rng.integers(m - 1))
        phi = float(rng.normal())
        key = (w, w + 1, w + 1, w)
        assert close(exact(pair_template((w, w + 1), 0.0, phi), m), oracle([(key, phi / 2)], m))


def test_triple_forms_exact_in_order():
    for rng, m in trials(4):
        w = int(rng.integers(m - 2))
        wires = (w, w + 1, w + 2)
        keys = triple_keys(*wires)
        ths = rng.normal(size=3)
        local = [(tuple(i - w for i in k), float(t)) for k, t in zip(keys, ths)]
        tmpl = triple_template_for_terms(wires, local)
        assert close(exact(tmpl, m), oracle(list(zip(keys, ths)), m))
        assert rotation_depth(tmpl.circuit(m)) == 3


def test_quad_all_pairings_exact():
    for rng, m in trials(5):
        w = int(rng.integers(m - 3))
        wires = tuple(range(w, w + 4))
        keys = quad_keys(*wires)
        ths = rng.normal(size=3)
        local = [(tuple(i - w for i in k), float(t)) for k, t in zip(keys, ths)]
        tmpl = quad_template_for_terms(wires, local)
        assert close(exact(tmpl, m), oracle(list(zip(keys, ths)), m))
        assert rotation_depth(tmpl.circuit(m)) == 1


@pytest.mark.parametrize("key", [(1, 0, 2, 3), (0, 1, 2, 3), (2, 3, 0, 1), (0, 2, 1, 3), (3, 0, 1, 2)])
def test_quad_rearranged_key_carries_sign(key):
    th = 0.37
    assert close(exact(quad_template_for_terms((0, 1, 2, 3), [(key, th)]), 4), oracle([(key, th)], 4))


def test_quad_flip_example():
    out = apply(quad_template((0, 1, 2, 3), [np.pi / 2, 0, 0]).circuit(), basis_state("0011"))
    assert np.allclose(out, -1j * basis_state("1100"))
    out = apply(quad_template((0, 1, 2, 3), [np.pi / 2, 0, 0]).circuit(), basis_state("1010"))
    assert np.allclose(out, basis_state("1010"))


def test_pair_flip_and_zero():
    out = apply(pair_template((0, 1), np.pi / 2).circuit(), basis_state("01"))
    assert np.allclose(out, -1j * basis_state("10"))
    assert close(exact(pair_template((0, 1), 0.0), 2), np.eye(4))


def test_singleton_examples():
    assert close(exact(singleton_template(0, 0.0), 1), np.eye(2))
    u = exact(singleton_template(0, np.pi), 1)
    assert np.allclose(u, np.diag([1, -1]))


def test_triple_spectator_empty_is_identity():
    # only the form with spectator on the middle wire
    tmpl = triple_template((0, 1, 2), [0.0, 0.8, 0.0])
    for s in ("100", "001"):
        assert np.allclose(apply(tmpl.circuit(), basis_state(s)), basis_state(s))


def test_basis_out_inverts_basis_in():
    for tmpl in (quad_template((0, 1, 2, 3), [0.1, 0.2, 0.3]), pair_template((0, 1), 0.4),
                 triple_template((0, 1, 2), [0.1, 0.2, 0.3])):
        for bin_, _, bout in tmpl.segments:
            from skilift.circuit_ir import Circuit, ORBITAL
            c = Circuit([ORBITAL] * len(tmpl.wires))
            c.extend(list(bin_) + list(bout))
            assert close(unitary_of(c), np.eye(2 ** len(tmpl.wires)))


def test_quad_shares_one_basis_change():
    full = quad_template((0, 1, 2, 3), [0.1, 0.2, 0.3])
    one = quad_template((0, 1, 2, 3), [0.1, 0.0, 0.0])
    assert len(full.rotation_core) == 3 and len(one.rotation_core) == 1
    assert full.basis_in == one.basis_in and full.basis_out == one.basis_out


def test_template_errors():
    with pytest.raises(StructuralError):
        pair_template((0, 2), 0.1)
    with pytest.raises(StructuralError):
        triple_template((0, 1, 3), [0.1, 0.1, 0.1])
    with pytest.raises(StructuralError):
        quad_template_for_terms((0, 1, 2, 3), [((0, 1, 1, 0), 0.1)])


@pytest.mark.parametrize("key,cls", [((1, 1), "singleton"), ((0, 2), "hopping"),
                                     ((0, 2, 2, 0), "density"), ((0, 1, 2, 1), "triple"),
                                     ((0, 1, 3, 2), "quad")])
def test_baseline_exact_and_string_count(key, cls):
    rng = np.random.default_rng(6)
    for _ in range(5):
        th = float(rng.normal())
        c = baseline_pauli_template(key, th, n=4)
        ok, _, dev = equal_up_to_phase(oracle([(key, th)], 4), unitary_of(c))
        assert ok, dev
        assert len(pauli_decomposition(key, 4)) == BASELINE_PAULIS[cls] + (1 if cls in ("singleton", "density") else 0)


def test_baseline_quad_matches_template():
    th = 0.61
    base = unitary_of(baseline_pauli_template((0, 1, 3, 2), th))
    opt = unitary_of(quad_template((0, 1, 2, 3), [th, 0, 0]).circuit())
    assert equal_up_to_phase(base, opt)[0]


def test_eightfold_depth():
    base = baseline_pauli_template((0, 1, 3, 2), 0.3)
    opt = quad_template((0, 1, 2, 3), [0.3, 0.2, 0.1]).circuit()
    assert rotation_depth(base) == 8
    assert rotation_depth(opt) == 1
    assert rotation_depth(baseline_pauli_template((0, 1, 3, 2), 0.0)) == 8
    assert close(unitary_of(baseline_pauli_template((0, 1, 3, 2), 0.0)), np.eye(16))
