"""Dense state-vector and unitary simulation of Circuit objects."""

import numpy as np

from .config import check_cap
from .errors import StructuralError

SQ2 = 1 / np.sqrt(2)
_H = np.array([[SQ2, SQ2], [SQ2, -SQ2]], dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_S = np.diag([1, 1j])
_SDG = np.diag([1, -1j])


def rz(theta):
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def _single(kind, angle):
    if kind == "H":
        return _H
    if kind == "X":
        return _X
    if kind == "S":
        return _S
    if kind == "Sdg":
        return _SDG
    if kind in ("Rz", "CRz", "MultiCRz"):
        return rz(angle)
    raise StructuralError(kind)


def _apply_1q(psi, u, q, controls=(), states=()):
    """Apply u on axis q of psi, restricted to the control subspace."""
    if not controls:
        psi = np.tensordot(u, psi, axes=([1], [q]))
        return np.moveaxis(psi, 0, q)
    idx = [slice(None)] * psi.ndim
    for c, s in zip(controls, states):
        idx[c] = s
    idx = tuple(idx)
    sub = psi[idx]
    # axis of q inside the sliced view
    qs = q - sum(1 for c in controls if c < q)
    sub = np.moveaxis(np.tensordot(u, sub, axes=([1], [qs])), 0, qs)
    psi = psi.copy()
    psi[idx] = sub
    return psi


def _cz(psi, a, b):
    idx = [slice(None)] * psi.ndim
    idx[a] = 1
    idx[b] = 1
    psi = psi.copy()
    psi[tuple(idx)] *= -1
    return psi


def apply_gate(psi, g):
    k = g.kind
    if k == "Measure":
        return psi
    if k in ("H", "X", "S", "Sdg", "Rz"):
        return _apply_1q(psi, _single(k, g.angle), g.qubits[0])
    if k in ("CX", "Toffoli"):
        return _apply_1q(psi, _X, g.qubits[-1], g.controls, g.states)
    if k == "MultiCX":
        for t in g.targets:
            psi = _apply_1q(psi, _X, t, g.controls, g.states)
        return psi
    if k in ("CRz", "MultiCRz"):
        return _apply_1q(psi, rz(g.angle), g.qubits[-1], g.controls, g.states)
    if k == "CZ":
        return _cz(psi, *g.qubits)
    if k == "Swap":
        return np.swapaxes(psi, *g.qubits)
    if k == "FermionicSwap":
        return _cz(np.swapaxes(psi, *g.qubits), *g.qubits)
    raise StructuralError(f"cannot simulate {k}")


def _run(circ, psi):
    for mo in circ.moments:
        for g in mo:
            psi = apply_gate(psi, g)
    if circ.global_phase:
        psi = psi * np.exp(1j * circ.global_phase)
    return psi


def apply(circ, state):
    n = circ.n
    check_cap(n, state_only=True)
    state = np.asarray(state, dtype=complex)
    if state.shape != (2 ** n,):
        raise StructuralError(f"state has shape {state.shape}, circuit needs {(2 ** n,)}")
    psi = state.reshape((2,) * n + (1,)) if n else state.reshape((1,))
    return _run(circ, psi).reshape(-1)


def full_unitary(circ):
    n = circ.n
    check_cap(n)
    dim = 2 ** n
    psi = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    return _run(circ, psi).reshape(dim, dim)


def basis_state(bits):
    """|b0 b1 ...> as a vector, b0 most significant."""
    n = len(bits)
    v = np.zeros(2 ** n, dtype=complex)
    v[int("".join(str(int(b)) for b in bits), 2) if n else 0] = 1
    return v


def hamiltonian_matrix(h):
    from .fermion_algebra import term_matrix
    check_cap(h.m)
    dim = 2 ** h.m
    out = np.zeros((dim, dim), dtype=complex)
    for key, v in h.terms():
        if v:
            out += term_matrix(key, h.m, v)
    return out


def exact_ground_energy(h):
    return float(np.linalg.eigvalsh(hamiltonian_matrix(h))[0])


def ground_state(h):
    w, v = np.linalg.eigh(hamiltonian_matrix(h))
    return float(w[0]), v[:, 0]


def equal_up_to_phase(u, v, tol=1e-10):
    """(ok, phase, deviation) where v ~ phase * u."""
    u = np.asarray(u)
    v = np.asarray(v)
    k = np.unravel_index(np.argmax(np.abs(u)), u.shape)
    if abs(u[k]) < 1e-14:
        dev = float(np.max(np.abs(v)))
        return dev <= tol, 1.0, dev
    ph = v[k] / u[k]
    ph /= abs(ph)
    dev = float(np.max(np.abs(v - ph * u)))
    return dev <= tol, ph, dev
