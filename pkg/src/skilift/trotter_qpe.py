"""Fourth-order Trotter steps over a schedule, phase estimation and readout.

Evolution is exp(-iHt).  Precision qubit 0 is the most significant bit;
readout bin s estimates frac(-E t1 / 2pi).
"""

import math
from dataclasses import dataclass

import numpy as np

from .circuit_ir import Circuit, Gate, ORBITAL, PRECISION
from .config import check_cap
from .errors import CoverageError, StructuralError
from .rotation_passes import expand_precision_controls, run_pipeline
from .scheduler import PAIR, QUAD, SINGLETON, TRIPLE, build_schedule, stage_terms
from .templates import (pair_template, quad_template_for_terms, singleton_template,
                        triple_template_for_terms)


def trotter_coefficients():
    a = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
    return a, 1.0 - 2.0 * a


@dataclass
class TrotterPlan:
    N: int = 1
    alpha: float = None
    beta: float = None
    t: float = 1.0

    def __post_init__(self):
        if self.N < 1:
            raise StructuralError("repetition count must be at least 1")
        if self.alpha is None or self.beta is None:
            self.alpha, self.beta = trotter_coefficients()
        a, b = self.alpha, self.beta
        if abs(2 * a + b - 1) > 1e-12 or abs(2 * a ** 3 + b ** 3) > 1e-12:
            raise StructuralError("alpha, beta violate 2a+b=1, 2a^3+b^3=0")

    def substeps(self):
        """Scale factors x of the symmetric second-order factors, in order."""
        a, b = self.alpha / self.N, self.beta / self.N
        return [a, b, a] * self.N


@dataclass
class QpeConfig:
    b: int = 4
    t1: float = 1.0
    initial_state: object = None   # occupation string "0101" or amplitude vector
    e_min: float = None
    energy_shift: float = 0.0      # evolve under H + shift * I

    def __post_init__(self):
        if self.b < 1:
            raise StructuralError("need at least one precision qubit")
        if not self.t1 > 0:
            raise StructuralError("t1 must be positive")

    def times(self):
        return [k * self.t1 for k in range(2 ** self.b)]


# -- templates for scheduled blocks -------------------------------------------

def block_template(kind, wires, terms, pos, tau):
    """Template for the terms of one block at time tau.

    ``pos`` maps orbitals to wire positions; keys are rewritten in local
    wire positions before canonicalization so fermionic signs follow the
    layout.
    """
    w0 = wires[0]
    local = [(tuple(pos[o] - w0 for o in tc.term), tc.coefficient) for tc in terms]
    if kind == SINGLETON:
        return singleton_template(w0, 2 * sum(v for _, v in local) * tau)
    if kind == PAIR:
        theta = sum(v for k, v in local if len(k) == 2) * tau
        phi = 2 * sum(v for k, v in local if len(k) == 4) * tau
        return pair_template(wires, theta, phi)
    if kind == TRIPLE:
        return triple_template_for_terms(wires, [(k, v * tau) for k, v in local])
    if kind == QUAD:
        return quad_template_for_terms(wires, [(k, v * tau) for k, v in local])
    raise StructuralError(f"unknown stage kind {kind}")


def _swap_layers(circ, layers, orb):
    for layer in layers:
        circ.append_layer([Gate("FermionicSwap", (orb[i], orb[i + 1])) for i in layer])


def emit_stage(circ, stage, terms, tau, orb, reverse=False):
    pos = {o: w for w, o in enumerate(stage.layout)}
    temps = []
    for blk, bw in zip(stage.blocks, stage.block_wires()):
        t = block_template(stage.kind, tuple(orb[w] for w in bw), terms[blk],
                           {o: orb[w] for o, w in pos.items()}, tau)
        circ.global_phase += t.global_phase
        temps.append(t)
    slots = sorted({s for t in temps for s in t.slots}, reverse=reverse)
    for s in slots:
        segs = [seg for t in temps for seg, ts in zip(t.segments, t.slots) if ts == s]
        for bin_, _, _ in segs:
            circ.extend(bin_)
        circ.append_layer([g for _, core, _ in segs for g in core])
        for _, _, bout in segs:
            circ.extend(bout)


def _stage_terms(schedule, h):
    out = []
    for st in schedule.stages:
        terms = stage_terms(st, h)
        out.append(terms)
    seen = {tc.term for terms in out for lst in terms.values() for tc in lst}
    missing = [k for k, v in h.terms() if v and k not in seen]
    if missing:
        raise CoverageError(f"{len(missing)} terms not covered by the schedule, e.g. {missing[0]}")
    return out


def _sweep(circ, schedule, terms, tau, orb, mirrored=False):
    """Forward sweep (routing into each stage) or its mirror image."""
    st = schedule.stages
    if not mirrored:
        for k, stage in enumerate(st):
            if k:
                _swap_layers(circ, stage.routing, orb)
                circ.mark_segment()
            emit_stage(circ, stage, terms[k], tau, orb)
            circ.mark_segment()
    else:
        for k in range(len(st) - 1, -1, -1):
            emit_stage(circ, st[k], terms[k], tau, orb, reverse=True)
            circ.mark_segment()
            if k:
                _swap_layers(circ, st[k].routing[::-1], orb)
                circ.mark_segment()


def _s2(circ, schedule, terms, tau, orb):
    _sweep(circ, schedule, terms, tau / 2, orb)
    _sweep(circ, schedule, terms, tau / 2, orb, mirrored=True)


def _orbital_circuit(m):
    return Circuit([ORBITAL] * m)


def trotter_step_circuit(h, schedule, plan, x=1.0):
    """One symmetric second-order factor S2 at time plan.t * x, starting and ending in the identity layout."""
    if schedule.m != h.m:
        raise StructuralError("schedule and Hamiltonian disagree on m")
    terms = _stage_terms(schedule, h)
    circ = _orbital_circuit(h.m)
    orb = circ.orbital_wires()
    if not schedule.stages:
        return circ
    first = schedule.stages[0].routing or []
    _swap_layers(circ, first, orb)
    _s2(circ, schedule, terms, plan.t * x, orb)
    _swap_layers(circ, first[::-1], orb)
    return circ


def sweep_circuit(h, schedule, tau):
    """One first-order pass over the schedule: every term once at time tau.

    This is the unit both the benchmark and synthesis report on.
    """
    if schedule.m != h.m:
        raise StructuralError("schedule and Hamiltonian disagree on m")
    terms = _stage_terms(schedule, h)
    circ = _orbital_circuit(h.m)
    orb = circ.orbital_wires()
    if not schedule.stages:
        return circ
    _swap_layers(circ, schedule.stages[0].routing or [], orb)
    _sweep(circ, schedule, terms, tau, orb)
    _swap_layers(circ, schedule.exit_routing or [], orb)
    return circ


def trotter_circuit(h, schedule, plan, energy_shift=0.0):
    """The fourth-order product prod_N S2(a t/N) S2(b t/N) S2(a t/N)."""
    if schedule.m != h.m:
        raise StructuralError("schedule and Hamiltonian disagree on m")
    terms = _stage_terms(schedule, h)
    circ = _orbital_circuit(h.m)
    orb = circ.orbital_wires()
    if schedule.stages:
        first = schedule.stages[0].routing or []
        _swap_layers(circ, first, orb)
        for x in plan.substeps():
            _s2(circ, schedule, terms, plan.t * x, orb)
        _swap_layers(circ, first[::-1], orb)
    circ.global_phase -= energy_shift * plan.t
    return circ


def oracle_sweep_unitary(h, schedule, tau):
    """Dense product of term exponentials in the order one sweep applies them.

    Blocks of a stage act on disjoint orbitals; inside a triple block the
    three forms run in the order of their spectator's wire position.
    """
    from scipy.linalg import expm
    from .fermion_algebra import term_matrix
    from .simulator import check_cap
    m = h.m
    check_cap(m)
    u = np.eye(2 ** m, dtype=complex)
    for stage, terms in zip(schedule.stages, _stage_terms(schedule, h)):
        pos = {o: w for w, o in enumerate(stage.layout)}
        groups = {}
        for blk in stage.blocks:
            w0 = min(pos[o] for o in blk)
            for tc in terms[blk]:
                slot = 0
                if stage.kind == TRIPLE:
                    spectator = [o for o in tc.term if tc.term.count(o) == 2][0]
                    slot = pos[spectator] - w0
                elif stage.kind == PAIR and len(tc.term) == 4:
                    slot = 1
                groups.setdefault(slot, []).append(tc)
        for slot in sorted(groups):
            mat = sum(term_matrix(tc.term, m, tc.coefficient) for tc in groups[slot])
            u = expm(-1j * tau * mat) @ u
    return u


# -- phase estimation ---------------------------------------------------------

def _cphase(c, t, phi):
    """diag(1,1,1,e^{i phi}) = e^{i phi/4} CRz(phi) Rz_c(phi/2)."""
    return [Gate("CRz", (c, t), phi), Gate("Rz", (c,), phi / 2)], phi / 4


def iqft(b):
    """Inverse QFT on b wires, wire 0 most significant, bit reversal included."""
    c = Circuit([PRECISION] * b)
    gates = []
    phase = 0.0
    for i in range(b // 2):
        gates.append(Gate("Swap", (i, b - 1 - i)))
    for j in range(b - 1, -1, -1):
        for k in range(b - 1, j, -1):
            gs, ph = _cphase(k, j, -2 * math.pi / 2 ** (k - j + 1))
            gates += gs
            phase += ph
        gates.append(Gate("H", (j,)))
    c.extend(gates)
    c.global_phase = phase
    return c


def _occupation(init, m):
    s = str(init).strip()
    if len(s) != m or set(s) - {"0", "1"}:
        raise StructuralError(f"occupation string must be {m} characters of 0/1, got {init!r}")
    return [int(ch) for ch in s]


def qpe_circuit(h, schedule, plan, cfg, passes=None):
    """H on the precision register, controlled evolution, inverse QFT, measurement.

    The controlled evolution at T = sum_k t_k 2^(b-1-k) is the product
    formula at time T * t1; ``plan.t`` is overridden by cfg.t1.
    """
    step_plan = TrotterPlan(plan.N, plan.alpha, plan.beta, cfg.t1)
    body = trotter_circuit(h, schedule, step_plan, cfg.energy_shift)
    if passes:
        ctrl = run_pipeline(body, list(passes) + ["expand_precision_controls"], cfg.b)
    else:
        ctrl = expand_precision_controls(body, cfg.b)
    ctrl.meta.pop("segments", None)
    b = cfg.b
    out = Circuit([q.role for q in ctrl.qubits])
    prec = out.wires(PRECISION)
    orb = out.orbital_wires()
    if isinstance(cfg.initial_state, str):
        for w, bit in zip(orb, _occupation(cfg.initial_state, h.m)):
            if bit:
                out.append(Gate("X", (w,)))
    out.append_layer([Gate("H", (w,)) for w in prec])
    out.new_moment()
    for mo in ctrl.moments:
        if mo:
            out.append_layer(mo)
    out.global_phase = ctrl.global_phase
    out.new_moment()
    q = iqft(b)
    out.compose(q, prec)
    out.new_moment()
    out.append_layer([Gate("Measure", (w,)) for w in prec])
    out.meta.update({"b": b, "t1": cfg.t1})
    return out


def qpe_distribution(h, schedule, plan, cfg, passes=None):
    """Exact outcome probabilities of the precision register (length 2^b)."""
    from .simulator import apply
    circ = qpe_circuit(h, schedule, plan, cfg, passes)
    n = circ.n
    check_cap(n, state_only=True)
    init = cfg.initial_state
    psi = np.zeros(2 ** n, dtype=complex)
    if init is None or isinstance(init, str):
        psi[0] = 1.0
    else:
        amp = np.asarray(init, dtype=complex).reshape(-1)
        if amp.shape != (2 ** h.m,):
            raise StructuralError(f"initial amplitudes must have length {2 ** h.m}")
        # precision and ancilla wires start in |0>, orbital wires carry amp
        full = np.zeros((2,) * n, dtype=complex)
        sl = tuple(slice(None) if q.role == ORBITAL else 0 for q in circ.qubits)
        full[sl] = (amp / np.linalg.norm(amp)).reshape((2,) * h.m)
        psi = full.reshape(-1)
    out = apply(circ, psi).reshape((2,) * n)
    prec = circ.wires(PRECISION)
    rest = tuple(w for w in range(n) if w not in prec)
    probs = np.sum(np.abs(out) ** 2, axis=rest).reshape(-1)
    return probs / probs.sum()


def sample_shots(probs, shots, seed=0):
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, np.asarray(probs) / np.sum(probs))
    return counts


def phase_of_bin(s, b):
    return s / 2 ** b


def read_energy(dist, cfg):
    """(energy, resolution, bin) from the argmax of a distribution or counts.

    E = -2 pi s / (2^b t1), wrapped into (-2pi/t1, 0] or, with cfg.e_min,
    into [e_min, e_min + 2pi/t1).
    """
    d = np.asarray(dist, dtype=float).reshape(-1)
    if d.size == 0 or not d.sum() > 0:
        raise StructuralError("empty distribution")
    if d.size != 2 ** cfg.b:
        raise StructuralError(f"distribution has {d.size} bins, expected {2 ** cfg.b}")
    s = int(np.argmax(d))
    period = 2 * math.pi / cfg.t1
    e = -period * s / 2 ** cfg.b + 0.0
    if cfg.e_min is None:
        if e <= -period:
            e += period
    else:
        e = cfg.e_min + (e - cfg.e_min) % period
    return e, period / 2 ** cfg.b, s


def ground_bin(e, cfg):
    """Fractional bin index of energy e (the exact readout phase times 2^b)."""
    return (-e * cfg.t1 / (2 * math.pi)) % 1.0 * 2 ** cfg.b


def estimate_energy(h, cfg, plan=None, schedule=None, passes=None):
    schedule = schedule or build_schedule(h)
    plan = plan or TrotterPlan()
    probs = qpe_distribution(h, schedule, plan, cfg, passes)
    e, res, s = read_energy(probs, cfg)
    return {"energy": e, "resolution": res, "bin": s, "phase": phase_of_bin(s, cfg.b),
            "probabilities": probs.tolist()}
