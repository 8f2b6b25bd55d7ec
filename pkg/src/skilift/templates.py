"""Circuits for individual Hamiltonian terms.

The optimized templates rotate inside the rank-2 subspace of a term: a CNOT
fan moves the two coupled basis states onto a single wire, a Hadamard turns
the coupling into a Z, and a controlled Rz does the work.  All three quad
pairings share one basis change, so their cores fire in the same moment.
"""

from dataclasses import dataclass, field

from .circuit_ir import Circuit, Gate, ORBITAL
from .errors import StructuralError
from .hamiltonian import canonical_two_body

CORE = "core"

# control patterns on wires 1,2,3 after the fan from wire 0
QUAD_PATTERNS = ((0, 1, 1), (1, 0, 1), (1, 1, 0))
QUAD_LOCAL_KEYS = ((0, 1, 3, 2), (0, 2, 3, 1), (0, 3, 2, 1))


@dataclass
class TermTemplate:
    """Basis change, commuting rotation core, inverse basis change.

    A template may chain several segments (the triple template has three,
    the pair template keeps its density phase in a second one).
    """
    kind: str
    wires: tuple
    segments: list = field(default_factory=list)  # (basis_in, core, basis_out)
    global_phase: float = 0.0
    slots: list = None  # alignment slot of each segment within a stage

    def __post_init__(self):
        if self.slots is None:
            self.slots = list(range(len(self.segments)))

    @property
    def basis_in(self):
        return self.segments[0][0] if self.segments else []

    @property
    def basis_out(self):
        return self.segments[0][2] if self.segments else []

    @property
    def rotation_core(self):
        return [g for _, core, _ in self.segments for g in core]

    def gates(self, reverse=False):
        segs = self.segments[::-1] if reverse else self.segments
        for bin_, core, bout in segs:
            yield from bin_
            yield from core
            yield from bout

    def circuit(self, n=None):
        n = n if n is not None else max(self.wires) + 1
        c = Circuit([ORBITAL] * n)
        c.extend(self.gates())
        c.global_phase = self.global_phase
        return c


def _core(target, controls, states, angle, base):
    if not controls:
        return Gate("Rz", (target,), angle, tag=(CORE, base))
    return Gate("MultiCRz", tuple(controls) + (target,), angle, tuple(states), tag=(CORE, base))


def _inverse(gates):
    out = []
    for g in reversed(gates):
        if g.kind == "S":
            out.append(Gate("Sdg", g.qubits))
        elif g.kind == "Sdg":
            out.append(Gate("S", g.qubits))
        elif g.kind in ("Rz", "CRz", "MultiCRz"):
            out.append(g.with_angle(-g.angle))
        else:
            out.append(g)
    return out


def _adjacent(wires, k):
    if len(wires) != k:
        raise StructuralError(f"expected {k} wires, got {len(wires)}")
    if any(b != a + 1 for a, b in zip(wires, wires[1:])):
        raise StructuralError(f"wires {wires} are not adjacent")


def singleton_template(wire, theta):
    """exp(-i theta n) = exp(-i theta/2) Rz(-theta)."""
    seg = ([], [_core(wire, (), (), -theta, -theta)] if theta else [], [])
    return TermTemplate("singleton", (wire,), [seg], -theta / 2)


def pair_template(wires, theta, phi=0.0):
    """exp(-i theta (|10><01| + h.c.)) then exp(-i phi n_p n_q)."""
    wires = tuple(wires)
    _adjacent(wires, 2)
    a, b = wires
    segs, slots = [], []
    if theta:
        bin_ = [Gate("CX", (a, b)), Gate("H", (a,))]
        segs.append((bin_, [_core(a, (b,), (1,), 2 * theta, theta)], _inverse(bin_)))
        slots.append(0)
    phase = 0.0
    if phi:
        # diag(1,1,1,e^{-i phi}) = e^{-i phi/4} CRz(-phi) Rz_a(-phi/2)
        core = [Gate("CRz", (a, b), -phi, tag=(CORE, -phi)),
                Gate("Rz", (a,), -phi / 2, tag=(CORE, -phi / 2))]
        segs.append(([], core, []))
        slots.append(1)
        phase = -phi / 4
    return TermTemplate("pair", wires, segs, phase, slots)


def triple_template(wires, thetas, order=(0, 1, 2)):
    """Three number-controlled hoppings on adjacent wires.

    ``thetas[k]`` is the angle of the form whose spectator is wires[k];
    forms run in ``order``.  Each is exp(-i theta (|1 s 0><0 s 1| + h.c.))
    restricted to an occupied spectator s.
    """
    wires = tuple(wires)
    _adjacent(wires, 3)
    segs, slots = [], []
    for slot, k in enumerate(order):
        th = thetas[k]
        if not th:
            continue
        slots.append(slot)
        spectator = wires[k]
        a, b = [w for w in wires if w != spectator]
        bin_ = [Gate("CX", (a, b)), Gate("H", (a,))]
        core = [_core(a, (b, spectator), (1, 1), 2 * th, th)]
        segs.append((bin_, core, _inverse(bin_)))
    return TermTemplate("triple", wires, segs, 0.0, slots)


def triple_template_for_terms(wires, terms, order=(0, 1, 2)):
    """triple_template from (local key, theta) pairs on one triple of wires."""
    thetas = [0.0, 0.0, 0.0]
    for key, th in terms:
        if sorted(set(key)) != [0, 1, 2]:
            raise StructuralError(f"term {key} is not on the block's triple")
        canon, sign = canonical_two_body(key)
        spectator = [i for i in canon if canon.count(i) == 2][0]
        thetas[spectator] += sign * th
    return triple_template(wires, thetas, order)


def quad_template(wires, thetas):
    """All three pairings of one quadruple behind a single basis change.

    ``thetas`` are the angles of the pairings 01|23, 02|13, 03|12 in wire
    order; the template equals the product of their exponentials.
    """
    wires = tuple(wires)
    _adjacent(wires, 4)
    if len(thetas) != 3:
        raise StructuralError("quad template takes three pairing angles")
    w0, w1, w2, w3 = wires
    bin_ = [Gate("MultiCX", (w0, w1, w2, w3)), Gate("H", (w0,))]
    core = [_core(w0, (w1, w2, w3), pat, 2 * th, th)
            for pat, th in zip(QUAD_PATTERNS, thetas) if th]
    if not core:
        return TermTemplate("quad", wires, [])
    return TermTemplate("quad", wires, [(bin_, core, _inverse(bin_))])


def quad_template_for_terms(wires, terms):
    """quad_template from (local key, theta) pairs; keys must share one quadruple."""
    thetas = [0.0, 0.0, 0.0]
    for key, th in terms:
        if sorted(set(key)) != [0, 1, 2, 3]:
            raise StructuralError(f"term {key} is not on the block's quadruple")
        canon, sign = canonical_two_body(key)
        thetas[QUAD_LOCAL_KEYS.index(canon)] += sign * th
    return quad_template(wires, thetas)


# -- baseline: serial Pauli exponentials ---------------------------------

_PAULI_MUL = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}


def _pmul(a, b):
    ph = 1
    out = []
    for x, y in zip(a, b):
        f, z = _PAULI_MUL[(x, y)]
        ph *= f
        out.append(z)
    return ph, "".join(out)


def _ladder_paulis(k, n, create):
    """JW ladder operator as {pauli string: coefficient}."""
    zs = "Z" * k
    rest = "I" * (n - k - 1)
    sy = -0.5j if create else 0.5j
    return {zs + "X" + rest: 0.5, zs + "Y" + rest: sy}


def pauli_decomposition(indices, n):
    """Pauli expansion of a one- or two-body Hermitian term on n wires."""
    if len(indices) == 2:
        p, q = indices
        facs = [(p, True), (q, False)]
    else:
        p, q, r, s = indices
        facs = [(p, True), (q, True), (r, False), (s, False)]
    terms = {"I" * n: 1.0}
    for k, cr in facs:
        nxt = {}
        for s1, c1 in terms.items():
            for s2, c2 in _ladder_paulis(k, n, cr).items():
                ph, st = _pmul(s1, s2)
                nxt[st] = nxt.get(st, 0) + c1 * c2 * ph
        terms = nxt
    out = {}
    for st, v in terms.items():
        tot = v + v.conjugate()  # adding the Hermitian conjugate doubles the real part
        if abs(tot) > 1e-12:
            out[st] = out.get(st, 0) + tot.real
    return {k: v for k, v in out.items() if abs(v) > 1e-12}


def pauli_exponential(string, angle, wires):
    """Gates for exp(-i angle P) with P a Pauli string over ``wires``."""
    support = [(w, p) for w, p in zip(wires, string) if p != "I"]
    if not support:
        return [], -angle
    basis = []
    for w, p in support:
        if p == "X":
            basis.append(Gate("H", (w,)))
        elif p == "Y":
            basis += [Gate("Sdg", (w,)), Gate("H", (w,))]
    ws = [w for w, _ in support]
    ladder = [Gate("CX", (a, b)) for a, b in zip(ws, ws[1:])]
    rot = Gate("Rz", (ws[-1],), 2 * angle, tag=(CORE, 2 * angle))
    return basis + ladder + [rot] + _inverse(ladder) + _inverse(basis), 0.0


def baseline_pauli_template(term, theta, wires=None, n=None):
    """exp(-i theta H_term) as a serial product of Pauli exponentials.

    ``term`` is an index tuple over wire positions; the JW strings span the
    wires between the term's indices.  For a quad pairing this is eight
    blocks with Rz angles +-theta/4.
    """
    idx = tuple(getattr(term, "term", term))
    n = n if n is not None else max(idx) + 1
    wires = wires if wires is not None else list(range(n))
    c = Circuit([ORBITAL] * len(wires))
    phase = 0.0
    for st, coef in sorted(pauli_decomposition(idx, n).items()):
        gates, ph = pauli_exponential(st, theta * coef, wires)
        c.extend(gates)
        phase += ph
    c.global_phase = phase
    return c


# Pauli strings per term class in the serial baseline.
BASELINE_PAULIS = {"singleton": 1, "hopping": 2, "density": 3, "triple": 4, "quad": 8}
