"""Circuit IR: role-tagged qubits, gates, ASAP moments and cost metrics.

Gates inside a moment act on disjoint qubits, with one relaxation: gates
that are diagonal in the computational basis commute, so they may share
qubits within a moment (a rank-2 core fires its three rotations together).
"""

import json
import math
from collections import Counter
from dataclasses import dataclass, field, replace

from .errors import StructuralError

PRECISION, ORBITAL, ANCILLA = "precision", "orbital", "ancilla"
ROLES = (PRECISION, ORBITAL, ANCILLA)

ROTATIONS = frozenset({"Rz", "CRz", "MultiCRz"})
DIAGONAL = frozenset({"Rz", "CRz", "MultiCRz", "CZ", "S", "Sdg", "Measure"})
SWAPS = frozenset({"Swap", "FermionicSwap"})

# kind -> (fixed arity or None, has angle)
KINDS = {
    "H": (1, False), "S": (1, False), "Sdg": (1, False), "X": (1, False),
    "CX": (2, False), "CZ": (2, False), "Swap": (2, False), "FermionicSwap": (2, False),
    "Toffoli": (3, False), "MultiCX": (None, False),
    "Rz": (1, True), "CRz": (2, True), "MultiCRz": (None, True),
    "Measure": (1, False),
}
CONTROLLED = {"CX": 1, "Toffoli": 2, "CRz": 1}


@dataclass(frozen=True)
class QubitId:
    index: int
    role: str


@dataclass(frozen=True)
class Gate:
    """A gate record.

    Operand order: controls first, target last (MultiCX: control first,
    then every target).  ``ctrl_state`` gives the firing value of each
    control, default all ones.  ``tag`` carries pass bookkeeping, e.g. the
    base angle of a rotation core.
    """
    kind: str
    qubits: tuple
    angle: float = None
    ctrl_state: tuple = None
    tag: object = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise StructuralError(f"unknown gate kind {self.kind}")
        arity, has_angle = KINDS[self.kind]
        qs = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qs)
        if arity is not None and len(qs) != arity:
            raise StructuralError(f"{self.kind} takes {arity} operands, got {len(qs)}")
        if self.kind == "MultiCX" and len(qs) < 2:
            raise StructuralError("MultiCX needs a control and at least one target")
        if self.kind == "MultiCRz" and len(qs) < 1:
            raise StructuralError("MultiCRz needs a target")
        if len(set(qs)) != len(qs):
            raise StructuralError(f"repeated operand in {self.kind}{qs}")
        if has_angle:
            if self.angle is None or not math.isfinite(self.angle):
                raise StructuralError(f"{self.kind} needs a finite angle")
        if self.ctrl_state is not None:
            cs = tuple(int(b) for b in self.ctrl_state)
            if len(cs) != len(self.controls):
                raise StructuralError("ctrl_state length does not match controls")
            object.__setattr__(self, "ctrl_state", None if all(cs) else cs)

    @property
    def controls(self):
        if self.kind == "MultiCRz":
            return self.qubits[:-1]
        if self.kind == "MultiCX":
            return self.qubits[:1]
        return self.qubits[:CONTROLLED.get(self.kind, 0)]

    @property
    def targets(self):
        return self.qubits[len(self.controls):]

    @property
    def states(self):
        return self.ctrl_state or (1,) * len(self.controls)

    @property
    def diagonal(self):
        return self.kind in DIAGONAL

    def with_angle(self, angle):
        return replace(self, angle=angle)


@dataclass
class CostModel:
    name: str = "circuit"
    weights: dict = field(default_factory=dict)
    fanout_constant_time: bool = False
    toffoli_layer_weight: float = 1.0

    def weight(self, g):
        if g.kind == "Measure":
            return 0.0
        if g.kind == "MultiCX":
            w = self.weights.get("MultiCX", 1.0)
            return w if self.fanout_constant_time else w * (len(g.qubits) - 1)
        if g.kind == "Toffoli":
            return self.toffoli_layer_weight
        return self.weights.get(g.kind, 1.0)


def cost_model(name):
    if name == "circuit":
        return CostModel("circuit")
    if name == "lattice-surgery":
        return CostModel("lattice-surgery", fanout_constant_time=True)
    raise ValueError(f"unknown cost model {name!r}")


DEFAULT_MODEL = CostModel()


class Circuit:
    def __init__(self, qubits=(), layout=None):
        self.qubits = []
        self.moments = []
        self.global_phase = 0.0
        self.meta = {}
        self._last = []
        self._last_diag = []
        for q in qubits:
            self.add_qubit(q.role if isinstance(q, QubitId) else q)
        orb = self.orbital_wires()
        self.layout = list(layout) if layout is not None else list(range(len(orb)))
        if len(self.layout) != len(orb):
            raise StructuralError("layout length must equal the number of orbital wires")

    # construction
    @classmethod
    def with_registers(cls, precision=0, orbitals=0, ancillas=0):
        return cls([PRECISION] * precision + [ORBITAL] * orbitals + [ANCILLA] * ancillas)

    def add_qubit(self, role):
        if role not in ROLES:
            raise StructuralError(f"unknown role {role}")
        q = QubitId(len(self.qubits), role)
        self.qubits.append(q)
        self._last.append(-1)
        self._last_diag.append(False)
        if role == ORBITAL and hasattr(self, "layout"):
            self.layout.append(len(self.layout))
        return q.index

    @property
    def n(self):
        return len(self.qubits)

    def wires(self, role):
        return [q.index for q in self.qubits if q.role == role]

    def orbital_wires(self):
        return self.wires(ORBITAL)

    def append(self, gate):
        if isinstance(gate, tuple):
            gate = Gate(*gate)
        for q in gate.qubits:
            if not 0 <= q < self.n:
                raise StructuralError(f"operand {q} does not exist")
        if gate.kind == "FermionicSwap":
            orb = self.orbital_wires()
            pos = {w: i for i, w in enumerate(orb)}
            a, b = gate.qubits
            if a not in pos or b not in pos or abs(pos[a] - pos[b]) != 1:
                raise StructuralError(f"FermionicSwap on non-adjacent orbital wires {a},{b}")
        diag = gate.diagonal
        t = 0
        for q in gate.qubits:
            last = self._last[q]
            t = max(t, last if (diag and self._last_diag[q] and last >= 0) else last + 1)
        while len(self.moments) <= t:
            self.moments.append([])
        self.moments[t].append(gate)
        for q in gate.qubits:
            if self._last[q] == t:
                self._last_diag[q] = self._last_diag[q] and diag
            else:
                self._last[q] = t
                self._last_diag[q] = diag
        return self

    def append_layer(self, gates):
        """Place mutually compatible gates together in the earliest common moment."""
        gates = [Gate(*g) if isinstance(g, tuple) else g for g in gates]
        if not gates:
            return self
        t = 0
        for g in gates:
            for q in g.qubits:
                if not 0 <= q < self.n:
                    raise StructuralError(f"operand {q} does not exist")
                last = self._last[q]
                t = max(t, last if (g.diagonal and self._last_diag[q] and last >= 0) else last + 1)
        seen = {}
        for g in gates:
            for q in g.qubits:
                if q in seen and not (g.diagonal and seen[q]):
                    raise StructuralError(f"layer uses qubit {q} twice")
                seen[q] = seen.get(q, True) and g.diagonal
        while len(self.moments) <= t:
            self.moments.append([])
        self.moments[t].extend(gates)
        for g in gates:
            for q in g.qubits:
                if self._last[q] == t:
                    self._last_diag[q] = self._last_diag[q] and g.diagonal
                else:
                    self._last[q] = t
                    self._last_diag[q] = g.diagonal
        return self

    def extend(self, gates):
        for g in gates:
            self.append(g)
        return self

    def new_moment(self):
        """Barrier: later gates start after everything appended so far."""
        t = len(self.moments)
        self._last = [t - 1] * self.n
        self._last_diag = [False] * self.n

    def mark_segment(self):
        """Barrier that also records a boundary the passes treat separately."""
        self.new_moment()
        marks = self.meta.setdefault("segments", [])
        if len(self.moments) and (not marks or marks[-1] != len(self.moments)):
            marks.append(len(self.moments))

    def gates(self):
        for mo in self.moments:
            yield from mo

    def copy(self):
        c = Circuit([q.role for q in self.qubits], self.layout)
        c.moments = [list(mo) for mo in self.moments]
        c.global_phase = self.global_phase
        c.meta = dict(self.meta)
        c._last = list(self._last)
        c._last_diag = list(self._last_diag)
        return c

    def rebuilt(self, gates=None, qubits=None):
        """Fresh ASAP packing of a gate stream on (possibly more) qubits."""
        c = Circuit(qubits if qubits is not None else [q.role for q in self.qubits], self.layout)
        c.global_phase = self.global_phase
        c.meta = dict(self.meta)
        c.extend(self.gates() if gates is None else gates)
        return c

    def compose(self, other, qubit_map=None):
        """Append every gate of ``other`` (ASAP) and multiply global phases."""
        qm = qubit_map or list(range(other.n))
        for g in other.gates():
            self.append(replace(g, qubits=tuple(qm[q] for q in g.qubits)))
        self.global_phase += other.global_phase
        return self

    # metrics
    def gate_counts(self):
        return dict(Counter(g.kind for g in self.gates()))

    def mode_labels(self):
        """Orbital-wire labels at every moment boundary (len = depth + 1)."""
        orb = self.orbital_wires()
        pos = {w: i for i, w in enumerate(orb)}
        cur = list(self.layout)
        out = [list(cur)]
        for mo in self.moments:
            for g in mo:
                if g.kind in SWAPS and all(q in pos for q in g.qubits):
                    i, j = pos[g.qubits[0]], pos[g.qubits[1]]
                    cur[i], cur[j] = cur[j], cur[i]
            out.append(list(cur))
        return out

    def check_moments(self):
        for k, mo in enumerate(self.moments):
            seen = {}
            for g in mo:
                for q in g.qubits:
                    if q in seen and not (g.diagonal and seen[q]):
                        raise StructuralError(f"moment {k}: qubit {q} used twice")
                    seen[q] = seen.get(q, True) and g.diagonal
        return True


def rotation_depth(circ, model=DEFAULT_MODEL):
    return sum(1 for mo in circ.moments
               if any(g.kind in ROTATIONS and model.weight(g) > 0 for g in mo))


def total_depth(circ, model=DEFAULT_MODEL):
    return sum(max((model.weight(g) for g in mo), default=0.0) for mo in circ.moments)


def swap_depth(circ):
    return sum(1 for mo in circ.moments if any(g.kind in SWAPS for g in mo))


def width(circ):
    return circ.n


def unitary_of(circ):
    from .simulator import full_unitary
    return full_unitary(circ)


def _gate_record(g):
    d = {"kind": g.kind, "operands": list(g.qubits)}
    if g.angle is not None:
        d["angle"] = g.angle
    if g.ctrl_state is not None:
        d["ctrl_state"] = list(g.ctrl_state)
    return d


def to_json(circ):
    return json.dumps({
        "qubits": [{"index": q.index, "role": q.role} for q in circ.qubits],
        "layout": circ.layout,
        "global_phase": circ.global_phase,
        "meta": circ.meta,
        "moments": [[_gate_record(g) for g in mo] for mo in circ.moments],
    })


def from_json(text):
    d = json.loads(text) if isinstance(text, str) else text
    roles = [q["role"] for q in sorted(d["qubits"], key=lambda q: q["index"])]
    c = Circuit(roles, d.get("layout"))
    c.global_phase = d.get("global_phase", 0.0)
    c.meta = d.get("meta", {})
    for mo in d["moments"]:
        gs = [Gate(r["kind"], tuple(r["operands"]), r.get("angle"),
                   tuple(r["ctrl_state"]) if r.get("ctrl_state") else None) for r in mo]
        # keep the recorded moment structure rather than re-packing
        t = len(c.moments)
        c.moments.append(gs)
        for g in gs:
            for q in g.qubits:
                c._last[q] = t
                c._last_diag[q] = g.diagonal
    c.check_moments()
    return c


def to_text(circ):
    count = Counter(q.role for q in circ.qubits)
    lines = [f"qubits {circ.n} precision {count[PRECISION]} orbitals {count[ORBITAL]} "
             f"ancillas {count[ANCILLA]}"]
    for k, mo in enumerate(circ.moments):
        for g in mo:
            ops = []
            ctl = len(g.controls)
            for i, q in enumerate(g.qubits):
                neg = i < ctl and g.states[i] == 0
                ops.append(("!" if neg else "") + str(q))
            tail = f" {g.angle!r}" if g.angle is not None else ""
            lines.append(f"{k} {g.kind} {' '.join(ops)}{tail}")
    return "\n".join(lines) + "\n"
