"""Rewrite passes for controlled rotations.

Default pipeline: expand_precision_controls -> parallelize_shared_controls
-> consolidate_controls -> merge_same_target -> lower_crz.

Passes read the moment structure of their input: rotations that share a
moment are treated as simultaneous and stay simultaneous in the output.
"""

from collections import defaultdict
from dataclasses import replace
from functools import lru_cache

from .circuit_ir import ANCILLA, PRECISION, ROTATIONS, Circuit, Gate
from .errors import StructuralError
from .templates import CORE

PIPELINE = ("expand_precision_controls", "parallelize_shared_controls",
            "consolidate_controls", "merge_same_target", "lower_crz")


# -- helpers ---------------------------------------------------------------

class AncillaPool:
    """Hands out ancilla wires of ``circ``, growing it when empty."""

    def __init__(self, circ, free=None):
        self.circ = circ
        self.free = list(free) if free is not None else []

    def take(self):
        if self.free:
            return self.free.pop()
        return self.circ.add_qubit(ANCILLA)

    def give(self, wires):
        self.free.extend(sorted(wires, reverse=True))


def _clone_empty(circ):
    out = Circuit([q.role for q in circ.qubits], circ.layout)
    out.global_phase = circ.global_phase
    out.meta = dict(circ.meta)
    return out


def _copy_moment(out, mo):
    """Re-append a moment, keeping its rotations in one layer."""
    out.extend(g for g in mo if g.kind not in ROTATIONS)
    out.append_layer([g for g in mo if g.kind in ROTATIONS])


def _is_core(g):
    return isinstance(g.tag, tuple) and g.tag and g.tag[0] == CORE


def _controlled(g, extra, extra_states, angle):
    controls = tuple(extra) + g.controls
    states = tuple(extra_states) + g.states
    tag = g.tag
    if len(controls) == 1:
        return Gate("CRz", controls + g.targets, angle, states, tag)
    return Gate("MultiCRz", controls + g.targets, angle, states, tag)


# -- expand_precision_controls ---------------------------------------------

def expand_precision_controls(circ, b):
    """Control every rotation core on each of b new precision qubits.

    Precision qubit k (wire k) carries weight 2^(b-1-k), wire 0 being the
    most significant bit, so the result equals sum_t |t><t| (x) U(theta t)
    with every core angle scaled by t.  The circuit's global phase becomes
    a phase rotation on each precision qubit.
    """
    if b < 1:
        raise StructuralError("need at least one precision qubit")
    roles = [PRECISION] * b + [q.role for q in circ.qubits]
    out = Circuit(roles, circ.layout)
    out.meta = dict(circ.meta, precision_bits=b)
    phase = circ.global_phase
    pending_phase = bool(phase)
    for mo in circ.moments:
        for g in mo:
            g = replace(g, qubits=tuple(q + b for q in g.qubits))
            if g.kind in ROTATIONS and _is_core(g):
                for k in range(b):
                    out.append(_controlled(g, (k,), (1,), g.angle * 2 ** (b - 1 - k)))
                if pending_phase:
                    # diag(1, e^{i w phase}) = e^{i w phase/2} Rz(w phase)
                    for k in range(b):
                        out.append(Gate("Rz", (k,), phase * 2 ** (b - 1 - k)))
                    pending_phase = False
            else:
                out.append(g)
    if pending_phase:
        for k in range(b):
            out.append(Gate("Rz", (k,), phase * 2 ** (b - 1 - k)))
    out.global_phase = phase * (2 ** b - 1) / 2
    return out


# -- parallelize_shared_controls ------------------------------------------

def _components(gates, ignore):
    """Connected components of gates linked by shared wires outside ``ignore``."""
    parent = list(range(len(gates)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner = {}
    for i, g in enumerate(gates):
        for q in g.qubits:
            if q in ignore:
                continue
            if q in owner:
                parent[find(i)] = find(owner[q])
            else:
                owner[q] = i
    comps = defaultdict(list)
    for i in range(len(gates)):
        comps[find(i)].append(i)
    return list(comps.values())


def parallelize_shared_controls(circ):
    """Give every independent rotation cluster its own copy of shared controls.

    A control wire read by rotations in more than one cluster (clusters are
    linked through any other shared wire) is fanned out to fresh ancillas
    with one MultiCX before the rotation moment and un-fanned after it.
    """
    out = _clone_empty(circ)
    pool = AncillaPool(out)
    for mo in circ.moments:
        rots = [g for g in mo if g.kind in ("CRz", "MultiCRz")]
        others = [g for g in mo if g.kind not in ("CRz", "MultiCRz")]
        targets = {q for g in rots for q in g.targets}
        cand = {c for g in rots for c in g.controls} - targets
        comps = _components(rots, cand)
        readers = defaultdict(set)
        for ci, comp in enumerate(comps):
            for i in comp:
                for c in rots[i].controls:
                    readers[c].add(ci)
        for g in others:
            for q in g.qubits:
                readers[q].add(-1)
        shared = {c for c in cand if len(readers[c]) > 1}
        if not shared:
            _copy_moment(out, mo)
            continue
        copies = {}  # (control, component index) -> ancilla
        fans = defaultdict(list)
        used = []
        for ci, comp in enumerate(comps):
            needs = sorted({c for i in comp for c in rots[i].controls if c in shared})
            for c in needs:
                a = pool.take()
                used.append(a)
                copies[(c, ci)] = a
                fans[c].append(a)
        pre = [Gate("MultiCX", (c,) + tuple(ts)) for c, ts in sorted(fans.items())]
        new_rots = []
        for ci, comp in enumerate(comps):
            for i in comp:
                g = rots[i]
                qs = tuple(copies.get((q, ci), q) if k < len(g.controls) else q
                           for k, q in enumerate(g.qubits))
                new_rots.append(replace(g, qubits=qs))
        out.extend(pre)
        out.extend(g for g in others if g.kind not in ROTATIONS)
        out.append_layer(new_rots + [g for g in others if g.kind in ROTATIONS])
        out.extend(pre)
        pool.give(used)
    return out


# -- consolidate_controls ------------------------------------------------

def _and_tree(literals):
    """Balanced AND tree: list of ops, result node, ancilla count."""
    ops = []
    level = list(literals)
    n_anc = 0
    while len(level) > 1:
        nxt = []
        for i in range(0, len(level) - 1, 2):
            a = ("anc", n_anc)
            n_anc += 1
            ops.append(("tof", level[i], level[i + 1], a))
            nxt.append((a, 1))
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return ops, level[0], n_anc


def _trie(patterns, wires, free, max_anc):
    """Plan a shared AND structure for several patterns over one wire set.

    patterns: tuple of state tuples aligned with ``wires``.
    free: wire positions that may be modified in place.
    Returns (n_anc, ops, results) with results[i] = node of pattern i, or
    None when no plan fits in max_anc.  Nodes are (register, polarity);
    registers are ("w", pos) or ("anc", k).
    """
    state = {"n": 0}
    ops = []
    results = {}

    def new():
        k = state["n"]
        state["n"] += 1
        return ("anc", k)

    def modifiable(node):
        reg = node[0]
        return reg[0] == "anc" or reg[1] in free

    def rec(node, S, W):
        cst = [x for x in W if len({patterns[i][x] for i in S}) == 1]
        for x in cst:
            lit = (("w", x), patterns[S[0]][x])
            if node is None:
                node = lit
            else:
                a = new()
                ops.append(("tof", node, lit, a))
                node = (a, 1)
        W = [x for x in W if x not in cst]
        if not W:
            for i in S:
                results[i] = node
            return
        # branch on the wire splitting S most evenly
        x = min(W, key=lambda x: abs(2 * sum(patterns[i][x] for i in S) - len(S)))
        S1 = [i for i in S if patterns[i][x] == 1]
        S0 = [i for i in S if patterns[i][x] == 0]
        if node is None:
            rec((("w", x), 1), S1, [y for y in W if y != x])
            rec((("w", x), 0), S0, [y for y in W if y != x])
            return
        a = new()
        ops.append(("tof", node, (("w", x), 1), a))
        child = (a, 1)
        if modifiable(node):
            ops.append(("cx", (a, 1), node[0]))
            other = node
        else:
            b = new()
            ops.append(("tof", node, (("w", x), 0), b))
            other = (b, 1)
        rec(child, S1, [y for y in W if y != x])
        rec(other, S0, [y for y in W if y != x])

    rec(None, list(range(len(patterns))), list(range(len(wires))))
    # results must sit on distinct registers; copy clashes into ancillas
    seen = set()
    for i in sorted(results):
        node = results[i]
        if node[0] in seen:
            a = new()
            ops.append(("copy", node, a))
            results[i] = (a, 1)
        seen.add(results[i][0])
    if state["n"] > max_anc:
        return None
    return state["n"], ops, results


def _cx_patterns(wires, pats, cxs):
    pos = {w: i for i, w in enumerate(wires)}
    pats = [list(p) for p in pats]
    for a, b in cxs:
        if a in pos and b in pos:
            for p in pats:
                p[pos[b]] ^= p[pos[a]]
        elif b in pos:
            raise StructuralError("re-encoding needs every group to read both wires")
    return tuple(tuple(p) for p in pats)


@lru_cache(maxsize=4096)
def _plan_cluster(specs, renc, max_cx=3):
    """Best CX re-encoding of wires ``renc`` for rotation groups on one target.

    specs: tuple of (wires, patterns, free positions) per group.  Returns
    (cxs, [trie plan per group]) minimising the total ancilla count.
    """
    cand = [(a, b) for a in renc for b in renc if a != b]
    best = None
    frontier = [()]
    seen = set()
    for depth in range(max_cx + 1):
        nxt = []
        for cxs in frontier:
            pats = tuple(_cx_patterns(w, p, cxs) for w, p, _ in specs)
            if pats in seen:
                continue
            seen.add(pats)
            plans = [_trie(pp, w, frozenset(f), 10 ** 6) for pp, (w, _, f) in zip(pats, specs)]
            key = (sum(pl[0] for pl in plans), len(cxs))
            if best is None or key < best[0]:
                best = (key, cxs, plans)
            if depth < max_cx and renc:
                nxt.extend(cxs + (c,) for c in cand)
        frontier = nxt
    return best[1], best[2]


def _emit_ops(ops, resolve, anc_of):
    gates = []
    for op in ops:
        if op[0] == "tof":
            (r1, p1), (r2, p2), a = op[1], op[2], op[3]
            gates.append(Gate("Toffoli", (resolve(r1), resolve(r2), anc_of(a)), ctrl_state=(p1, p2)))
        elif op[0] == "cx":
            (r1, p1), r2 = op[1], op[2]
            gates.append(Gate("CX", (resolve(r1), resolve(r2)), ctrl_state=(p1,)))
        elif op[0] == "copy":
            (r1, p1), a = op[1], op[2]
            gates.append(Gate("CX", (resolve(r1), anc_of(a)), ctrl_state=(p1,)))
    return gates


def consolidate_controls(circ, share=True):
    """Replace multi-controlled rotations by Toffoli-computed single controls.

    A lone rotation gets a balanced Toffoli tree.  Rotations that share a
    target and a control set are planned together: an optional CX
    re-encoding of their control wires, then a shared AND trie in which a
    node splits into x and not-x children with a single Toffoli.
    """
    out = _clone_empty(circ)
    pool = AncillaPool(out)
    for mo in circ.moments:
        multi = [g for g in mo if g.kind == "MultiCRz" and len(g.controls) >= 2]
        if not multi:
            _copy_moment(out, mo)
            continue
        rest = [g for g in mo if not (g.kind == "MultiCRz" and len(g.controls) >= 2)]
        use = defaultdict(int)
        for g in mo:
            for q in set(g.qubits):
                use[q] += 1
        groups = defaultdict(list)
        for g in multi:
            key = (g.targets[0], tuple(sorted(g.controls))) if share else id(g)
            groups[key].append(g)
        clusters = defaultdict(list)
        for key, gs in groups.items():
            clusters[gs[0].targets[0]].append(gs)
        compute, rots, taken = [], [], []
        for target, cl in clusters.items():
            ngates = sum(len(gs) for gs in cl)
            common = set.intersection(*(set(gs[0].controls) for gs in cl))
            renc = tuple(sorted(w for w in common if use[w] == ngates
                                and out.qubits[w].role != PRECISION))
            specs = []
            for gs in cl:
                wires = tuple(sorted(gs[0].controls))
                pats = []
                for g in gs:
                    st = dict(zip(g.controls, g.states))
                    pats.append(tuple(st[w] for w in wires))
                free = tuple(i for i, w in enumerate(wires)
                             if use[w] == len(gs) and out.qubits[w].role != PRECISION)
                specs.append((wires, tuple(pats), free))
            multi_idx = [i for i, gs in enumerate(cl) if len(gs) > 1]
            if len(multi_idx) == 0 or len(renc) < 2:
                renc = ()
            # ranks keep the plan cache independent of absolute wire ids
            allw = sorted({w for sp in specs for w in sp[0]})
            rk = {w: i for i, w in enumerate(allw)}
            nspecs = tuple((tuple(rk[w] for w in sp[0]), sp[1], sp[2]) for i, sp in enumerate(specs)
                           if i in multi_idx)
            cxs_r, plans = _plan_cluster(nspecs, tuple(rk[w] for w in renc)) if multi_idx else ((), [])
            cxs = [(allw[a], allw[b]) for a, b in cxs_r]
            body_cl = [Gate("CX", c) for c in cxs]
            plan_of = dict(zip(multi_idx, plans))
            for i, gs in enumerate(cl):
                wires, pats, _ = specs[i]
                if i in plan_of:
                    n_anc, ops, results = plan_of[i]
                else:
                    pats = _cx_patterns(wires, pats, cxs)
                    lits = [(("w", j), pats[0][j]) for j in range(len(wires))]
                    ops, node, n_anc = _and_tree(lits)
                    results = {0: node}
                ancs = {}

                def anc_of(a, ancs=ancs):
                    if a not in ancs:
                        ancs[a] = pool.take()
                        taken.append(ancs[a])
                    return ancs[a]

                def resolve(r, wires=wires, ancs=ancs):
                    return wires[r[1]] if r[0] == "w" else anc_of(r)

                body_cl += _emit_ops(ops, resolve, anc_of)
                for j, g in enumerate(gs):
                    reg, pol = results[j]
                    rots.append(Gate("CRz", (resolve(reg), target), g.angle, (pol,), g.tag))
            compute.append(body_cl)
        out.extend(g for g in rest if g.kind not in ROTATIONS)
        for body in compute:
            out.extend(body)
        out.append_layer(rots + [g for g in rest if g.kind in ROTATIONS])
        for body in compute:
            out.extend(reversed(body))
        pool.give(taken)
    return out


# -- merge_same_target / lower_crz ------------------------------------------

def _lower_one(g):
    c, t = g.qubits
    s = g.states[0]
    half = g.angle / 2
    return [Gate("CX", (t, c)), Gate("Rz", (c,), -half if s else half),
            Gate("CX", (t, c)), Gate("Rz", (t,), half)]


def merge_same_target_gates(rotations):
    """n singly-controlled rotations on one target -> n+1 uncontrolled Rz.

    CRz(c,t,a) = exp(-i a/4 Z_t) exp(+-i a/4 Z_c Z_t); a fan of CNOTs from
    the target folds every Z_c Z_t onto its control wire.
    """
    rotations = list(rotations)
    if not rotations:
        return []
    t = rotations[0].targets[0]
    ctrls = []
    for g in rotations:
        if g.kind != "CRz" or g.targets[0] != t:
            raise StructuralError("merge_same_target needs CRz gates on one target")
        ctrls.append(g.controls[0])
    if len(set(ctrls)) != len(ctrls):
        raise StructuralError("duplicate control wires; merge their angles first")
    fan = Gate("MultiCX", (t,) + tuple(ctrls)) if len(ctrls) > 1 else Gate("CX", (t, ctrls[0]))
    mids = [Gate("Rz", (g.controls[0],), -g.angle / 2 if g.states[0] else g.angle / 2)
            for g in rotations]
    total = sum(g.angle for g in rotations) / 2
    return [fan] + mids + [Gate("Rz", (t,), total), fan]


def _combine_pairs(crz):
    """One CRz per (control, target) pair plus loose Rz gates on the targets.

    A state-0 CRz(a) equals Rz(a) on the target times a state-1 CRz(-a).
    """
    by_pair = defaultdict(list)
    for g in crz:
        by_pair[(g.controls[0], g.targets[0])].append(g)
    gates, loose = [], []
    for (c, t), gs in by_pair.items():
        if len(gs) == 1:
            gates.append(gs[0])
            continue
        a1 = sum(g.angle for g in gs if g.states[0])
        a0 = sum(g.angle for g in gs if not g.states[0])
        gates.append(Gate("CRz", (c, t), a1 - a0, (1,), gs[0].tag))
        if a0:
            loose.append(Gate("Rz", (t,), a0))
    return gates, loose


def _rounds(crz):
    """Split CRz gates so that no control wire is touched by another gate of its round."""
    rounds = []
    for g in crz:
        c, t = g.controls[0], g.targets[0]
        for r in rounds:
            if c not in r["wires"] and t not in r["ctrls"]:
                break
        else:
            r = {"gates": [], "wires": set(), "ctrls": set()}
            rounds.append(r)
        r["gates"].append(g)
        r["wires"].update((c, t))
        r["ctrls"].add(c)
    return [r["gates"] for r in rounds]


def merge_same_target(circ):
    """Apply merge_same_target_gates to every CRz group sharing a target."""
    out = _clone_empty(circ)
    for mo in circ.moments:
        crz = [g for g in mo if g.kind == "CRz"]
        if not crz:
            _copy_moment(out, mo)
            continue
        rest = [g for g in mo if g.kind != "CRz"]
        crz, loose = _combine_pairs(crz)
        rest += loose
        for i, part in enumerate(_rounds(crz)):
            by_t = defaultdict(list)
            for g in part:
                by_t[g.targets[0]].append(g)
            pre, mid, post = [], [], []
            touched = set()
            for gs in by_t.values():
                seq = merge_same_target_gates(gs)
                pre.append(seq[0])
                mid += seq[1:-1]
                post.append(seq[-1])
                touched.update(g.controls[0] for g in gs)
            here = rest if i == 0 else []
            # plain diagonal gates on a fanned control wire must sit outside the fan
            inside = [g for g in here if not (set(g.qubits) & touched)]
            outside = [g for g in here if set(g.qubits) & touched]
            out.extend(outside)
            out.extend(pre)
            out.extend(g for g in inside if g.kind not in ROTATIONS)
            out.append_layer(mid + [g for g in inside if g.kind in ROTATIONS])
            out.extend(post)
    return out


def lower_crz(circ):
    """Replace each CRz by CX, two half-angle Rz, CX."""
    out = _clone_empty(circ)
    for mo in circ.moments:
        crz = [g for g in mo if g.kind == "CRz"]
        if not crz:
            _copy_moment(out, mo)
            continue
        rest = [g for g in mo if g.kind != "CRz"]
        crz, loose = _combine_pairs([g for g in crz if g.angle != 0])
        rest += loose
        parts = _rounds(crz) or [[]]
        for i, part in enumerate(parts):
            fanned = {g.controls[0] for g in part}
            here = rest if i == 0 else []
            out.extend(g for g in here if g.kind not in ROTATIONS or set(g.qubits) & fanned)
            pre, post = [], []
            mid = [g for g in here if g.kind in ROTATIONS and not set(g.qubits) & fanned]
            for g in part:
                a, b, c, d = _lower_one(g)
                pre.append(a)
                mid += [b, d]
                post.append(c)
            out.extend(pre)
            out.append_layer(mid)
            out.extend(post)
    return out


PASSES = {
    "parallelize_shared_controls": parallelize_shared_controls,
    "consolidate_controls": consolidate_controls,
    "merge_same_target": merge_same_target,
    "lower_crz": lower_crz,
}


def parse_passes(text):
    if text is None or text in ("", "all", "default"):
        return list(PIPELINE)
    names = [s.strip() for s in text.split(",") if s.strip()]
    for n in names:
        if n not in PIPELINE:
            raise ValueError(f"unknown pass {n!r}; choose from {', '.join(PIPELINE)}")
    return names


def _run_whole(circ, passes, b):
    chosen = set(passes)
    for name in PIPELINE:
        if name not in chosen:
            continue
        if name == "expand_precision_controls":
            if b:
                circ = expand_precision_controls(circ, b)
        else:
            circ = PASSES[name](circ)
    return circ


def split_segments(circ):
    """Pieces of circ between the boundaries recorded by mark_segment."""
    marks = [0] + list(circ.meta.get("segments", [])) + [len(circ.moments)]
    pieces = []
    for a, z in zip(marks, marks[1:]):
        if z <= a:
            continue
        p = Circuit([q.role for q in circ.qubits], circ.layout)
        for mo in circ.moments[a:z]:
            if mo:
                p.append_layer(mo)
        pieces.append(p)
    return pieces


def run_pipeline(circ, passes=PIPELINE, b=None):
    """Run the selected passes in pipeline order.

    A circuit with recorded segments (one per stage or routing group) is
    compiled piece by piece and stitched back moment by moment; pieces
    share one ancilla register and the global phase becomes a single
    closing rotation on each precision wire.
    """
    if not circ.meta.get("segments"):
        return _run_whole(circ, passes, b)
    expand = "expand_precision_controls" in passes and bool(b)
    rest = [p for p in passes if p != "expand_precision_controls"]
    roles = ([PRECISION] * b if expand else []) + [q.role for q in circ.qubits]
    out = Circuit(roles, circ.layout)
    out.meta = {k: v for k, v in circ.meta.items() if k != "segments"}
    for piece in split_segments(circ):
        if expand:
            piece = expand_precision_controls(piece, b)
        piece = _run_whole(piece, rest, None)
        while out.n < piece.n:
            out.add_qubit(ANCILLA)
        for mo in piece.moments:
            if mo:
                out.append_layer(mo)
    phase = circ.global_phase
    if expand:
        out.meta["precision_bits"] = b
        if phase:
            out.append_layer([Gate("Rz", (k,), phase * 2 ** (b - 1 - k)) for k in range(b)])
        out.global_phase = phase * (2 ** b - 1) / 2
    else:
        out.global_phase = phase
    return out
