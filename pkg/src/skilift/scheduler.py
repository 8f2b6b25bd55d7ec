"""Stage schedule for one Trotter sweep and the swap routing between stages.

Phases run singletons, then circle-method pairs, then order-3 Mobius
triples, then quads from quadratic-residue involutions.  Every stage
places its blocks on adjacent wires; consecutive layouts are connected by
layers of adjacent fermionic swaps found by odd-even transposition sort.
"""

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import CoverageError, ScheduleAlgorithmError, StructuralError
from .hamiltonian import classify_terms
from .mobius import involution_pairs, order3_maps, qr_involutions, smallest_prime
from .quad_planner import QuadPlanner, realize

SINGLETON, PAIR, TRIPLE, QUAD = "Singleton", "Pair", "Triple", "Quad"
KIND_SIZE = {SINGLETON: 1, PAIR: 2, TRIPLE: 3, QUAD: 4}


@dataclass
class Stage:
    kind: str
    blocks: list            # orbital tuples, each listed in wire order
    layout: list            # layout[w] = orbital on wire w
    entry_permutation: list = None   # perm[w] = wire that receives the content of wire w
    routing: list = None    # swap layers leading into this stage
    tag: str = ""

    def block_wires(self):
        pos = {o: w for w, o in enumerate(self.layout)}
        return [tuple(pos[o] for o in b) for b in self.blocks]


@dataclass
class Schedule:
    m: int
    p: int
    stages: list = field(default_factory=list)
    exit_routing: list = None   # back to the identity layout

    def by_kind(self, kind):
        return [s for s in self.stages if s.kind == kind]


# -- circle method ----------------------------------------------------------

def circle_method_layouts(n):
    """Wire orders of the circle method; round r pairs wires (2k, 2k+1).

    The stationary competitor sits on the last wire, the others ride a
    zigzag ring, so consecutive layouts differ by two swap layers.  An odd
    n gets a phantom competitor n.
    """
    if n < 2:
        raise StructuralError("circle method needs at least two competitors")
    N = n + n % 2
    cur = list(range(N))
    out = [list(cur)]
    for _ in range(N - 2):
        for i in range(1, N - 2, 2):
            cur[i], cur[i + 1] = cur[i + 1], cur[i]
        for i in range(0, N - 2, 2):
            cur[i], cur[i + 1] = cur[i + 1], cur[i]
        out.append(list(cur))
    return out


def circle_method_rounds(n):
    """n-1 perfect matchings (n even) or n matchings with one bye (n odd)."""
    rounds = []
    for lay in circle_method_layouts(n):
        rounds.append([(lay[i], lay[i + 1]) for i in range(0, len(lay), 2)
                       if lay[i] < n and lay[i + 1] < n])
    return rounds


def quad_ski_lift(pairing):
    """Circle method over pairs: each round's pair-of-pairs are quad blocks."""
    pairing = [tuple(pr) for pr in pairing]
    if len(pairing) < 2:
        return []
    return [[(pairing[a], pairing[b]) for a, b in rnd]
            for rnd in circle_method_rounds(len(pairing))]


# -- Mobius partitions ------------------------------------------------------

def mobius_order3_schedule(m):
    """(map, orbits inside [0, m)) for one map per inverse pair of order-3 maps."""
    if m < 3:
        raise StructuralError("triples need m >= 3")
    p = smallest_prime(m - 1)
    out = []
    for M in order3_maps(p):
        blocks = [tuple(sorted(o)) for o in M.orbits() if max(o) < m]
        out.append((M, blocks))
    return out


def mobius_involution_pairings(m):
    """QR-determinant involutions with their pairings, torus-ordered."""
    if m < 4:
        raise StructuralError("quads need m >= 4")
    p = smallest_prime(max(m - 1, 3))
    out = [(M, involution_pairs(M)) for M in qr_involutions(p)]
    # every 4-subset of [0, m) must land in some involution's pair-of-pairs
    if m <= 12:
        seen = set()
        for M, prs in out:
            for a, b in combinations(prs, 2):
                seen.add(tuple(sorted(a + b)))
        missing = [q for q in combinations(range(m), 4) if q not in seen]
        if missing:
            raise ScheduleAlgorithmError(f"p={p}: {len(missing)} quadruples uncovered, e.g. {missing[0]}")
    return out


# -- routing ----------------------------------------------------------------

def _oe_layers(keys, start):
    a = list(keys)
    layers = []
    par = start
    n = len(a)
    while any(a[i] > a[i + 1] for i in range(n - 1)):
        layer = []
        for i in range(par, n - 1, 2):
            if a[i] > a[i + 1]:
                a[i], a[i + 1] = a[i + 1], a[i]
                layer.append(i)
        layers.append(layer)
        par ^= 1
    # drop idle layers at the front (a parity with nothing to do)
    while layers and not layers[0]:
        layers.pop(0)
    return layers


def route_permutation(from_layout, to_layout):
    """Layers of adjacent transpositions (wire i <-> i+1) taking one layout to the other."""
    from_layout = list(from_layout)
    to_layout = list(to_layout)
    if sorted(from_layout) != sorted(to_layout) or len(set(from_layout)) != len(from_layout):
        raise StructuralError("layouts must be permutations of the same orbitals")
    target = {o: i for i, o in enumerate(to_layout)}
    keys = [target[o] for o in from_layout]
    best = None
    for start in (0, 1):
        layers = [l for l in _oe_layers(keys, start) if l]
        if best is None or len(layers) < len(best):
            best = layers
    return best


def apply_layers(layout, layers):
    cur = list(layout)
    for layer in layers:
        for i in layer:
            cur[i], cur[i + 1] = cur[i + 1], cur[i]
    return cur


def entry_permutation(from_layout, to_layout):
    target = {o: i for i, o in enumerate(to_layout)}
    return [target[o] for o in from_layout]


def oe_depths(key_rows):
    """Odd-even sort depth of many key rows at once (min over start parity)."""
    A = np.asarray(key_rows, dtype=np.int32)
    if A.ndim != 2 or A.shape[0] == 0:
        return np.zeros(len(A), dtype=int)
    T, n = A.shape
    best = None
    for start in (0, 1):
        a = A.copy()
        depth = np.zeros(T, dtype=int)
        live = np.nonzero(np.any(a[:, :-1] > a[:, 1:], axis=1))[0]
        par = start
        while live.size:
            sub = a[live]
            lo = sub[:, par:n - 1:2]
            hi = sub[:, par + 1::2][:, :lo.shape[1]]
            sw = lo > hi
            moved = sw.any(axis=1)
            new_lo = np.where(sw, hi, lo)
            new_hi = np.where(sw, lo, hi)
            sub[:, par:n - 1:2][:, :lo.shape[1]] = new_lo
            sub[:, par + 1::2][:, :lo.shape[1]] = new_hi
            a[live] = sub
            depth[live] += moved
            still = np.any(sub[:, :-1] > sub[:, 1:], axis=1)
            live = live[still]
            par ^= 1
        best = depth if best is None else np.minimum(best, depth)
    return best


# -- schedule construction ---------------------------------------------------

def _terms_by_support(h):
    out = defaultdict(list)
    for tc in classify_terms(h):
        if tc.coefficient != 0:
            out[tc.support].append(tc)
    return out


def _arrange(cur, blocks):
    """Blocks contiguous near their current centre, others stay roughly put."""
    return realize(cur, list(cur), [tuple(b) for b in blocks])


def _ordered_blocks(layout, blocks):
    pos = {o: w for w, o in enumerate(layout)}
    bl = [tuple(sorted(b, key=pos.__getitem__)) for b in blocks]
    return sorted(bl, key=lambda b: pos[b[0]])


def iter_stage_plan(m, window=None, anneal=60, layouts=True):
    """Every candidate stage of a full sweep as (kind, blocks, layout).

    Layout is None for quad rounds when layouts=False (only counts).
    """
    cur = list(range(m))
    yield SINGLETON, [(o,) for o in range(m)], list(cur)
    if m >= 2:
        for lay in circle_method_layouts(m):
            lay = [o for o in lay if o < m]
            blocks = [(lay[i], lay[i + 1]) for i in range(0, len(lay) - 1, 2)]
            yield PAIR, blocks, lay
            cur = lay
    if m >= 3:
        for M, blocks in mobius_order3_schedule(m):
            blocks = [b for b in blocks if len(b) == 3]
            lay = _arrange(cur, blocks)
            yield TRIPLE, _ordered_blocks(lay, blocks), lay
            cur = lay
    if m >= 4:
        if window is None:
            window = 16 if m <= 64 else 1
        planner = QuadPlanner(m, window=window, anneal=anneal)
        for k, lay, quads, tag in planner.rounds(layouts=layouts):
            blocks = [a + b for a, b in quads]
            yield QUAD, (_ordered_blocks(lay, blocks) if lay is not None else blocks), lay


def build_schedule(h, window=None, anneal=60):
    """Schedule for the terms of h: nonzero stages only, with routing."""
    m = h.m
    by_sup = _terms_by_support(h)
    stages = []
    cur = list(range(m))
    for kind, blocks, lay in iter_stage_plan(m, window, anneal):
        live = [b for b in blocks if tuple(sorted(b)) in by_sup]
        if not live:
            continue
        layers = route_permutation(cur, lay)
        stages.append(Stage(kind, live, lay, entry_permutation(cur, lay), layers))
        cur = lay
    sch = Schedule(m, smallest_prime(max(m - 1, 2)), stages, route_permutation(cur, list(range(m))))
    missing = [s for s in by_sup if not any(tuple(sorted(b)) == s for st in stages for b in st.blocks)]
    if missing:
        raise CoverageError(f"{len(missing)} term supports not scheduled, e.g. {missing[0]}")
    return sch


def stage_terms(stage, h):
    """Terms of h implemented by each block of the stage, keyed by block."""
    by_sup = _terms_by_support(h)
    return {b: by_sup.get(tuple(sorted(b)), []) for b in stage.blocks}


# -- verification --------------------------------------------------------

def verify_schedule(sch, check_routing=True):
    """Coverage and routing checks.  Returns a dict of named booleans/counts."""
    m = sch.m
    res = {}
    pairs = Counter(frozenset(b) for s in sch.by_kind(PAIR) for b in s.blocks)
    res["pairs_exact"] = all(v == 1 for v in pairs.values())
    trip = Counter(frozenset(b) for s in sch.by_kind(TRIPLE) for b in s.blocks)
    res["triples_exact"] = all(v == 1 for v in trip.values())
    quads = Counter(frozenset(b) for s in sch.by_kind(QUAD) for b in s.blocks)
    res["quads_exact"] = all(v == 1 for v in quads.values())
    res["pair_count"] = len(pairs)
    res["triple_count"] = len(trip)
    res["quad_pairing_count"] = 3 * len(quads)
    for s in sch.stages:
        for b in s.block_wires():
            if sorted(b) != list(range(min(b), min(b) + len(b))):
                res.setdefault("nonadjacent", []).append((s.kind, b))
    res["adjacent"] = "nonadjacent" not in res
    if check_routing:
        cur = list(range(m))
        ok = True
        for s in sch.stages:
            ok &= apply_layers(cur, s.routing) == s.layout
            ok &= entry_permutation(cur, s.layout) == s.entry_permutation
            cur = s.layout
        ok &= apply_layers(cur, sch.exit_routing or []) == list(range(m))
        res["routing_exact"] = ok
    return res


def full_coverage(m):
    """Dense coverage counts straight from the stage plan (no Hamiltonian)."""
    c = Counter()
    for kind, blocks, lay in iter_stage_plan(m):
        for b in blocks:
            c[(kind, frozenset(b))] += 1
    by = defaultdict(list)
    for (kind, b), v in c.items():
        by[kind].append(v)
    return {
        "pairs": (len(by[PAIR]), all(v == 1 for v in by[PAIR])),
        "triples": (len(by[TRIPLE]), all(v == 1 for v in by[TRIPLE])),
        "quads": (len(by[QUAD]), all(v == 1 for v in by[QUAD])),
    }


def quad_routing_stats(m, window=None, anneal=60):
    """Swap layers per quad stage transition for the dense quad phase."""
    prev = None
    rows = []
    for kind, blocks, lay in iter_stage_plan(m, window, anneal):
        if kind != QUAD:
            continue
        if prev is not None:
            target = {o: i for i, o in enumerate(lay)}
            rows.append([target[o] for o in prev])
        prev = lay
    depths = oe_depths(rows) if rows else np.zeros(0, dtype=int)
    n = len(rows) + 1
    return {
        "m": m,
        "quad_stages": n,
        "transitions": len(rows),
        "total_layers": int(depths.sum()),
        "avg_layers": float(depths.sum()) / n,
        "frac_gt4": float((depths > 4).mean()) if len(rows) else 0.0,
        "max_layers": int(depths.max()) if len(rows) else 0,
    }


def coverage_violations(sch, supports=None):
    """Exact-cover failures as messages naming stage indices.

    ``supports`` restricts the required blocks (e.g. the supports of a
    sparse Hamiltonian); by default every 2-, 3- and 4-subset is required.
    """
    m = sch.m
    where = defaultdict(list)
    for i, s in enumerate(sch.stages):
        for b in s.blocks:
            if len(b) != KIND_SIZE[s.kind]:
                where[("bad", s.kind, tuple(b))].append(i)
            else:
                where[(s.kind, tuple(sorted(b)))].append(i)
    out = []
    for (kind, b), idx in sorted(where.items(), key=lambda kv: kv[1]):
        if kind == "bad":
            out.append(f"stage {idx[0]}: block {list(b)} has the wrong size for {b}")
        elif len(idx) > 1:
            out.append(f"{kind} block {list(b)} appears {len(idx)} times, in stages {idx}")
    if supports is None:
        need = {k: set(combinations(range(m), k)) for k in (2, 3, 4)}
    else:
        need = {k: {s for s in supports if len(s) == k} for k in (2, 3, 4)}
    for k, kind in ((2, PAIR), (3, TRIPLE), (4, QUAD)):
        for s in sorted(need[k]):
            if (kind, s) not in where:
                out.append(f"{kind} block {list(s)} is never scheduled")
                if len(out) > 200:
                    return out
    return out


def check_routing_signs(sch, tol=1e-12):
    """Worst deviation of each stage's swap network from the signed-permutation oracle."""
    from .circuit_ir import Circuit, Gate, ORBITAL
    from .fermion_algebra import fermionic_permutation_matrix
    from .simulator import full_unitary
    m = sch.m
    cur = list(range(m))
    worst = []
    legs = [(s.routing or [], s.layout) for s in sch.stages]
    legs.append((sch.exit_routing or [], list(range(m))))
    for layers, lay in legs:
        c = Circuit([ORBITAL] * m)
        for layer in layers:
            c.append_layer([Gate("FermionicSwap", (i, i + 1)) for i in layer])
        perm = entry_permutation(cur, lay)
        dev = float(np.max(np.abs(full_unitary(c) - fermionic_permutation_matrix(perm, m))))
        worst.append(dev)
        cur = lay
    return worst


def schedule_to_json(sch):
    import json
    return json.dumps({
        "m": sch.m, "p": sch.p,
        "stages": [{"kind": s.kind, "blocks": [list(b) for b in s.blocks], "layout": s.layout,
                    "entry_permutation": s.entry_permutation, "routing": s.routing or [],
                    "tag": s.tag} for s in sch.stages],
        "exit_routing": sch.exit_routing or [],
    })


def schedule_from_json(text):
    import json
    d = json.loads(text) if isinstance(text, str) else text
    stages = []
    cur = list(range(d["m"]))
    for s in d["stages"]:
        lay = list(s["layout"])
        perm = s.get("entry_permutation")
        if perm is None and sorted(cur) == sorted(lay):
            perm = entry_permutation(cur, lay)
        stages.append(Stage(s["kind"], [tuple(b) for b in s["blocks"]], lay, perm,
                            [list(l) for l in s.get("routing", [])], s.get("tag", "")))
        cur = lay
    return Schedule(d["m"], d.get("p"), stages, [list(l) for l in d.get("exit_routing", [])])
