"""Baseline versus optimized resource comparison and metric records.

The benchmark never materializes a full m=120 circuit.  Every stage of a
given kind has the same shape after the passes (blocks on disjoint wires
behind one shared set of precision controls), so the optimized step is
costed as sum over kinds of (stage count x per-stage metric).  For small m
the same numbers are checked against a materialized sweep.
"""

import math
import time
from collections import Counter

from .circuit_ir import (Circuit, Gate, ORBITAL, PRECISION, cost_model, rotation_depth,
                         swap_depth, total_depth, width)
from .hamiltonian import TermClass, TermKind, quad_keys, triple_keys
from .rotation_passes import PIPELINE, expand_precision_controls, run_pipeline
from .scheduler import (KIND_SIZE, PAIR, QUAD, SINGLETON, TRIPLE, Stage, iter_stage_plan,
                        oe_depths)
from .templates import BASELINE_PAULIS, CORE, pauli_decomposition, pauli_exponential
from .trotter_qpe import emit_stage

SCHEMA = 1
KINDS = (SINGLETON, PAIR, TRIPLE, QUAD)


# -- baseline ---------------------------------------------------------------

def baseline_pauli_counts(m):
    """Pauli strings per term class for the dense Hamiltonian on m orbitals."""
    c2, c3, c4 = math.comb(m, 2), math.comb(m, 3), math.comb(m, 4)
    return {
        "singleton": m * BASELINE_PAULIS["singleton"],
        "hopping": c2 * BASELINE_PAULIS["hopping"],
        "density": c2 * BASELINE_PAULIS["density"],
        "triple": 3 * c3 * BASELINE_PAULIS["triple"],
        "quad": 3 * c4 * BASELINE_PAULIS["quad"],
    }


def baseline_step_circuit(h, b=0, tau=1.0):
    """Serial Pauli exponentials of every term, repeated serially per precision bit.

    With b precision qubits, repetition k controls each Rz on precision
    wire k with its angle scaled by 2^(b-1-k).  The identity parts of the
    terms become one phase rotation per precision wire.
    """
    m = h.m
    circ = Circuit([PRECISION] * b + [ORBITAL] * m)
    orb = circ.orbital_wires()
    blocks = []
    phase = 0.0
    for key, v in h.terms():
        if not v:
            continue
        for st, coef in sorted(pauli_decomposition(key, m).items()):
            gates, ph = pauli_exponential(st, v * tau * coef, orb)
            blocks.append(gates)
            phase += ph
    if not b:
        for gs in blocks:
            circ.new_moment()
            circ.extend(gs)
        circ.global_phase = phase
        return circ
    for k in range(b):
        w = 2 ** (b - 1 - k)
        for i, gs in enumerate(blocks):
            # serial: each exponential starts after the previous one ends
            circ.new_moment()
            if i == 0 and phase:
                circ.append(Gate("Rz", (k,), phase * w))
            for g in gs:
                if g.kind == "Rz" and g.tag and g.tag[0] == CORE:
                    circ.append(Gate("CRz", (k, g.qubits[0]), g.angle * w))
                else:
                    circ.append(g)
    circ.global_phase = phase * (2 ** b - 1) / 2
    return circ


def baseline_metrics(m, b):
    counts = baseline_pauli_counts(m)
    per_bit = sum(counts.values())
    # one serial rotation per Pauli string, plus the phase rotation of each bit
    return {
        "rotation_depth": (per_bit + 1) * b if b else per_bit,
        "phase_moments": b,
        "width": m + b,
        "swap_layers": 0,
        "pauli_strings": counts,
    }


# -- optimized: per-shape stage metrics --------------------------------------

def dense_block_terms(block):
    """Unit-coefficient TermClass list for every term on the block's support."""
    s = tuple(sorted(block))
    if len(s) == 1:
        keys = [(s[0], s[0])]
    elif len(s) == 2:
        keys = [s, (s[0], s[1], s[1], s[0])]
    elif len(s) == 3:
        keys = triple_keys(*s)
    else:
        keys = quad_keys(*s)
    return [TermClass(TermKind(len(s)), k, s, 1.0) for k in keys]


def shape_circuit(kind, m, b, passes=PIPELINE, tau=1.0):
    """One full stage of the given kind (floor(m/size) blocks), through the passes."""
    size = KIND_SIZE[kind]
    nb = m // size
    blocks = [tuple(range(i * size, (i + 1) * size)) for i in range(nb)]
    stage = Stage(kind, blocks, list(range(m)))
    circ = Circuit([ORBITAL] * m)
    emit_stage(circ, stage, {bl: dense_block_terms(bl) for bl in blocks}, tau, circ.orbital_wires())
    circ.global_phase = 0.0
    if b:
        circ = expand_precision_controls(circ, b)
    return run_pipeline(circ, [p for p in passes if p != "expand_precision_controls"], b)


def shape_metrics(m, b, passes=PIPELINE, model=None):
    model = model or cost_model("circuit")
    out = {}
    for kind in KINDS:
        if m < KIND_SIZE[kind]:
            continue
        c = shape_circuit(kind, m, b, passes)
        out[kind] = {
            "rotation_depth": rotation_depth(c, model),
            "total_depth": total_depth(c, model),
            "width": width(c),
            "gate_counts": c.gate_counts(),
        }
    return out


def stage_counts(m, window=None, anneal=60):
    c = Counter()
    for kind, _, _ in iter_stage_plan(m, window, anneal, layouts=False):
        c[kind] += 1
    return {k: c.get(k, 0) for k in KINDS}


def sweep_swap_depth(m, window=None, anneal=60):
    """Swap layers of one dense sweep: into every stage and back to identity."""
    rows = []
    prev = list(range(m))
    for _, _, lay in iter_stage_plan(m, window, anneal, layouts=True):
        target = {o: i for i, o in enumerate(lay)}
        rows.append([target[o] for o in prev])
        prev = lay
    rows.append(prev)
    return int(oe_depths(rows).sum())


# -- bench ------------------------------------------------------------------

def decompose_ratio(m, b, counts, shapes, opt_rot, base):
    """Split the rotation-depth ratio into auditable factors.

    ratio = precision_serial x template x pairing_share x block_parallelism
    x stage_mix, where precision_serial is the baseline's per-bit
    repetition, template compares one quad pairing (baseline Pauli strings
    versus one rotation), pairing_share counts pairings fired per quad
    rotation moment, block_parallelism is quadruples per quad stage and
    stage_mix is the quad share of optimized depth over the quad share of
    the baseline's per-bit depth.
    """
    nq = math.comb(m, 4)
    if not nq or not counts.get(QUAD):
        return {}
    q_rot = shapes[QUAD]["rotation_depth"]
    template = BASELINE_PAULIS["quad"] / 1
    pairing_share = 3 / q_rot
    parallel = nq / counts[QUAD]
    serial = max(b, 1)
    base_q = base["pauli_strings"]["quad"] / (base["rotation_depth"] / serial)
    opt_q = counts[QUAD] * q_rot / opt_rot
    mix = opt_q / base_q
    return {
        "precision_serial": serial,
        "template": template,
        "pairing_share": pairing_share,
        "block_parallelism": parallel,
        "stage_mix": mix,
        "parallelization": pairing_share * parallel * mix,
        "product": serial * template * pairing_share * parallel * mix,
    }


def bench(m, bs=(1,), passes=PIPELINE, model_name="circuit", window=None, anneal=None,
          with_swaps=None, counts=None):
    """Baseline versus optimized single sweep over the dense unit Hamiltonian."""
    if m < 4:
        raise ValueError("bench needs m >= 4")
    model = cost_model(model_name)
    if anneal is None:
        anneal = 60 if m <= 64 else 20
    t0 = time.time()
    counts = counts or stage_counts(m, window, anneal)
    t_counts = time.time() - t0
    if with_swaps is None:
        with_swaps = m <= 64
    swaps = sweep_swap_depth(m, window, anneal) if with_swaps else None
    rows = []
    for b in bs:
        shapes = shape_metrics(m, b, passes, model)
        # the global phase rides on the precision wires as one extra rotation moment
        phase = 1 if b else 0
        opt_rot = sum(counts[k] * shapes[k]["rotation_depth"] for k in shapes) + phase
        opt_width = max(s["width"] for s in shapes.values())
        base = baseline_metrics(m, b)
        rows.append({
            "schema": SCHEMA,
            "m": m, "b": b, "mode": "both", "cost_model": model_name,
            "stage_counts": dict(counts),
            "shapes": shapes,
            "optimized": {"rotation_depth": opt_rot, "width": opt_width, "swap_layers": swaps,
                          "phase_moments": phase},
            "baseline": base,
            "ratios": {
                "rotation_depth": base["rotation_depth"] / opt_rot,
                "width": opt_width / base["width"],
            },
            "factors": decompose_ratio(m, b, counts, shapes, opt_rot, base),
        })
    return {"schema": SCHEMA, "m": m, "rows": rows, "seconds_counting": round(t_counts, 2)}


def format_bench(rep):
    lines = []
    for r in rep["rows"]:
        o, bl, f = r["optimized"], r["baseline"], r["factors"]
        lines.append(f"m={r['m']} b={r['b']} cost_model={r['cost_model']}")
        lines.append("  stages  " + "  ".join(f"{k}={v}" for k, v in r["stage_counts"].items()))
        lines.append("  per-stage rotation depth  " + "  ".join(
            f"{k}={s['rotation_depth']}" for k, s in r["shapes"].items()))
        lines.append(f"  baseline  rotation_depth={bl['rotation_depth']}  width={bl['width']}")
        sd = o["swap_layers"] if o["swap_layers"] is not None else "not computed"
        lines.append(f"  optimized rotation_depth={o['rotation_depth']}  width={o['width']}  swap_layers={sd}")
        lines.append(f"  ratios    rotation_depth={r['ratios']['rotation_depth']:.2f}  width={r['ratios']['width']:.3f}")
        if f:
            lines.append(f"  factors   precision_serial={f['precision_serial']} x template={f['template']:g} x pairing_share={f['pairing_share']:g}"
                         f" x block_parallelism={f['block_parallelism']:.3f} x stage_mix={f['stage_mix']:.4f}"
                         f" = {f['product']:.2f}")
    return "\n".join(lines)


# -- circuit metric records ----------------------------------------------------

def circuit_metrics(circ, m, b, mode, model_name="circuit"):
    model = cost_model(model_name)
    return {
        "schema": SCHEMA,
        "m": m, "b": b, "mode": mode, "cost_model": model_name,
        "rotation_depth": rotation_depth(circ, model),
        "total_depth": total_depth(circ, model),
        "swap_depth": swap_depth(circ),
        "width": width(circ),
        "gate_counts": dict(sorted(circ.gate_counts().items())),
        "ratios": {},
    }
