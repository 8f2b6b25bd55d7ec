"""Command line: synth, schedule, verify, bench and qpe."""

import json
import math
import os
import sys

import click
import numpy as np

from . import circuit_ir
from .errors import ParseError, ResourceError, SkiliftError
from .hamiltonian import dense_hamiltonian, parse_hamiltonian
from .reports import SCHEMA, baseline_step_circuit, bench, circuit_metrics, format_bench
from .rotation_passes import parse_passes, run_pipeline
from .scheduler import (build_schedule, check_routing_signs, coverage_violations, schedule_from_json,
                        schedule_to_json, verify_schedule)

EXIT_FAIL, EXIT_INPUT, EXIT_RESOURCE = 1, 2, 3


class Ctx:
    def __init__(self, seed, model, out_dir, fmt):
        self.seed = seed
        self.model = model
        self.out_dir = out_dir
        self.fmt = fmt

    def path(self, name):
        os.makedirs(self.out_dir, exist_ok=True)
        return os.path.join(self.out_dir, name)

    def emit(self, record, text=None):
        if self.fmt == "json":
            click.echo(json.dumps(record, indent=2, default=_jsonable))
        else:
            click.echo(text if text is not None else _as_text(record))


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


def _as_text(rec, indent=""):
    lines = []
    for k, v in rec.items():
        if isinstance(v, dict):
            lines.append(f"{indent}{k}:")
            lines.append(_as_text(v, indent + "  "))
        else:
            lines.append(f"{indent}{k}: {v}")
    return "\n".join(lines)


def _load_hamiltonian(path):
    with open(path) as f:
        return parse_hamiltonian(f.read())


def _fail(code, msg):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for every randomized path.")
@click.option("--cost-model", "model", type=click.Choice(["circuit", "lattice-surgery"]),
              default="circuit", show_default=True)
@click.option("--output-dir", type=click.Path(file_okay=False), default=".", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="text", show_default=True)
@click.pass_context
def main(ctx, seed, model, output_dir, fmt):
    """Synthesize, schedule and check Trotterized phase-estimation circuits."""
    ctx.obj = Ctx(seed, model, output_dir, fmt)


def _guard(fn):
    """Map library errors to exit codes."""
    import functools

    @functools.wraps(fn)
    def run(*a, **kw):
        try:
            return fn(*a, **kw)
        except (ParseError, OSError) as e:
            _fail(EXIT_INPUT, e)
        except ResourceError as e:
            _fail(EXIT_RESOURCE, e)
        except (SkiliftError, ValueError) as e:
            _fail(EXIT_FAIL, e)
    return run


@main.command()
@click.argument("hamiltonian", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["optimized", "baseline", "both"]), default="optimized",
              show_default=True)
@click.option("--b", "b", type=int, default=1, show_default=True, help="Precision qubits.")
@click.option("--t", "t", type=float, default=1.0, show_default=True, help="Evolution time of the sweep.")
@click.option("--passes", default="all", show_default=True, help="Comma-separated pass names.")
@click.option("--anneal", type=int, default=60, show_default=True)
@click.pass_obj
@_guard
def synth(obj, hamiltonian, mode, b, t, passes, anneal):
    """Write circuits for one controlled sweep over every term, plus metrics."""
    from .trotter_qpe import sweep_circuit
    h = _load_hamiltonian(hamiltonian)
    ext = "json" if obj.fmt == "json" else "txt"
    dump = circuit_ir.to_json if obj.fmt == "json" else circuit_ir.to_text
    records = {}
    circuits = {}
    if mode in ("optimized", "both"):
        sch = build_schedule(h, anneal=anneal)
        circ = run_pipeline(sweep_circuit(h, sch, t), parse_passes(passes), b)
        circuits["optimized"] = circ
    if mode in ("baseline", "both"):
        circuits["baseline"] = baseline_step_circuit(h, b, t)
    for name, circ in circuits.items():
        with open(obj.path(f"{name}.circuit.{ext}"), "w") as f:
            f.write(dump(circ))
        records[name] = circuit_metrics(circ, h.m, b, name, obj.model)
    if mode == "both":
        o, bl = records["optimized"], records["baseline"]
        ratios = {"rotation_depth": bl["rotation_depth"] / max(o["rotation_depth"], 1),
                  "total_depth": bl["total_depth"] / max(o["total_depth"], 1),
                  "width": o["width"] / bl["width"]}
        for r in records.values():
            r["ratios"] = ratios
    for name, r in records.items():
        with open(obj.path(f"{name}.metrics.json"), "w") as f:
            json.dump(r, f, indent=2)
    obj.emit(records if mode == "both" else next(iter(records.values())))


@main.command()
@click.argument("hamiltonian", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option("--m", "m", type=int, help="Schedule the dense Hamiltonian on m orbitals instead.")
@click.option("--verify", "do_verify", is_flag=True, help="Run coverage and routing checks.")
@click.option("--anneal", type=int, default=60, show_default=True)
@click.pass_obj
@_guard
def schedule(obj, hamiltonian, m, do_verify, anneal):
    """Build the stage schedule and write schedule.json."""
    if hamiltonian:
        h = _load_hamiltonian(hamiltonian)
    elif m:
        h = dense_hamiltonian(m)
    else:
        raise click.UsageError("give a Hamiltonian file or --m")
    sch = build_schedule(h, anneal=anneal)
    with open(obj.path("schedule.json"), "w") as f:
        f.write(schedule_to_json(sch))
    rec = {"schema": SCHEMA, "m": sch.m, "p": sch.p, "stages": len(sch.stages),
           "by_kind": {k: len(sch.by_kind(k)) for k in ("Singleton", "Pair", "Triple", "Quad")},
           "swap_layers": sum(len(s.routing or []) for s in sch.stages) + len(sch.exit_routing or [])}
    ok = True
    if do_verify:
        res = verify_schedule(sch)
        rec["verify"] = {k: v for k, v in res.items() if k != "nonadjacent"}
        ok = all(v for k, v in res.items() if isinstance(v, bool))
    obj.emit(rec)
    sys.exit(0 if ok else EXIT_FAIL)


def _verify_schedule_file(obj, d, h):
    sch = schedule_from_json(d)
    supports = None
    if h is not None:
        supports = {tuple(sorted(set(k))) for k, v in h.terms() if v}
    problems = coverage_violations(sch, supports)
    res = verify_schedule(sch, check_routing=all(s.entry_permutation is not None for s in sch.stages))
    rec = {"schema": SCHEMA, "kind": "schedule", "m": sch.m,
           "coverage_ok": not problems, "violations": problems[:50],
           "adjacent": res["adjacent"], "routing_exact": res.get("routing_exact", False)}
    if res.get("nonadjacent"):
        rec["violations"] += [f"{k} block on wires {w} is not adjacent" for k, w in res["nonadjacent"][:20]]
    ok = rec["coverage_ok"] and rec["adjacent"] and rec["routing_exact"]
    if sch.m <= 8 and rec["routing_exact"]:
        dev = check_routing_signs(sch)
        rec["routing_sign_max_dev"] = max(dev)
        bad = [i for i, x in enumerate(dev) if x > 1e-12]
        if bad:
            rec["violations"].append(f"routing sign mismatch in stages {bad}")
        ok &= not bad
    if h is not None and h.m <= 8 and ok:
        from .simulator import full_unitary
        from .trotter_qpe import oracle_sweep_unitary, sweep_circuit
        u = full_unitary(sweep_circuit(h, sch, 1.0))
        dev = float(np.abs(u - oracle_sweep_unitary(h, sch, 1.0)).max())
        rec["unitary_max_dev"] = dev
        ok &= dev <= 1e-9
    return rec, ok


def _verify_circuit_file(obj, d):
    circ = circuit_ir.from_json(d)
    rec = {"schema": SCHEMA, "kind": "circuit", "qubits": circ.n,
           "moments_ok": bool(circ.check_moments())}
    ok = True
    if circ.n <= 10:
        from .simulator import full_unitary
        u = full_unitary(circ)
        dev = float(np.abs(u.conj().T @ u - np.eye(len(u))).max())
        rec["unitarity_dev"] = dev
        ok = dev <= 1e-9
    rec.update(circuit_metrics(circ, len(circ.orbital_wires()), len(circ.wires("precision")),
                               "input", obj.model))
    return rec, ok


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--hamiltonian", type=click.Path(exists=True, dir_okay=False),
              help="Check coverage of this Hamiltonian and compare against its term exponentials.")
@click.pass_obj
@_guard
def verify(obj, path, hamiltonian):
    """Check a schedule.json or circuit JSON file; exit 0 iff every check passes."""
    with open(path) as f:
        try:
            d = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}: not JSON ({e})")
    h = _load_hamiltonian(hamiltonian) if hamiltonian else None
    if "stages" in d:
        rec, ok = _verify_schedule_file(obj, d, h)
    elif "moments" in d:
        rec, ok = _verify_circuit_file(obj, d)
    else:
        raise ParseError(f"{path}: neither a schedule nor a circuit")
    rec["pass"] = bool(ok)
    obj.emit(rec)
    sys.exit(0 if ok else EXIT_FAIL)


@main.command("bench")
@click.option("--m", "m", type=int, default=120, show_default=True)
@click.option("--b", "bs", type=int, multiple=True, help="Precision bits; repeat for several.")
@click.option("--passes", default="all", show_default=True)
@click.option("--anneal", type=int, default=None, help="Quad planner anneal rounds (60, or 20 above m=64).")
@click.option("--swap-layers/--no-swap-layers", "swaps", default=None,
              help="Count routing layers (default only for m <= 64).")
@click.pass_obj
@_guard
def bench_cmd(obj, m, bs, passes, anneal, swaps):
    """Baseline versus optimized sweep over the dense unit Hamiltonian."""
    rep = bench(m, tuple(bs) or (1,), parse_passes(passes), obj.model, anneal=anneal, with_swaps=swaps)
    with open(obj.path(f"bench_m{m}.json"), "w") as f:
        json.dump(rep, f, indent=2)
    obj.emit(rep, format_bench(rep))


@main.command()
@click.argument("hamiltonian", type=click.Path(exists=True, dir_okay=False))
@click.option("--b", "b", type=int, default=4, show_default=True)
@click.option("--t1", type=float, default=None,
              help="Smallest evolution time; default spreads 2pi over a bound on the spectrum.")
@click.option("--steps", type=int, default=32, show_default=True, help="Fourth-order repetitions N.")
@click.option("--shots", type=int, default=0, help="Sample this many shots from the exact distribution.")
@click.option("--init", "init", default=None,
              help="Occupation string such as 1100, or 'ground' for the exact ground vector.")
@click.option("--e-min", type=float, default=None, help="Lower edge of the energy window.")
@click.option("--emit", type=click.Choice(["circuit", "distribution", "energy"]), default="energy",
              show_default=True)
@click.pass_obj
@_guard
def qpe(obj, hamiltonian, b, t1, steps, shots, init, e_min, emit):
    """Phase estimation of the ground energy by exact simulation."""
    from .simulator import ground_state
    from .trotter_qpe import (QpeConfig, TrotterPlan, qpe_circuit, qpe_distribution, read_energy,
                              sample_shots)
    h = _load_hamiltonian(hamiltonian)
    bound = sum(abs(v) for _, v in h.terms()) * 2
    if t1 is None:
        t1 = 2 * math.pi / (2 * bound) if bound else 1.0
        if e_min is None and bound:
            e_min = -bound
    if init == "ground":
        _, state = ground_state(h)
    else:
        state = init if init is not None else "0" * h.m
    cfg = QpeConfig(b=b, t1=t1, initial_state=state, e_min=e_min)
    plan = TrotterPlan(N=steps)
    sch = build_schedule(h)
    if emit == "circuit":
        circ = qpe_circuit(h, sch, plan, cfg)
        with open(obj.path("qpe.circuit.json"), "w") as f:
            f.write(circuit_ir.to_json(circ))
        obj.emit(circuit_metrics(circ, h.m, b, "qpe", obj.model))
        return
    probs = qpe_distribution(h, sch, plan, cfg)
    rec = {"schema": SCHEMA, "m": h.m, "b": b, "t1": t1, "steps": steps, "e_min": e_min}
    dist = probs
    if shots:
        counts = sample_shots(probs, shots, obj.seed)
        rec["counts"] = counts.tolist()
        dist = counts
    e, res, s = read_energy(dist, cfg)
    rec.update({"bin": s, "phase": s / 2 ** b, "energy": e, "resolution": res})
    if emit == "distribution":
        rec["probabilities"] = probs.tolist()
    obj.emit(rec)


if __name__ == "__main__":
    main()
