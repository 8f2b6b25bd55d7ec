"""Molecular Hamiltonians: storage, canonical keys, file IO and term classes.

H = sum h_pq (a+_p a_q + a+_q a_p) + sum h_pqrs (a+_p a+_q a_r a_s + a+_s a+_r a_q a_p)
"""

import enum
import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import CoefficientError, ParseError, RangeError
from .fermion_algebra import hermitian_term, is_zero, normal_order


class TermKind(enum.Enum):
    SINGLETON = 1
    PAIR = 2
    TRIPLE = 3
    QUAD = 4


@dataclass(frozen=True)
class TermClass:
    kind: TermKind
    term: tuple
    support: tuple
    coefficient: float


@lru_cache(maxsize=None)
def two_body_rules():
    """Index rearrangements that map a two-body Hermitian term to +/- itself.

    Decided once by the symbolic oracle on distinct generic modes, returned
    as (position permutation, sign) pairs.
    """
    base = normal_order(hermitian_term((0, 1, 2, 3)))
    rules = []
    for perm in itertools.permutations(range(4)):
        img = normal_order(hermitian_term(tuple(perm)))
        if img == base:
            rules.append((perm, 1))
        elif img == {k: -v for k, v in base.items()}:
            rules.append((perm, -1))
    return tuple(rules)


def canonical_two_body(idx):
    """Canonical key and sign for a two-body index tuple.

    Among the rearrangements that give +/- the same Hermitian term, pick the
    lexicographically smallest with creators ascending and annihilators
    descending (the a+_0 a+_1 a_3 a_2 reading of the quad example).
    Returns (key, sign) or None when the term vanishes identically.
    """
    p, q, r, s = idx
    if p == q or r == s:
        return None
    best = None
    for perm, sign in two_body_rules():
        img = tuple(idx[i] for i in perm)
        if img[0] < img[1] and img[2] > img[3]:
            if best is None or img < best[0]:
                best = (img, sign)
    return best


def canonical_one_body(idx):
    p, q = idx
    return (min(p, q), max(p, q)), 1


def term_kind(key):
    n = len(set(key))
    return TermKind(n)


@dataclass(frozen=True)
class MolecularHamiltonian:
    m: int
    one_body: dict = field(default_factory=dict)
    two_body: dict = field(default_factory=dict)

    def terms(self):
        for k, v in sorted(self.one_body.items()):
            yield k, v
        for k, v in sorted(self.two_body.items()):
            yield k, v

    def __eq__(self, other):
        return (isinstance(other, MolecularHamiltonian) and self.m == other.m
                and self.one_body == other.one_body and self.two_body == other.two_body)

    def __hash__(self):
        return hash((self.m, len(self.one_body), len(self.two_body)))


class HamiltonianBuilder:
    """Accumulates raw terms and canonicalizes them."""

    def __init__(self, m):
        if m < 1:
            raise RangeError(f"orbital count must be positive, got {m}")
        self.m = m
        self.one = {}
        self.two = {}

    def add(self, idx, value, line=None):
        idx = tuple(int(i) for i in idx)
        if any(i < 0 or i >= self.m for i in idx):
            raise RangeError(f"index out of range [0, {self.m}): {idx}", line)
        if not math.isfinite(value):
            raise CoefficientError(f"non-finite coefficient {value!r}", line)
        if len(idx) == 2:
            key, sign = canonical_one_body(idx)
            self.one[key] = self.one.get(key, 0.0) + sign * value
            return
        if len(idx) != 4:
            raise ParseError(f"expected 2 or 4 indices, got {len(idx)}", line)
        canon = canonical_two_body(idx)
        if canon is None or is_zero(hermitian_term(idx)):
            raise ParseError(f"term {idx} vanishes identically", line)
        key, sign = canon
        self.two[key] = self.two.get(key, 0.0) + sign * value

    def build(self):
        return MolecularHamiltonian(self.m, dict(self.one), dict(self.two))


def from_terms(m, one_body=(), two_body=()):
    b = HamiltonianBuilder(m)
    for *idx, v in one_body:
        b.add(idx, float(v))
    for *idx, v in two_body:
        b.add(idx, float(v))
    return b.build()


def _parse_json(text):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(str(e), e.lineno) from None
    if not isinstance(d, dict) or "m" not in d:
        raise ParseError("JSON input needs an 'm' key")
    try:
        m = int(d["m"])
        b = HamiltonianBuilder(m)
        for row in d.get("one_body", []):
            if len(row) != 3:
                raise ParseError(f"one_body entry {row} needs [p, q, v]")
            b.add(row[:2], float(row[2]))
        for row in d.get("two_body", []):
            if len(row) != 5:
                raise ParseError(f"two_body entry {row} needs [p, q, r, s, v]")
            b.add(row[:4], float(row[4]))
    except (TypeError, ValueError) as e:
        raise ParseError(str(e)) from None
    return b.build()


def parse_hamiltonian(text):
    """Parse the line format (or its JSON equivalent) into a Hamiltonian."""
    if text.lstrip().startswith("{"):
        return _parse_json(text)
    b = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if b is None:
            if tok[0] != "m" or len(tok) != 2:
                raise ParseError("first line must be 'm <int>'", lineno)
            try:
                b = HamiltonianBuilder(int(tok[1]))
            except ValueError:
                raise ParseError(f"bad orbital count {tok[1]!r}", lineno) from None
            continue
        want = {"1b": 4, "2b": 6}.get(tok[0])
        if want is None or len(tok) != want:
            raise ParseError(f"malformed line {raw.strip()!r}", lineno)
        try:
            idx = [int(t) for t in tok[1:-1]]
        except ValueError:
            raise ParseError(f"bad index in {raw.strip()!r}", lineno) from None
        try:
            v = float(tok[-1])
        except ValueError:
            raise ParseError(f"bad value {tok[-1]!r}", lineno) from None
        b.add(idx, v, lineno)
    if b is None:
        raise ParseError("missing 'm <int>' line")
    return b.build()


def emit_hamiltonian(h):
    lines = [f"m {h.m}"]
    for (p, q), v in sorted(h.one_body.items()):
        lines.append(f"1b {p} {q} {v!r}")
    for (p, q, r, s), v in sorted(h.two_body.items()):
        lines.append(f"2b {p} {q} {r} {s} {v!r}")
    return "\n".join(lines) + "\n"


def emit_json(h):
    return json.dumps({
        "m": h.m,
        "one_body": [[p, q, v] for (p, q), v in sorted(h.one_body.items())],
        "two_body": [[*k, v] for k, v in sorted(h.two_body.items())],
    })


def classify_terms(h):
    out = []
    for key, v in h.terms():
        support = tuple(sorted(set(key)))
        out.append(TermClass(TermKind(len(support)), key, support, v))
    return out


def triple_keys(x, y, z):
    """Canonical keys of the three triple forms on x<y<z.

    Form k has spectator (x, y, z)[k] and hops between the other two.
    """
    out = []
    for spectator in (x, y, z):
        a, b = [t for t in (x, y, z) if t != spectator]
        key, _ = canonical_two_body((a, spectator, spectator, b))
        out.append(key)
    return out


def quad_keys(a, b, c, d):
    """Canonical keys of the pairings ab|cd, ac|bd, ad|bc (a<b<c<d)."""
    return [canonical_two_body(k)[0] for k in ((a, b, d, c), (a, c, d, b), (a, d, c, b))]


def dense_hamiltonian(m, value=1.0, rng=None, scale=1.0):
    """Every allowed term, either with a fixed value or random normal values."""
    def val():
        return value if rng is None else float(rng.normal()) * scale
    one, two = {}, {}
    for p in range(m):
        for q in range(p, m):
            one[(p, q)] = val()
    for p, q in itertools.combinations(range(m), 2):
        two[(p, q, q, p)] = val()
    for t in itertools.combinations(range(m), 3):
        for k in triple_keys(*t):
            two[k] = val()
    for t in itertools.combinations(range(m), 4):
        for k in quad_keys(*t):
            two[k] = val()
    return MolecularHamiltonian(m, one, two)


def random_hamiltonian(m, rng, scale=1.0, density=1.0):
    h = dense_hamiltonian(m, rng=rng, scale=scale)
    if density >= 1.0:
        return h
    keep = lambda: rng.random() < density
    return MolecularHamiltonian(m, {k: v for k, v in h.one_body.items() if keep()},
                                {k: v for k, v in h.two_body.items() if keep()})
