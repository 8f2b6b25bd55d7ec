"""Mobius transformations of the projective line over F_p.

Points are 0..p-1 plus infinity, stored as p.
"""

from dataclasses import dataclass
from functools import lru_cache


def is_prime(n):
    return n >= 2 and all(n % d for d in range(2, int(n ** 0.5) + 1))


def smallest_prime(n):
    k = max(n, 2)
    while not is_prime(k):
        k += 1
    return k


def is_qr(x, p):
    x %= p
    if p == 2:
        return x == 1
    return x != 0 and pow(x, (p - 1) // 2, p) == 1


def _normalize(v, p):
    for x in v:
        if x % p:
            inv = pow(x, -1, p)
            return tuple(y * inv % p for y in v)
    raise ValueError("zero matrix")


@dataclass(frozen=True)
class MobiusMap:
    """z -> (a z + b) / (c z + d), normalized so the first nonzero entry is 1."""
    a: int
    b: int
    c: int
    d: int
    p: int

    def __post_init__(self):
        p = self.p
        if (self.a * self.d - self.b * self.c) % p == 0:
            raise ValueError("singular Mobius map")
        a, b, c, d = _normalize((self.a, self.b, self.c, self.d), p)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @property
    def key(self):
        return (self.a, self.b, self.c, self.d)

    @property
    def det(self):
        return (self.a * self.d - self.b * self.c) % self.p

    def __call__(self, z):
        a, b, c, d, p = self.a, self.b, self.c, self.d, self.p
        if z == p:
            return p if c == 0 else a * pow(c, -1, p) % p
        den = (c * z + d) % p
        return p if den == 0 else (a * z + b) * pow(den, -1, p) % p

    def __matmul__(self, other):
        a, b, c, d = self.key
        e, f, g, h = other.key
        p = self.p
        return MobiusMap((a * e + b * g) % p, (a * f + b * h) % p,
                         (c * e + d * g) % p, (c * f + d * h) % p, p)

    def inverse(self):
        p = self.p
        return MobiusMap(self.d, -self.b % p, -self.c % p, self.a, p)

    def is_identity(self):
        return self.b == 0 and self.c == 0 and self.a == self.d

    def orbits(self):
        seen = set()
        out = []
        for z in range(self.p + 1):
            if z in seen:
                continue
            orb = [z]
            w = self(z)
            while w != z:
                orb.append(w)
                w = self(w)
            seen.update(orb)
            out.append(tuple(orb))
        return out


@lru_cache(maxsize=None)
def order3_maps(p):
    """One representative per inverse pair of order-3 maps (smaller key wins)."""
    sq = {}
    for d in range(p):
        sq.setdefault((d * d + d + 1) % p, []).append(d)
    cands = []
    for b in range(p):
        for c in range(p):
            # trace^2 = det  <=>  d^2 + d + 1 + bc = 0 for a = 1
            for d in sq.get(-b * c % p, ()):
                if (d - b * c) % p:
                    cands.append((1, b, c, d))
    for d in range(1, p):
        cands.append((0, 1, -d * d % p, d))
    reps = set()
    for k in cands:
        M = MobiusMap(*k, p)
        if M.is_identity() or not (M @ M @ M).is_identity():
            continue
        inv = M.inverse()
        reps.add(min(M.key, inv.key))
    return tuple(MobiusMap(*k, p) for k in sorted(reps))


@lru_cache(maxsize=None)
def qr_involutions(p):
    """Involutions with quadratic-residue determinant, sorted by key."""
    out = set()
    for b in range(p):
        for c in range(p):
            det = (-1 - b * c) % p
            if det and is_qr(det, p):
                out.add(MobiusMap(1, b, c, p - 1, p).key)
    for c in range(1, p):
        if is_qr(-c, p):
            out.add(MobiusMap(0, 1, c, 0, p).key)
    return tuple(MobiusMap(*k, p) for k in sorted(out))


def _primes_of(n):
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
        while n % d == 0:
            n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _mpow(M, k):
    R = MobiusMap(1, 0, 0, 1, M.p)
    while k:
        if k & 1:
            R = R @ M
        M = M @ M
        k >>= 1
    return R


def _torus(M):
    """A generator of the maximal torus containing the involution M."""
    p = M.p
    a, b, c, d = M.key
    split = is_qr(-M.det, p)
    order = p - 1 if split else p + 1
    fs = _primes_of(order)
    for x in range(p):
        t = ((x + a) % p, b, c, (x + d) % p)
        if (t[0] * t[3] - t[1] * t[2]) % p == 0:
            continue
        T = MobiusMap(*t, p)
        if all(not _mpow(T, order // q).is_identity() for q in fs):
            return T, order
    raise ArithmeticError("no torus generator")


def involution_pairs(M):
    """Pairs {z, M z} listed along a torus orbit.

    Position k holds (x_k, x_{k+n}) where x_{k+1} = T x_k; the torus
    labelling makes pair i + pair j sums meaningful to the quad planner.
    """
    p = M.p
    T, order = _torus(M)
    fixed = {z for z in range(p + 1) if M(z) == z}
    x0 = next(z for z in range(p + 1) if z not in fixed)
    pts = [x0]
    for _ in range(order - 1):
        pts.append(T(pts[-1]))
    n = order // 2
    return [(pts[k], pts[k + n]) for k in range(n)]


def interpolate(src, dst, p):
    """The Mobius map sending the three points src to dst."""
    def std(x1, x2, x3):
        def col(x):
            return (1, 0) if x == p else (x, 1)
        v1, v2, v3 = col(x1), col(x2), col(x3)
        det = (v1[0] * v2[1] - v1[1] * v2[0]) % p
        inv = pow(det, -1, p)
        l1 = (v3[0] * v2[1] - v3[1] * v2[0]) * inv % p
        l2 = (v1[0] * v3[1] - v1[1] * v3[0]) * inv % p
        return MobiusMap(l1 * v1[0] % p, l2 * v2[0] % p, l1 * v1[1] % p, l2 * v2[1] % p, p)
    return std(*dst) @ std(*src).inverse()
