"""Ladder-operator algebra and Jordan-Wigner matrices.

Everything here is a reference oracle: dense, simple and slow on purpose.
Qubit 0 is the leftmost tensor factor, so basis label |b0 b1 ... b(m-1)>
has b0 as its most significant bit.
"""

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .config import check_cap
from .errors import StructuralError

CREATE, ANNIHILATE = "create", "annihilate"

A = np.array([[0, 1], [0, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class LadderString:
    """Scalar times an ordered product of ladder operators."""
    factors: tuple = ()
    scalar: complex = 1.0

    def __mul__(self, other):
        if isinstance(other, LadderString):
            return LadderString(self.factors + other.factors, self.scalar * other.scalar)
        return LadderString(self.factors, self.scalar * other)

    __rmul__ = __mul__

    def adjoint(self):
        flipped = tuple((k, CREATE if kind == ANNIHILATE else ANNIHILATE)
                        for k, kind in reversed(self.factors))
        return LadderString(flipped, np.conj(self.scalar))

    def modes(self):
        return {k for k, _ in self.factors}


def cdag(k):
    return LadderString(((k, CREATE),))


def c(k):
    return LadderString(((k, ANNIHILATE),))


def _key(f):
    k, kind = f
    return (0, k) if kind == CREATE else (1, k)


def normal_order(strings):
    """Reduce a string (or a list of strings) to normal order.

    Creators come first in ascending mode order, then annihilators in
    ascending order.  Returns {factors: coefficient} with zeros removed.
    """
    if isinstance(strings, LadderString):
        strings = [strings]
    out = {}
    work = [(s.factors, complex(s.scalar)) for s in strings]
    while work:
        fs, coef = work.pop()
        for i in range(len(fs) - 1):
            l, r = fs[i], fs[i + 1]
            if _key(l) == _key(r):
                break  # repeated operator: the product vanishes
            if _key(l) > _key(r):
                swapped = fs[:i] + (r, l) + fs[i + 2:]
                work.append((swapped, -coef))
                if l[0] == r[0]:
                    # a_k a+_k = 1 - a+_k a_k
                    work.append((fs[:i] + fs[i + 2:], coef))
                break
        else:
            out[fs] = out.get(fs, 0) + coef
            continue
    return {k: v for k, v in out.items() if abs(v) > 1e-14}


def is_zero(strings):
    return not normal_order(strings)


def jw_annihilator(k, m):
    if not 0 <= k < m:
        raise StructuralError(f"mode {k} outside [0, {m})")
    check_cap(m)
    return reduce(np.kron, [Z] * k + [A] + [I2] * (m - k - 1))


def jw_creator(k, m):
    return jw_annihilator(k, m).conj().T


def ladder_matrix(s, m):
    check_cap(m)
    mat = np.eye(2 ** m, dtype=complex) * s.scalar
    for k, kind in s.factors:
        op = jw_creator(k, m) if kind == CREATE else jw_annihilator(k, m)
        mat = mat @ op
    return mat


def one_body_string(p, q):
    return cdag(p) * c(q)


def two_body_string(p, q, r, s):
    return cdag(p) * cdag(q) * c(r) * c(s)


def hermitian_term(indices):
    """The string list for a full term including its Hermitian conjugate."""
    if len(indices) == 2:
        s = one_body_string(*indices)
    elif len(indices) == 4:
        s = two_body_string(*indices)
    else:
        raise StructuralError(f"term index tuple of length {len(indices)}")
    return [s, s.adjoint()]


def term_matrix(term, m, coefficient=None):
    """Dense Hermitian matrix of h * (string + h.c.).

    ``term`` is either a TermClass-like object with ``.term`` and
    ``.coefficient`` or a bare index tuple.
    """
    idx = getattr(term, "term", term)
    h = coefficient if coefficient is not None else getattr(term, "coefficient", 1.0)
    check_cap(m)
    mats = [ladder_matrix(s, m) for s in hermitian_term(tuple(idx))]
    return h * (mats[0] + mats[1])


def strings_matrix(strings, m):
    check_cap(m)
    out = np.zeros((2 ** m, 2 ** m), dtype=complex)
    for s in strings:
        out += ladder_matrix(s, m)
    return out


def fermionic_permutation_matrix(perm, m):
    """Signed basis permutation S with S a_w S^dagger = a_perm[w].

    A basis state a+_{i1}...a+_{ik}|0> (ascending modes) goes to
    a+_{perm(i1)}...a+_{perm(ik)}|0>, reordered with the parity of the
    sorting permutation.
    """
    perm = list(perm)
    if sorted(perm) != list(range(m)):
        raise StructuralError(f"not a permutation of range({m}): {perm}")
    check_cap(m)
    dim = 2 ** m
    out = np.zeros((dim, dim), dtype=complex)
    for b in range(dim):
        occ = [i for i in range(m) if (b >> (m - 1 - i)) & 1]
        img = [perm[i] for i in occ]
        inv = sum(1 for x in range(len(img)) for y in range(x + 1, len(img)) if img[x] > img[y])
        b2 = sum(1 << (m - 1 - j) for j in img)
        out[b2, b] = -1 if inv % 2 else 1
    return out


def number_operator(k, m):
    a = jw_annihilator(k, m)
    return a.conj().T @ a
