"""Quad-phase planner: ski lifts over quadratic-residue involutions.

Each involution M of P^1(F_p) pairs up the points; a circle method over
those pairs ("two skiers per seat") visits pair-of-pairs blocks.  A
quadruple whose Klein group holds three QR involutions turns up under each
of them, so exactly one owner executes it.  The planner decides owners,
orders rounds so consecutive layouts stay close, and packs leftover blocks
into extra rounds.
"""

import heapq
import math
import random
from collections import Counter, defaultdict
from functools import lru_cache

from .mobius import interpolate, involution_pairs, qr_involutions, smallest_prime


def _rk(n):
    # rounds of a circle method over n units
    return 0 if n < 2 else (n - 1 if n % 2 == 0 else n)


@lru_cache(maxsize=4096)
def zigzag(P, c):
    """Positions of a P-cycle read as a line folded at c: c, c+1, c-1, c+2, ..."""
    line = [c % P]
    j = 1
    while len(line) < P:
        line.append((c + j) % P)
        if len(line) < P:
            line.append((c - j) % P)
        j += 1
    return tuple(line)


def lift_seating(order):
    """Seat units on the lift ring so that round 0 pairs them as listed."""
    u = list(order)
    if len(u) % 2:
        u.append(None)
    N = len(u)
    R = N - 1
    ring = [None] * R
    blocks = [(u[2 * k], u[2 * k + 1]) for k in range(N // 2)]
    for k in range(N // 2 - 1):
        A, B = blocks[k]
        ring[(-k) % R] = A
        ring[(1 + k) % R] = B
    A, B = blocks[-1]
    ring[(N // 2) % R] = A
    return ring, B


def lift_lines(ring, stat):
    """Per round: (line of (unit, half) points, unit pairs seated together)."""
    R = len(ring)
    P = 2 * R
    out = []
    for r in range(R):
        line = [(ring[i >> 1], i & 1) for i in zigzag(P, (1 + 2 * r) % P)]
        line += [(stat, 0), (stat, 1)]
        pairs = []
        for k in range(0, len(line), 4):
            us = list(dict.fromkeys(x for x, _ in line[k:k + 4]))
            if None not in us:
                pairs.append(tuple(us))
        out.append(([x for x in line if x[0] is not None], pairs))
    return out


def ring_line(n, c, alive):
    return [(i >> 1, i & 1) for i in zigzag(2 * n, c) if alive[i >> 1]]


def realize(cur, line_pts, blocks):
    """Exact layout: blocks contiguous near their line position, others kept."""
    tpos = {x: i for i, x in enumerate(line_pts)}
    inb = set()
    slots = []
    for b in blocks:
        inb.update(b)
        slots.append((sum(tpos[x] for x in b) / len(b), tuple(sorted(b, key=tpos.__getitem__))))
    for x in line_pts:
        if x not in inb:
            slots.append((tpos[x], (x,)))
    n = len(cur)
    L = len(line_pts)
    for i, x in enumerate(cur):
        if x not in tpos:
            slots.append(((-1 if i < n / 2 else L) + i / n / 2, (x,)))
    slots.sort(key=lambda s: s[0])
    return [x for _, b in slots for x in b]


def _displacement(cur, new):
    npos = {x: i for i, x in enumerate(new)}
    return max(abs(i - npos[x]) for i, x in enumerate(cur))


class QuadPlanner:
    """Plan the quad phase for m orbitals.

    window: how many upcoming involutions compete (by layout displacement)
    to run next; 1 keeps the sorted order.  anneal: iterations per owned
    group for the owner-assignment annealing (0 disables it).
    """

    def __init__(self, m, window=16, anneal=60, seed=0):
        self.m = m
        p = self.p = smallest_prime(max(m - 1, 3))
        self.invs = qr_involutions(p)
        index = {M.key: k for k, M in enumerate(self.invs)}
        tp = self.tp = 1 if p % 4 == 3 else 0
        self.window = window
        info = []
        for M in self.invs:
            prs = involution_pairs(M)
            n = len(prs)
            pts = [pr[0] for pr in prs] + [pr[1] for pr in prs]
            N2 = 2 * n
            Vs = {}
            for r in range(tp, n, 2):
                J = interpolate((pts[0], pts[1], pts[2]), (pts[r % N2], pts[(r - 1) % N2], pts[(r - 2) % N2]), p)
                K = M @ J
                Vs[r] = (index[J.key], index[K.key])
            alive = [max(pr) < m for pr in prs]
            a = sum(alive[0::2])
            b = sum(alive[1::2])
            pen = (max(_rk(a), _rk(b)) if tp else max(a, b)) + len(Vs) - _rk(a + b)
            info.append((prs, Vs, alive, pen))
        self.info = info
        self.n = len(info[0][0]) if info else 0
        full = [False] * len(info)
        for k in sorted(range(len(info)), key=lambda k: (-info[k][3], k)):
            if info[k][3] < 0:
                continue
            if all(not full[x] and not full[y] for x, y in info[k][1].values()):
                full[k] = True
        self.full = full
        self._assign_owners(anneal, seed)

    # -- ownership of Klein groups ------------------------------------------
    def _assign_owners(self, anneal, seed):
        vgroups = {}
        for k, (prs, Vs, alive, pen) in enumerate(self.info):
            for s, (x, y) in Vs.items():
                vgroups.setdefault(tuple(sorted((k, x, y))), {})[k] = s
        full = self.full
        todo = {key for key in vgroups if not any(full[z] for z in key)}
        cnt = Counter()
        groups_of = defaultdict(list)
        for key in sorted(todo):
            for z in key:
                cnt[z] += 1
                groups_of[z].append(key)
        heap = [(-c, z) for z, c in cnt.items()]
        heapq.heapify(heap)
        owner = {}
        while todo:
            c, k = heapq.heappop(heap)
            if -c != cnt[k]:
                continue
            for key in groups_of[k]:
                if key not in todo:
                    continue
                owner[key] = k
                todo.discard(key)
                for z in key:
                    cnt[z] -= 1
                    if z != k and cnt[z] > 0:
                        heapq.heappush(heap, (-cnt[z], z))
            cnt[k] = 0
        self.assigned = defaultdict(set)
        for key, k in owner.items():
            self.assigned[k].add(vgroups[key][k])
        self.vgroups = vgroups
        if anneal and owner:
            self._anneal(owner, anneal, seed)

    def _cycle(self):
        cyc = [r for r in range(self.n) if r % 2 == self.tp]
        return cyc, {r: i for i, r in enumerate(cyc)}

    def runs(self, X):
        """Cyclic runs of X on the cycle of V classes (a full cycle is one run)."""
        cyc, idx = self._cycle()
        L = len(cyc)
        if len(X) == L:
            return 1
        return sum(1 for r in X if cyc[(idx[r] - 1) % L] not in X)

    def _anneal(self, owner, mult, seed):
        """Simulated annealing on owners, minimising total runs per involution."""
        rng = random.Random(seed)
        A = self.assigned
        cyc, idx = self._cycle()
        L = len(cyc)
        runs = self.runs

        def delta_add(X, s):
            if len(X) + 1 == L:
                return runs(X | {s}) - runs(X)
            i = idx[s]
            a = cyc[(i - 1) % L] in X
            b = cyc[(i + 1) % L] in X
            return 1 - a - b if len(X) else 1

        keys = sorted(owner)
        iters = mult * len(keys)
        for it in range(iters):
            key = keys[rng.randrange(len(keys))]
            k = owner[key]
            z = key[rng.randrange(3)]
            if z == k:
                continue
            sk = self.vgroups[key][k]
            sz = self.vgroups[key][z]
            A[k].discard(sk)
            d = -delta_add(A[k], sk) + delta_add(A[z], sz)
            T = max(0.05, 1 - it / (0.75 * iters))
            if d <= 0 or rng.random() < math.exp(-d / T):
                A[z].add(sz)
                owner[key] = z
            else:
                A[k].add(sk)
        self.total_runs = sum(runs(X) for X in A.values())

    # -- rounds of one involution ---------------------------------------
    def _plan(self, k, cur, first_only=False):
        prs, Vs, alive, pen = self.info[k]
        n = len(prs)
        pos = {x: i for i, x in enumerate(cur)}

        def cm(i):
            return pos[prs[i][0]] + pos[prs[i][1]]

        def orient(i):
            a, b = prs[i]
            return (a, b) if pos[a] < pos[b] else (b, a)

        al = [i for i in range(n) if alive[i]]

        def pts_of(line):
            return [orient(u)[h] for u, h in line]

        def lift_for(units, mirror=False, limit=None):
            if not units:
                return []
            ring, stat = lift_seating(sorted(units, key=cm))
            res = []
            for line, pairs in lift_lines(ring, stat)[:limit]:
                pl = pts_of(line)
                res.append((pl[::-1] if mirror else pl, pairs))
            return res

        lim = 1 if first_only else None
        out = []
        if self.full[k]:
            return [(pl, pairs, None) for pl, pairs in lift_for(al, limit=lim)]
        if self.tp == 1:
            E = [i for i in al if i % 2 == 0]
            O = [i for i in al if i % 2 == 1]
            if E and O and sum(map(cm, E)) / len(E) > sum(map(cm, O)) / len(O):
                E, O = O, E
            la = lift_for(E, limit=lim)
            lb = lift_for(O, mirror=True, limit=lim)
            for t in range(max(len(la), len(lb), 1)):
                pa = la[t] if t < len(la) else (la[-1][0] if la else [orient(i)[h] for i in E for h in (0, 1)], [])
                pb = lb[t] if t < len(lb) else (lb[-1][0] if lb else [orient(i)[h] for i in O for h in (0, 1)], [])
                out.append((pa[0] + pb[0], list(pa[1]) + list(pb[1]), None))
                if first_only:
                    break
            return out
        best = None
        for c in range(1, 2 * n, 2):
            pl0 = pts_of(ring_line(n, c, alive))
            for rev in (False, True):
                pl = pl0[::-1] if rev else pl0
                d = _displacement(cur, realize(cur, pl, []))
                if best is None or d < best[0]:
                    best = (d, c, rev)
        _, c0, rev = best
        for t in range(n):
            c = (c0 - 1 + t) % (2 * n)
            pl = pts_of(ring_line(n, c, alive))
            if rev:
                pl = pl[::-1]
            s = c % n
            if c % 2 == 1:
                edges = [(i, (s - i) % n) for i in al if i < (s - i) % n and alive[(s - i) % n]]
            else:
                edges = []
            out.append((pl, edges, ("B", s) if c % 2 == 0 else None))
            if first_only:
                break
        return out

    def rounds(self, layouts=True):
        """Yield (involution index, layout or None, quads, tag) per quad round.

        quads are ((a, b), (c, d)) pair-of-pairs.  With layouts=False only
        the layout at the end of each involution is realized (enough to
        plan the next one); the per-round layout is then None.
        """
        m, tp, info, full = self.m, self.tp, self.info, self.full
        n = self.n
        executed = set()
        cur = list(range(m))
        remaining = list(range(len(info)))
        while remaining:
            if self.window > 1:
                best = None
                for k in remaining[:self.window]:
                    fl = self._plan(k, cur, first_only=True)
                    prs = info[k][0]
                    c = 0
                    if fl:
                        pl, edges, _ = fl[0]
                        c = _displacement(cur, realize(cur, pl, [prs[i] + prs[j] for i, j in edges]))
                    if best is None or c < best[0]:
                        best = (c, k)
                k = best[1]
                remaining.remove(k)
            else:
                k = remaining.pop(0)
            prs, Vs, alive, pen = info[k]
            al = [i for i in range(n) if alive[i]]

            def q(i, j):
                return tuple(sorted(prs[i] + prs[j]))

            must, opt = {}, {}
            if not full[k]:
                mine = self.assigned[k]
                for i in al:
                    for j in al:
                        if j <= i or (i + j) % 2 != tp:
                            continue
                        s = (i + j) % n
                        x, y = Vs[s]
                        if full[x] or full[y] or q(i, j) in executed:
                            continue
                        (must if s in mine else opt).setdefault(s, []).append((i, j))
            unit_of = {}
            for i in al:
                for x in prs[i]:
                    unit_of[x] = i

            def fill_adj(pl, rnd, *pools):
                used = {v for e in rnd for v in e}
                seq = []
                for x in pl:
                    u = unit_of.get(x)
                    if u is None:
                        continue
                    if not seq or seq[-1] != u:
                        seq.append(u)
                for a_, b_ in zip(seq, seq[1:]):
                    if a_ in used or b_ in used or a_ == b_:
                        continue
                    e = (min(a_, b_), max(a_, b_))
                    s = (a_ + b_) % n
                    for d in pools:
                        if s in d and e in d[s]:
                            d[s].remove(e)
                            if not d[s]:
                                del d[s]
                            rnd.append(e)
                            used.update(e)
                            break

            def fill(rnd, d):
                used = {v for e in rnd for v in e}
                for s in sorted(d):
                    rest = []
                    for e in d[s]:
                        if e[0] in used or e[1] in used:
                            rest.append(e)
                            continue
                        rnd.append(e)
                        used.update(e)
                    if rest:
                        d[s] = rest
                    else:
                        del d[s]

            rounds = []
            for pl, edges, extra in self._plan(k, cur):
                edges = list(edges)
                if extra is not None:
                    s = extra[1]
                    if s in must:
                        e2 = must.pop(s)
                        fill_adj(pl, e2, opt)
                        rounds.append((pl, e2, "ringB"))
                    continue
                fill_adj(pl, edges, must, opt)
                if edges:
                    rounds.append((pl, edges, "step"))
            if must:
                rounds += self._extras(k, rounds, cur, must, opt, fill)
            first = True
            for t, (pl, edges, tag) in enumerate(rounds):
                for i, j in edges:
                    if (i + j) % 2 == tp:
                        executed.add(q(i, j))
                quads = [(prs[i], prs[j]) for i, j in edges]
                if layouts or t == len(rounds) - 1:
                    new = realize(cur, pl, [a + b for a, b in quads])
                    lay = new
                    cur = new
                else:
                    lay = None
                yield k, lay, quads, "first" if first else tag
                first = False

    def _extras(self, k, rounds, cur, must, opt, fill):
        """Pack leftover owned blocks into rounds ordered along their class cycle."""
        prs, Vs, alive, pen = self.info[k]
        n = self.n
        last = rounds[-1][0] if rounds else cur
        pos = {x: i for i, x in enumerate(last)}

        def orient(i):
            a, b = prs[i]
            return (a, b) if pos[a] < pos[b] else (b, a)

        cyc, idx = self._cycle()
        L = len(cyc)
        starts = [r for r in cyc if cyc[(idx[r] - 1) % L] not in must] or [cyc[0]]
        ends = [r for r in cyc if cyc[(idx[r] + 1) % L] not in must] or [cyc[-1]]
        best = None
        for r0, dr in [(r, 1) for r in starts] + [(r, -1) for r in ends]:
            pl0 = [orient(u)[h] for u, h in ring_line(n, r0, alive)]
            for rev in (False, True):
                pl = pl0[::-1] if rev else pl0
                d = max(abs(i - pos[x]) for i, x in enumerate(pl))
                if best is None or d < best[0]:
                    best = (d, r0, dr, rev)
        _, r0, dr, rev = best
        i0 = idx[r0]
        packed = []
        while must:
            rnd = []
            fill(rnd, must)
            fill(rnd, opt)
            packed.append((Counter((i + j) % n for i, j in rnd).most_common(1)[0][0], rnd))
        rank = {cyc[(i0 + dr * t) % L]: t for t in range(L)}
        packed.sort(key=lambda x: rank[x[0]])
        out = []
        for sc, rnd in packed:
            pl = [orient(u)[h] for u, h in ring_line(n, sc, alive)]
            out.append((pl[::-1] if rev else pl, rnd, "extra"))
        return out
