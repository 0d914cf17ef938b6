"""Relative homology of flag nerves by strong and edge collapses.

For a Helly cover the nerve N is the clique complex of the intersection
graph G, and the frontier subcomplex L is full, so ``H_k(N, L)`` is the
reduced homology of the clique complex of ``G + apex`` with the apex joined
to every frontier vertex (the cone over L).  That graph is shrunk by

* vertex domination: ``N[v] <= N[w]`` -> remove v, retraction v -> w;
* edge domination: ``N[u] & N[v] <= N[w]`` with w not in {u, v} -> remove uv.

Both preserve the homotopy type of the clique complex.  Each step comes
with an explicit chain map to the smaller complex, which is used to carry
chains from the full complex into the collapsed one.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .complex import DEFAULT_BUDGET, flag_complex, sort_sign
from .errors import SpecError
from .homology import ChainComplex, SparseMatrix


def _iter_bits(b: int):
    while b:
        low = b & -b
        yield low.bit_length() - 1
        b ^= low


def intersection_graph(incidence: np.ndarray) -> list[int]:
    """Closed-neighbourhood bitsets of the member intersection graph."""
    inc = incidence.astype(np.float32)
    adj = (inc @ inc.T) > 0
    packed = np.packbits(adj, axis=1, bitorder="little")
    return [int.from_bytes(r.tobytes(), "little") for r in packed]


def strong_edge_collapse(nb: list[int]):
    """Collapse in place; returns (alive vertices, events).

    Events are ``("v", v, w)`` or ``("e", u, v, w)`` in application order.
    Vertices and edges are scanned in increasing order, so the result is
    deterministic.
    """
    alive = set(range(len(nb)))
    events = []
    changed = True
    while changed:
        changed = False
        for v in sorted(alive):
            N = nb[v]
            D = N
            for x in _iter_bits(N):
                D &= nb[x]
                if D == (1 << v):
                    break
            D &= ~(1 << v)
            if D:
                w = (D & -D).bit_length() - 1
                events.append(("v", v, w))
                alive.discard(v)
                for x in _iter_bits(N & ~(1 << v)):
                    nb[x] &= ~(1 << v)
                nb[v] = 0
                changed = True
        for u in sorted(alive):
            for v in _iter_bits(nb[u] >> (u + 1)):
                v += u + 1
                I = nb[u] & nb[v]
                uv = (1 << u) | (1 << v)
                D = I
                for x in _iter_bits(I):
                    D &= nb[x]
                    if D & ~uv == 0:
                        break
                D &= ~uv
                if D:
                    w = (D & -D).bit_length() - 1
                    events.append(("e", u, v, w))
                    nb[u] &= ~(1 << v)
                    nb[v] &= ~(1 << u)
                    changed = True
    return sorted(alive), events


def _add(out: dict, s, c):
    x = out.get(s, 0) + c
    if x:
        out[s] = x
    else:
        out.pop(s, None)


def _vertex_event(chain: dict, v: int, w: int) -> dict:
    if not any(v in s for s in chain):
        return chain
    out: dict = {}
    for s, c in chain.items():
        if v not in s:
            _add(out, s, c)
            continue
        img, sign = sort_sign([w if x == v else x for x in s])
        if img is not None:
            _add(out, img, sign * c)
    return out


def _cone(s: tuple, w: int):
    """(s + w sorted, position of w)."""
    t = tuple(sorted(s + (w,)))
    return t, t.index(w)


def _edge_event(chain: dict, u: int, v: int, w: int) -> dict:
    """Apply ``id - dh - hd`` with ``h(t) = (-1)^pos(w) (t + w)`` on simplices
    containing u and v but not w; the result avoids the edge uv."""
    hit = [s for s in chain if u in s and v in s]
    if not hit:
        return chain
    out = dict(chain)
    for s in hit:
        c = chain[s]
        if w in s:
            _add(out, s, -c)  # rho kills these faces: rho(t + w) = 0
            continue
        # - d h (s)
        t, pos = _cone(s, w)
        hs = (-1) ** pos
        for i in range(len(t)):
            _add(out, t[:i] + t[i + 1:], -c * hs * (-1) ** i)
        # - h d (s)
        for i in range(len(s)):
            f = s[:i] + s[i + 1:]
            if u in f and v in f:
                ft, fpos = _cone(f, w)
                _add(out, ft, -c * (-1) ** i * (-1) ** fpos)
    for s in out:
        if u in s and v in s:
            raise SpecError("edge collapse left a simplex on the removed edge")
    return out


@dataclass(eq=False)
class CollapsedPair:
    """Collapsed model of ``N(cover) + apex * L`` for a Helly cover."""
    nmembers: int
    apex: int
    frontier: frozenset
    alive: list
    events: list
    nb: list  # collapsed closed neighbourhoods
    dim_cap: int
    stats: dict = field(default_factory=dict)

    @classmethod
    def build(cls, incidence: np.ndarray, frontier_members, dim_cap: int,
              budget: int = DEFAULT_BUDGET) -> "CollapsedPair":
        m = incidence.shape[0]
        nb = intersection_graph(incidence)
        apex = m
        a = 1 << apex
        for f in frontier_members:
            nb[f] |= 1 << apex
            a |= 1 << f
        nb.append(a)
        n_edges = (sum(bin(x).count("1") for x in nb) - len(nb)) // 2
        alive, events = strong_edge_collapse(nb)
        obj = cls(m, apex, frozenset(frontier_members), alive, events, nb, dim_cap)
        obj.stats = {"graph_vertices": m + 1, "graph_edges": n_edges,
                     "collapsed_vertices": len(alive),
                     "collapsed_edges": (sum(bin(nb[v]).count("1") for v in alive) - len(alive)) // 2,
                     "events": len(events)}
        obj._budget = budget
        return obj

    def transport(self, chain: dict) -> dict:
        """Carry a chain of the full coned flag complex into the collapsed one."""
        for ev in self.events:
            if not chain:
                break
            if ev[0] == "v":
                chain = _vertex_event(chain, ev[1], ev[2])
            else:
                chain = _edge_event(chain, ev[1], ev[2], ev[3])
        return chain

    def chain_complex(self) -> ChainComplex:
        """Augmented chain complex of the collapsed clique complex (degrees
        -1 .. dim_cap) whose homology is H_*(N, L)."""
        alive = self.alive
        pos = {v: i for i, v in enumerate(alive)}
        local = []
        for v in alive:
            b = 0
            for x in _iter_bits(self.nb[v]):
                if x in pos:
                    b |= 1 << pos[x]
            local.append(b)
        K = flag_complex(len(alive), local, self.dim_cap, self._budget)
        labels = {-1: [()]}
        for k, simp in K.simplices.items():
            labels[k] = [tuple(alive[i] for i in s) for s in simp]
        index = {k: {s: i for i, s in enumerate(v)} for k, v in labels.items()}
        d = {0: SparseMatrix(1, len(labels.get(0, [])), [{0: 1} for _ in labels.get(0, [])])}
        for k in range(1, K.dimension + 1):
            rows = index[k - 1]
            cols = []
            for s in labels[k]:
                cols.append({rows[s[:i] + s[i + 1:]]: (-1) ** i for i in range(len(s))})
            d[k] = SparseMatrix(len(labels[k - 1]), len(labels[k]), cols)
        dims = {k: len(v) for k, v in labels.items()}
        return ChainComplex(dims=dims, d=d, labels=labels, augmented=True)


def relative_to_coned(chain: dict, apex: int) -> dict:
    """Coned cycle of a relative cycle of positive degree: ``z - (-1)^k dz * apex``.

    ``dz`` lies in L, so the apex simplices exist in the coned complex.
    """
    from .complex import chain_boundary
    out = dict(chain)
    for f, c in chain_boundary(chain).items():
        if f:
            _add(out, f + (apex,), -c * (-1) ** len(f))
    return out
