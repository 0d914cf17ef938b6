"""Nerves, frontier subcomplexes, simplicial maps and their chain complexes."""
from __future__ import annotations

import io
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .cover import IndexedCover, RefinementProjection
from .errors import BudgetExceeded, NotSimplicial, SpecError
from .homology import ChainComplex, SparseMatrix

DEFAULT_BUDGET = 2_000_000


def sort_sign(seq: Sequence[int]):
    """(sorted tuple, sign of the sorting permutation) or (None, 0) if repeated."""
    s = tuple(sorted(seq))
    if len(set(s)) != len(s):
        return None, 0
    inversions = 0
    n = len(seq)
    for i in range(n):
        for j in range(i + 1, n):
            if seq[i] > seq[j]:
                inversions += 1
    return s, (-1 if inversions % 2 else 1)


def push_chain(chain: dict, vmap, keep=None) -> dict:
    """Image of a chain (simplex tuple -> coefficient) under a vertex map.

    Degenerate images vanish; ``keep`` (predicate on image simplices) drops
    the rest, e.g. simplices landing in a frontier subcomplex.
    """
    out: dict = {}
    for s, c in chain.items():
        img, sign = sort_sign([vmap[v] for v in s])
        if img is None or (keep is not None and not keep(img)):
            continue
        out[img] = out.get(img, 0) + sign * c
        if not out[img]:
            del out[img]
    return out


def chain_boundary(chain: dict) -> dict:
    out: dict = {}
    for s, c in chain.items():
        for i in range(len(s)):
            f = s[:i] + s[i + 1:]
            out[f] = out.get(f, 0) + (-1) ** i * c
            if not out[f]:
                del out[f]
    return out


@dataclass(eq=False)
class SimplicialComplex:
    """Finite complex on vertices ``0..nverts-1``; ``simplices[k]`` is the
    lexicographically sorted list of k-simplices (sorted vertex tuples)."""
    nverts: int
    simplices: dict
    dim_cap: int

    def __post_init__(self):
        self.simplices = {k: sorted(v) for k, v in self.simplices.items()}
        self._index = {k: {s: i for i, s in enumerate(v)} for k, v in self.simplices.items()}

    @property
    def dimension(self) -> int:
        return max((k for k, v in self.simplices.items() if v), default=-1)

    def count(self, k: int) -> int:
        return len(self.simplices.get(k, ()))

    def index(self, k: int) -> dict:
        return self._index.get(k, {})

    def __contains__(self, s) -> bool:
        s = tuple(s)
        return s in self._index.get(len(s) - 1, {})

    def check(self) -> None:
        """Sortedness, no duplicates, face closure."""
        for k, simp in self.simplices.items():
            if len(set(simp)) != len(simp):
                raise SpecError(f"duplicate {k}-simplices")
            for s in simp:
                if len(s) != k + 1 or any(a >= b for a, b in zip(s, s[1:])):
                    raise SpecError(f"simplex {s} not strictly sorted")
                if not all(0 <= v < self.nverts for v in s):
                    raise SpecError(f"simplex {s} has an unknown vertex")
                if k > 0:
                    for i in range(len(s)):
                        if s[:i] + s[i + 1:] not in self._index[k - 1]:
                            raise SpecError(f"face of {s} missing")

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * len(v) for k, v in self.simplices.items())

    def dump(self) -> str:
        buf = io.StringIO()
        for k in sorted(self.simplices):
            for s in self.simplices[k]:
                buf.write(f"{k} " + " ".join(map(str, s)) + "\n")
        return buf.getvalue()


@dataclass(eq=False)
class SimplicialPair:
    complex: SimplicialComplex
    frontier_vertices: frozenset

    def in_frontier(self, s) -> bool:
        fv = self.frontier_vertices
        return all(v in fv for v in s)

    @property
    def frontier(self) -> SimplicialComplex:
        fv = self.frontier_vertices
        return SimplicialComplex(
            self.complex.nverts,
            {k: [s for s in v if all(x in fv for x in s)] for k, v in self.complex.simplices.items()},
            self.complex.dim_cap)

    def relative_basis(self, k: int) -> list:
        return [s for s in self.complex.simplices.get(k, ()) if not self.in_frontier(s)]


@dataclass(eq=False)
class SimplicialMap:
    source: SimplicialComplex
    target: SimplicialComplex
    vertex_map: tuple

    def validate(self) -> None:
        for k, simp in self.source.simplices.items():
            for s in simp:
                img = tuple(sorted({self.vertex_map[v] for v in s}))
                if img not in self.target:
                    raise NotSimplicial(f"image of {s} is not a simplex of the target")


# --------------------------------------------------------------------------
# nerve

def nerve(c: IndexedCover, dim_cap: int, budget: int = DEFAULT_BUDGET) -> SimplicialComplex:
    """Nerve up to ``dim_cap`` by clique expansion of the intersection graph
    with an exact common-intersection check per candidate."""
    if dim_cap < 0:
        raise SpecError("dim_cap must be >= 0")
    bits = c.member_bits
    m = c.size
    inc = c.incidence.astype("float32")
    adj = (inc @ inc.T) > 0
    nbr = []
    for u in range(m):
        row = adj[u]
        nbr.append(sum(1 << int(v) for v in row.nonzero()[0] if v > u))
    level = [((u,), bits[u], nbr[u]) for u in range(m)]
    simplices = {0: [s for s, _, _ in level]}
    for k in range(1, dim_cap + 1):
        nxt = []
        for s, inter, cand in level:
            while cand:
                low = cand & -cand
                v = low.bit_length() - 1
                cand ^= low
                common = inter & bits[v]
                if common:
                    nxt.append((s + (v,), common, cand & nbr[v]))
            if len(nxt) > budget:
                raise BudgetExceeded(f"nerve has more than {budget} simplices in dimension {k}",
                                     dimension=k)
        if not nxt:
            break
        simplices[k] = [s for s, _, _ in nxt]
        level = nxt
    return SimplicialComplex(m, simplices, dim_cap)


def flag_complex(nverts: int, nbr_bits: Sequence[int], dim_cap: int,
                 budget: int = DEFAULT_BUDGET) -> SimplicialComplex:
    """Clique complex of a graph given by neighbour bitsets (self bit ignored)."""
    up = [nbr_bits[u] & ~((1 << (u + 1)) - 1) for u in range(nverts)]
    level = [((u,), up[u]) for u in range(nverts)]
    simplices = {0: [s for s, _ in level]}
    for k in range(1, dim_cap + 1):
        nxt = []
        for s, cand in level:
            while cand:
                low = cand & -cand
                v = low.bit_length() - 1
                cand ^= low
                nxt.append((s + (v,), cand & up[v]))
            if len(nxt) > budget:
                raise BudgetExceeded(f"flag complex has more than {budget} simplices in dimension {k}",
                                     dimension=k)
        if not nxt:
            break
        simplices[k] = [s for s, _ in nxt]
        level = nxt
    return SimplicialComplex(nverts, simplices, dim_cap)


def frontier_subcomplex(n: SimplicialComplex, c: IndexedCover, F: Iterable[int] | None = None) -> SimplicialPair:
    """Full subcomplex on the members meeting the frontier (default: the
    ambient frontier)."""
    if F is None:
        verts = c.frontier_members
    else:
        F = sorted({c.space.check_id(x) for x in F})
        verts = frozenset(int(i) for i in c.incidence[:, F].any(axis=1).nonzero()[0]) if F else frozenset()
    return SimplicialPair(n, frozenset(verts))


def induced_simplicial_map(p: RefinementProjection, n_i: SimplicialComplex,
                           n_j: SimplicialComplex, validate: bool = True) -> SimplicialMap:
    if len(p.phi) != n_i.nverts:
        raise SpecError("projection does not match the source complex")
    m = SimplicialMap(n_i, n_j, tuple(p.phi))
    if validate:
        m.validate()
    return m


def relative_chain_complex(pair: SimplicialPair, degrees: Iterable[int] | None = None) -> ChainComplex:
    """Boundary matrices of ``C(N) / C(L)`` in lexicographic simplex order."""
    top = pair.complex.dimension
    ks = range(0, top + 1) if degrees is None else sorted(set(degrees))
    ks = [k for k in ks if k >= 0]
    need = sorted({j for k in ks for j in (k - 1, k, k + 1) if 0 <= j <= top})
    bases = {k: pair.relative_basis(k) for k in need}
    index = {k: {s: i for i, s in enumerate(b)} for k, b in bases.items()}
    d = {}
    for k in need:
        if k == 0 or k - 1 not in index:
            continue
        rows = index[k - 1]
        cols = []
        for s in bases[k]:
            col = {}
            for i in range(len(s)):
                r = rows.get(s[:i] + s[i + 1:])
                if r is not None:
                    col[r] = (-1) ** i
            cols.append(col)
        d[k] = SparseMatrix(len(bases[k - 1]), len(bases[k]), cols)
    dims = {k: len(b) for k, b in bases.items()}
    return ChainComplex(dims=dims, d=d, labels={k: b for k, b in bases.items()})


def chain_map_matrices(m: SimplicialMap, src: SimplicialPair, tgt: SimplicialPair,
                       degrees: Iterable[int]) -> dict:
    """Per degree, the matrix of the chain map on relative chains."""
    out = {}
    for k in degrees:
        sb = src.relative_basis(k)
        tb = {s: i for i, s in enumerate(tgt.relative_basis(k))}
        cols = []
        for s in sb:
            img, sign = sort_sign([m.vertex_map[v] for v in s])
            if img is None or img not in tb:
                cols.append({})
            else:
                cols.append({tb[img]: sign})
        out[k] = SparseMatrix(len(tb), len(sb), cols)
    return out


def chain_to_vector(chain: dict, index: dict) -> dict:
    out = {}
    for s, c in chain.items():
        i = index.get(s)
        if i is None:
            raise SpecError(f"simplex {s} not in the chain basis")
        out[i] = c
    return out


def vector_to_chain(v: dict, labels: Sequence) -> dict:
    return {labels[i]: c for i, c in v.items()}
