"""Finite metric spaces with exact distances.

Every distance is stored as an integer *key* in an ``n x n`` array together
with a common denominator.  For graph metrics and the L1 / L-infinity norms
the distance is ``key / denom``; for the L2 norm the key encodes the squared
distance, ``d**2 = key / denom``.  All threshold tests (balls,
neighbourhoods, adjacency) are integer comparisons on keys, so results never
depend on floating point.
"""
from __future__ import annotations

import dataclasses
import functools
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .errors import EmptySubspace, IdOutOfRange, SpecError

NORMS = ("l1", "l2", "linf")


def as_rational(x) -> Fraction:
    """Exact rational from int / Fraction / decimal string / float literal."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise SpecError(f"not a number: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise SpecError(f"not a finite number: {x!r}")
        return Fraction(repr(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise SpecError(f"not a rational number: {x!r}") from exc
    if isinstance(x, SqrtRational):
        raise SpecError("irrational value where a rational is required")
    raise SpecError(f"not a number: {x!r}")


@functools.total_ordering
class SqrtRational:
    """Nonnegative square root of a rational; exact ordering against rationals."""

    __slots__ = ("square",)

    def __init__(self, square):
        square = Fraction(square)
        if square < 0:
            raise ValueError("negative square")
        self.square = square

    @staticmethod
    def _square_of(other):
        if isinstance(other, SqrtRational):
            return other.square
        other = Fraction(other)
        return None if other < 0 else other * other

    def __eq__(self, other):
        try:
            sq = self._square_of(other)
        except (TypeError, ValueError):
            return NotImplemented
        return sq is not None and sq == self.square

    def __lt__(self, other):
        sq = self._square_of(other)
        return sq is not None and self.square < sq

    def __hash__(self):
        return hash(("sqrt", self.square))

    def __float__(self):
        return math.sqrt(self.square)

    def __repr__(self):
        return f"sqrt({self.square})"

    __str__ = __repr__


def exact_sqrt(q: Fraction):
    """``sqrt(q)`` as a Fraction when rational, else a SqrtRational."""
    q = Fraction(q)
    rn, rd = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return Fraction(rn, rd)
    return SqrtRational(q)


def value_str(v) -> str:
    """Canonical text form of an exact distance / scale value."""
    if isinstance(v, SqrtRational):
        return repr(v)
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    keys: np.ndarray
    denom: int
    squared: bool
    frontier: frozenset
    backend: str  # "graph" | "cloud"
    norm: str | None = None
    coords: np.ndarray | None = None  # integer coordinates scaled by coord_scale
    coord_scale: int = 1
    edges: tuple = ()
    model_dim: int | None = None
    adjacency_scale: Fraction = Fraction(1)
    labels: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.keys.setflags(write=False)
        bad = [f for f in self.frontier if not 0 <= f < self.n]
        if bad:
            raise IdOutOfRange(f"frontier ids out of range: {sorted(bad)[:5]}")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(self.n)))

    @property
    def n(self) -> int:
        return self.keys.shape[0]

    def __len__(self):
        return self.n

    def check_id(self, x) -> int:
        if not isinstance(x, (int, np.integer)) or not 0 <= x < self.n:
            raise IdOutOfRange(f"point id {x!r} not in 0..{self.n - 1}")
        return int(x)

    # exact values <-> keys
    def value(self, key):
        if key is None:
            return None
        q = Fraction(int(key), self.denom)
        return exact_sqrt(q) if self.squared else q

    def key_bound(self, r) -> int:
        """Largest key k with ``key <= k  <=>  distance <= r``."""
        if isinstance(r, SqrtRational):
            if not self.squared:
                raise SpecError("irrational radius on a rational-valued metric")
            return math.floor(r.square * self.denom)
        r = as_rational(r)
        if r < 0:
            return -1
        return math.floor((r * r if self.squared else r) * self.denom)

    def key_exceeds(self, key, r) -> bool:
        """``value(key) > r`` exactly; ``key is None`` means infinity."""
        if key is None:
            return True
        return int(key) > self.key_bound(r)

    @functools.cached_property
    def window_diameter_key(self) -> int:
        return int(self.keys.max()) if self.n else 0

    @property
    def window_diameter(self):
        return self.value(self.window_diameter_key)

    # structural predicates used by covers
    @functools.cached_property
    def box_shape(self):
        """(origin, sides, varying axes) if the points form a full integer box."""
        if self.coords is None or self.coord_scale != 1:
            return None
        if self.backend == "graph" and (not self.is_tree_graph or self.coords.shape[1] != 1):
            return None  # only paths carry coordinates that realise the metric
        c = self.coords
        lo, hi = c.min(axis=0), c.max(axis=0)
        sides = hi - lo + 1
        if int(np.prod(sides)) != self.n:
            return None
        if len({tuple(row) for row in c.tolist()}) != self.n:
            return None
        varying = tuple(int(a) for a in np.nonzero(sides > 1)[0])
        return tuple(int(v) for v in lo), tuple(int(v) for v in sides), varying

    @functools.cached_property
    def is_tree_graph(self) -> bool:
        return self.backend == "graph" and len(self.edges) == self.n - 1

    @property
    def balls_are_helly(self) -> bool:
        """True when metric balls provably have the Helly property.

        Balls are lattice boxes for L-infinity boxes (or any norm when only
        one axis varies) and subtrees for tree metrics; both families are
        Helly, so their nerves are flag complexes.
        """
        if self.is_tree_graph:
            return True
        shape = self.box_shape
        if shape is None:
            return False
        return self.norm == "linf" or len(shape[2]) <= 1

    # subspace
    def induced(self, members: Iterable[int]) -> "FiniteMetricSpace":
        """Subspace with the ambient (restricted) metric; ids are renumbered
        in increasing ambient order and ``labels`` keeps the ambient ids."""
        ids = sorted({self.check_id(m) for m in members})
        if not ids:
            raise EmptySubspace("empty subspace")
        pos = {a: i for i, a in enumerate(ids)}
        keys = self.keys[np.ix_(ids, ids)].copy()
        coords = None if self.coords is None else self.coords[ids].copy()
        edges = tuple((pos[u], pos[v], w) for u, v, w in self.edges if u in pos and v in pos)
        labels = tuple(self.labels[a] for a in ids)
        frontier = frozenset(pos[f] for f in self.frontier if f in pos)
        return FiniteMetricSpace(
            keys=keys, denom=self.denom, squared=self.squared, frontier=frontier,
            backend=self.backend, norm=self.norm, coords=coords,
            coord_scale=self.coord_scale, edges=edges if self.backend == "graph" and
            len(edges) == len(ids) - 1 else (), model_dim=None,
            adjacency_scale=self.adjacency_scale, labels=labels,
            meta={**self.meta, "subspace_of": self.meta.get("name", "space"),
                  "ambient_ids": ids},
        )

    def with_frontier(self, frontier: Iterable[int]) -> "FiniteMetricSpace":
        fr = frozenset(self.check_id(f) for f in frontier)
        return FiniteMetricSpace(
            keys=self.keys, denom=self.denom, squared=self.squared, frontier=fr,
            backend=self.backend, norm=self.norm, coords=self.coords,
            coord_scale=self.coord_scale, edges=self.edges, model_dim=self.model_dim,
            adjacency_scale=self.adjacency_scale, labels=self.labels, meta=dict(self.meta),
        )


@dataclass(frozen=True)
class SubspaceRef:
    ambient: FiniteMetricSpace
    members: frozenset

    def __post_init__(self):
        for m in self.members:
            self.ambient.check_id(m)

    def space(self) -> FiniteMetricSpace:
        """The subspace as a metric space (ambient metric, ambient frontier)."""
        return self.ambient.induced(self.members)


# --------------------------------------------------------------------------
# constructors

def _lcm_denominators(values) -> int:
    out = 1
    for v in values:
        out = math.lcm(out, Fraction(v).denominator)
    return out


def from_graph(n: int, edges: Iterable[tuple], frontier: Iterable[int] = (), *,
               name: str = "graph", model_dim=None, meta=None) -> FiniteMetricSpace:
    """Shortest-path metric of a connected weighted graph on ids ``0..n-1``."""
    if n < 1:
        raise SpecError("a space needs at least one point")
    clean = []
    for e in edges:
        if len(e) == 2:
            u, v, w = e[0], e[1], Fraction(1)
        else:
            u, v, w = e[0], e[1], as_rational(e[2])
        if not (0 <= u < n and 0 <= v < n):
            raise SpecError(f"edge ({u}, {v}) references a missing vertex")
        if w < 0:
            raise SpecError("edge weights must be nonnegative")
        if u != v:
            clean.append((int(u), int(v), w))
    denom = _lcm_denominators(w for _, _, w in clean)
    if n == 1:
        keys = np.zeros((1, 1), dtype=np.int64)
    else:
        best: dict = {}
        for u, v, w in clean:
            a, b = min(u, v), max(u, v)
            iw = int(w * denom)
            best[(a, b)] = min(best.get((a, b), iw), iw)
        if not best:
            raise SpecError("graph is disconnected")
        if any(iw == 0 for iw in best.values()):
            raise SpecError("zero-weight edges are not supported (the metric would not separate points)")
        rows, cols, vals = [], [], []
        for (a, b), iw in best.items():
            rows += [a, b]
            cols += [b, a]
            vals += [iw, iw]
        mat = csr_matrix((np.array(vals, dtype=np.float64), (rows, cols)), shape=(n, n))
        dist = shortest_path(mat, method="D", directed=False)
        if not np.all(np.isfinite(dist)):
            raise SpecError("graph is disconnected; shortest-path distance is not a metric")
        if dist.max() >= 2 ** 52:
            raise SpecError("weights too large for exact shortest paths")
        keys = np.rint(dist).astype(np.int64)
    edges_t = tuple(sorted((min(u, v), max(u, v), w) for u, v, w in clean))
    # simple-graph edge set (for tree detection): deduplicate pairs
    uniq = {}
    for u, v, w in edges_t:
        uniq.setdefault((u, v), w)
    return FiniteMetricSpace(
        keys=keys, denom=denom, squared=False, frontier=frozenset(int(f) for f in frontier),
        backend="graph", edges=tuple((u, v, w) for (u, v), w in uniq.items()),
        model_dim=model_dim, meta={"name": name, **(meta or {})},
    )


def _pairwise_keys(ic: np.ndarray, norm: str) -> np.ndarray:
    n = ic.shape[0]
    out = np.zeros((n, n), dtype=np.int64)
    for a in range(ic.shape[1]):
        diff = np.abs(ic[:, a][:, None] - ic[:, a][None, :])
        if norm == "l1":
            out += diff
        elif norm == "linf":
            np.maximum(out, diff, out=out)
        else:
            out += diff * diff
    return out


def from_points(points: Sequence[Sequence], norm: str = "l2", frontier: Iterable[int] = (), *,
                name: str = "cloud", model_dim=None, adjacency_scale=None,
                meta=None) -> FiniteMetricSpace:
    """Point cloud with an exact norm metric (coordinates are rationals)."""
    norm = norm.lower()
    if norm not in NORMS:
        raise SpecError(f"norm must be one of {NORMS}, got {norm!r}")
    rows = [[as_rational(c) for c in p] for p in points]
    if not rows:
        raise SpecError("a space needs at least one point")
    dim = len(rows[0])
    if any(len(r) != dim for r in rows):
        raise SpecError("all points need the same number of coordinates")
    scale = _lcm_denominators(c for r in rows for c in r)
    ints = [[int(c * scale) for c in r] for r in rows]
    big = max((abs(v) for r in ints for v in r), default=0)
    if (2 * big) ** 2 * max(dim, 1) >= 2 ** 62:
        raise SpecError("coordinates too large for exact int64 distances")
    ic = np.array(ints, dtype=np.int64).reshape(len(rows), dim)
    keys = _pairwise_keys(ic, norm)
    squared = norm == "l2"
    denom = scale * scale if squared else scale
    adj = Fraction(1, scale) if adjacency_scale is None else as_rational(adjacency_scale)
    if adjacency_scale is None and scale == 1:
        adj = Fraction(1)
    return FiniteMetricSpace(
        keys=keys, denom=denom, squared=squared,
        frontier=frozenset(int(f) for f in frontier), backend="cloud", norm=norm,
        coords=ic, coord_scale=scale, model_dim=model_dim, adjacency_scale=adj,
        meta={"name": name, **(meta or {})},
    )


# --------------------------------------------------------------------------
# operations

def distance(s: FiniteMetricSpace, x: int, y: int):
    """Exact distance (Fraction, or SqrtRational for irrational L2 values)."""
    return s.value(s.keys[s.check_id(x), s.check_id(y)])


def _member_array(s: FiniteMetricSpace, members) -> np.ndarray:
    if isinstance(members, SubspaceRef):
        members = members.members
    ids = sorted({s.check_id(m) for m in members})
    return np.array(ids, dtype=np.int64)


def distance_to_set_keys(s: FiniteMetricSpace, members) -> np.ndarray:
    """Key of d(x, A) for every point x."""
    ids = _member_array(s, members)
    if ids.size == 0:
        raise EmptySubspace("distance to an empty set")
    return s.keys[ids].min(axis=0)


def neighborhood(s: FiniteMetricSpace, A, R) -> frozenset:
    """Closed R-neighbourhood ``{x : d(x, A) <= R}``."""
    bound = s.key_bound(R)
    if bound < 0:
        raise SpecError("radius must be nonnegative")
    dk = distance_to_set_keys(s, A)
    return frozenset(int(i) for i in np.nonzero(dk <= bound)[0])


def ball(s: FiniteMetricSpace, x: int, radius) -> frozenset:
    """Closed ball ``B_radius(x)``."""
    x = s.check_id(x)
    bound = s.key_bound(radius)
    if bound < 0:
        raise SpecError("radius must be nonnegative")
    return frozenset(int(i) for i in np.nonzero(s.keys[x] <= bound)[0])


def components(s: FiniteMetricSpace, members, scale) -> list[frozenset]:
    """Connected components of ``members`` in the graph ``{d <= scale}``,
    ordered by smallest member id."""
    ids = _member_array(s, members)
    if ids.size == 0:
        return []
    bound = s.key_bound(scale)
    adj = s.keys[np.ix_(ids, ids)] <= bound
    ncomp, lab = connected_components(csr_matrix(adj), directed=False)
    groups: dict[int, list[int]] = {}
    for i, c in zip(ids.tolist(), lab.tolist()):
        groups.setdefault(c, []).append(i)
    comps = [frozenset(g) for g in groups.values()]
    comps.sort(key=min)
    return comps


# --------------------------------------------------------------------------
# generators

GENERATOR_KINDS = ("grid", "path", "cycle", "tree", "random-geometric")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    params: dict = field(default_factory=dict)
    frontier_rule: object = "window-boundary"  # "window-boundary" | "none" | list of ids
    selector: dict | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        if not isinstance(d, dict) or "kind" not in d:
            raise SpecError("generator spec needs a 'kind'")
        d = dict(d)
        kind = d.pop("kind")
        frontier = d.pop("frontier", "window-boundary")
        selector = d.pop("subset", None)
        return cls(kind=kind, params=d, frontier_rule=frontier, selector=selector)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, **self.params, "frontier": self.frontier_rule}
        if self.selector is not None:
            out["subset"] = self.selector
        return out


def _positive_int(params, key, minimum=1):
    if key not in params:
        raise SpecError(f"generator parameter '{key}' is required")
    v = params[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise SpecError(f"'{key}' must be an integer >= {minimum}, got {v!r}")
    return v


def _grid(params):
    n = _positive_int(params, "n")
    side = _positive_int(params, "side")
    norm = str(params.get("metric", "linf")).lower()
    if n * math.log2(max(side, 2)) > 15:
        raise SpecError("grid too large for a dense distance matrix")
    pts = list(itertools.product(range(side), repeat=n))
    boundary = [i for i, p in enumerate(pts) if any(c in (0, side - 1) for c in p)]
    s = from_points(pts, norm=norm, name=f"grid({n},{side},{norm})", model_dim=n,
                    meta={"kind": "grid", "n": n, "side": side, "metric": norm})
    return s, boundary


def _path(params):
    length = _positive_int(params, "length")
    s = from_graph(length, [(i, i + 1) for i in range(length - 1)], name=f"path({length})",
                   model_dim=1, meta={"kind": "path", "length": length})
    # a path is isometric to a 1-dimensional grid; coordinates enable box covers
    s = dataclasses.replace(s, coords=np.arange(length, dtype=np.int64)[:, None])
    return s, sorted({0, length - 1})


def _cycle(params):
    length = _positive_int(params, "length", 3)
    s = from_graph(length, [(i, (i + 1) % length) for i in range(length)],
                   name=f"cycle({length})", meta={"kind": "cycle", "length": length})
    return s, []


def _tree(params):
    arity = _positive_int(params, "arity")
    depth = _positive_int(params, "depth", 0)
    edges, level, nxt = [], [0], 1
    for _ in range(depth):
        new = []
        for p in level:
            for _ in range(arity):
                edges.append((p, nxt))
                new.append(nxt)
                nxt += 1
        level = new
        if nxt > 5000:
            raise SpecError("tree too large")
    s = from_graph(nxt, edges, name=f"tree({arity},{depth})",
                   meta={"kind": "tree", "arity": arity, "depth": depth})
    return s, level if depth > 0 else []


def _random_geometric(params):
    npts = _positive_int(params, "n_points")
    radius = as_rational(params.get("radius", Fraction(1, 5)))
    if radius <= 0:
        raise SpecError("radius must be positive")
    seed = params.get("seed", 0)
    resolution = 10_000
    rng = np.random.default_rng(seed)
    raw = rng.integers(0, resolution, size=(npts, 2))
    pts = [[Fraction(int(a), resolution), Fraction(int(b), resolution)] for a, b in raw]
    s = from_points(pts, norm="l2", name=f"random-geometric({npts},{radius},{seed})",
                    adjacency_scale=radius,
                    meta={"kind": "random-geometric", "n_points": npts, "seed": seed,
                          "radius": value_str(radius)})
    boundary = [i for i, (x, y) in enumerate(pts)
                if min(x, y, 1 - x, 1 - y) <= radius]
    return s, boundary


_GENERATORS = {"grid": _grid, "path": _path, "cycle": _cycle, "tree": _tree,
               "random-geometric": _random_geometric}


def _middle_of(axis_values):
    lo, hi = min(axis_values), max(axis_values)
    return (lo + hi) // 2


def select_subset(s: FiniteMetricSpace, selector: dict) -> frozenset:
    """Resolve a subset selector (slice / column / ball / list) to point ids."""
    if not isinstance(selector, dict) or "type" not in selector:
        raise SpecError("subset selector needs a 'type'")
    kind = selector["type"]
    if kind in ("slice", "column"):
        if s.coords is None:
            raise SpecError(f"'{kind}' selector needs a point cloud / grid")
        axis = 0 if kind == "column" else int(selector.get("axis", 0))
        if not 0 <= axis < s.coords.shape[1]:
            raise SpecError(f"axis {axis} out of range")
        col = s.coords[:, axis]
        value = selector.get("value", "middle")
        v = _middle_of(col.tolist()) if value == "middle" else as_rational(value) * s.coord_scale
        ids = frozenset(int(i) for i in np.nonzero(col == v)[0])
    elif kind == "ball":
        center = selector.get("center", "center")
        if center == "center":
            if s.coords is None:
                raise SpecError("'center' needs coordinates")
            mid = [_middle_of(s.coords[:, a].tolist()) for a in range(s.coords.shape[1])]
            hit = np.nonzero((s.coords == np.array(mid)).all(axis=1))[0]
            if hit.size == 0:
                raise SpecError("no point at the window center")
            center = int(hit[0])
        elif isinstance(center, (list, tuple)):
            want = np.array([int(as_rational(c) * s.coord_scale) for c in center])
            hit = np.nonzero((s.coords == want).all(axis=1))[0]
            if hit.size == 0:
                raise SpecError(f"no point at coordinates {center}")
            center = int(hit[0])
        ids = ball(s, int(center), as_rational(selector.get("radius", 0)))
    elif kind == "list":
        ids = frozenset(s.check_id(int(i)) for i in selector.get("ids", []))
    else:
        raise SpecError(f"unknown selector type {kind!r}")
    if not ids:
        raise SpecError("subset selector produced an empty subset")
    return ids


def generate(spec: GeneratorSpec | dict):
    """Build ``(space, subset-or-None)`` from a generator spec."""
    if isinstance(spec, dict):
        spec = GeneratorSpec.from_dict(spec)
    if spec.kind not in _GENERATORS:
        raise SpecError(f"unknown generator kind {spec.kind!r}; expected one of {GENERATOR_KINDS}")
    s, boundary = _GENERATORS[spec.kind](spec.params)
    rule = spec.frontier_rule
    if rule in (None, "none"):
        frontier = []
    elif rule == "window-boundary":
        frontier = boundary
    elif isinstance(rule, (list, tuple)):
        frontier = [s.check_id(int(i)) for i in rule]
    else:
        raise SpecError(f"unknown frontier rule {rule!r}")
    s = s.with_frontier(frontier)
    subset = None
    if spec.selector is not None:
        subset = SubspaceRef(s, select_subset(s, spec.selector))
    return s, subset


# --------------------------------------------------------------------------
# ingestion

def read_edge_list(path, frontier=()) -> FiniteMetricSpace:
    """Text edge list, one ``u v [w]`` per line; labels are remapped densely."""
    raw = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise SpecError(f"{path}:{lineno}: expected 'u v [w]'")
            w = as_rational(parts[2]) if len(parts) == 3 else Fraction(1)
            raw.append((parts[0], parts[1], w))
    labels = sorted({u for u, _, _ in raw} | {v for _, v, _ in raw}, key=_label_key)
    pos = {lab: i for i, lab in enumerate(labels)}
    s = from_graph(len(labels), [(pos[u], pos[v], w) for u, v, w in raw], name=str(path))
    fr = []
    for f in frontier:
        key = str(f)
        if key not in pos:
            raise SpecError(f"frontier label {f!r} not in the edge list")
        fr.append(pos[key])
    s = s.with_frontier(fr)
    object.__setattr__(s, "labels", tuple(labels))
    return s


def _label_key(lab: str):
    return (0, int(lab), "") if lab.lstrip("-").isdigit() else (1, 0, lab)


def read_point_cloud(path, norm="l2", frontier=(), adjacency_scale=None) -> FiniteMetricSpace:
    """CSV with one row per point and one column per coordinate."""
    import csv
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            rec = [c for c in rec if c.strip()]
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            rows.append([as_rational(c) for c in rec])
    s = from_points(rows, norm=norm, name=str(path), adjacency_scale=adjacency_scale)
    return s.with_frontier(frontier)


def write_space(s: FiniteMetricSpace, path) -> None:
    """Dump as an edge list (graphs) or coordinate CSV (clouds)."""
    with open(path, "w") as fh:
        if s.backend == "graph":
            for u, v, w in s.edges:
                fh.write(f"{u} {v} {value_str(w)}\n")
        else:
            for row in s.coords.tolist():
                fh.write(",".join(value_str(Fraction(c, s.coord_scale)) for c in row) + "\n")
