"""Indexed covers, Lebesgue / multiplicity estimates and anti-Cech systems."""
from __future__ import annotations

import functools
import io
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NotAntiCech, NotARefinement, SpecError, UnsupportedSpace
from .space import FiniteMetricSpace, SqrtRational, as_rational, value_str


def _bits_of_rows(inc: np.ndarray) -> list[int]:
    """Each boolean row as a Python int bitset (bit j = column j)."""
    if inc.shape[1] == 0:
        return [0] * inc.shape[0]
    packed = np.packbits(inc, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


@dataclass(frozen=True, eq=False)
class IndexedCover:
    space: FiniteMetricSpace
    incidence: np.ndarray  # (members, points) bool
    diameter_bound: object  # Fraction | SqrtRational
    scale: Fraction
    kind: str
    helly: bool = False
    boxes: tuple | None = None  # (lo, hi) int arrays, absolute coordinates
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        inc = np.ascontiguousarray(self.incidence, dtype=bool)
        inc.setflags(write=False)
        object.__setattr__(self, "incidence", inc)
        if inc.shape[1] != self.space.n:
            raise SpecError("incidence matrix does not match the space")
        if inc.shape[0] == 0 or not inc.any(axis=1).all():
            raise SpecError("cover members must be nonempty")
        if not inc.any(axis=0).all():
            raise SpecError("family does not cover every point")

    def __len__(self):
        return self.incidence.shape[0]

    @property
    def size(self) -> int:
        return self.incidence.shape[0]

    def member(self, i: int) -> frozenset:
        return frozenset(int(x) for x in np.nonzero(self.incidence[i])[0])

    @functools.cached_property
    def members(self) -> tuple:
        return tuple(self.member(i) for i in range(self.size))

    @functools.cached_property
    def member_bits(self) -> list[int]:
        return _bits_of_rows(self.incidence)

    @functools.cached_property
    def multiplicity(self) -> int:
        return int(self.incidence.sum(axis=0).max())

    @functools.cached_property
    def _lebesgue_key(self):
        return lebesgue_key(self)

    @property
    def lebesgue_infinite(self) -> bool:
        return self._lebesgue_key is None

    @property
    def lebesgue_lower_bound(self):
        """Point-formula Lebesgue bound; infinity is reported as window diameter + 1."""
        key = self._lebesgue_key
        if key is None:
            d = self.space.window_diameter
            if isinstance(d, SqrtRational):
                # rational stand-in strictly above an irrational diameter + 1
                return Fraction(math.isqrt(math.ceil(d.square)) + 2)
            return Fraction(d) + 1
        return self.space.value(key)

    def lebesgue_exceeds(self, r) -> bool:
        """Point-formula ``L > r`` (exact)."""
        return self.space.key_exceeds(self._lebesgue_key, r)

    @functools.cached_property
    def _certified_key(self):
        point = self._lebesgue_key
        if point is None or self.boxes is None:
            return point
        box = box_lebesgue_key(self)
        return None if box is None else max(point, box)

    @property
    def certified_lebesgue(self):
        """Best certified lower bound: point formula, or the exact sliding-box
        value for lattice-box covers, whichever is larger."""
        key = self._certified_key
        return self.lebesgue_lower_bound if key is None else self.space.value(key)

    def certified_exceeds(self, r) -> bool:
        return self.space.key_exceeds(self._certified_key, r)

    @functools.cached_property
    def frontier_members(self) -> frozenset:
        fr = sorted(self.space.frontier)
        if not fr:
            return frozenset()
        return frozenset(int(i) for i in np.nonzero(self.incidence[:, fr].any(axis=1))[0])

    @property
    def saturated(self) -> bool:
        """The members meeting a nonempty frontier already cover the window.

        For a Helly cover the frontier subcomplex is then homotopy
        equivalent to the whole window, so relative homology vanishes for
        reasons of truncation alone.
        """
        fm = sorted(self.frontier_members)
        return bool(fm) and bool(self.incidence[fm].any(axis=0).all())

    @functools.cached_property
    def max_member_diameter_key(self) -> int:
        k = self.space.keys
        return max(int(k[np.ix_(r, r)].max()) for r in
                   (np.nonzero(row)[0] for row in self.incidence))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("index,members\n")
        for i in range(self.size):
            ids = " ".join(str(int(x)) for x in np.nonzero(self.incidence[i])[0])
            buf.write(f"{i},{ids}\n")
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "scale": value_str(self.scale),
            "members": self.size,
            "diameter_bound": value_str(self.diameter_bound),
            "multiplicity": self.multiplicity,
            "lebesgue_lower_bound": value_str(self.lebesgue_lower_bound),
            "lebesgue_infinite": self.lebesgue_infinite,
            "certified_lebesgue": value_str(self.certified_lebesgue),
            "helly": self.helly,
            "frontier_members": len(self.frontier_members),
        }


def cover_from_sets(s: FiniteMetricSpace, sets, diameter_bound=None, kind="explicit") -> IndexedCover:
    """Indexed cover from an explicit list of point sets."""
    sets = [sorted({s.check_id(x) for x in m}) for m in sets]
    inc = np.zeros((len(sets), s.n), dtype=bool)
    for i, m in enumerate(sets):
        inc[i, m] = True
    if diameter_bound is None:
        diam = max((int(s.keys[np.ix_(m, m)].max()) for m in sets if m), default=0)
        diameter_bound = s.value(diam)
    diameter_bound = diameter_bound if isinstance(diameter_bound, SqrtRational) else as_rational(diameter_bound)
    return IndexedCover(space=s, incidence=inc, diameter_bound=diameter_bound,
                        scale=Fraction(0), kind=kind)


# --------------------------------------------------------------------------
# Lebesgue point formula

def lebesgue_key(c: IndexedCover):
    """Key of ``min_x max_{U ni x} d(x, X - U)``; ``None`` means infinity."""
    s = c.space
    best = np.full(s.n, -1, dtype=np.int64)
    inf = np.zeros(s.n, dtype=bool)
    shape = s.box_shape
    use_boxes = c.boxes is not None and shape is not None
    if use_boxes:
        wlo = np.array(shape[0])
        whi = wlo + np.array(shape[1]) - 1
        coords = s.coords
    for i in range(c.size):
        pts = np.nonzero(c.incidence[i])[0]
        if use_boxes:
            lo, hi = c.boxes[0][i], c.boxes[1][i]
            x = coords[pts]
            steps = []
            for a in range(coords.shape[1]):
                if hi[a] < whi[a]:
                    steps.append(hi[a] - x[:, a] + 1)
                if lo[a] > wlo[a]:
                    steps.append(x[:, a] - lo[a] + 1)
            if not steps:
                inf[pts] = True
                continue
            t = np.min(np.stack(steps), axis=0)
            d = t * t if s.squared else t
        else:
            comp = np.nonzero(~c.incidence[i])[0]
            if comp.size == 0:
                inf[pts] = True
                continue
            d = s.keys[np.ix_(pts, comp)].min(axis=1)
        np.maximum.at(best, pts, d)
    if inf.all():
        return None
    return int(best[~inf].min())


def _all_boxes_fit(placements: np.ndarray, width: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> bool:
    """Every box ``[p, p + width - 1]`` lies inside at least one member box."""
    for start in range(0, placements.shape[0], 4096):
        p = placements[start:start + 4096]
        ok = np.ones((p.shape[0], lo.shape[0]), dtype=bool)
        for a in range(p.shape[1]):
            ok &= (lo[None, :, a] <= p[:, None, a]) & (p[:, None, a] + width[a] - 1 <= hi[None, :, a])
        if not ok.any(axis=1).all():
            return False
    return True


def box_lebesgue_key(c: IndexedCover):
    """Exact Lebesgue number of a lattice-box cover of an integer box.

    A set of L-infinity diameter <= r has a bounding box of side <= r+1, and
    lies in a box member iff its bounding box does; so the largest r for
    which every (r+1)-box of the window fits in a member is exact in
    L-infinity and a lower bound for L1 and L2 (their diameters dominate).
    ``None`` means every subset fits (some member is the whole window).
    """
    s = c.space
    shape = s.box_shape
    if c.boxes is None or shape is None:
        raise SpecError("sliding-box Lebesgue needs a lattice-box cover of a grid window")
    wlo = np.array(shape[0])
    sides = np.array(shape[1])
    lo = c.boxes[0] - wlo
    hi = c.boxes[1] - wlo
    if ((lo <= 0) & (hi >= sides - 1)).all(axis=1).any():
        return None

    def fits(r: int) -> bool:
        width = np.minimum(sides, r + 1)
        ranges = [np.arange(int(sz - w) + 1) for sz, w in zip(sides, width)]
        grid = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, len(sides))
        return _all_boxes_fit(grid, width, lo, hi)

    r = 0
    if not fits(0):
        raise SpecError("not a cover")
    while fits(r + 1):
        r += 1
        if r + 1 >= sides.max():
            break
    key = r * r if s.squared else r
    return key * s.denom


# --------------------------------------------------------------------------
# constructors

def ball_cover(s: FiniteMetricSpace, lam) -> IndexedCover:
    """Members ``B_lam(x)`` indexed by centre id; diameter bound ``2 lam``."""
    lam = as_rational(lam)
    if lam <= 0:
        raise SpecError("ball radius must be positive")
    inc = s.keys <= s.key_bound(lam)
    boxes = None
    shape = s.box_shape
    if shape is not None and (s.norm == "linf" or len(shape[2]) <= 1):
        # lattice balls are boxes; integer radius part per axis
        wlo = np.array(shape[0])
        whi = wlo + np.array(shape[1]) - 1
        r = math.floor(lam)
        boxes = (np.maximum(s.coords - r, wlo), np.minimum(s.coords + r, whi))
    return IndexedCover(space=s, incidence=inc, diameter_bound=2 * lam, scale=lam,
                        kind="ball", helly=s.balls_are_helly, boxes=boxes,
                        params={"lambda": value_str(lam)})


def brick_geometry(n_axes: int, k: int):
    """(side, margin) of the shifted-brick pattern at Lebesgue parameter k."""
    return (2 ** (n_axes - 1)) * (2 * k - 1), k - 1


def _brick_index(y: np.ndarray, side: int) -> np.ndarray:
    """Brick index tuple of each relative point (columns = varying axes).

    The last axis is cut into slabs of width ``side``; each earlier axis is
    cut with an offset depending on the indices of all later axes, halving
    per level, so that corners of neighbouring layers never line up.
    """
    n = y.shape[1]
    t = np.zeros_like(y)
    t[:, n - 1] = np.floor_divide(y[:, n - 1], side)
    for i in range(n - 2, -1, -1):
        shift = np.zeros(y.shape[0], dtype=np.int64)
        for j in range(i + 1, n):
            shift += t[:, j] * (side >> (j - i))
        shift %= side
        t[:, i] = np.floor_divide(y[:, i] - shift, side)
    return t


def _brick_extent(idx: tuple, side: int):
    n = len(idx)
    lo = [0] * n
    for i in range(n - 1, -1, -1):
        shift = sum(idx[j] * (side >> (j - i)) for j in range(i + 1, n)) % side
        lo[i] = shift + idx[i] * side
    return lo, [v + side - 1 for v in lo]


def brick_cover(s: FiniteMetricSpace, scale: int) -> IndexedCover:
    """Shifted-brick cover of a box-shaped integer window.

    ``scale`` is the Lebesgue parameter k: bricks of side
    ``2^(n-1) (2k-1)`` thickened by ``k-1`` in every direction; the point
    formula then gives at least k and multiplicity is at most n+1.
    """
    if isinstance(scale, bool) or not isinstance(scale, (int, np.integer)) or scale < 1:
        raise SpecError("brick scale must be an integer >= 1")
    shape = s.box_shape
    if shape is None:
        raise UnsupportedSpace("brick covers need a full integer box (grid window)")
    origin, sides, varying = shape
    n_axes = max(len(varying), 1)
    side, margin = brick_geometry(n_axes, int(scale))
    wlo = np.array(origin)
    whi = wlo + np.array(sides) - 1
    fits = all(sides[a] <= side for a in varying)
    if fits or not varying:
        inc = np.ones((1, s.n), dtype=bool)
        boxes = (wlo[None, :].copy(), whi[None, :].copy())
    else:
        # anchor the pattern so that the central brick is centred in the window
        anchor = np.array([wlo[v] + (sides[v] - 1) // 2 - (side - 1) // 2 for v in varying])
        rel = s.coords[:, list(varying)] - anchor
        idx = _brick_index(rel, side)
        keys = sorted({tuple(r) for r in idx.tolist()})
        los, his = [], []
        for key in keys:
            blo, bhi = _brick_extent(key, side)
            lo, hi = wlo.copy(), whi.copy()
            for a, v in enumerate(varying):
                lo[v] = max(wlo[v], anchor[a] + blo[a] - margin)
                hi[v] = min(whi[v], anchor[a] + bhi[a] + margin)
            los.append(lo)
            his.append(hi)
        lo_arr, hi_arr = np.array(los), np.array(his)
        c = s.coords
        inc = np.ones((len(keys), s.n), dtype=bool)
        for a in range(c.shape[1]):
            inc &= (c[:, a][None, :] >= lo_arr[:, a][:, None]) & (c[:, a][None, :] <= hi_arr[:, a][:, None])
        boxes = (lo_arr, hi_arr)
    # exact diameter bound of the largest box in the ambient norm
    ext = boxes[1] - boxes[0]
    if s.norm in ("linf", None):  # None: path graph, one axis
        dkey = int(ext.max())
    elif s.norm == "l1":
        dkey = int(ext.sum(axis=1).max())
    else:
        dkey = int((ext * ext).sum(axis=1).max())
    return IndexedCover(space=s, incidence=inc, diameter_bound=s.value(dkey),
                        scale=Fraction(int(scale)), kind="brick", helly=True, boxes=boxes,
                        params={"k": int(scale), "side": side, "margin": margin,
                                "axes": n_axes})


# --------------------------------------------------------------------------
# refinement projections

@dataclass(frozen=True)
class RefinementProjection:
    source: int
    target: int
    phi: tuple  # source index -> target index

    def __len__(self):
        return len(self.phi)


def containment_matrix(ci: IndexedCover, cj: IndexedCover) -> np.ndarray:
    """``C[u, v]`` iff member u of ci is contained in member v of cj."""
    a = ci.incidence.astype(np.float32)
    b = cj.incidence.astype(np.float32)
    inter = a @ b.T
    sizes = ci.incidence.sum(axis=1)
    return inter == sizes[:, None]


def refinement_projection(ci: IndexedCover, cj: IndexedCover, *, source=0, target=1,
                          tie: str = "min", seed=None) -> RefinementProjection:
    """Map each source member into a containing target member.

    ``tie`` chooses among containing members: "min" (canonical), "max", or
    "random" with ``seed``.  Non-canonical choices exist to exercise the
    contiguity property.
    """
    if ci.space is not cj.space and ci.space.n != cj.space.n:
        raise SpecError("covers live on different spaces")
    cont = containment_matrix(ci, cj)
    rng = np.random.default_rng(seed) if tie == "random" else None
    phi = []
    for u in range(ci.size):
        cand = np.nonzero(cont[u])[0]
        if cand.size == 0:
            raise NotARefinement(f"member {u} is contained in no target member", member=u)
        if tie == "min":
            phi.append(int(cand[0]))
        elif tie == "max":
            phi.append(int(cand[-1]))
        elif tie == "random":
            phi.append(int(rng.choice(cand)))
        else:
            raise SpecError(f"unknown tie rule {tie!r}")
    return RefinementProjection(source=source, target=target, phi=tuple(phi))


# --------------------------------------------------------------------------
# anti-Cech systems

_STRATEGY_RE = re.compile(r"^\s*(ball|brick)-doubling\s*(?:\(\s*([^)]*)\s*\))?\s*$")


@dataclass(frozen=True)
class Strategy:
    kind: str  # "ball" | "brick"
    start: Fraction

    @classmethod
    def parse(cls, spec) -> "Strategy":
        if isinstance(spec, Strategy):
            return spec
        if isinstance(spec, dict):
            kind = str(spec.get("kind", "")).replace("-doubling", "")
            start = spec.get("start", 1)
        else:
            m = _STRATEGY_RE.match(str(spec))
            if not m:
                raise SpecError(f"unknown strategy {spec!r}; use ball-doubling(l0) or brick-doubling(k0)")
            kind, start = m.group(1), m.group(2) or "1"
        if kind not in ("ball", "brick"):
            raise SpecError(f"unknown strategy kind {kind!r}")
        start = as_rational(start)
        if start <= 0:
            raise SpecError("strategy start scale must be positive")
        if kind == "brick" and start.denominator != 1:
            raise SpecError("brick scale must be an integer")
        return cls(kind=kind, start=start)

    def __str__(self):
        return f"{self.kind}-doubling({value_str(self.start)})"


@dataclass(frozen=True, eq=False)
class AntiCechSystem:
    space: FiniteMetricSpace
    strategy: Strategy
    stages: tuple  # IndexedCover
    certified: tuple  # bool per consecutive pair
    warnings: tuple = ()
    rejected: tuple = ()  # (scale, reason) of skipped candidates

    def __len__(self):
        return len(self.stages)

    @property
    def scales(self) -> tuple:
        return tuple(c.scale for c in self.stages)

    @property
    def diameter_bounds(self) -> tuple:
        return tuple(c.diameter_bound for c in self.stages)

    def projection(self, i: int, j: int, tie="min", seed=None) -> RefinementProjection:
        return refinement_projection(self.stages[i], self.stages[j], source=i, target=j,
                                     tie=tie, seed=seed)

    def manifest(self) -> dict:
        return {
            "strategy": str(self.strategy),
            "stages": [{"stage": i + 1, **c.summary()} for i, c in enumerate(self.stages)],
            "certified": list(self.certified),
            "warnings": list(self.warnings),
            "rejected_candidates": [{"scale": value_str(a), "reason": b} for a, b in self.rejected],
        }


def verify_pair(prev: IndexedCover, nxt: IndexedCover) -> bool:
    """Anti-Cech condition: certified Lebesgue bound of ``nxt`` exceeds R of ``prev``."""
    return nxt.certified_exceeds(prev.diameter_bound)


def _exceeds_cap(s: FiniteMetricSpace, scale: Fraction) -> bool:
    # scale > diameter / 4  <=>  diameter < 4 scale; a one-point window has
    # no truncation artefacts, so it is never capped
    if s.window_diameter_key == 0:
        return False
    bound = 4 * Fraction(scale)
    target = bound * bound if s.squared else bound
    return Fraction(s.window_diameter_key, s.denom) < target


def build_anti_cech(s: FiniteMetricSpace, strategy, max_stages: int, *,
                    allow_window_cap_override: bool = False,
                    stop_on_saturation: bool = True) -> AntiCechSystem:
    """Doubling system of covers, each consecutive pair certified.

    Ball stages use scales ``l0 * 2^(i-1)``.  Brick stages take the smallest
    parameter ``k' >= 2k`` whose cover is certified against the previous
    stage.  The system stops with a warning when the next scale exceeds
    ``window_diameter / 4`` (unless overridden) or when the next stage is
    saturated by the frontier.
    """
    strategy = Strategy.parse(strategy)
    if isinstance(max_stages, bool) or not isinstance(max_stages, int) or max_stages < 1:
        raise SpecError("max_stages must be a positive integer")
    if strategy.kind == "brick" and s.box_shape is None:
        raise UnsupportedSpace("brick-doubling needs a grid window")
    stages: list[IndexedCover] = []
    warnings: list[str] = []
    rejected: list = []

    def capped(scale) -> bool:
        if _exceeds_cap(s, scale) and not allow_window_cap_override:
            warnings.append(f"window-cap: stopped at scale {value_str(scale)} "
                            f"(> window diameter {value_str(s.window_diameter)} / 4)")
            return True
        return False

    def saturated(cover) -> bool:
        if stop_on_saturation and stages and cover.saturated:
            warnings.append(f"window-saturated: stage at scale {value_str(cover.scale)} dropped "
                            "(frontier members cover the window)")
            return True
        return False

    def build(scale):
        return ball_cover(s, scale) if strategy.kind == "ball" else brick_cover(s, int(scale))

    if not capped(strategy.start):
        stages.append(build(strategy.start))
    while stages and len(stages) < max_stages:
        prev = stages[-1]
        cand = 2 * prev.scale
        chosen = None
        while True:
            if capped(cand):
                break
            cover = build(cand)
            if saturated(cover):
                break
            if verify_pair(prev, cover):
                chosen = cover
                break
            if strategy.kind == "ball":
                raise NotAntiCech(
                    f"stage {len(stages) + 1} (scale {value_str(cand)}): certified Lebesgue bound "
                    f"{value_str(cover.certified_lebesgue)} does not exceed R = "
                    f"{value_str(prev.diameter_bound)}", pair=(len(stages), len(stages) + 1))
            rejected.append((cand, "not certified against previous stage"))
            cand += 1
        if chosen is None:
            break
        stages.append(chosen)
    return AntiCechSystem(space=s, strategy=strategy, stages=tuple(stages),
                          certified=tuple(True for _ in stages[1:]), warnings=tuple(warnings),
                          rejected=tuple(rejected))


def check_system(system: AntiCechSystem) -> list[tuple]:
    """Re-verify every consecutive pair; returns the violating pairs."""
    bad = []
    for i in range(len(system) - 1):
        if not verify_pair(system.stages[i], system.stages[i + 1]):
            bad.append((i + 1, i + 2))
    return bad
