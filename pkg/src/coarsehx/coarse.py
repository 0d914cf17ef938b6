"""Finite-scale coarse separation, the CX^lambda oracle, asdim bounds and the
separation-vs-homology scenario on grid windows."""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .complex import SimplicialPair, nerve, relative_chain_complex
from .cover import Strategy, ball_cover, build_anti_cech
from .errors import (EmptyComplement, EmptySubspace, OracleBudget, SpecError,
                     UnsupportedScenario, UnsupportedSpace)
from .homology import ChainComplex, SparseMatrix, homology
from .limit import DirectSystem, limit_report
from .pipeline import build_homology_system
from .space import (FiniteMetricSpace, SubspaceRef, as_rational, components,
                    distance_to_set_keys, neighborhood, value_str)

FINITE_SCALE_NOTE = ("finite-scale approximation: separation is tested on a finite "
                     "(r, d) grid inside one window, not asymptotically")
DEFAULT_ORACLE_BUDGET = 12


# --------------------------------------------------------------------------
# separation

_AFFINE_RE = re.compile(r"(\d+(?:/\d+)?)?\*?r(?:\+(\d+(?:/\d+)?))?")
_NUMBER_RE = re.compile(r"\d+(?:/\d+)?")


@dataclass(frozen=True)
class DepthRule:
    """Depth threshold ``d = a r + b``."""
    a: Fraction = Fraction(2)
    b: Fraction = Fraction(4)

    @classmethod
    def parse(cls, rule) -> "DepthRule":
        if rule is None:
            return cls()
        if isinstance(rule, DepthRule):
            return rule
        if isinstance(rule, (int, float, Fraction)) and not isinstance(rule, bool):
            return cls(Fraction(0), as_rational(rule))
        if isinstance(rule, dict):
            return cls(as_rational(rule.get("a", 0)), as_rational(rule.get("b", 0)))
        text = str(rule).replace(" ", "")
        if _NUMBER_RE.fullmatch(text):
            return cls(Fraction(0), as_rational(text))
        m = _AFFINE_RE.fullmatch(text)
        if not m:
            raise SpecError(f"depth rule {rule!r} is not of the form 'a*r+b'")
        return cls(as_rational(m.group(1) or 1), as_rational(m.group(2) or 0))

    def __call__(self, r) -> Fraction:
        return self.a * as_rational(r) + self.b

    def __str__(self):
        if not self.a:
            return value_str(self.b)
        return f"{value_str(self.a)}*r+{value_str(self.b)}"


def _at_least(s: FiniteMetricSpace, key, d: Fraction) -> bool:
    """``value(key) >= d`` exactly."""
    if d <= 0:
        return True
    q = Fraction(int(key), s.denom)
    return q >= (d * d if s.squared else d)


@dataclass
class SeparationCell:
    r: Fraction
    d: Fraction
    n_components: int
    n_deep: int
    components: list  # sorted id lists of X - N_r(A)
    deep: list  # indices into components
    witnesses: list  # one point id per deep component

    @property
    def separated(self) -> bool:
        return self.n_deep >= 2

    def to_dict(self, labels=None) -> dict:
        lab = (lambda x: x) if labels is None else (lambda x: labels[x])
        return {"r": value_str(self.r), "d": value_str(self.d),
                "components": self.n_components, "deep_components": self.n_deep,
                "component_sizes": [len(c) for c in self.components],
                "witnesses": [lab(w) for w in self.witnesses],
                "verdict": "separated" if self.separated else "not separated"}


@dataclass
class SeparationReport:
    subset: list
    rule: str
    cells: list
    adjacency_scale: Fraction
    note: str = FINITE_SCALE_NOTE

    @property
    def separated(self) -> bool:
        return bool(self.cells) and all(c.separated for c in self.cells)

    @property
    def verdict(self) -> str:
        return "separated at tested scales" if self.separated else "not separated"

    def to_dict(self) -> dict:
        return {"subset": list(self.subset), "depth_rule": self.rule,
                "adjacency_scale": value_str(self.adjacency_scale),
                "cells": [c.to_dict() for c in self.cells],
                "verdict": self.verdict, "note": self.note}


def _subset_ids(s: FiniteMetricSpace, A) -> list[int]:
    if isinstance(A, SubspaceRef):
        A = A.members
    return sorted({s.check_id(a) for a in A})


def check_separation(s: FiniteMetricSpace, A, r_values: Sequence = (1, 2, 3),
                     d_rule=None) -> SeparationReport:
    """Count the d-deep components of ``X - N_r(A)`` for each r.

    Components are taken in the graph ``{d <= adjacency scale}`` (1 for
    graphs and grids, the generator radius for random clouds).  A component
    is d-deep iff one of its points is at distance >= d from A; its witness
    is the farthest such point (smallest id on ties).
    """
    ids = _subset_ids(s, A)
    if not ids:
        raise EmptySubspace("the subset A is empty")
    if len(ids) == s.n:
        raise EmptyComplement("A is the whole window; X - A is empty")
    rs = [as_rational(r) for r in r_values]
    if not rs or any(r < 0 for r in rs) or rs != sorted(rs):
        raise SpecError("r_values must be a nonempty ascending list of nonnegative values")
    rule = DepthRule.parse(d_rule)
    dkeys = distance_to_set_keys(s, ids)
    cells = []
    for r in rs:
        d = rule(r)
        near = neighborhood(s, ids, r)
        rest = [x for x in range(s.n) if x not in near]
        comps = components(s, rest, s.adjacency_scale)
        deep, witnesses = [], []
        for i, comp in enumerate(comps):
            members = sorted(comp)
            far = max(members, key=lambda x: (int(dkeys[x]), -x))
            if _at_least(s, dkeys[far], d):
                deep.append(i)
                witnesses.append(far)
        cells.append(SeparationCell(r, d, len(comps), len(deep),
                                    [sorted(c) for c in comps], deep, witnesses))
    return SeparationReport(ids, str(rule), cells, s.adjacency_scale)


def verify_separation_report(s: FiniteMetricSpace, rep: SeparationReport) -> list[str]:
    """Recheck witness depths and component disjointness; returns problems."""
    problems = []
    dkeys = distance_to_set_keys(s, rep.subset)
    for c in rep.cells:
        seen: set = set()
        for comp in c.components:
            if seen & set(comp):
                problems.append(f"r={value_str(c.r)}: components overlap")
            seen |= set(comp)
        for i, w in zip(c.deep, c.witnesses):
            if w not in c.components[i]:
                problems.append(f"r={value_str(c.r)}: witness {w} outside its component")
            if not _at_least(s, dkeys[w], c.d):
                problems.append(f"r={value_str(c.r)}: witness {w} closer than d={value_str(c.d)}")
    return problems


# --------------------------------------------------------------------------
# CX^lambda oracle

@dataclass
class OracleComplex:
    scale: Fraction
    dim_cap: int
    npoints: int
    simplices: dict  # k -> sorted list of sorted point tuples
    witnesses: dict  # simplex -> smallest common witness y

    def count(self, k: int) -> int:
        return len(self.simplices.get(k, ()))

    def check(self, space: FiniteMetricSpace) -> None:
        """Face closure and the witness condition, rechecked from scratch."""
        have = {s for v in self.simplices.values() for s in v}
        for s in have:
            if len(s) > 1:
                for i in range(len(s)):
                    if s[:i] + s[i + 1:] not in have:
                        raise SpecError(f"oracle complex misses a face of {s}")
        bound = space.key_bound(self.scale)
        for sub, y in self.witnesses.items():
            if any(space.keys[y, x] > bound for x in sub):
                raise SpecError(f"witness {y} fails for {sub}")

    def chain_complex(self) -> ChainComplex:
        """Absolute simplicial chain complex, independent of the nerve code."""
        idx = {k: {s: i for i, s in enumerate(v)} for k, v in self.simplices.items()}
        d = {}
        for k in range(1, self.dim_cap + 1):
            if k not in self.simplices:
                break
            rows = idx[k - 1]
            cols = [{rows[s[:i] + s[i + 1:]]: (-1) ** i for i in range(k + 1)}
                    for s in self.simplices[k]]
            d[k] = SparseMatrix(len(rows), len(cols), cols)
        return ChainComplex(dims={k: len(v) for k, v in self.simplices.items()}, d=d,
                            labels=dict(self.simplices))


def cx_lambda_complex(s: FiniteMetricSpace, lam, dim_cap: int = 2,
                      budget: int = DEFAULT_ORACLE_BUDGET) -> OracleComplex:
    """Every point subset of size <= dim_cap + 1 admitting a common witness
    ``y`` with ``d(y, x_i) <= lam``, found by exhaustive enumeration."""
    lam = as_rational(lam)
    if lam <= 0:
        raise SpecError("lambda must be positive")
    if s.n > budget:
        raise OracleBudget(f"oracle limited to {budget} points, space has {s.n}")
    if dim_cap < 0:
        raise SpecError("dim_cap must be >= 0")
    close = s.keys <= s.key_bound(lam)  # close[x, y]: d(x, y) <= lam
    simplices, witnesses = {}, {}
    for k in range(dim_cap + 1):
        level = []
        for sub in itertools.combinations(range(s.n), k + 1):
            common = np.logical_and.reduce(close[list(sub)], axis=0)
            hit = np.flatnonzero(common)
            if hit.size:
                level.append(sub)
                witnesses[sub] = int(hit[0])
        if not level:
            break
        simplices[k] = level
    return OracleComplex(lam, dim_cap, s.n, simplices, witnesses)


@dataclass
class OracleComparison:
    scale: Fraction
    degrees: tuple
    equal: dict  # degree -> bool
    oracle: dict  # degree -> (rank, torsion)
    nerve: dict
    identical_simplices: bool

    @property
    def all_equal(self) -> bool:
        return all(self.equal.values())

    def to_dict(self) -> dict:
        return {"lambda": value_str(self.scale),
                "degrees": {str(k): {"equal": self.equal[k],
                                     "oracle": {"rank": self.oracle[k][0], "torsion": self.oracle[k][1]},
                                     "nerve": {"rank": self.nerve[k][0], "torsion": self.nerve[k][1]}}
                            for k in self.degrees},
                "identical_simplices": self.identical_simplices}


def oracle_compare(s: FiniteMetricSpace, lam, degrees=(0, 1, 2),
                   budget: int = DEFAULT_ORACLE_BUDGET) -> OracleComparison:
    """Integer homology of CX^lambda versus the nerve of the lambda-ball cover."""
    degrees = tuple(sorted({int(k) for k in degrees}))
    if not degrees or degrees[0] < 0:
        raise SpecError("degrees must be nonempty and >= 0")
    cap = degrees[-1] + 1
    ox = cx_lambda_complex(s, lam, cap, budget)
    ox.check(s)
    cov = ball_cover(s, lam)
    nv = nerve(cov, cap)
    ncc = relative_chain_complex(SimplicialPair(nv, frozenset()), range(cap + 1))
    occ = ox.chain_complex()
    eq, o_out, n_out = {}, {}, {}
    for k in degrees:
        ho, hn = homology(occ, k, "Z"), homology(ncc, k, "Z")
        o_out[k] = (ho.rank, list(ho.torsion))
        n_out[k] = (hn.rank, list(hn.torsion))
        eq[k] = o_out[k] == n_out[k]
    # members are indexed by centre, so x -> B_lam(x) is the identity on ids
    same = all(sorted(ox.simplices.get(k, [])) == sorted(nv.simplices.get(k, []))
               for k in range(cap + 1))
    return OracleComparison(as_rational(lam), degrees, eq, o_out, n_out, same)


# --------------------------------------------------------------------------
# asymptotic dimension bounds

@dataclass
class FamilyWitness:
    """Multiplicities of one constructed cover family.

    Stages with a member equal to the whole window say nothing about
    coarse covers (one member always has multiplicity 1) and are excluded
    from the witness.
    """
    name: str
    scales: list
    multiplicities: list
    whole_window: list  # per stage: some member is the whole window
    warnings: list = field(default_factory=list)

    @classmethod
    def of(cls, system) -> "FamilyWitness":
        whole = [bool(c.incidence.all(axis=1).any()) for c in system.stages]
        return cls(str(system.strategy), list(system.scales),
                   [c.multiplicity for c in system.stages], whole, list(system.warnings))

    @property
    def witness(self) -> int | None:
        ms = [m for m, w in zip(self.multiplicities, self.whole_window) if not w]
        return max(ms) - 1 if ms else None

    @property
    def witness_scales(self) -> list:
        return [s for s, w in zip(self.scales, self.whole_window) if not w]

    def to_dict(self) -> dict:
        return {"family": self.name, "scales": [value_str(x) for x in self.scales],
                "multiplicities": list(self.multiplicities),
                "whole_window_stages": [i + 1 for i, w in enumerate(self.whole_window) if w],
                "upper_bound_witness": self.witness,
                "witness_scales": [value_str(x) for x in self.witness_scales],
                "warnings": list(self.warnings)}


@dataclass
class AsdimBoundsReport:
    lower_bound: int | None  # None stands for -infinity
    upper_bound_witness: int | None
    upper_family: str | None
    stable: dict  # degree -> StableRank.to_dict() or None
    limits: dict  # degree -> LimitReport
    families: list
    scale_range: tuple
    caveats: list
    diagnostics: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "lower_bound": "-inf" if self.lower_bound is None else self.lower_bound,
            "upper_bound_witness": self.upper_bound_witness,
            "upper_bound_family": self.upper_family,
            "stable_ranks": {str(k): v for k, v in self.stable.items()},
            "limit_reports": {str(k): v.to_dict() for k, v in self.limits.items()},
            "families": [f.to_dict() for f in self.families],
            "scale_range": [value_str(x) for x in self.scale_range],
            "caveats": list(self.caveats),
            "diagnostics": list(self.diagnostics),
        }


def asdim_bounds(s: FiniteMetricSpace, strategy="ball-doubling(1)", degrees=None,
                 horizon: int = 3, w: int = 2, *, brick_witness=True, brick_start: int = 2,
                 route="auto", workers: int = 1, allow_window_cap_override: bool = False,
                 hsys=None) -> AsdimBoundsReport:
    """Homological lower bound and cover-multiplicity upper witness.

    The lower bound is the largest degree whose stable rank is determined
    and nonzero.  The upper witness is the least ``multiplicity - 1`` over
    the constructed families: the system itself and, on grid windows, a
    brick-doubling family.
    """
    if degrees is None:
        degrees = range(0, (s.model_dim or 1) + 1)
    degrees = tuple(sorted({int(k) for k in degrees}))
    strategy = Strategy.parse(strategy)
    caveats: list[str] = []
    if hsys is None:
        system = build_anti_cech(s, strategy, horizon,
                                 allow_window_cap_override=allow_window_cap_override)
        hsys = build_homology_system(system, degrees, route=route, workers=workers)
    system = hsys.system
    caveats += list(system.warnings)
    if len(system) < horizon:
        caveats.append(f"system has {len(system)} of the requested {horizon} stages")
    stable, limits = {}, {}
    lower = None
    for k in degrees:
        rep = limit_report(DirectSystem.from_homology_system(hsys, k), tail_window=w)
        limits[k] = rep
        st = rep.stable
        stable[k] = None if st is None else st.to_dict()
        if st is None:
            caveats.append(f"degree {k}: stable rank undetermined (horizon {len(system)} < window {w})")
        elif st.undetermined:
            caveats.append(f"degree {k}: stable rank undetermined within the window")
        elif st.rank > 0:
            lower = k if lower is None else max(lower, k)
        caveats += [f"degree {k}: {m}" for m in rep.warnings if "undetermined" not in m]
    families = [FamilyWitness.of(system)]
    if brick_witness and strategy.kind == "ball" and s.box_shape is not None:
        try:
            bsys = build_anti_cech(s, f"brick-doubling({brick_start})", horizon,
                                   allow_window_cap_override=allow_window_cap_override)
            if len(bsys):
                families.append(FamilyWitness.of(bsys))
        except UnsupportedSpace as exc:
            caveats.append(f"brick witness unavailable: {exc}")
    for f in families:
        if any(f.whole_window):
            caveats.append(f"{f.name}: stages {[i + 1 for i, w in enumerate(f.whole_window) if w]} "
                           "contain the whole window and are not used as witnesses")
    best = min((f for f in families if f.witness is not None), key=lambda f: f.witness,
               default=None)
    upper = None if best is None else best.witness
    diagnostics = []
    if lower is not None and upper is not None and lower > upper:
        diagnostics.append(f"lower bound {lower} exceeds upper witness {upper}: "
                           "truncation artefact or bug")
    scales = list(system.scales)
    if best is not None:
        ws = best.witness_scales
        caveats.append(f"upper witness verified on scales {value_str(min(ws))}..{value_str(max(ws))} "
                       f"of {best.name}")
    return AsdimBoundsReport(lower, upper, None if best is None else best.name, stable, limits,
                             families, (min(scales), max(scales)) if scales else (),
                             caveats, diagnostics)


# --------------------------------------------------------------------------
# scenario

@dataclass
class ScenarioConfig:
    r_values: tuple = (1, 2, 3)
    d_rule: object = None
    strategy: str = "ball-doubling(1)"
    horizon: int = 3
    window: int = 2
    route: str = "auto"
    workers: int = 1
    allow_window_cap_override: bool = False


@dataclass
class ScenarioReport:
    n: int
    subset: list
    separation: SeparationReport
    bounds: AsdimBoundsReport
    top_stable: dict | None  # degree n-1 stable rank
    verdict: str  # "consistent" | "mismatch" | "no claim"
    findings: list

    def to_dict(self) -> dict:
        return {"model_dim": self.n, "subset": list(self.subset),
                "separation": self.separation.to_dict(),
                "subset_bounds": self.bounds.to_dict(),
                "degree_n_minus_1_stable_rank": self.top_stable,
                "verdict": self.verdict, "findings": list(self.findings)}


def pd_scenario(s: FiniteMetricSpace, A, config: ScenarioConfig | None = None) -> ScenarioReport:
    """Separation of ``A`` against the homology of ``A`` in degree n - 1.

    A inherits the ambient metric and the ambient frontier restricted to A.
    A separated subset is predicted to carry a determined nonzero stable
    rank in degree n - 1; disagreements are recorded as findings.
    """
    cfg = config or ScenarioConfig()
    n = s.model_dim
    if n is None:
        raise UnsupportedScenario("the scenario needs a generated space with a declared model dimension")
    ids = _subset_ids(s, A)
    sep = check_separation(s, ids, cfg.r_values, cfg.d_rule)
    sub = SubspaceRef(s, frozenset(ids)).space()
    top = n - 1
    bounds = asdim_bounds(sub, cfg.strategy, range(0, top + 1), cfg.horizon, cfg.window,
                          brick_witness=False, route=cfg.route, workers=cfg.workers,
                          allow_window_cap_override=cfg.allow_window_cap_override)
    st = bounds.stable.get(top)
    findings = []
    if not sep.separated:
        verdict = "no claim"
    else:
        ok = (st is not None and not st["undetermined"] and st["rank"] >= 1
              and bounds.lower_bound is not None and bounds.lower_bound >= top)
        verdict = "consistent" if ok else "mismatch"
        if not ok:
            findings.append(f"A separates at the tested scales but degree-{top} stable rank of A is "
                            f"{'unavailable' if st is None else st} (truncation artefact or bug)")
    return ScenarioReport(n, ids, sep, bounds, st, verdict, findings)
