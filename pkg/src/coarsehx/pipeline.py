"""Per-stage homology models and the homology direct system of a cover system."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .collapse import CollapsedPair
from .complex import (DEFAULT_BUDGET, chain_to_vector, frontier_subcomplex, nerve,
                      push_chain, relative_chain_complex, vector_to_chain)
from .cover import AntiCechSystem, IndexedCover, refinement_projection
from .errors import SpecError
from .homology import (HomologyGroup, InducedMap, homology, invariant_factors,
                       torsion_multiset)

ROUTES = ("auto", "collapse", "explicit")
TORSION_NNZ_BUDGET = 300_000


@dataclass(eq=False)
class StageModel:
    """Relative homology of one stage, with enough data to receive chains."""
    cover: IndexedCover
    route: str
    degrees: tuple
    groups: dict  # degree -> HomologyGroup (rank coefficients)
    torsion: dict = field(default_factory=dict)  # degree -> list | None (skipped)
    stats: dict = field(default_factory=dict)
    _cp: CollapsedPair | None = None
    _pair: object = None
    _index: dict = field(default_factory=dict)

    @classmethod
    def build(cls, cover: IndexedCover, degrees, route: str = "auto", coeffs="Q",
              integer: bool = True, budget: int = DEFAULT_BUDGET) -> "StageModel":
        degrees = tuple(sorted(set(int(k) for k in degrees)))
        if not degrees or degrees[0] < 0:
            raise SpecError("degrees must be nonempty and >= 0")
        if route not in ROUTES:
            raise SpecError(f"route must be one of {ROUTES}")
        if route == "auto":
            route = "collapse" if cover.helly else "explicit"
        if route == "collapse" and not cover.helly:
            raise SpecError("the collapse route needs a Helly cover (flag nerve)")
        dim_cap = degrees[-1] + 1
        if route == "collapse":
            cp = CollapsedPair.build(cover.incidence, cover.frontier_members, dim_cap, budget)
            cc = cp.chain_complex()
            stats = dict(cp.stats)
            pair = None
        else:
            cp = None
            n = nerve(cover, dim_cap, budget)
            pair = frontier_subcomplex(n, cover)
            cc = relative_chain_complex(pair, degrees)
            stats = {"simplices": {k: n.count(k) for k in range(dim_cap + 1)},
                     "frontier_vertices": len(pair.frontier_vertices)}
        stats["chain_ranks"] = {k: cc.dim(k) for k in range(-1 if cc.augmented else 0, dim_cap + 1)}
        groups, torsion = {}, {}
        for k in degrees:
            groups[k] = homology(cc, k, coeffs)
            if integer and coeffs in ("Q", "Z"):
                dk1 = cc.boundary(k + 1)
                if dk1.nnz() <= TORSION_NNZ_BUDGET:
                    torsion[k] = torsion_multiset(invariant_factors(dk1))
                else:
                    torsion[k] = None
        index = {k: {s: i for i, s in enumerate(cc.labels.get(k, []))} for k in degrees}
        model = cls(cover, route, degrees, groups, torsion, stats, cp, pair, index)
        model._labels = {k: cc.labels.get(k, []) for k in degrees}
        return model

    @property
    def apex(self):
        return self._cp.apex if self._cp is not None else None

    def generator_chains(self, k: int) -> list[dict]:
        labels = self._labels[k]
        return [vector_to_chain(g, labels) for g in self.groups[k].generators]

    def receive(self, k: int, chain: dict) -> list:
        """Coordinates of an incoming full-complex chain in this stage's H_k."""
        if self.route == "collapse":
            chain = self._cp.transport(chain)
        return self.groups[k].coordinates(chain_to_vector(chain, self._index[k]))

    def push(self, k: int, chain: dict, phi, target: "StageModel") -> list:
        """Image of a chain of this stage under a refinement projection."""
        if self.route != target.route:
            raise SpecError("stages of one system must use the same route")
        if self.route == "collapse":
            vmap = list(phi) + [target.apex]
            img = push_chain(chain, vmap)
        else:
            img = push_chain(chain, phi, keep=lambda s: not target._pair.in_frontier(s))
        return target.receive(k, img)

    def summary(self) -> dict:
        return {
            "route": self.route,
            "groups": {str(k): {"rank": g.rank, "coeffs": g.coeffs,
                                "torsion": self.torsion.get(k)} for k, g in self.groups.items()},
            "stats": {a: ({str(k): v for k, v in b.items()} if isinstance(b, dict) else b)
                      for a, b in self.stats.items()},
        }


def induced_stage_map(src: StageModel, tgt: StageModel, phi, k: int) -> InducedMap:
    cols = [src.push(k, z, phi, tgt) for z in src.generator_chains(k)]
    rt = tgt.groups[k].rank
    matrix = [[cols[j][i] for j in range(len(cols))] for i in range(rt)]
    p = tgt.groups[k]._basis.p if tgt.groups[k]._basis is not None else None
    return InducedMap(src.groups[k], tgt.groups[k], matrix, k, p)


def _build_model(args):
    cover, degrees, route, coeffs, integer, budget = args
    return StageModel.build(cover, degrees, route, coeffs, integer, budget)


@dataclass(eq=False)
class HomologySystem:
    """Homology direct systems of an anti-Cech system, one per degree."""
    system: AntiCechSystem
    models: list
    degrees: tuple
    maps: dict  # degree -> list of InducedMap f^{i,i+1}
    projections: list  # phi_{i,i+1}

    @property
    def horizon(self) -> int:
        return len(self.models)

    def ranks(self, k: int) -> list[int]:
        return [m.groups[k].rank for m in self.models]

    def direct_map(self, i: int, j: int, k: int, tie="min", seed=None) -> InducedMap:
        """``H_k`` map from stage i to stage j (0-based) through one projection."""
        cov = self.system.stages
        phi = refinement_projection(cov[i], cov[j], source=i, target=j, tie=tie, seed=seed).phi
        return induced_stage_map(self.models[i], self.models[j], phi, k)


def build_homology_system(system: AntiCechSystem, degrees, *, route="auto", coeffs="Q",
                          integer=True, budget=DEFAULT_BUDGET, workers: int = 1,
                          tie="min", seed=None) -> HomologySystem:
    degrees = tuple(sorted(set(int(k) for k in degrees)))
    if not len(system):
        raise SpecError("empty cover system")
    if route == "auto":
        route = "collapse" if all(c.helly for c in system.stages) else "explicit"
    jobs = [(c, degrees, route, coeffs, integer, budget) for c in system.stages]
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs), os.cpu_count() or 1)) as ex:
            models = list(ex.map(_build_model, jobs))
    else:
        models = [_build_model(j) for j in jobs]
    projections, maps = [], {k: [] for k in degrees}
    for i in range(len(models) - 1):
        phi = refinement_projection(system.stages[i], system.stages[i + 1], source=i,
                                    target=i + 1, tie=tie, seed=seed).phi
        projections.append(phi)
        for k in degrees:
            maps[k].append(induced_stage_map(models[i], models[i + 1], phi, k))
    return HomologySystem(system, models, degrees, maps, projections)
