"""Shared builders for the test suite."""
import functools
import itertools
import json

import numpy as np

from coarsehx.cover import build_anti_cech
from coarsehx.limit import DirectSystem
from coarsehx.pipeline import build_homology_system
from coarsehx.space import from_graph, generate


def gen(kind, frontier="window-boundary", **params):
    return _gen(kind, json.dumps(frontier), tuple(sorted(params.items())))


@functools.lru_cache(maxsize=None)
def _gen(kind, frontier, params):
    s, _ = generate({"kind": kind, "frontier": json.loads(frontier), **dict(params)})
    return s


@functools.lru_cache(maxsize=None)
def _hsys_cached(key):
    kind, frontier, params, strategy, stages, degrees, override = key
    s = _gen(kind, frontier, params)
    system = build_anti_cech(s, strategy, stages, allow_window_cap_override=override)
    return build_homology_system(system, degrees)


def hsys(kind, strategy="ball-doubling(1)", stages=3, degrees=(0, 1), frontier="window-boundary",
         override=False, **params):
    key = (kind, json.dumps(frontier), tuple(sorted(params.items())), strategy, stages,
           tuple(degrees), override)
    return _hsys_cached(key)


def direct(h, k):
    return DirectSystem.from_homology_system(h, k)


def random_tree_edges(n, rng):
    """Uniform labelled tree on n vertices from a random Pruefer sequence."""
    if n == 1:
        return []
    if n == 2:
        return [(0, 1)]
    seq = [int(x) for x in rng.integers(0, n, size=n - 2)]
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    edges = []
    for x in seq:
        leaf = min(i for i in range(n) if degree[i] == 1)
        edges.append((leaf, x))
        degree[leaf] -= 1
        degree[x] -= 1
    u, v = [i for i in range(n) if degree[i] == 1]
    edges.append((u, v))
    return edges


def small_graph_family(n_random_trees=100, seed=0, max_n=8):
    """Paths, cycles and stars on <= max_n vertices plus seeded random trees."""
    out = []
    for n in range(1, max_n + 1):
        out.append((f"path{n}", from_graph(n, [(i, i + 1) for i in range(n - 1)])))
    for n in range(3, max_n + 1):
        out.append((f"cycle{n}", from_graph(n, [(i, (i + 1) % n) for i in range(n)])))
    for n in range(3, max_n + 1):
        out.append((f"star{n}", from_graph(n, [(0, i) for i in range(1, n)])))
    rng = np.random.default_rng(seed)
    for t in range(n_random_trees):
        n = int(rng.integers(2, max_n + 1))
        out.append((f"tree{t}", from_graph(n, random_tree_edges(n, rng))))
    return out


def pairs(seq):
    return list(itertools.combinations(seq, 2))
