"""Direct systems of homology groups and their truncated limits.

Stages are numbered from 1 as in reports; ``f^{i,j}`` is the composite of
consecutive maps and ``f^{i,i}`` is the identity.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import BadClass, HorizonTooSmall, SpecError, StageOutOfRange
from .homology import InducedMap, matrix_rank


@dataclass(eq=False)
class DirectSystem:
    ranks: list  # rank of G_i (free part), i = 1..J
    maps: list  # InducedMap G_i -> G_{i+1}, length J - 1
    degree: int = 0
    groups: list | None = None  # HomologyGroup per stage when available
    p: int | None = None

    def __post_init__(self):
        if len(self.maps) != max(len(self.ranks) - 1, 0):
            raise SpecError("a direct system needs exactly one map per consecutive pair")
        for i, m in enumerate(self.maps):
            rows, cols = len(m.matrix), (len(m.matrix[0]) if m.matrix else self.ranks[i])
            if rows != self.ranks[i + 1] or (m.matrix and cols != self.ranks[i]):
                raise SpecError(f"map {i + 1}->{i + 2} has shape {rows}x{cols}, expected "
                                f"{self.ranks[i + 1]}x{self.ranks[i]}")
        self._cache: dict = {}

    @classmethod
    def from_matrices(cls, ranks, matrices, degree=0, p=None) -> "DirectSystem":
        return cls(list(ranks), [InducedMap.from_matrix(m, degree, p) for m in matrices],
                   degree, None, p)

    @classmethod
    def from_homology_system(cls, hs, k: int) -> "DirectSystem":
        groups = [m.groups[k] for m in hs.models]
        p = groups[0]._basis.p if groups and groups[0]._basis is not None else None
        return cls([g.rank for g in groups], list(hs.maps[k]), k, groups, p)

    @property
    def horizon(self) -> int:
        return len(self.ranks)

    def _check(self, i, j=None):
        J = self.horizon
        for s in (i,) if j is None else (i, j):
            if isinstance(s, bool) or not isinstance(s, int) or not 1 <= s <= J:
                raise StageOutOfRange(f"stage {s} outside 1..{J}")
        if j is not None and i > j:
            raise StageOutOfRange(f"need i <= j, got {i} > {j}")


def compose(sys: DirectSystem, i: int, j: int) -> InducedMap:
    """``f^{i,j}`` as a matrix (rows: G_j generators, columns: G_i generators)."""
    sys._check(i, j)
    key = (i, j)
    if key in sys._cache:
        return sys._cache[key]
    if i == j:
        out = InducedMap.identity(sys.ranks[i - 1], sys.degree, sys.p)
        if not out.matrix:
            out.matrix = []
    else:
        prev = compose(sys, i, j - 1)
        step = sys.maps[j - 2]
        mat = _mul(step.matrix, prev.matrix, sys.ranks[j - 1], sys.ranks[j - 2], sys.ranks[i - 1], sys.p)
        out = InducedMap(prev.source, step.target, mat, sys.degree, sys.p)
    sys._cache[key] = out
    return out


def _mul(a, b, rows, inner, cols, p=None):
    """``a (rows x inner) @ b (inner x cols)`` with explicit shapes for empty groups."""
    from .homology import _norm
    out = [[0] * cols for _ in range(rows)]
    for r in range(rows):
        for t in range(inner):
            x = a[r][t]
            if x:
                bt = b[t]
                for c in range(cols):
                    if bt[c]:
                        out[r][c] += x * bt[c]
    if p:
        return [[v % p for v in row] for row in out]
    return [[_norm(v) for v in row] for row in out]


def _rank(m: InducedMap) -> int:
    return matrix_rank(m.matrix, m.p)


def persistent_rank_table(sys: DirectSystem, degree=None) -> list[list]:
    """``r[i-1][j-1] = rank f^{i,j}`` for ``i <= j``; None below the diagonal."""
    J = sys.horizon
    return [[_rank(compose(sys, i, j)) if j >= i else None for j in range(1, J + 1)]
            for i in range(1, J + 1)]


@dataclass
class StableRank:
    rank: int
    undetermined: bool
    stabilization_stage: int | None
    window: int
    horizon: int

    def to_dict(self) -> dict:
        return {"rank": self.rank, "undetermined": self.undetermined,
                "stabilization_stage": self.stabilization_stage,
                "window": self.window, "horizon": self.horizon}


def stable_rank(sys: DirectSystem, degree=None, tail_window: int = 2,
                table: list | None = None) -> StableRank:
    """Stabilization verdict over the last ``tail_window`` stages.

    Determined iff ``r_{i,j}`` is one constant c for every i in the window
    and every j in ``[i, J]``.  Otherwise the value ``r_{J-w+1, J}`` is
    returned as undetermined.  This is a finite-horizon heuristic, never a
    proof about the limit.
    """
    w = tail_window
    J = sys.horizon
    if w < 2:
        raise HorizonTooSmall("the stabilization window must be at least 2")
    if J < w:
        raise HorizonTooSmall(f"horizon {J} is smaller than the window {w}")
    r = persistent_rank_table(sys) if table is None else table

    def stable_from(i0: int, c: int) -> bool:
        return all(r[i - 1][j - 1] == c for i in range(i0, J + 1) for j in range(i, J + 1))

    c = r[J - w][J - 1]
    if stable_from(J - w + 1, c):
        i0 = J - w + 1
        while i0 > 1 and stable_from(i0 - 1, c):
            i0 -= 1
        return StableRank(c, False, i0, w, J)
    return StableRank(c, True, None, w, J)


@dataclass
class Triviality:
    stage: int
    trivial_at: int | None
    horizon: int

    @property
    def nontrivial_up_to_horizon(self) -> bool:
        return self.trivial_at is None

    def to_dict(self) -> dict:
        if self.trivial_at is None:
            return {"stage": self.stage, "verdict": "nontrivial-up-to-horizon",
                    "horizon": self.horizon}
        return {"stage": self.stage, "verdict": "trivial", "trivial_at": self.trivial_at,
                "horizon": self.horizon}


def element_is_limit_trivial(sys: DirectSystem, i: int, x, J: int | None = None) -> Triviality:
    """Least ``j <= J`` with ``f^{i,j}(x) = 0``; otherwise nontrivial up to J.

    ``x`` is a coordinate vector in the generators of ``G_i``.
    """
    J = sys.horizon if J is None else J
    sys._check(i, J)
    x = list(x)
    if len(x) != sys.ranks[i - 1]:
        raise BadClass(f"class has {len(x)} coordinates, G_{i} has rank {sys.ranks[i - 1]}")
    for j in range(i, J + 1):
        y = compose(sys, i, j).apply(x) if sys.ranks[j - 1] else []
        if not any(y):
            return Triviality(i, j, J)
    return Triviality(i, None, J)


@dataclass
class TruncatedColimit:
    stage: int
    rank: int
    group: object  # HomologyGroup or None
    images: list  # per stage i: matrix of phi_i = f^{i,J}

    def phi(self, i: int, x) -> list:
        m = self.images[i - 1]
        return m.apply(list(x))


def truncated_colimit(sys: DirectSystem, degree=None, J: int | None = None) -> TruncatedColimit:
    """Finite-stage approximant ``G_J`` with canonical maps ``phi_i = f^{i,J}``."""
    J = sys.horizon if J is None else J
    sys._check(1, J)
    images = [compose(sys, i, J) for i in range(1, J + 1)]
    group = sys.groups[J - 1] if sys.groups else None
    return TruncatedColimit(J, sys.ranks[J - 1], group, images)


@dataclass
class LimitReport:
    degree: int
    ranks: list
    table: list
    stable: StableRank | None
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"degree": self.degree, "stage_ranks": self.ranks, "persistent_ranks": self.table,
                "stable_rank": None if self.stable is None else self.stable.to_dict(),
                "warnings": list(self.warnings)}


def limit_report(sys: DirectSystem, tail_window: int = 2) -> LimitReport:
    table = persistent_rank_table(sys)
    warnings = []
    for i, row in enumerate(table):
        vals = [v for v in row if v is not None]
        if any(a < b for a, b in zip(vals, vals[1:])):
            warnings.append(f"rank increased along row {i + 1} (bug indicator)")
    try:
        st = stable_rank(sys, tail_window=tail_window, table=table)
    except HorizonTooSmall as exc:
        st = None
        warnings.append(f"stable rank undetermined: {exc}")
    return LimitReport(sys.degree, list(sys.ranks), table, st, warnings)
