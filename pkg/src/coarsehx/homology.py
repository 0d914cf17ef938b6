"""Sparse chain complexes, Smith normal form and homology with induced maps.

Vectors are ``dict[row, coefficient]``.  Over Q the coefficients are Python
ints or Fractions (ints stay ints as long as pivots are +-1); over F_p they
are ints reduced mod p.  All integer arithmetic is arbitrary precision.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import BrokenChainMap, InvalidComplex, SpecError

Vector = dict


# --------------------------------------------------------------------------
# sparse matrices

@dataclass
class SparseMatrix:
    """Column-major sparse matrix: ``cols[j]`` maps row -> nonzero entry."""
    nrows: int
    ncols: int
    cols: list = field(default_factory=list)

    def __post_init__(self):
        if not self.cols:
            self.cols = [{} for _ in range(self.ncols)]
        if len(self.cols) != self.ncols:
            raise SpecError("column count mismatch")

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @classmethod
    def zeros(cls, nrows, ncols):
        return cls(nrows, ncols, [{} for _ in range(ncols)])

    @classmethod
    def identity(cls, n):
        return cls(n, n, [{i: 1} for i in range(n)])

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence]):
        nrows = len(rows)
        ncols = len(rows[0]) if nrows else 0
        cols = [{} for _ in range(ncols)]
        for i, r in enumerate(rows):
            if len(r) != ncols:
                raise SpecError("ragged matrix")
            for j, v in enumerate(r):
                if v:
                    cols[j][i] = v
        return cls(nrows, ncols, cols)

    @classmethod
    def from_triplets(cls, nrows, ncols, triplets: Iterable[tuple]):
        cols = [{} for _ in range(ncols)]
        for i, j, v in triplets:
            if v:
                c = cols[j]
                c[i] = c.get(i, 0) + v
                if not c[i]:
                    del c[i]
        return cls(nrows, ncols, cols)

    def to_dense(self) -> list[list]:
        out = [[0] * self.ncols for _ in range(self.nrows)]
        for j, c in enumerate(self.cols):
            for i, v in c.items():
                out[i][j] = v
        return out

    def triplets(self):
        for j, c in enumerate(self.cols):
            for i in sorted(c):
                yield (i, j, c[i])

    def nnz(self) -> int:
        return sum(len(c) for c in self.cols)

    def is_zero(self) -> bool:
        return all(not c for c in self.cols)

    def apply(self, v: Vector, p: int | None = None) -> Vector:
        out: dict = {}
        for j, a in v.items():
            for i, b in self.cols[j].items():
                out[i] = out.get(i, 0) + a * b
        if p is None:
            return {i: x for i, x in out.items() if x}
        return {i: x % p for i, x in out.items() if x % p}

    def __matmul__(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.ncols != other.nrows:
            raise SpecError(f"shape mismatch {self.shape} @ {other.shape}")
        return SparseMatrix(self.nrows, other.ncols, [self.apply(c) for c in other.cols])

    def transpose(self) -> "SparseMatrix":
        cols = [{} for _ in range(self.nrows)]
        for j, c in enumerate(self.cols):
            for i, v in c.items():
                cols[i][j] = v
        return SparseMatrix(self.ncols, self.nrows, cols)

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return self.shape == other.shape and all(a == b for a, b in zip(self.cols, other.cols))


# --------------------------------------------------------------------------
# field elimination

def _parse_field(coeffs):
    """None for Q, or a prime p."""
    if coeffs in ("Q", "rationals", "QQ", None):
        return None
    if isinstance(coeffs, str) and coeffs.upper().startswith("F"):
        coeffs = int(coeffs[1:].lstrip("_"))
    if isinstance(coeffs, int) and not isinstance(coeffs, bool) and coeffs >= 2:
        if any(coeffs % q == 0 for q in range(2, int(coeffs ** 0.5) + 1)):
            raise SpecError(f"F_p needs a prime, got {coeffs}")
        return coeffs
    raise SpecError(f"unsupported coefficients {coeffs!r}")


class EchelonBasis:
    """Basis of a subspace in echelon form keyed by each vector's largest row.

    Every stored vector has coefficient 1 at its key.  Vectors can carry a
    tag (any hashable); ``reduce`` reports the coefficients used on tagged
    vectors so that coordinates with respect to tagged generators can be
    read off.
    """

    def __init__(self, p: int | None = None):
        self.p = p
        self.pivots: dict[int, Vector] = {}
        self.tags: dict[int, object] = {}

    def __len__(self):
        return len(self.pivots)

    def _inv(self, a):
        if self.p is not None:
            return pow(a, -1, self.p)
        if a == 1 or a == -1:
            return a
        return Fraction(1) / a

    def _axpy(self, v: Vector, c, b: Vector) -> None:
        """``v -= c * b`` in place."""
        p = self.p
        for i, x in b.items():
            y = v.get(i, 0) - c * x
            if p is not None:
                y %= p
            if y:
                if type(y) is Fraction and y.denominator == 1:
                    y = y.numerator
                v[i] = y
            else:
                v.pop(i, None)

    def reduce(self, v: Vector, want: dict | None = None) -> Vector:
        """Remainder of ``v`` after eliminating pivots; ``want`` collects
        ``tag -> coefficient`` for tagged pivots used."""
        v = dict(v)
        pivots = self.pivots
        while v:
            low = max(v)
            b = pivots.get(low)
            if b is None:
                return v
            c = v[low]
            if want is not None and low in self.tags:
                t = self.tags[low]
                want[t] = want.get(t, 0) + c
            self._axpy(v, c, b)
        return v

    def reduce_full(self, v: Vector, want: dict | None = None) -> Vector:
        """Like ``reduce`` but clears every pivot row, not only the leading one."""
        v = dict(v)
        while True:
            hits = [r for r in v if r in self.pivots]
            if not hits:
                return v
            r = max(hits)
            c = v[r]
            if want is not None and r in self.tags:
                t = self.tags[r]
                want[t] = want.get(t, 0) + c
            self._axpy(v, c, self.pivots[r])

    def add(self, v: Vector, tag=None) -> int:
        """Insert an already reduced nonzero vector; returns its key."""
        if not v:
            raise ValueError("cannot insert a zero vector")
        low = max(v)
        if low in self.pivots:
            raise ValueError("vector is not reduced")
        inv = self._inv(v[low])
        if inv != 1:
            p = self.p
            v = {i: (x * inv) % p if p else _norm(x * inv) for i, x in v.items()}
        self.pivots[low] = v
        if tag is not None:
            self.tags[low] = tag
        return low

    def insert(self, v: Vector, tag=None) -> bool:
        r = self.reduce(v)
        if not r:
            return False
        self.add(r, tag)
        return True


def _norm(x):
    if type(x) is Fraction and x.denominator == 1:
        return x.numerator
    return x


def _mod(v: Vector, p):
    if p is None:
        return {i: x for i, x in v.items() if x}
    return {i: x % p for i, x in v.items() if x % p}


def rank(m: SparseMatrix, coeffs="Q", stop_at: int | None = None) -> int:
    """Rank over Q or F_p; optionally stop once ``stop_at`` is reached."""
    p = _parse_field(coeffs)
    e = EchelonBasis(p)
    for c in m.cols:
        if c:
            e.insert(_mod(c, p))
            if stop_at is not None and len(e) >= stop_at:
                break
    return len(e)


def kernel_basis(m: SparseMatrix, p: int | None = None) -> list[Vector]:
    """Basis of ker m (vectors indexed by columns), by tracked column reduction."""
    # each stored column is (image vector, combination of original columns)
    pivots: dict[int, tuple] = {}
    kernel = []
    e = EchelonBasis(p)
    for j, col in enumerate(m.cols):
        v = _mod(col, p)
        combo: Vector = {j: 1}
        while v:
            low = max(v)
            hit = pivots.get(low)
            if hit is None:
                break
            bv, bc = hit
            c = v[low]
            e._axpy(v, c, bv)
            e._axpy(combo, c, bc)
        if v:
            low = max(v)
            inv = e._inv(v[low])
            if inv != 1:
                v = {i: (x * inv) % p if p else _norm(x * inv) for i, x in v.items()}
                combo = {i: (x * inv) % p if p else _norm(x * inv) for i, x in combo.items()}
            pivots[low] = (v, combo)
        else:
            kernel.append(combo)
    return kernel


# --------------------------------------------------------------------------
# Smith normal form

@dataclass
class SNFResult:
    diagonal: list  # nonzero invariant factors d_1 | d_2 | ...
    U: list | None = None  # row transform (m x m)
    V: list | None = None  # column transform (n x n)
    shape: tuple = (0, 0)

    @property
    def rank(self) -> int:
        return len(self.diagonal)


def _matmul_dense(a, b):
    n, k, m = len(a), len(b), len(b[0]) if b else 0
    out = [[0] * m for _ in range(n)]
    for i in range(n):
        ai, oi = a[i], out[i]
        for t in range(k):
            x = ai[t]
            if x:
                bt = b[t]
                for j in range(m):
                    if bt[j]:
                        oi[j] += x * bt[j]
    return out


def smith_normal_form(M, transforms: bool = True) -> SNFResult:
    """Dense SNF ``U M V = diag(d)``; pivots of least absolute value first
    (+-1 whenever available)."""
    A = M.to_dense() if isinstance(M, SparseMatrix) else [list(r) for r in M]
    m = len(A)
    n = len(A[0]) if m else 0
    A = [[int(x) for x in r] for r in A]
    U = [[int(i == j) for j in range(m)] for i in range(m)] if transforms else None
    V = [[int(i == j) for j in range(n)] for i in range(n)] if transforms else None

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        if U is not None:
            U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for r in A:
            r[i], r[j] = r[j], r[i]
        if V is not None:
            for r in V:
                r[i], r[j] = r[j], r[i]

    def add_row(dst, src, c):  # row_dst += c row_src
        ra, rs = A[dst], A[src]
        for j in range(n):
            if rs[j]:
                ra[j] += c * rs[j]
        if U is not None:
            ua, us = U[dst], U[src]
            for j in range(m):
                if us[j]:
                    ua[j] += c * us[j]

    def add_col(dst, src, c):  # col_dst += c col_src
        for r in A:
            if r[src]:
                r[dst] += c * r[src]
        if V is not None:
            for r in V:
                if r[src]:
                    r[dst] += c * r[src]

    diag = []
    t = 0
    while t < min(m, n):
        best = None
        for i in range(t, m):
            row = A[i]
            for j in range(t, n):
                x = row[j]
                if x and (best is None or abs(x) < best[0]):
                    best = (abs(x), i, j)
                    if best[0] == 1:
                        break
            if best is not None and best[0] == 1:
                break
        if best is None:
            break
        _, i, j = best
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            p = A[t][t]
            done = True
            for i in range(t + 1, m):
                if A[i][t]:
                    q = A[i][t] // p
                    add_row(i, t, -q)
                    if A[i][t]:
                        done = False
            for j in range(t + 1, n):
                if A[t][j]:
                    q = A[t][j] // p
                    add_col(j, t, -q)
                    if A[t][j]:
                        done = False
            if not done:
                # move the smallest leftover in row/column t into the pivot
                cands = [(abs(A[i][t]), i, None) for i in range(t + 1, m) if A[i][t]]
                cands += [(abs(A[t][j]), None, j) for j in range(t + 1, n) if A[t][j]]
                _, i, j = min(cands, key=lambda c: c[0])
                if i is not None:
                    swap_rows(t, i)
                else:
                    swap_cols(t, j)
                continue
            # divisibility against the remaining block
            bad = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if A[i][j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            add_row(t, bad, 1)
        if A[t][t] < 0:
            for j in range(n):
                A[t][j] = -A[t][j]
            if U is not None:
                U[t] = [-x for x in U[t]]
        diag.append(A[t][t])
        t += 1
    return SNFResult(diagonal=diag, U=U, V=V, shape=(m, n))


def invariant_factors(M: SparseMatrix) -> list[int]:
    """Nonzero invariant factors of a sparse integer matrix.

    Unit pivots are eliminated sparsely (a unimodular column operation
    isolates the pivot row, after which row and column can be dropped), and
    the small residual is handed to the dense SNF.
    """
    cols = {j: dict(c) for j, c in enumerate(M.cols) if c}
    rows: dict[int, set] = {}
    for j, c in cols.items():
        for i in c:
            rows.setdefault(i, set()).add(j)
    ones = 0
    progress = True
    while progress:
        progress = False
        for j in sorted(cols, key=lambda j: len(cols[j])):
            if j not in cols:
                continue
            c = cols[j]
            units = [i for i, x in c.items() if x == 1 or x == -1]
            if not units:
                continue
            r = min(units, key=lambda i: len(rows[i]))
            a = c[r]
            for k in list(rows[r]):
                if k == j:
                    continue
                ck = cols[k]
                f = ck[r] * a  # ck -= f * c  clears row r
                for i, x in c.items():
                    y = ck.get(i, 0) - f * x
                    if y:
                        if i not in ck:
                            rows[i].add(k)
                        ck[i] = y
                    elif i in ck:
                        del ck[i]
                        rows[i].discard(k)
                if not ck:
                    del cols[k]
            for i in c:
                rows[i].discard(j)
            del rows[r]
            for i in c:
                if i in rows and not rows[i]:
                    del rows[i]
            del cols[j]
            ones += 1
            progress = True
    if not cols:
        return [1] * ones
    rlist = sorted(rows)
    ridx = {r: t for t, r in enumerate(rlist)}
    dense = [[0] * len(cols) for _ in rlist]
    for t, j in enumerate(sorted(cols)):
        for i, x in cols[j].items():
            dense[ridx[i]][t] = x
    rest = smith_normal_form(dense, transforms=False).diagonal
    return [1] * ones + rest


def prime_power_factors(d: int) -> list[int]:
    out = []
    q = 2
    while q * q <= d:
        if d % q == 0:
            e = 1
            while d % q == 0:
                d //= q
                e *= q
            out.append(e)
        q += 1
    if d > 1:
        out.append(d)
    return out


def torsion_multiset(factors: Iterable[int]) -> list[int]:
    """Invariant factors > 1 split into sorted prime powers."""
    out = []
    for d in factors:
        d = abs(int(d))
        if d > 1:
            out.extend(prime_power_factors(d))
    return sorted(out)


# --------------------------------------------------------------------------
# chain complexes and homology

@dataclass
class ChainComplex:
    """Boundaries ``d[k]: C_k -> C_{k-1}`` with bases labelled per degree.

    ``augmented`` adds a single generator in degree -1 (the empty simplex);
    homology is then reduced homology.
    """
    dims: dict
    d: dict
    labels: dict = field(default_factory=dict)
    augmented: bool = False

    def dim(self, k: int) -> int:
        return self.dims.get(k, 0)

    def boundary(self, k: int) -> SparseMatrix:
        if k in self.d:
            return self.d[k]
        return SparseMatrix.zeros(self.dim(k - 1), self.dim(k))

    @property
    def top(self) -> int:
        return max((k for k, v in self.dims.items() if v), default=-1)

    def check(self, degrees=None) -> None:
        """Raise InvalidComplex unless every composite boundary vanishes."""
        ks = sorted(self.d) if degrees is None else degrees
        for k in ks:
            if k - 1 in self.d and k in self.d:
                a, b = self.d[k - 1], self.d[k]
                if a.ncols != b.nrows:
                    raise InvalidComplex(f"shape mismatch at degree {k}")
                for c in b.cols:
                    if a.apply(c):
                        raise InvalidComplex(f"boundary composite nonzero at degree {k}")


@dataclass
class HomologyGroup:
    degree: int
    rank: int
    torsion: list
    generators: list  # representative cycles (sparse chains)
    coeffs: str = "Z"
    labels: list | None = None  # simplex labels of the chain basis
    _basis: EchelonBasis | None = field(default=None, repr=False, compare=False)
    _dk: SparseMatrix | None = field(default=None, repr=False, compare=False)
    _gen_scale: dict = field(default_factory=dict, repr=False, compare=False)

    def coordinates(self, z: Vector, check: bool = True) -> list:
        """Coordinates of the class of cycle ``z`` w.r.t. ``generators``."""
        p = self._basis.p if self._basis is not None else None
        z = _mod(z, p)
        if check and self._dk is not None and self._dk.apply(z, p):
            raise BrokenChainMap("chain is not a cycle")
        if self.rank == 0:
            if self._basis is not None and check:
                rem = self._basis.reduce(z)
                if rem:
                    raise BrokenChainMap("chain is not in the cycle space")
            return []
        want: dict = {}
        rem = self._basis.reduce(z, want)
        if rem:
            raise BrokenChainMap("chain is not a cycle")
        out = [0] * self.rank
        for g, c in want.items():
            val = c * self._gen_scale[g]
            out[g] = val % p if p else _norm(val)
        return out

    def is_boundary(self, z: Vector) -> bool:
        return not any(self.coordinates(z))

    def summary(self) -> dict:
        return {"degree": self.degree, "rank": self.rank, "torsion": list(self.torsion),
                "coeffs": self.coeffs}


def homology(cc: ChainComplex, k: int, coeffs="Z", *, check: bool = True) -> HomologyGroup:
    """``H_k`` over Z (rank + torsion), Q or F_p (rank only)."""
    if check:
        cc.check([k, k + 1])
    field_p = None if coeffs in ("Z", "integers") else _parse_field(coeffs)
    dk = cc.boundary(k)
    dk1 = cc.boundary(k + 1)
    cycles = kernel_basis(dk, field_p)
    basis = EchelonBasis(field_p)
    nz = len(cycles)
    for c in dk1.cols:
        if len(basis) >= nz:
            break
        if c:
            basis.insert(_mod(c, field_p))
    im_rank = len(basis)
    reps, scale = [], {}
    for z in cycles:
        if len(basis) >= nz:
            break
        r = basis.reduce(z)
        if r:
            g = len(reps)
            reps.append(dict(r))
            key = basis.add(r, tag=g)
            # the stored vector is r / lead: a coefficient c on it is c / lead on r
            lead = r[key]
            scale[g] = (pow(lead, -1, field_p) if field_p else
                        (lead if lead in (1, -1) else Fraction(1) / lead))
    rk = nz - im_rank
    if len(reps) != rk:
        raise InvalidComplex("inconsistent ranks (boundaries not inside cycles)")
    torsion = []
    if field_p:
        label = f"F{field_p}"
    else:
        label = "Z" if coeffs in ("Z", "integers") else "Q"
    if label == "Z" and im_rank:
        torsion = torsion_multiset(invariant_factors(dk1))
    return HomologyGroup(degree=k, rank=rk, torsion=torsion, generators=reps, coeffs=label,
                         labels=cc.labels.get(k), _basis=basis, _dk=dk, _gen_scale=scale)


def betti_numbers(cc: ChainComplex, degrees, coeffs="Q") -> dict:
    return {k: homology(cc, k, coeffs, check=False).rank for k in degrees}


# --------------------------------------------------------------------------
# induced maps

@dataclass
class InducedMap:
    source: HomologyGroup | None
    target: HomologyGroup | None
    matrix: list  # rows = target generators, cols = source generators
    degree: int = 0
    p: int | None = None

    @property
    def shape(self):
        return (len(self.matrix), len(self.matrix[0]) if self.matrix else 0)

    @classmethod
    def from_matrix(cls, matrix, degree=0, p=None):
        return cls(None, None, [list(r) for r in matrix], degree, p)

    @classmethod
    def identity(cls, n, degree=0, p=None):
        return cls(None, None, [[int(i == j) for j in range(n)] for i in range(n)], degree, p)

    def __matmul__(self, other: "InducedMap") -> "InducedMap":
        """Composite ``self o other``."""
        a, b = self.matrix, other.matrix
        rows = len(a)
        inner = len(b)
        cols = len(b[0]) if b else (other.shape[1])
        out = [[0] * cols for _ in range(rows)]
        for i in range(rows):
            for t in range(inner):
                x = a[i][t]
                if x:
                    for j in range(cols):
                        if b[t][j]:
                            out[i][j] += x * b[t][j]
        if self.p:
            out = [[x % self.p for x in r] for r in out]
        else:
            out = [[_norm(x) for x in r] for r in out]
        return InducedMap(other.source, self.target, out, self.degree, self.p)

    def apply(self, x: Sequence) -> list:
        out = [sum(a * b for a, b in zip(row, x)) for row in self.matrix]
        return [v % self.p for v in out] if self.p else [_norm(v) for v in out]


def induced_map_on_homology(chain_map: SparseMatrix, source: HomologyGroup,
                            target: HomologyGroup, degree: int | None = None) -> InducedMap:
    """Matrix of ``H_k(f)`` in the generator bases of source and target."""
    p = target._basis.p if target._basis is not None else None
    cols = []
    for z in source.generators:
        cols.append(target.coordinates(chain_map.apply(z)))
    matrix = [[cols[j][i] for j in range(len(cols))] for i in range(target.rank)]
    if not cols:
        matrix = [[] for _ in range(target.rank)]
    return InducedMap(source, target, matrix, source.degree if degree is None else degree, p)


def matrix_rank(matrix: Sequence[Sequence], p: int | None = None) -> int:
    if not matrix or not matrix[0]:
        return 0
    m = SparseMatrix.from_dense(matrix)
    return rank(m, p if p else "Q")


def persistent_rank(m: InducedMap) -> int:
    """Rank of the free-part matrix over the rationals (or F_p)."""
    return matrix_rank(m.matrix, m.p)
