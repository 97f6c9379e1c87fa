"""GF(2) linear algebra, code constructions and erasure-failure profiles."""

from __future__ import annotations

import enum
import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import kernels
from .errors import (
    BudgetExceededError,
    ConstructionError,
    DivisibilityError,
    InconsistentWordError,
    ParameterError,
)
from .polynomials import DegreePolynomial, Perspective, edge_to_node

ERASED = -1
DEFAULT_BUDGET = 2**30


# --------------------------------------------------------------------------
# matrices


def _pack_rows(ints: list[int], cols: int) -> np.ndarray:
    words = max(1, (cols + 63) // 64)
    out = np.zeros((len(ints), words), dtype=np.uint64)
    mask = (1 << 64) - 1
    for i, v in enumerate(ints):
        for w in range(words):
            out[i, w] = (v >> (64 * w)) & mask
    return out


def _row_rank(rows: list[int]) -> int:
    """Rank of a list of row bitsets (xor basis keyed by lowest set bit)."""
    basis: dict[int, int] = {}
    for v in rows:
        while v:
            low = v & -v
            b = basis.get(low)
            if b is None:
                basis[low] = v
                break
            v ^= b
    return len(basis)


@dataclass(frozen=True, eq=False)
class Gf2Matrix:
    """Dense GF(2) matrix, bit-packed row-major into uint64 words.

    Bit ``j % 64`` of word ``j // 64`` in row ``i`` holds entry ``(i, j)``.
    """

    rows: int
    cols: int
    bits: np.ndarray

    @classmethod
    def from_dense(cls, a) -> Gf2Matrix:
        a = np.asarray(a, dtype=np.uint8) & 1
        if a.ndim != 2:
            raise ParameterError("expected a 2-D array")
        ints = [int("".join("1" if x else "0" for x in row[::-1]) or "0", 2) for row in a]
        return cls(a.shape[0], a.shape[1], _pack_rows(ints, a.shape[1]))

    @classmethod
    def from_row_ints(cls, ints, cols: int) -> Gf2Matrix:
        ints = [int(v) for v in ints]
        if any(v >> cols for v in ints):
            raise ParameterError("row has bits beyond the column count")
        return cls(len(ints), cols, _pack_rows(ints, cols))

    @cached_property
    def row_ints(self) -> list[int]:
        return [sum(int(w) << (64 * k) for k, w in enumerate(row)) for row in self.bits]

    @cached_property
    def column_words(self) -> np.ndarray:
        """Columns as bitsets over rows, shape ``(cols, words)`` for the kernels."""
        words = max(1, (self.rows + 63) // 64)
        colints = [0] * self.cols
        for i, r in enumerate(self.row_ints):
            while r:
                low = r & -r
                colints[low.bit_length() - 1] |= 1 << i
                r ^= low
        return np.ascontiguousarray(_pack_rows(colints, words * 64)[:, :words])

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols), dtype=np.uint8)
        for i, r in enumerate(self.row_ints):
            for j in range(self.cols):
                out[i, j] = (r >> j) & 1
        return out

    def rank(self) -> int:
        return _row_rank(self.row_ints)

    def hex_rows(self) -> list[str]:
        return [format(r, "x") for r in self.row_ints]

    @classmethod
    def from_hex_rows(cls, rows, cols: int) -> Gf2Matrix:
        return cls.from_row_ints([int(h, 16) for h in rows], cols)


def rank(m: Gf2Matrix) -> int:
    return m.rank()


def _rref(rows: list[int], pivot_order) -> tuple[list[int], list[int]]:
    """Reduced row echelon form; pivots chosen scanning columns in ``pivot_order``."""
    rows = [r for r in rows if r]
    pivots = []
    done = 0
    for col in pivot_order:
        bit = 1 << col
        sel = next((i for i in range(done, len(rows)) if rows[i] & bit), None)
        if sel is None:
            continue
        rows[done], rows[sel] = rows[sel], rows[done]
        for i in range(len(rows)):
            if i != done and rows[i] & bit:
                rows[i] ^= rows[done]
        pivots.append(col)
        done += 1
        if done == len(rows):
            break
    return rows[:done], pivots


# --------------------------------------------------------------------------
# codes


class ProfileKind(str, enum.Enum):
    EXACT = "exact"
    SAMPLED = "sampled"
    STEP = "step"
    LINEAR = "linear"


@dataclass(frozen=True, eq=False)
class ErasureFailureProfile:
    """``p_e[E]``: probability a block MAP decoder fails given ``E`` erasures."""

    p_e: np.ndarray
    kind: ProfileKind

    def __post_init__(self):
        p = np.array(self.p_e, dtype=np.float64)
        p.setflags(write=False)
        object.__setattr__(self, "p_e", p)
        object.__setattr__(self, "kind", ProfileKind(self.kind))

    @property
    def n(self) -> int:
        return self.p_e.size - 1

    def failure_probability(self, p_in: float) -> float:
        """Block failure probability under i.i.d. bit erasures of probability ``p_in``."""
        from scipy.stats import binom

        E = np.arange(self.n + 1)
        return float(np.dot(binom.pmf(E, self.n, p_in), self.p_e))

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "p_e": [float(x) for x in self.p_e]}

    @classmethod
    def from_json(cls, obj) -> ErasureFailureProfile:
        return cls(np.asarray(obj["p_e"], dtype=float), ProfileKind(obj["kind"]))


@dataclass(frozen=True, eq=False)
class LinearBlockCode:
    h: Gf2Matrix
    n: int
    k: int
    d_min: int | None = None
    label: str = ""
    _enc: tuple = field(default=None, repr=False, compare=False)

    @classmethod
    def from_parity_check(cls, h: Gf2Matrix, d_min: int | None = None, label: str = "",
                          compute_d_min: bool = False) -> LinearBlockCode:
        k = h.cols - h.rank()
        code = cls(h, h.cols, k, d_min, label)
        if d_min is None and compute_d_min:
            object.__setattr__(code, "d_min", min_distance(code))
        return code

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def redundancy(self) -> int:
        return self.n - self.k

    # encoding ----------------------------------------------------------------

    def _encoder(self):
        if self._enc is None:
            rows, pivots = _rref(self.h.row_ints, range(self.n - 1, -1, -1))
            free = sorted(set(range(self.n)) - set(pivots))
            object.__setattr__(self, "_enc", (rows, pivots, free))
        return self._enc

    def generator_rows(self) -> list[int]:
        """Basis of the code as row bitsets (one per information position)."""
        rows, pivots, free = self._encoder()
        gens = []
        for f in free:
            g = 1 << f
            for row, p in zip(rows, pivots):
                if (row >> f) & 1:
                    g |= 1 << p
            gens.append(g)
        return gens

    @property
    def information_set(self) -> list[int]:
        return list(self._encoder()[2])

    def encode_int(self, info: int) -> int:
        """Codeword whose information-set bits are ``info`` (bit t -> t-th free position)."""
        rows, pivots, free = self._encoder()
        c = 0
        for t, f in enumerate(free):
            if (info >> t) & 1:
                c |= 1 << f
        for row, p in zip(rows, pivots):
            if (row & c).bit_count() & 1:
                c |= 1 << p
        return c

    def random_codeword(self, rng: np.random.Generator) -> np.ndarray:
        info = int.from_bytes(rng.bytes((self.k + 7) // 8), "little") & ((1 << self.k) - 1)
        return int_to_bits(self.encode_int(info), self.n)

    def is_codeword(self, c) -> bool:
        ci = bits_to_int(c)
        return all((r & ci).bit_count() % 2 == 0 for r in self.h.row_ints)

    def codewords(self):
        """Iterate all codewords as ints (Gray-code order); only sensible for small k."""
        gens = self.generator_rows()
        c = 0
        yield c
        for i in range(1, 1 << self.k):
            c ^= gens[(i & -i).bit_length() - 1]
            yield c

    # persistence -------------------------------------------------------------

    def to_json(self, profile: ErasureFailureProfile | None = None) -> dict:
        obj = {"label": self.label, "n": self.n, "k": self.k, "d_min": self.d_min,
               "H": self.h.hex_rows()}
        if profile is not None:
            obj["profile"] = profile.to_json()
        return obj

    @classmethod
    def from_json(cls, obj) -> LinearBlockCode:
        h = Gf2Matrix.from_hex_rows(obj["H"], int(obj["n"]))
        code = cls.from_parity_check(h, obj.get("d_min"), obj.get("label", ""))
        if "k" in obj and int(obj["k"]) != code.k:
            raise ParameterError(f"stored k={obj['k']} disagrees with rank of H (k={code.k})")
        return code

    def __repr__(self) -> str:
        return f"LinearBlockCode({self.label or '?'}: n={self.n}, k={self.k}, d_min={self.d_min})"


def bits_to_int(bits) -> int:
    v = 0
    for i, b in enumerate(np.asarray(bits).ravel()):
        if b:
            v |= 1 << i
    return v


def int_to_bits(v: int, n: int) -> np.ndarray:
    return np.array([(v >> i) & 1 for i in range(n)], dtype=np.int8)


def min_distance(code: LinearBlockCode) -> int:
    """Exhaustive minimum distance (codeword enumeration or dependent-column search)."""
    if code.k == 0:
        raise ParameterError("zero-dimensional code has no minimum distance")
    if code.k <= 20:
        return min(c.bit_count() for c in itertools.islice(code.codewords(), 1, None))
    cols = [int(sum(int(w) << (64 * i) for i, w in enumerate(row)))
            for row in code.h.column_words]
    for w in range(1, code.n + 1):
        for sub in itertools.combinations(range(code.n), w):
            acc = 0
            for j in sub:
                acc ^= cols[j]
            if acc == 0:
                return w
    raise AssertionError("unreachable: k > 0 implies a nonzero codeword")


def solve_erasures(code: LinearBlockCode, word) -> tuple[int, np.ndarray | None]:
    """Eliminate on the erased columns of H; returns ``(rank(H_E), completion or None)``.

    Raises :class:`InconsistentWordError` when the known symbols violate a check
    that involves no erased position.
    """
    w = np.asarray(word, dtype=np.int8)
    if w.size != code.n:
        raise ParameterError(f"word length {w.size} != n={code.n}")
    erased = np.flatnonzero(w == ERASED).tolist()
    ones = bits_to_int(w == 1)
    ne = len(erased)
    aug = []
    for r in code.h.row_ints:
        a = 0
        for t, j in enumerate(erased):
            if (r >> j) & 1:
                a |= 1 << t
        s = (r & ones).bit_count() & 1
        aug.append(a | (s << ne))
    red, pivots = _rref(aug, range(ne))
    syn = 1 << ne
    # rows of the full system not used as pivots reduce to (0 | s); check them
    basis = {p: row for row, p in zip(red, pivots)}
    for row in aug:
        v = row
        for p, b in basis.items():
            if (v >> p) & 1:
                v ^= b
        if v == syn:
            raise InconsistentWordError("known symbols satisfy no codeword")
    rk = len(pivots)
    if rk < ne:
        return rk, None
    out = w.copy()
    for row, p in zip(red, pivots):
        out[erased[p]] = (row >> ne) & 1
    return rk, out


def map_erase_decode(code: LinearBlockCode, word) -> np.ndarray | None:
    """Block MAP erasure decoding: the unique completion, or ``None`` on failure."""
    return solve_erasures(code, word)[1]


# --------------------------------------------------------------------------
# profiles


def _check_range(n: int, k: int, d_min: int):
    if not (1 <= d_min <= n - k + 1):
        raise ParameterError(f"d_min={d_min} violates 1 <= d_min <= n-k+1 = {n - k + 1}")


def _forced(n: int, k: int, d_min: int) -> np.ndarray:
    p = np.zeros(n + 1)
    p[n - k + 1:] = 1.0
    return p


def step_profile(n: int, k: int, d_min: int) -> ErasureFailureProfile:
    _check_range(n, k, d_min)
    p = np.zeros(n + 1)
    p[d_min:] = 1.0
    return ErasureFailureProfile(p, ProfileKind.STEP)


def linear_profile(n: int, k: int, d_min: int) -> ErasureFailureProfile:
    _check_range(n, k, d_min)
    p = _forced(n, k, d_min)
    span = (n - k + 1) - (d_min - 1)
    for E in range(d_min, n - k + 1):
        p[E] = (E - (d_min - 1)) / span
    return ErasureFailureProfile(p, ProfileKind.LINEAR)


def _needs_d_min(code: LinearBlockCode) -> int:
    if code.d_min is None and code.k == 0:
        # only the zero word: erasures are always resolvable
        object.__setattr__(code, "d_min", code.n + 1)
    if code.d_min is None:
        if code.n > 24:
            raise ParameterError("d_min unknown and code too long for exhaustive search")
        object.__setattr__(code, "d_min", min_distance(code))
    return code.d_min


def exact_work(code: LinearBlockCode) -> int:
    d = _needs_d_min(code)
    return sum(math.comb(code.n, E) for E in range(d, code.n - code.k + 1))


def exact_profile(code: LinearBlockCode, budget: int = DEFAULT_BUDGET) -> ErasureFailureProfile:
    """Fraction of E-column submatrices of H with deficient rank, by enumeration."""
    n, k = code.n, code.k
    d = _needs_d_min(code)
    work = exact_work(code)
    if work > budget:
        raise BudgetExceededError(
            f"{code.label or 'code'}: {work} subset rank tests exceed budget {budget}; "
            "use sampled_profile"
        )
    p = _forced(n, k, d)
    r = n - k
    if d <= r:
        indep = kernels.count_independent(code.h.column_words, r)
        for E in range(d, r + 1):
            total = math.comb(n, E)
            p[E] = (total - int(indep[E])) / total
    return ErasureFailureProfile(p, ProfileKind.EXACT)


def _isotonic(y: np.ndarray) -> np.ndarray:
    """Pool-adjacent-violators fit of a non-decreasing sequence."""
    blocks = []  # (mean, weight)
    for v in y:
        blocks.append([float(v), 1])
        while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
            m2, w2 = blocks.pop()
            m1, w1 = blocks.pop()
            blocks.append([(m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2])
    return np.concatenate([np.full(w, m) for m, w in blocks])


def sampled_profile(code: LinearBlockCode, samples_per_E: int, rng: np.random.Generator,
                    chunk: int = 20000) -> ErasureFailureProfile:
    """Monte Carlo profile from uniformly random column orderings.

    Each ordering's length-E prefix is a uniform E-subset, so one ordering
    yields one sample at every E; ``p_e[E]`` is the fraction whose first
    dependent prefix is no longer than E.
    """
    if samples_per_E < 1:
        raise ParameterError("samples_per_E must be >= 1")
    n, k = code.n, code.k
    d = _needs_d_min(code)
    r = n - k
    p = _forced(n, k, d)
    if d > r:
        return ErasureFailureProfile(p, ProfileKind.SAMPLED)
    L = r + 1
    first = np.empty(0, dtype=np.int32)
    done = 0
    cols = code.h.column_words
    while done < samples_per_E:
        m = min(chunk, samples_per_E - done)
        orders = np.argsort(rng.random((m, n)), axis=1)[:, :L].astype(np.int32)
        first = np.concatenate([first, kernels.first_dependency(cols, np.ascontiguousarray(orders))])
        done += m
    counts = np.bincount(np.minimum(first, L), minlength=L + 1)
    cum = np.cumsum(counts) / samples_per_E
    est = np.array([cum[E] for E in range(d, r + 1)])
    p[d:r + 1] = np.clip(_isotonic(est), 0.0, 1.0)
    return ErasureFailureProfile(p, ProfileKind.SAMPLED)


def profile(code: LinearBlockCode, kind, rng=None, budget: int = DEFAULT_BUDGET,
            samples_per_E: int = 100_000) -> ErasureFailureProfile:
    """Profile of the requested kind; EXACT falls back to SAMPLED beyond ``budget``."""
    kind = ProfileKind(kind)
    d = _needs_d_min(code)
    if kind is ProfileKind.STEP:
        return step_profile(code.n, code.k, d)
    if kind is ProfileKind.LINEAR:
        return linear_profile(code.n, code.k, d)
    if kind is ProfileKind.EXACT:
        try:
            return exact_profile(code, budget)
        except BudgetExceededError:
            pass
    if rng is None:
        rng = np.random.default_rng(0)
    return sampled_profile(code, samples_per_E, rng)


# --------------------------------------------------------------------------
# constructions


def _monomial_rows(max_deg: int, m: int) -> list[int]:
    n = 1 << m
    rows = []
    for deg in range(max_deg + 1):
        for subset in itertools.combinations(range(m), deg):
            mask = sum(1 << i for i in subset)
            rows.append(sum(1 << x for x in range(n) if x & mask == mask))
    return rows


def reed_muller(r: int, m: int) -> LinearBlockCode:
    """RM(r, m); H is the generator of the dual code RM(m-r-1, m)."""
    if m < 0 or not (0 <= r <= m):
        raise ParameterError(f"need 0 <= r <= m, got r={r}, m={m}")
    n = 1 << m
    h_rows = _monomial_rows(m - r - 1, m) if r < m else []
    h = Gf2Matrix.from_row_ints(h_rows, n)
    code = LinearBlockCode.from_parity_check(h, d_min=1 << (m - r), label=f"RM({r},{m})")
    assert code.k == sum(math.comb(m, i) for i in range(r + 1))
    return code


def reed_muller_family(max_m: int, min_m: int = 1) -> list[LinearBlockCode]:
    return [reed_muller(r, m) for m in range(min_m, max_m + 1) for r in range(m + 1)]


def _poly_int(coeffs) -> int:
    return sum(1 << i for i, c in enumerate(coeffs) if int(c) & 1)


def _poly_divmod(a: int, b: int) -> tuple[int, int]:
    q = 0
    db = b.bit_length() - 1
    while a and a.bit_length() - 1 >= db:
        s = a.bit_length() - 1 - db
        q |= 1 << s
        a ^= b << s
    return q, a


def cyclic_code(gen_poly_coeffs, n: int, label: str = "") -> LinearBlockCode:
    """Cyclic code with generator ``g`` (coefficients low degree first)."""
    g = _poly_int(gen_poly_coeffs)
    if g == 0 or not g & 1:
        raise DivisibilityError("generator polynomial must have a nonzero constant term")
    h, rem = _poly_divmod((1 << n) | 1, g)
    if rem:
        raise DivisibilityError(f"g does not divide x^{n} + 1")
    k = h.bit_length() - 1
    deg_g = g.bit_length() - 1
    if k != n - deg_g:
        raise DivisibilityError("inconsistent degrees")
    # rows x^i * reciprocal(h), then systematic form with identity on the last n-k columns
    h_rec = int(format(h, f"0{k + 1}b")[::-1], 2) if k >= 0 else 0
    rows = [h_rec << i for i in range(n - k)]
    red, pivots = _rref(rows, range(n - 1, k - 1, -1))
    order = sorted(range(len(red)), key=lambda i: pivots[i])
    hm = Gf2Matrix.from_row_ints([red[i] for i in order], n)
    return LinearBlockCode.from_parity_check(
        hm, label=label or f"cyclic({n},{n - deg_g})", compute_d_min=(n <= 24 and k > 0)
    )


def hamming(m: int) -> LinearBlockCode:
    n = (1 << m) - 1
    cols = list(range(1, n + 1))
    rows = [sum(1 << j for j, c in enumerate(cols) if (c >> i) & 1) for i in range(m)]
    return LinearBlockCode.from_parity_check(Gf2Matrix.from_row_ints(rows, n), d_min=3,
                                             label=f"Hamming({n},{n - m})")


def single_parity_check(n: int) -> LinearBlockCode:
    return LinearBlockCode.from_parity_check(Gf2Matrix.from_row_ints([(1 << n) - 1], n),
                                             d_min=2, label=f"SPC({n},{n - 1})")


CYCLIC_24_14 = (1, 0, 0, 0, 1, 0, 1, 0, 0, 0, 1)  # 1 + x^4 + x^6 + x^10


def named_code(name: str) -> LinearBlockCode:
    """Resolve ``hamming74``, ``hamming:m``, ``spc:n``, ``rm:r,m``, ``cyclic24`` or a JSON path."""
    key = name.strip().lower()
    if key == "hamming74":
        return hamming(3)
    if key.startswith("hamming:"):
        return hamming(int(key.split(":")[1]))
    if key in ("spc3",):
        return single_parity_check(3)
    if key.startswith("spc:"):
        return single_parity_check(int(key.split(":")[1]))
    if key.startswith("rm:"):
        r, m = (int(x) for x in key[3:].split(","))
        return reed_muller(r, m)
    if key == "cyclic24":
        return cyclic_code(CYCLIC_24_14, 24, label="cyclic(24,14)")
    path = Path(name)
    if path.exists():
        return LinearBlockCode.from_json(json.loads(path.read_text()))
    raise ParameterError(f"unknown code {name!r}")


# --------------------------------------------------------------------------
# random LDPC instances


def _round_counts(pmf: np.ndarray, total: int) -> np.ndarray:
    """Largest-remainder rounding of ``total * pmf`` to integers summing to ``total``."""
    raw = pmf * total
    base = np.floor(raw).astype(np.int64)
    short = total - int(base.sum())
    if short > 0:
        order = np.argsort(-(raw - base), kind="stable")
        base[order[:short]] += 1
    return base


def _degree_sequences(Lam: DegreePolynomial, P: DegreePolynomial, n: int, rng):
    vcounts = _round_counts(Lam.coeffs, n)
    vdeg = np.repeat(np.arange(vcounts.size), vcounts)
    n_edges = int(vdeg.sum())
    m = max(1, int(round(n_edges / P.mean_degree())))
    ccounts = _round_counts(P.coeffs, m)
    cdeg = np.repeat(np.arange(ccounts.size), ccounts)
    support = np.flatnonzero(P.coeffs)
    lo, hi = int(support.min()), int(support.max())
    diff = n_edges - int(cdeg.sum())
    guard = 0
    while diff != 0:
        guard += 1
        if guard > 100 * (m + abs(diff)):
            raise ConstructionError("cannot match check sockets to variable sockets")
        i = int(rng.integers(m))
        if diff > 0 and cdeg[i] < hi:
            cdeg[i] += 1
            diff -= 1
        elif diff < 0 and cdeg[i] > lo:
            cdeg[i] -= 1
            diff += 1
    return vdeg, cdeg


class _Graph:
    """Socket matching with incremental 4-cycle / multi-edge bookkeeping."""

    def __init__(self, edge_var, edge_chk, n):
        self.ev = edge_var
        self.ec = edge_chk
        self.var_edges = [[] for _ in range(n)]
        for e, v in enumerate(edge_var):
            self.var_edges[v].append(e)
        self.pairs: dict[tuple[int, int], int] = {}
        self.bad = 0
        for v in range(n):
            self._add(v, 1)

    def _var_pairs(self, v):
        cs = sorted(self.ec[e] for e in self.var_edges[v])
        return itertools.combinations(cs, 2)

    def _add(self, v, sign):
        for pr in self._var_pairs(v):
            c = self.pairs.get(pr, 0)
            before = (c if pr[0] == pr[1] else max(c - 1, 0))
            c += sign
            self.pairs[pr] = c
            after = (c if pr[0] == pr[1] else max(c - 1, 0))
            self.bad += after - before

    def var_is_bad(self, v) -> bool:
        for pr in self._var_pairs(v):
            if pr[0] == pr[1] or self.pairs[pr] > 1:
                return True
        return False

    def swap(self, e1, e2):
        v1, v2 = self.ev[e1], self.ev[e2]
        self._add(v1, -1)
        if v2 != v1:
            self._add(v2, -1)
        self.ec[e1], self.ec[e2] = self.ec[e2], self.ec[e1]
        self._add(v1, 1)
        if v2 != v1:
            self._add(v2, 1)


def build_ldpc(lam: DegreePolynomial, rho: DegreePolynomial, n: int,
               rng: np.random.Generator, max_swaps: int | None = None,
               attempts: int = 5) -> LinearBlockCode:
    """Random Tanner graph from (lambda or Lambda, rho) with no 4-cycles.

    Sockets are matched by a random permutation; multi-edges and 4-cycles are
    then removed by random check-endpoint swaps that never increase the
    defect count.
    """
    Lam = edge_to_node(lam) if lam.perspective is Perspective.EDGE else lam
    if Lam.coeffs[0] > 0:
        raise ParameterError("variable nodes of degree 0 are not allowed")
    P = edge_to_node(rho)
    vdeg, cdeg = _degree_sequences(Lam, P, n, rng)
    m = cdeg.size
    edge_var = np.repeat(np.arange(n), vdeg).tolist()
    sockets = np.repeat(np.arange(m), cdeg)
    n_edges = len(edge_var)
    budget = max_swaps if max_swaps is not None else 400 * n_edges
    for _ in range(attempts):
        g = _Graph(edge_var, rng.permutation(sockets).tolist(), n)
        steps = 0
        while g.bad > 0 and steps < budget:
            steps += 1
            v = int(edge_var[int(rng.integers(n_edges))])
            if not g.var_is_bad(v):
                continue
            e1 = g.var_edges[v][int(rng.integers(len(g.var_edges[v])))]
            e2 = int(rng.integers(n_edges))
            if g.ec[e1] == g.ec[e2]:
                continue
            before = g.bad
            g.swap(e1, e2)
            if g.bad > before:
                g.swap(e1, e2)
        if g.bad == 0:
            rows = [0] * m
            for v, c in zip(g.ev, g.ec):
                rows[c] |= 1 << v
            h = Gf2Matrix.from_row_ints(rows, n)
            return LinearBlockCode.from_parity_check(h, label=f"LDPC(n={n},m={m})")
    raise ConstructionError(
        f"could not remove 4-cycles for n={n} after {attempts} attempts; "
        "degree pair infeasible at this length"
    )


def tanner_lists(code: LinearBlockCode) -> list[list[int]]:
    """Variable indices of each check row."""
    out = []
    for r in code.h.row_ints:
        vs = []
        while r:
            low = r & -r
            vs.append(low.bit_length() - 1)
            r ^= low
        out.append(vs)
    return out


def has_four_cycle(code: LinearBlockCode) -> bool:
    rows = code.h.row_ints
    for a in range(len(rows)):
        for b in range(a + 1, len(rows)):
            if (rows[a] & rows[b]).bit_count() >= 2:
                return True
    return False
