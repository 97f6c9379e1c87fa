"""Degree-distribution algebra.

Coefficient vectors are indexed by degree. For a node-perspective
distribution ``A`` the polynomial is ``sum_i A_i x**i``; for an
edge-perspective distribution ``a`` it is ``sum_i a_i x**(i-1)``, so index
0 of an edge vector is always zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, DomainError, PerspectiveError

NORM_TOL = 1e-12
RENORM_TOL = 1e-9


class Perspective(str, enum.Enum):
    NODE = "node"
    EDGE = "edge"


def _check_unit(x: float) -> float:
    x = float(x)
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"x={x} outside [0, 1]")
    return x


@dataclass(frozen=True, eq=False)
class DegreePolynomial:
    """Probability mass function over integer degrees."""

    coeffs: np.ndarray
    perspective: Perspective = Perspective.NODE

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64).ravel()
        persp = Perspective(self.perspective)
        if c.size == 0:
            raise DegenerateError("empty coefficient vector")
        if np.any(~np.isfinite(c)) or np.any(c < 0.0) or np.any(c > 1.0 + RENORM_TOL):
            raise DomainError("coefficients must lie in [0, 1]")
        if persp is Perspective.EDGE and c[0] != 0.0:
            raise PerspectiveError("edge-perspective polynomial has mass at degree 0")
        total = c.sum()
        if abs(total - 1.0) > RENORM_TOL:
            raise DomainError(f"coefficients sum to {total!r}, not 1")
        c = c / total
        # trim trailing zeros but keep at least degree 0
        nz = np.flatnonzero(c)
        c = c[: (nz[-1] + 1 if nz.size else 1)].copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "perspective", persp)

    # construction ----------------------------------------------------------

    @classmethod
    def from_weights(cls, weights, perspective=Perspective.NODE) -> DegreePolynomial:
        """Build from arbitrary non-negative weights, normalizing them.

        Used for tabulated designs whose printed coefficients are rounded and
        for optimizer candidates.
        """
        w = np.clip(np.asarray(weights, dtype=np.float64).ravel(), 0.0, None)
        if Perspective(perspective) is Perspective.EDGE and w.size:
            w = w.copy()
            w[0] = 0.0
        s = w.sum()
        if s <= 0.0:
            raise DegenerateError("all weights are zero")
        return cls(w / s, perspective)

    @classmethod
    def from_pairs(cls, pairs, perspective=Perspective.NODE, renormalize=False):
        """Build from ``(coefficient, degree)`` pairs."""
        pairs = list(pairs)
        if not pairs:
            raise DegenerateError("no coefficient pairs")
        dmax = max(int(d) for _, d in pairs)
        w = np.zeros(dmax + 1)
        for c, d in pairs:
            if int(d) < 0:
                raise DomainError(f"negative degree {d}")
            w[int(d)] += float(c)
        if renormalize:
            return cls.from_weights(w, perspective)
        return cls(w, perspective)

    @classmethod
    def monomial(cls, degree: int, perspective=Perspective.NODE) -> DegreePolynomial:
        w = np.zeros(degree + 1)
        w[degree] = 1.0
        return cls(w, perspective)

    @classmethod
    def parse(cls, text: str, perspective=Perspective.NODE, renormalize=False):
        """Parse ``"0.4762:1,0.4286:4,0.09524:10"`` (coefficient:degree pairs)."""
        pairs = []
        for tok in text.replace(" ", "").split(","):
            if not tok:
                continue
            try:
                c, d = tok.split(":")
                pairs.append((float(c), int(d)))
            except ValueError as exc:
                raise DomainError(f"bad coefficient:degree token {tok!r}") from exc
        return cls.from_pairs(pairs, perspective, renormalize=renormalize)

    def format(self, digits: int = 12) -> str:
        return ",".join(
            f"{c:.{digits}g}:{d}" for d, c in enumerate(self.coeffs) if c > 0.0
        )

    def to_json(self) -> dict:
        return {"perspective": self.perspective.value, "coeffs": self.format()}

    @classmethod
    def from_json(cls, obj, renormalize=False) -> DegreePolynomial:
        if isinstance(obj, str):
            return cls.parse(obj, Perspective.NODE, renormalize)
        return cls.parse(obj["coeffs"], Perspective(obj.get("perspective", "node")), renormalize)

    # algebra ---------------------------------------------------------------

    @property
    def max_degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def is_node(self) -> bool:
        return self.perspective is Perspective.NODE

    def __call__(self, x: float) -> float:
        return self.eval(x)

    def eval(self, x: float) -> float:
        x = _check_unit(x)
        c = self.coeffs if self.is_node else self.coeffs[1:]
        acc = 0.0
        for a in c[::-1]:
            acc = acc * x + a
        return acc

    def mean_degree(self) -> float:
        if not self.is_node:
            raise PerspectiveError("mean_degree needs a node-perspective polynomial")
        return float(np.dot(np.arange(self.coeffs.size), self.coeffs))

    def integral(self) -> float:
        """Integral over [0, 1] of an edge-perspective polynomial, ``sum a_i / i``."""
        if self.is_node:
            raise PerspectiveError("integral is defined here for edge perspective")
        d = np.arange(1, self.coeffs.size)
        return float(np.sum(self.coeffs[1:] / d))

    def allclose(self, other: DegreePolynomial, atol: float = NORM_TOL) -> bool:
        if self.perspective is not other.perspective:
            return False
        n = max(self.coeffs.size, other.coeffs.size)
        a = np.zeros(n)
        b = np.zeros(n)
        a[: self.coeffs.size] = self.coeffs
        b[: other.coeffs.size] = other.coeffs
        return bool(np.allclose(a, b, rtol=0.0, atol=atol))

    def padded(self, size: int) -> np.ndarray:
        """Coefficient vector zero-padded to ``size`` entries."""
        out = np.zeros(max(size, self.coeffs.size))
        out[: self.coeffs.size] = self.coeffs
        return out

    def __repr__(self) -> str:
        return f"DegreePolynomial({self.format(6)!r}, {self.perspective.value})"


def node_to_edge(p: DegreePolynomial) -> DegreePolynomial:
    """Normalized derivative: ``a_i = i A_i / A'(1)``."""
    if not p.is_node:
        raise PerspectiveError("node_to_edge needs a node-perspective polynomial")
    w = np.arange(p.coeffs.size) * p.coeffs
    s = w.sum()
    if s <= 0.0:
        raise DegenerateError("all mass at degree 0; edge perspective undefined")
    return DegreePolynomial(w / s, Perspective.EDGE)


def edge_to_node(p: DegreePolynomial) -> DegreePolynomial:
    """Normalized anti-derivative, inverse of :func:`node_to_edge`."""
    if p.is_node:
        raise PerspectiveError("edge_to_node needs an edge-perspective polynomial")
    w = np.zeros_like(p.coeffs)
    w[1:] = p.coeffs[1:] / np.arange(1, p.coeffs.size)
    return DegreePolynomial(w / w.sum(), Perspective.NODE)


def mean_degree(p: DegreePolynomial) -> float:
    return p.mean_degree()


@dataclass(frozen=True)
class TimeNodeLaw:
    """Slot occupancy law: each of ``n_a`` users occupies a slot w.p. ``q``."""

    n_a: int
    q: float

    def __post_init__(self):
        if self.n_a < 0:
            raise DomainError("n_a must be non-negative")
        if not (0.0 <= self.q <= 1.0):
            raise DomainError(f"slot-selection probability q={self.q} outside [0, 1]")


def _binom_pmf(n: int, q: float) -> np.ndarray:
    k = np.arange(n + 1)
    logc = np.array([math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1) for i in k])
    lq = math.log(q) if q > 0 else -math.inf
    l1q = math.log1p(-q) if q < 1 else -math.inf
    terms = np.array([(i * lq if i else 0.0) + ((n - i) * l1q if n - i else 0.0) for i in k])
    return np.exp(logc + terms)


def time_node_polys(law: TimeNodeLaw) -> tuple[DegreePolynomial, DegreePolynomial | None]:
    """Node and edge perspective time-node distributions.

    ``Psi(x) = (1-q+qx)**n_a`` and ``psi(x) = (1-q+qx)**(n_a-1)``. The edge
    polynomial is ``None`` when no slot can be occupied (``q == 0`` or
    ``n_a == 0``).
    """
    big = DegreePolynomial(_binom_pmf(law.n_a, law.q), Perspective.NODE)
    if law.n_a == 0 or law.q == 0.0:
        return big, None
    small = np.zeros(law.n_a + 1)
    small[1:] = _binom_pmf(law.n_a - 1, law.q)
    return big, DegreePolynomial(small, Perspective.EDGE)


def sample_degree(p: DegreePolynomial, rng: np.random.Generator) -> int:
    if not p.is_node:
        raise PerspectiveError("sampling draws node degrees")
    return int(rng.choice(p.coeffs.size, p=p.coeffs))


def sample_degrees(p: DegreePolynomial, size: int, rng: np.random.Generator) -> np.ndarray:
    if not p.is_node:
        raise PerspectiveError("sampling draws node degrees")
    return rng.choice(p.coeffs.size, size=size, p=p.coeffs).astype(np.int64)
