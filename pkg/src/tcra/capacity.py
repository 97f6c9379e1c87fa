"""Reference limits for the binary adder channel with erasures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import DomainError, ParameterError
from .polynomials import DegreePolynomial

TAIL_MASS = 1e-12


@dataclass(frozen=True)
class ActivityModel:
    """Poisson-distributed number of active users per frame."""

    mean_active: float

    def __post_init__(self):
        if not self.mean_active > 0:
            raise ParameterError("mean_active must be positive")

    def pmf(self, m) -> np.ndarray:
        return poisson.pmf(m, self.mean_active)

    def tail(self, m) -> np.ndarray:
        """``Pr[N_a > m]``."""
        return poisson.sf(m, self.mean_active)

    def support_max(self, mass: float = TAIL_MASS) -> int:
        return int(poisson.isf(mass, self.mean_active)) + 1


def _eps(epsilon: float) -> float:
    e = float(epsilon)
    if not (0.0 <= e <= 1.0):
        raise DomainError(f"epsilon={e} outside [0, 1]")
    return e


def sum_capacity(n_a: int, epsilon: float) -> float:
    """Sum-rate capacity with uniform inputs: ``(1-eps) H(Binomial(n_a, 1/2))``."""
    e = _eps(epsilon)
    if n_a < 0:
        raise DomainError("n_a must be non-negative")
    if n_a == 0:
        return 0.0
    i = np.arange(n_a + 1)
    log2c = (gammaln(n_a + 1) - gammaln(i + 1) - gammaln(n_a - i + 1)) / math.log(2.0)
    # 2^-n * sum C log2 C, with C = 2^log2c
    s = float(np.sum(np.exp2(log2c - n_a) * log2c))
    return (1.0 - e) * (n_a - s)


def orthogonal_capacity(n_a: int, epsilon: float) -> float:
    if n_a <= 0:
        raise DomainError("orthogonal capacity needs n_a >= 1")
    return (1.0 - _eps(epsilon)) / n_a


def complexity_constrained_capacity(psi_node: DegreePolynomial, n_a: int, epsilon: float) -> float:
    """Per-user rate when slot occupancy follows the node-perspective ``psi_node``."""
    if not psi_node.is_node:
        raise ParameterError("slot-occupancy pmf must be node perspective")
    if n_a <= 0:
        raise DomainError("n_a must be >= 1")
    total = sum(w * sum_capacity(k, epsilon) for k, w in enumerate(psi_node.coeffs) if w > 0)
    return total / n_a


def poisson_quantile_users(model: ActivityModel, p_outage: float) -> int:
    """Smallest ``m`` with ``Pr[N_a > m] <= p_outage``."""
    if not (0.0 < p_outage <= 1.0):
        raise ParameterError("p_outage must lie in (0, 1]")
    m = max(int(poisson.ppf(1.0 - p_outage, model.mean_active)) - 2, 0)
    while model.tail(m) > p_outage:
        m += 1
    while m > 0 and model.tail(m - 1) <= p_outage:
        m -= 1
    return m


@dataclass(frozen=True)
class OutageResult:
    rate: float
    capped: bool
    n_a_limit: int  # largest N_a that must be served


def outage_capacity(model: ActivityModel, epsilon: float, p_outage: float,
                    orthogonal: bool = False, cap: float = 1.0,
                    rate_tol: float = 1e-12) -> OutageResult:
    """Largest common rate whose outage probability stays within ``p_outage``.

    An outage is ``C_{N_a} < N_a R_t`` for ``N_a >= 1``. With ``orthogonal``
    each user is granted ``C_1 / N_a``. Found by bisection on ``R_t``; if the
    all-mass outage budget makes any rate admissible, ``cap`` is returned
    with ``capped=True``.
    """
    e = _eps(epsilon)
    if not (0.0 < p_outage < 1.0):
        raise ParameterError("p_outage must lie in (0, 1)")
    m_max = model.support_max()
    ns = np.arange(1, m_max + 1)
    if orthogonal:
        per_user = np.array([orthogonal_capacity(n, e) for n in ns])
    else:
        per_user = np.array([sum_capacity(n, e) / n for n in ns])
    w = model.pmf(ns)
    outage = lambda r: float(w[per_user < r].sum())  # noqa: E731
    if outage(cap) <= p_outage:
        return OutageResult(cap, True, m_max)
    lo, hi = 0.0, cap
    while hi - lo > rate_tol:
        mid = 0.5 * (lo + hi)
        if outage(mid) <= p_outage:
            lo = mid
        else:
            hi = mid
    served = int(ns[per_user >= lo].max()) if np.any(per_user >= lo) else 0
    return OutageResult(lo, False, served)


def capacity_table(n_values, epsilon: float, psi_nodes=None) -> list[dict]:
    """Rows of ``(n_a, C, C/n_a, orthogonal, complexity-constrained)``."""
    rows = []
    for n in n_values:
        c = sum_capacity(n, epsilon)
        row = {"n_a": n, "C": c, "C_per_user": c / n if n else 0.0,
               "orthogonal": orthogonal_capacity(n, epsilon) if n else 0.0}
        if psi_nodes is not None:
            row["complexity_constrained"] = complexity_constrained_capacity(psi_nodes(n), n, epsilon)
        rows.append(row)
    return rows
