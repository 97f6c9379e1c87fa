from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import sum_capacity as sum_capacity_oracle
from tcra import capacity as cap
from tcra.errors import DomainError, ParameterError
from tcra.polynomials import DegreePolynomial


def test_sum_capacity_examples():
    assert cap.sum_capacity(1, 0.3) == pytest.approx(0.7, abs=1e-15)
    assert cap.sum_capacity(2, 0.0) == pytest.approx(1.5, abs=1e-12)
    assert cap.sum_capacity(2, 0.1) == pytest.approx(1.35, abs=1e-12)
    assert cap.sum_capacity(0, 0.1) == 0.0


@pytest.mark.parametrize("n", [1, 3, 7, 20, 61, 100])
def test_sum_capacity_oracle(n):
    assert cap.sum_capacity(n, 0.2) == pytest.approx(sum_capacity_oracle(n, 0.2), rel=1e-12)


def test_sum_capacity_domain():
    with pytest.raises(DomainError):
        cap.sum_capacity(3, 1.2)
    with pytest.raises(DomainError):
        cap.sum_capacity(-1, 0.0)


def test_orthogonal_capacity():
    assert cap.orthogonal_capacity(1, 0.0) == 1.0
    assert cap.orthogonal_capacity(5, 0.1) == pytest.approx(0.18)
    with pytest.raises(DomainError):
        cap.orthogonal_capacity(0, 0.1)
    for n in range(2, 40):
        assert cap.orthogonal_capacity(n, 0.1) <= cap.sum_capacity(n, 0.1) / n


def test_per_user_capacity_decreasing():
    v = [cap.sum_capacity(n, 0.1) / n for n in range(1, 65)]
    assert all(b < a for a, b in zip(v, v[1:]))


def test_complexity_constrained_examples():
    x = DegreePolynomial.monomial(1)
    for n in range(1, 21):
        assert cap.complexity_constrained_capacity(x, n, 0.1) == pytest.approx(
            cap.orthogonal_capacity(n, 0.1), abs=1e-12)
    for K in (2, 5):
        got = cap.complexity_constrained_capacity(DegreePolynomial.monomial(K), 7, 0.2)
        assert got == pytest.approx(cap.sum_capacity(K, 0.2) / 7, rel=1e-12)
    b = DegreePolynomial([0.25, 0.5, 0.25])
    assert cap.complexity_constrained_capacity(b, 2, 0.0) == pytest.approx(0.4375, abs=1e-12)


@given(st.integers(1, 12), st.floats(0.0, 1.0), st.lists(st.floats(0.01, 1.0), min_size=1, max_size=12))
def test_complexity_constrained_between_bounds(n, eps, w):
    w = w[:n]
    psi = DegreePolynomial.from_weights([0.0] + w)
    c = cap.complexity_constrained_capacity(psi, n, eps)
    assert cap.orthogonal_capacity(n, eps) - 1e-12 <= c <= cap.sum_capacity(n, eps) / n + 1e-12


def test_poisson_quantile():
    m6 = cap.ActivityModel(6.0)
    assert cap.poisson_quantile_users(m6, 0.1) == 9
    assert m6.tail(8) > 0.1 >= m6.tail(9)
    assert cap.poisson_quantile_users(m6, m6.tail(0)) == 0
    assert cap.poisson_quantile_users(m6, 1.0) == 0
    qs = [cap.poisson_quantile_users(m6, p) for p in (1e-1, 1e-3, 1e-6, 1e-9, 1e-12)]
    assert all(b >= a for a, b in zip(qs, qs[1:])) and qs[-1] > 20


def test_activity_model_validation():
    with pytest.raises(ParameterError):
        cap.ActivityModel(0.0)


def test_outage_capacity_example():
    res = cap.outage_capacity(cap.ActivityModel(6.0), 0.1, 0.1)
    want = min(cap.sum_capacity(n, 0.1) / n for n in range(1, 10))
    assert res.rate == pytest.approx(want, abs=1e-9)
    assert res.n_a_limit == 9 and not res.capped


def test_outage_capacity_orthogonal():
    res = cap.outage_capacity(cap.ActivityModel(6.0), 0.1, 0.1, orthogonal=True)
    assert res.rate == pytest.approx(0.9 / 9, abs=1e-9)


def test_outage_capacity_degenerate():
    m = cap.ActivityModel(3.0)
    assert cap.outage_capacity(m, 1.0, 0.1).rate == pytest.approx(0.0, abs=1e-9)
    big = cap.outage_capacity(m, 0.1, 1 - 1e-15)
    assert big.capped and big.rate == 1.0
    for p in (0.0, 1.0):
        with pytest.raises(ParameterError):
            cap.outage_capacity(m, 0.1, p)


def test_outage_capacity_monotone():
    rates = [cap.outage_capacity(cap.ActivityModel(m), 0.1, 0.05).rate for m in (1, 2, 4, 8, 16)]
    assert all(b <= a + 1e-12 for a, b in zip(rates, rates[1:]))
    rates = [cap.outage_capacity(cap.ActivityModel(6), 0.1, p).rate for p in (1e-4, 1e-2, 0.1, 0.5)]
    assert all(b >= a - 1e-12 for a, b in zip(rates, rates[1:]))


def test_capacity_table():
    rows = cap.capacity_table([1, 2], 0.0, psi_nodes=lambda n: DegreePolynomial.monomial(1))
    assert rows[1]["C"] == pytest.approx(1.5)
    assert rows[1]["C_per_user"] == pytest.approx(0.75)
    assert rows[1]["complexity_constrained"] == pytest.approx(0.5)
    assert math.isclose(rows[0]["orthogonal"], 1.0)
