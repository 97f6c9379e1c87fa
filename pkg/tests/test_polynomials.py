from __future__ import annotations

import math

import numpy as np
import pytest

from tcra.errors import DegenerateError, DomainError, PerspectiveError
from tcra.polynomials import (
    DegreePolynomial,
    Perspective,
    TimeNodeLaw,
    edge_to_node,
    mean_degree,
    node_to_edge,
    sample_degree,
    sample_degrees,
    time_node_polys,
)

N, E = Perspective.NODE, Perspective.EDGE


def test_eval_monomial():
    assert DegreePolynomial.monomial(1).eval(0.5) == 0.5


def test_eval_at_one_is_one():
    p = DegreePolynomial.parse("0.2:1,0.3:4,0.5:7")
    assert p(1.0) == pytest.approx(1.0, abs=1e-15)
    q = DegreePolynomial.parse("0.5:2,0.5:5", E)
    assert q(1.0) == pytest.approx(1.0, abs=1e-15)


def test_eval_table_row():
    g = DegreePolynomial.parse("0.9091:4,0.09091:13", renormalize=True)
    # independent oracle: direct power sum on renormalized weights
    w = np.array([0.9091, 0.09091]) / (0.9091 + 0.09091)
    expect = w[0] * 0.9**4 + w[1] * 0.9**13
    assert g(0.9) == pytest.approx(expect, rel=1e-12)
    # unnormalized printed coefficients give 0.61957
    assert 0.9091 * 0.9**4 + 0.09091 * 0.9**13 == pytest.approx(0.61957, abs=1e-5)


def test_edge_eval_uses_shifted_exponent():
    lam = DegreePolynomial.parse("0.5:2,0.5:4", E)
    assert lam(0.5) == pytest.approx(0.5 * 0.5 + 0.5 * 0.125)


def test_eval_domain():
    p = DegreePolynomial.monomial(2)
    for x in (-0.1, 1.1, math.nan):
        with pytest.raises(DomainError):
            p(x)


def test_mean_degree_examples():
    assert mean_degree(DegreePolynomial.monomial(3)) == 3
    g = DegreePolynomial.parse("0.9091:4,0.09091:13", renormalize=True)
    assert g.mean_degree() == pytest.approx(4.818, abs=2e-3)
    assert DegreePolynomial.parse("0.5:2,0.5:4").mean_degree() == 3


def test_mean_degree_rejects_edge():
    with pytest.raises(PerspectiveError):
        DegreePolynomial.parse("1:2", E).mean_degree()


def test_node_to_edge_examples():
    assert node_to_edge(DegreePolynomial.monomial(2)).allclose(DegreePolynomial.monomial(2, E))
    g = node_to_edge(DegreePolynomial.parse("0.5:1,0.5:3"))
    assert g.allclose(DegreePolynomial([0, 0.25, 0, 0.75], E))
    Psi, psi = time_node_polys(TimeNodeLaw(2, 0.5))
    assert np.allclose(Psi.coeffs, [0.25, 0.5, 0.25])
    assert node_to_edge(Psi).allclose(DegreePolynomial([0, 0.5, 0.5], E))
    assert psi.allclose(node_to_edge(Psi))


def test_node_to_edge_degenerate():
    with pytest.raises(DegenerateError):
        node_to_edge(DegreePolynomial([1.0]))


def test_edge_to_node_roundtrip_regular():
    assert edge_to_node(DegreePolynomial.monomial(3, E)).allclose(DegreePolynomial.monomial(3))


def test_time_node_trivial_laws():
    Psi, psi = time_node_polys(TimeNodeLaw(5, 0.0))
    assert Psi.allclose(DegreePolynomial([1.0])) and psi is None
    Psi, _ = time_node_polys(TimeNodeLaw(1, 1.0))
    assert Psi.allclose(DegreePolynomial.monomial(1))


def test_time_node_closed_form():
    n, q = 7, 0.37
    Psi, psi = time_node_polys(TimeNodeLaw(n, q))
    for x in (0.0, 0.2, 0.9):
        assert Psi(x) == pytest.approx((1 - q + q * x) ** n, rel=1e-12)
        assert psi(x) == pytest.approx((1 - q + q * x) ** (n - 1), rel=1e-12)


def test_time_node_domain():
    with pytest.raises(DomainError):
        TimeNodeLaw(3, 1.5)


def test_validation():
    with pytest.raises(DomainError):
        DegreePolynomial([0.5, 0.6])
    with pytest.raises(PerspectiveError):
        DegreePolynomial([0.5, 0.5], E)
    # small drift is renormalized
    p = DegreePolynomial([0.0, 0.5, 0.5 + 5e-10])
    assert p.coeffs.sum() == pytest.approx(1.0, abs=1e-15)


def test_text_roundtrip():
    p = DegreePolynomial.parse("0.4762:1,0.4286:4,0.09524:10", renormalize=True)
    q = DegreePolynomial.from_json(p.to_json())
    assert p.allclose(q, atol=1e-12)


def test_sample_degree_constant():
    rng = np.random.default_rng(1)
    g = DegreePolynomial.monomial(4)
    assert {sample_degree(g, rng) for _ in range(50)} == {4}


def test_sample_degree_frequency():
    g = DegreePolynomial.parse("0.5:1,0.5:3")
    d = sample_degrees(g, 10**6, np.random.default_rng(2))
    assert abs(np.mean(d == 1) - 0.5) < 0.002


def test_sample_determinism():
    g = DegreePolynomial.parse("0.2:1,0.3:2,0.5:9")
    a = sample_degrees(g, 100, np.random.default_rng(9))
    b = sample_degrees(g, 100, np.random.default_rng(9))
    assert np.array_equal(a, b)
