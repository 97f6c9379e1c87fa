from __future__ import annotations

import itertools
import json
import math

import numpy as np
import pytest

from oracles import brute_map, brute_profile, codebook, gf2_rank
from tcra import gf2codes as gf
from tcra.errors import (
    BudgetExceededError,
    ConstructionError,
    DivisibilityError,
    InconsistentWordError,
    ParameterError,
)
from tcra.polynomials import DegreePolynomial, Perspective, edge_to_node

E = Perspective.EDGE


def test_rank_examples():
    assert gf.rank(gf.Gf2Matrix.from_dense(np.eye(3))) == 3
    assert gf.rank(gf.Gf2Matrix.from_dense([[1, 1, 1], [0, 0, 0]])) == 1
    assert gf.hamming(3).h.rank() == 3


def test_rank_against_oracle_random():
    rng = np.random.default_rng(0)
    for _ in range(60):
        r, c = rng.integers(1, 20, 2)
        a = rng.integers(0, 2, (r, c))
        m = gf.Gf2Matrix.from_dense(a)
        assert m.rank() == gf2_rank(a) <= min(r, c)


def test_wide_matrix_packing():
    rng = np.random.default_rng(1)
    a = rng.integers(0, 2, (5, 150))
    m = gf.Gf2Matrix.from_dense(a)
    assert np.array_equal(m.to_dense(), a)
    assert m.rank() == gf2_rank(a)
    assert np.array_equal(gf.Gf2Matrix.from_hex_rows(m.hex_rows(), 150).to_dense(), a)


def test_map_no_erasures_returns_input():
    h = gf.hamming(3)
    c = h.random_codeword(np.random.default_rng(3))
    assert np.array_equal(gf.map_erase_decode(h, c), c)


def test_map_single_erasure():
    h = gf.hamming(3)
    w = np.zeros(7, dtype=np.int8)
    w[4] = -1
    assert np.array_equal(gf.map_erase_decode(h, w), np.zeros(7))


def test_map_fano_line_fails():
    h = gf.hamming(3)
    cols = h.h.to_dense().T
    for trip in itertools.combinations(range(7), 3):
        if not (cols[trip[0]] ^ cols[trip[1]] ^ cols[trip[2]]).any():
            w = np.zeros(7, dtype=np.int8)
            w[list(trip)] = -1
            assert gf.map_erase_decode(h, w) is None
            rk, _ = gf.solve_erasures(h, w)
            assert rk == gf2_rank(h.h.to_dense()[:, list(trip)]) == 2
            break
    else:
        pytest.fail("no dependent triple found")


def test_map_inconsistent_word():
    w = np.array([1, 0, 0], dtype=np.int8)  # odd weight, no erasures
    with pytest.raises(InconsistentWordError):
        gf.map_erase_decode(gf.single_parity_check(3), w)


@pytest.mark.parametrize("code", [gf.single_parity_check(3), gf.hamming(3), gf.reed_muller(1, 3),
                                  gf.cyclic_code([1, 1, 0, 1], 7)], ids=lambda c: c.label)
def test_map_matches_codebook_search(code):
    book = codebook(code.h.to_dense())
    assert len(book) == 2**code.k
    for c in book:
        for mask in range(1 << code.n):
            w = c.astype(np.int8).copy()
            er = [(mask >> i) & 1 for i in range(code.n)]
            w[np.array(er, dtype=bool)] = -1
            got = gf.map_erase_decode(code, w)
            want = brute_map(book, w)
            assert (got is None) == (want is None)
            if got is not None:
                assert np.array_equal(got, want)


def test_profiles_small_codes():
    assert np.array_equal(gf.exact_profile(gf.single_parity_check(3)).p_e, [0, 0, 1, 1])
    p = gf.exact_profile(gf.hamming(3)).p_e
    assert p[3] == 0.2


@pytest.mark.parametrize("code", [gf.hamming(3), gf.reed_muller(1, 3), gf.reed_muller(2, 4),
                                  gf.cyclic_code([1, 1, 1, 0, 1], 7, "c74")], ids=lambda c: c.label)
def test_exact_profile_oracle(code):
    assert np.allclose(gf.exact_profile(code).p_e, brute_profile(code.h.to_dense()), atol=1e-15)


def test_exact_profile_mds_is_step():
    # repetition code (4,1,4) is MDS
    rep = gf.reed_muller(0, 2)
    assert np.array_equal(gf.exact_profile(rep).p_e, gf.step_profile(4, 1, 4).p_e)


def test_exact_profile_budget():
    with pytest.raises(BudgetExceededError):
        gf.exact_profile(gf.reed_muller(2, 5))
    with pytest.raises(BudgetExceededError):
        gf.exact_profile(gf.hamming(4), budget=10)


def test_sampled_profile():
    rng = np.random.default_rng(0)
    assert np.array_equal(gf.sampled_profile(gf.single_parity_check(3), 10, rng).p_e, [0, 0, 1, 1])
    p = gf.sampled_profile(gf.hamming(3), 100_000, rng).p_e
    assert abs(p[3] - 0.2) <= 0.01
    assert p[2] == 0 and p[5] == 1


def test_step_and_linear():
    s = gf.step_profile(24, 14, 4).p_e
    assert s[3] == 0 and s[4] == 1
    lin = gf.linear_profile(24, 14, 4).p_e
    assert lin[4] == pytest.approx(0.125)
    assert lin[11] == 1 and lin[3] == 0
    assert np.all(gf.step_profile(8, 3, 1).p_e[1:] == 1)
    # MDS: ramp collapses to a step
    assert np.array_equal(gf.linear_profile(6, 3, 4).p_e, gf.step_profile(6, 3, 4).p_e)
    with pytest.raises(ParameterError):
        gf.step_profile(10, 5, 7)


def test_step_upper_bounds_exact():
    c = gf.named_code("cyclic24")
    assert np.all(gf.step_profile(24, 14, 4).p_e >= gf.exact_profile(c).p_e)


@pytest.mark.parametrize("r,m", [(2, 4), (0, 3), (0, 4), (3, 3), (1, 3), (1, 4), (2, 5)])
def test_reed_muller_parameters(r, m):
    c = gf.reed_muller(r, m)
    assert c.n == 2**m
    assert c.k == sum(math.comb(m, i) for i in range(r + 1))
    assert c.d_min == 2 ** (m - r)
    if c.k <= 16:
        assert gf.min_distance(c) == c.d_min


def test_reed_muller_errors():
    with pytest.raises(ParameterError):
        gf.reed_muller(4, 3)


def test_cyclic_24_14():
    c = gf.cyclic_code([1, 0, 0, 0, 1, 0, 1, 0, 0, 0, 1], 24)
    assert (c.n, c.k, c.d_min) == (24, 14, 4)
    assert c.h.rank() == 10


def test_cyclic_trivial():
    spc = gf.cyclic_code([1, 1], 3)
    assert (spc.n, spc.k, spc.d_min) == (3, 2, 2)
    assert np.array_equal(gf.exact_profile(spc).p_e, [0, 0, 1, 1])
    full = gf.cyclic_code([1], 7)
    assert (full.n, full.k, full.d_min) == (7, 7, 1)


def test_cyclic_divisibility():
    with pytest.raises(DivisibilityError):
        gf.cyclic_code([1, 1, 1], 5)


def test_codewords_satisfy_checks():
    rng = np.random.default_rng(5)
    for code in (gf.named_code("cyclic24"), gf.reed_muller(2, 5)):
        for _ in range(20):
            assert code.is_codeword(code.random_codeword(rng))


def test_min_distance_columns_independent():
    c = gf.named_code("cyclic24")
    h = c.h.to_dense()
    for sub in itertools.combinations(range(24), c.d_min - 1):
        assert gf2_rank(h[:, list(sub)]) == c.d_min - 1


def test_code_json_roundtrip(tmp_path):
    c = gf.reed_muller(1, 4)
    prof = gf.exact_profile(c)
    path = tmp_path / "code.json"
    path.write_text(json.dumps(c.to_json(prof)))
    back = gf.named_code(str(path))
    assert (back.n, back.k, back.d_min) == (16, 5, 8)
    assert np.array_equal(back.h.to_dense(), c.h.to_dense())
    assert np.array_equal(gf.ErasureFailureProfile.from_json(json.loads(path.read_text())["profile"]).p_e,
                          prof.p_e)


def test_failure_probability_limits():
    prof = gf.exact_profile(gf.hamming(3))
    assert prof.failure_probability(0.0) == 0.0
    assert prof.failure_probability(1.0) == pytest.approx(1.0)


# --------------------------------------------------------------------------
# LDPC construction


def _tv(counts: np.ndarray, pmf: np.ndarray) -> float:
    size = max(counts.size, pmf.size)
    a = np.zeros(size)
    b = np.zeros(size)
    a[:counts.size] = counts / counts.sum()
    b[:pmf.size] = pmf
    return 0.5 * float(np.abs(a - b).sum())


def test_regular_2_6_short_is_infeasible():
    lam = DegreePolynomial.monomial(2, E)
    rho = DegreePolynomial.monomial(6, E)
    # 12 degree-2 variables need 12 distinct check pairs; 4 checks have only 6
    with pytest.raises(ConstructionError):
        gf.build_ldpc(lam, rho, 12, np.random.default_rng(0), attempts=2)


def test_regular_2_6_girth():
    lam = DegreePolynomial.monomial(2, E)
    rho = DegreePolynomial.monomial(6, E)
    c = gf.build_ldpc(lam, rho, 60, np.random.default_rng(0))
    h = c.h.to_dense()
    assert set(h.sum(axis=0)) == {2} and set(h.sum(axis=1)) == {6}
    assert not gf.has_four_cycle(c)


def test_table_design_instance():
    lam = DegreePolynomial.parse("1:2", E)
    rho = DegreePolynomial.parse(
        "0.0303:3,0.09091:8,0.06061:9,0.09091:10,0.1212:11,0.303:13,0.303:14", E, renormalize=True)
    c = gf.build_ldpc(lam, rho, 1000, np.random.default_rng(4))
    assert abs(c.rate - 0.813) <= 0.01
    assert not gf.has_four_cycle(c)
    h = c.h.to_dense()
    vdeg = np.bincount(h.sum(axis=0))
    cdeg = np.bincount(h.sum(axis=1))
    Lam, P = edge_to_node(lam), edge_to_node(rho)
    assert _tv(vdeg, Lam.coeffs) <= 1 / 1000
    # check side: largest-remainder rounding plus socket balancing
    support = np.count_nonzero(P.coeffs)
    assert _tv(cdeg, P.coeffs) <= (support / 2 + 2) / h.shape[0]


def test_build_ldpc_deterministic():
    lam = DegreePolynomial.parse("0.5:2,0.5:3", E)
    rho = DegreePolynomial.monomial(8, E)
    a = gf.build_ldpc(lam, rho, 200, np.random.default_rng(11))
    b = gf.build_ldpc(lam, rho, 200, np.random.default_rng(11))
    assert a.h.hex_rows() == b.h.hex_rows()
