from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import exact_ldu, exact_matrix, exact_rank, random_dd, sn_exact, to_float
from ddeig.aldu import LDLTFactors, PivotStrategy, _pick_pivot, factorize, factorize_tridiag, kappa_inf
from ddeig.ddrep import DDMatrix, from_entries, tridiag_from_parts
from ddeig.discretize import build_sn, build_tn
from ddeig.exceptions import ColumnDominancePivotUnavailable, ZeroPivot


def test_t2_one_step():
    f = factorize(from_entries([[2.0, -1.0], [-1.0, 2.0]]), "none")
    assert f.L[1, 0] == -0.5 and f.U[0, 1] == -0.5
    np.testing.assert_array_equal(f.d, [2.0, 1.5])
    assert f.rank == 2


def test_t3_matches_rational_elimination():
    L, d, U = exact_ldu(exact_matrix(build_tn(3)), [0, 1, 2])
    assert d == [2, Fraction(3, 2), Fraction(4, 3)]
    f = factorize(build_tn(3), PivotStrategy.NONE)
    np.testing.assert_allclose(f.d, to_float(d), rtol=1e-15)
    np.testing.assert_allclose(np.diag(f.L, -1), [-0.5, -2 / 3], rtol=1e-15)
    t = factorize_tridiag(build_tn(3))
    np.testing.assert_allclose(t.d, [2, 1.5, 4 / 3], rtol=1e-15)


def test_s3_exact_factorization():
    for f in (factorize(build_sn(3), "none"), factorize_tridiag(build_sn(3)).to_ldu()):
        np.testing.assert_array_equal(f.d, [1.0, 1.0, 0.0])
        np.testing.assert_array_equal(np.diag(f.L, -1), [-1.0, -1.0])
        assert f.rank == 2


def test_sn5_and_diagonal_only():
    np.testing.assert_array_equal(factorize_tridiag(build_sn(5)).d, [1, 1, 1, 1, 0])
    f = factorize_tridiag(tridiag_from_parts([0.0], [5.0, 7.0]))
    np.testing.assert_array_equal(f.d, [5.0, 7.0])
    np.testing.assert_array_equal(f.L, np.eye(2))


@pytest.mark.parametrize("N", range(2, 65))
def test_rank_of_sn(N):
    assert factorize_tridiag(build_sn(N)).rank == N - 1
    assert factorize(build_sn(N), "diag").rank == N - 1


def test_rank_of_sn_matches_rational_rank():
    for N in (2, 5, 9):
        assert exact_rank(sn_exact(N)) == factorize(build_sn(N), "cdd").rank


def test_zero_block_stops_elimination():
    # 3x3 with a trailing zero 2x2 block once row 0 is eliminated
    m = DDMatrix(np.zeros((3, 3)), [4.0, 0.0, 0.0])
    f = factorize(m, "none")
    np.testing.assert_array_equal(f.d, [4.0, 0.0, 0.0])
    assert f.rank == 1
    np.testing.assert_array_equal(f.L, np.eye(3))


def test_all_zero_matrix():
    f = factorize(DDMatrix(np.zeros((2, 2)), [0.0, 0.0]), "diag")
    assert f.rank == 0
    np.testing.assert_array_equal(f.d, [0.0, 0.0])


def test_unpivoted_zero_pivot_with_nonzero_column():
    # row 0 is zero (so v0 = 0 and the pivot vanishes) but column 0 is not
    off = np.array([[0.0, 0.0], [-1.0, 0.0]])
    m = DDMatrix(off, [0.0, 0.0])
    with pytest.raises(ZeroPivot):
        factorize(m, "none")
    # diagonal pivoting takes the nonzero pivot first
    f = factorize(m, "diag")
    assert list(f.perm) == [1, 0]


def test_diagonal_pivot_ties_take_lowest_index():
    f = factorize(from_entries(np.diag([3.0, 5.0, 5.0, 1.0])), "diag")
    assert list(f.perm) == [1, 2, 0, 3]


def test_cdd_pivot_exists_for_row_dominant_input():
    # every column sum equals its diagonal here (v = 0, cyclic)
    a = np.array([[1.0, -1.0, 0.0], [0.0, 1.0, -1.0], [-1.0, 0.0, 1.0]])
    f = factorize(from_entries(a), "cdd")
    assert f.rank == 2


def test_cdd_pivot_unavailable_is_reported():
    # Row dominance guarantees an admissible column in exact arithmetic, so the
    # error is exercised on a block that is not row dominant.
    block = np.array([[1.0, -2.0], [-2.0, 1.0]])
    with pytest.raises(ColumnDominancePivotUnavailable):
        _pick_pivot(PivotStrategy.COLUMN_DOMINANCE, np.diag(block).copy(), block)


def test_pivot_strategy_parse():
    assert PivotStrategy.parse("cdd") is PivotStrategy.COLUMN_DOMINANCE
    assert PivotStrategy.parse("diagonal") is PivotStrategy.DIAGONAL
    assert PivotStrategy.parse(None) is PivotStrategy.NONE
    with pytest.raises(ValueError):
        PivotStrategy.parse("rook")


def test_audit_passes_on_random_matrices():
    rng = np.random.default_rng(7)
    for _ in range(50):
        m = random_dd(rng, int(rng.integers(2, 9)))
        for s in PivotStrategy:
            if s is PivotStrategy.NONE:
                continue
            factorize(m, s, audit=True)


def test_residual_sanity():
    rng = np.random.default_rng(3)
    for _ in range(30):
        m = random_dd(rng, 8)
        f = factorize(m, "diag")
        a = m.to_dense()[np.ix_(f.perm, f.perm)]
        u = np.finfo(float).eps / 2
        assert np.linalg.norm(a - f.product(), np.inf) <= 10 * 8 * u * np.linalg.norm(a, np.inf)


def test_accuracy_independent_of_conditioning():
    # S_N + tiny I has kappa ~ 1 / tiny, yet every d_i is accurate to full precision
    n = 12
    tiny = 1e-20
    sn = build_sn(n)
    m = tridiag_from_parts(sn.offdiag, sn.v + tiny)
    for f in (factorize_tridiag(m).to_ldu(), factorize(m, "diag")):
        L, d, U = exact_ldu(exact_matrix(m), list(f.perm))
        np.testing.assert_allclose(f.d, to_float(d), rtol=1e-14)
    assert 0 < factorize_tridiag(m).d[-1] < 1e-18


@st.composite
def tridiag_dd(draw):
    n = draw(st.integers(1, 30))
    c = draw(st.lists(st.floats(-10, 10, allow_nan=False), min_size=n - 1, max_size=n - 1))
    v = draw(st.lists(st.one_of(st.just(0.0), st.floats(0, 10)), min_size=n, max_size=n))
    return tridiag_from_parts(c, v)


@settings(max_examples=200, deadline=None)
@given(tridiag_dd())
def test_tridiag_fast_path_is_bit_identical(m):
    t = factorize_tridiag(m)
    try:
        f = factorize(m.as_dense_storage(), PivotStrategy.NONE)
    except ZeroPivot:
        return
    assert np.array_equal(t.d, f.d)
    assert np.array_equal(t.L, f.L)
    assert np.array_equal(t.L.T, f.U)
    assert t.rank == f.rank


def test_ldlt_factors_conversion():
    t = factorize_tridiag(build_tn(4))
    assert isinstance(t, LDLTFactors)
    f = t.to_ldu()
    np.testing.assert_allclose(f.product(), build_tn(4).to_dense(), atol=1e-15)


@pytest.mark.parametrize("n", [5, 20, 50])
def test_cdd_condition_bounds_up_to_50(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        f = factorize(random_dd(rng, n), "cdd")
        assert kappa_inf(f.L) <= n**2
        assert kappa_inf(f.U) <= 2 * n
