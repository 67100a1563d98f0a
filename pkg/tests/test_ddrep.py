import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddeig.ddrep import DDMatrix, from_entries, read_ddm, to_dense, tridiag_from_parts, write_ddm
from ddeig.discretize import build_tn
from ddeig.exceptions import DDMParseError, NotDiagonallyDominant


def test_from_entries_t2():
    m = from_entries([[2.0, -1.0], [-1.0, 2.0]])
    np.testing.assert_array_equal(m.v, [1.0, 1.0])
    np.testing.assert_array_equal(m.offdiag, [[0.0, -1.0], [-1.0, 0.0]])
    assert m.signs is None


def test_from_entries_zero_row_sums():
    np.testing.assert_array_equal(from_entries([[1.0, -1.0], [-1.0, 1.0]]).v, [0.0, 0.0])


def test_from_entries_rejects_non_dominant():
    with pytest.raises(NotDiagonallyDominant, match="v\\[0\\] = -1.0"):
        from_entries([[1.0, -2.0], [0.0, 1.0]])


def test_zero_tolerance_is_exact():
    # one ulp short of dominance is rejected
    with pytest.raises(NotDiagonallyDominant):
        from_entries([[np.nextafter(1.0, 0.0), 1.0], [0.0, 1.0]])


def test_negative_diagonal_rows_are_sign_scaled():
    m = from_entries([[-3.0, 1.0], [1.0, 2.0]])
    np.testing.assert_array_equal(m.signs, [-1.0, 1.0])
    np.testing.assert_array_equal(m.v, [2.0, 1.0])
    np.testing.assert_array_equal(to_dense(m), [[3.0, -1.0], [1.0, 2.0]])


def test_to_dense_examples():
    np.testing.assert_array_equal(to_dense(DDMatrix([[0.0, -1.0], [-1.0, 0.0]], [1.0, 1.0])), [[2, -1], [-1, 2]])
    np.testing.assert_array_equal(to_dense(DDMatrix(np.zeros((1, 1)), [3.0])), [[3.0]])
    np.testing.assert_array_equal(build_tn(3).to_dense(), [[2, -1, 0], [-1, 2, -1], [0, -1, 2]])


def test_constructor_rejects_negative_v_and_bad_shapes():
    with pytest.raises(NotDiagonallyDominant):
        DDMatrix(np.zeros((2, 2)), [1.0, -1e-300])
    with pytest.raises(ValueError):
        DDMatrix(np.zeros((2, 3)), [1.0, 1.0])
    with pytest.raises(ValueError):
        tridiag_from_parts([1.0, 2.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        DDMatrix(np.zeros((2, 2)), [1.0, np.inf])


def test_immutable():
    m = build_tn(4)
    with pytest.raises(ValueError):
        m.v[0] = 5.0
    with pytest.raises(AttributeError):
        m.v = np.zeros(4)


def test_tridiag_storage_agrees_with_dense():
    m = tridiag_from_parts([-1.0, -0.5, 0.25], [0.0, 1.0, 0.5, 2.0])
    d = m.as_dense_storage()
    np.testing.assert_array_equal(m.to_dense(), d.to_dense())
    x = np.array([1.0, -2.0, 3.0, 0.5])
    np.testing.assert_allclose(m.matvec(x), d.to_dense() @ x, rtol=0, atol=1e-15)
    assert from_entries(m.to_dense(), storage="tridiag") == m


def test_tridiag_from_entries_rejects_wide_band():
    a = np.diag([5.0, 5.0, 5.0])
    a[0, 2] = a[2, 0] = 1.0
    with pytest.raises(ValueError, match="tridiagonal"):
        from_entries(a, storage="tridiag")


# --- bit-exact round trips -------------------------------------------------------
# Values are multiples of 2**-8 in [-4, 4]: every dominance sum of ten of them is
# exact in double precision, so the round trip is bit-exact regardless of rounding.

dyadic = st.integers(-1024, 1024).map(lambda k: k / 256.0)


@st.composite
def dd_dyadic(draw):
    n = draw(st.integers(1, 10))
    off = np.array(draw(st.lists(dyadic, min_size=n * n, max_size=n * n))).reshape(n, n)
    np.fill_diagonal(off, 0.0)
    v = np.abs(np.array(draw(st.lists(dyadic, min_size=n, max_size=n))))
    return DDMatrix(off, v)


@settings(max_examples=200, deadline=None)
@given(dd_dyadic())
def test_to_dense_from_entries_round_trip(m):
    a = to_dense(m)
    m2 = from_entries(a)
    assert np.array_equal(m2.v, m.v)
    assert np.array_equal(to_dense(m2), a)


@settings(max_examples=100, deadline=None)
@given(dd_dyadic())
def test_ddm_file_round_trip_dense(tmp_path_factory, m):
    path = tmp_path_factory.mktemp("ddm") / "m.ddm"
    write_ddm(m, path)
    assert read_ddm(path) == m


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False, allow_subnormal=True), min_size=1, max_size=12))
def test_ddm_round_trip_is_lossless_for_any_float(tmp_path_factory, vals):
    # shortest-repr decimal serialization survives arbitrary doubles
    vals = np.array(vals)
    n = len(vals) + 1
    m = tridiag_from_parts(vals, np.abs(np.concatenate([vals, [0.1]])))
    path = tmp_path_factory.mktemp("ddm") / "t.ddm"
    write_ddm(m, path)
    assert read_ddm(path) == m
    assert read_ddm(path).n == n


def test_write_read_tn(tmp_path):
    path = tmp_path / "t3.ddm"
    write_ddm(build_tn(3), path)
    text = path.read_text()
    assert text.startswith("DDM 3 tridiag\nv: 1.0 0.0 1.0\n")
    assert read_ddm(path) == build_tn(3)


def test_read_empty_offdiag_and_comments(tmp_path):
    path = tmp_path / "d.ddm"
    path.write_text("# a diagonal matrix\nDDM 2 dense   # header\n\nv: 1 2\n")
    np.testing.assert_array_equal(read_ddm(path).to_dense(), np.diag([1.0, 2.0]))


@pytest.mark.parametrize(
    "text, line, message",
    [
        ("DDX 2 dense\nv: 1 1\n", 1, "header"),
        ("DDM two dense\nv: 1 1\n", 1, "dimension"),
        ("DDM 2 banded\nv: 1 1\n", 1, "storage"),
        ("DDM 2 dense\nv: 1\n", 2, "expected 2"),
        ("DDM 2 dense\nv: 1 -1\n", 2, "nonnegative"),
        ("DDM 2 dense\nv: 1 1\n1 3 0.5\n", 3, "out of range"),
        ("DDM 2 dense\nv: 1 1\n1 1 0.5\n", 3, "diagonal"),
        ("DDM 2 dense\nv: 1 1\n1 2 0.5\n1 2 0.5\n", 4, "duplicate"),
        ("DDM 2 dense\nv: 1 1\n1 2 abc\n", 3, "bad number"),
        ("DDM 3 tridiag\nv: 1 1 1\n1 3 0.5\n", 3, "band"),
        ("DDM 3 tridiag\nv: 1 1 1\n1 2 0.5\n2 1 0.25\n", 4, "symmetry"),
        ("DDM 2 dense\nv: 1 1\nv: 1 1\n", 3, "duplicate"),
    ],
)
def test_parse_errors_carry_line_numbers(tmp_path, text, line, message):
    path = tmp_path / "bad.ddm"
    path.write_text(text)
    with pytest.raises(DDMParseError, match=message) as info:
        read_ddm(path)
    assert info.value.lineno == line
    assert f":{line}:" in str(info.value)


def test_missing_sections(tmp_path):
    path = tmp_path / "bad.ddm"
    path.write_text("# nothing\n")
    with pytest.raises(DDMParseError, match="header"):
        read_ddm(path)
    path.write_text("DDM 2 dense\n")
    with pytest.raises(DDMParseError, match="v:"):
        read_ddm(path)
