import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lrcq.code import (
    CodeFormatError, QcCode, circulant_column, expand_parity_check, layer_circulants, load_code,
    parity_check_matrix, parse_alist, parse_qc_base_matrix, serialize_qc, to_alist,
)

FIXTURE_TEXT = "2 4 4\n0 1 -1 2\n2 -1 0 1\n"


def test_fixture_dimensions():
    code = parse_qc_base_matrix(FIXTURE_TEXT)
    assert code.lifting_size == 4
    assert (code.n, code.m) == (16, 8)
    assert code.num_layers == 2
    assert code.num_circulants == 6


def test_builtin_fixture_matches_text(fixture_code):
    assert fixture_code == parse_qc_base_matrix(FIXTURE_TEXT)


@pytest.mark.parametrize("r,p,L,c", [(5, 0, 8, 5), (2, 3, 4, 1), (1, 1, 4, 2)])
def test_circulant_column_examples(r, p, L, c):
    assert circulant_column(r, p, L) == c


@given(st.integers(1, 40), st.data())
def test_circulant_column_inverse(L, data):
    p = data.draw(st.integers(0, L - 1))
    cols = [circulant_column(r, p, L) for r in range(L)]
    assert sorted(cols) == list(range(L))
    back = [circulant_column(c, (L - p) % L, L) for c in cols]
    assert back == list(range(L))


def test_expand_counts_and_permutations(fixture_code):
    pairs = expand_parity_check(fixture_code)
    assert len(pairs) == 24
    assert len(set(pairs)) == 24


def test_expand_single_circulants():
    ident = QcCode(2, np.array([[0, 0]]))
    swap = QcCode(2, np.array([[1, 1]]))
    assert {p for p in expand_parity_check(ident) if p[1] < 2} == {(0, 0), (1, 1)}
    assert {p for p in expand_parity_check(swap) if p[1] < 2} == {(0, 1), (1, 0)}


def test_fixture_dense_matrix(fixture_H):
    # hand expansion of block (0, 1), shift 1: row r has its 1 in column (r + 1) mod 4
    block = fixture_H[0:4, 4:8]
    expect = np.zeros((4, 4), dtype=np.uint8)
    for r in range(4):
        expect[r, (r + 1) % 4] = 1
    np.testing.assert_array_equal(block, expect)
    np.testing.assert_array_equal(fixture_H[0:4, 8:12], 0)
    assert fixture_H.sum(axis=1).tolist() == [3] * 8


def test_layer_circulants(fixture_code):
    assert layer_circulants(fixture_code, 0) == [(0, 0), (1, 1), (3, 2)]
    assert layer_circulants(fixture_code, 1) == [(0, 2), (2, 0), (3, 1)]
    with pytest.raises(IndexError):
        layer_circulants(fixture_code, 2)


def test_layer_touches_each_variable_once(wimax):
    L = wimax.lifting_size
    for layer in range(wimax.num_layers):
        cols = [j for j, _ in layer_circulants(wimax, layer)]
        vars_ = [v for c, v in expand_parity_check(wimax) if c // L == layer]
        assert len(vars_) == len(set(vars_)) == len(cols) * L


@pytest.mark.parametrize("text,msg", [
    ("2 4 4\n0 4 -1 2\n2 -1 0 1\n", "out of range"),
    ("2 4 4\n-1 -1 -1 -1\n2 -1 0 1\n", "degree"),
    ("2 4 4\n0 1 -1\n2 -1 0 1\n", "entries"),
    ("2 4\n0 1 -1 2\n", "header"),
    ("x y z\n", "header"),
    ("3 4 4\n0 1 -1 2\n2 -1 0 1\n", "block-rows"),
    ("", "empty"),
])
def test_parse_errors(text, msg):
    with pytest.raises(CodeFormatError, match=msg):
        parse_qc_base_matrix(text)


def test_single_nonzero_row_rejected():
    with pytest.raises(CodeFormatError):
        parse_qc_base_matrix("1 3 4\n-1 2 -1\n")


def test_comments_ignored():
    text = "# fixture\n" + FIXTURE_TEXT.replace("\n0 1", "\n# layer 0\n0 1")
    assert parse_qc_base_matrix(text) == parse_qc_base_matrix(FIXTURE_TEXT)


@st.composite
def base_matrices(draw):
    L = draw(st.integers(2, 30))
    rows = draw(st.integers(1, 4))
    cols = draw(st.integers(2, 7))
    grid = []
    for _ in range(rows):
        row = draw(st.lists(st.integers(-1, L - 1), min_size=cols, max_size=cols))
        nz = [j for j, p in enumerate(row) if p >= 0]
        for j in range(cols):
            if len(nz) >= 2:
                break
            if row[j] < 0:
                row[j] = draw(st.integers(0, L - 1))
                nz.append(j)
        grid.append(row)
    return QcCode(L, np.array(grid))


@settings(max_examples=60)
@given(base_matrices())
def test_serialize_round_trip(code):
    text = serialize_qc(code)
    again = parse_qc_base_matrix(text)
    assert again == code
    assert serialize_qc(again) == text
    assert len(expand_parity_check(code)) == code.num_edges


def test_alist_round_trip(wimax):
    pairs = expand_parity_check(wimax)
    sparse = parse_alist(to_alist(pairs, wimax.n, wimax.m))
    assert sorted(sparse.pairs()) == sorted(pairs)
    np.testing.assert_array_equal(sparse.dense(), parity_check_matrix(wimax))


def test_alist_inconsistent_rejected():
    # variable side: v0 in check 0, v1 in check 1; check side swaps them
    text = "2 2\n1 1\n1 1\n1 1\n1\n2\n2\n1\n"
    with pytest.raises(CodeFormatError):
        parse_alist(text)


def test_wimax_profile(wimax):
    assert (wimax.n, wimax.m, wimax.lifting_size) == (576, 288, 24)
    assert wimax.design_rate == 0.5
    col_deg = (wimax.base_matrix >= 0).sum(axis=0)
    assert sorted(set(col_deg.tolist())) == [2, 3, 6]
    H = parity_check_matrix(wimax)
    assert np.linalg.matrix_rank(H.astype(float)) == 288


def test_array_code_even_checks(array_code):
    H = parity_check_matrix(array_code)
    assert (H.sum(axis=1) % 2 == 0).all()
    # girth > 4: no two columns share two checks
    overlap = H.T.astype(np.int32) @ H.astype(np.int32)
    np.fill_diagonal(overlap, 0)
    assert overlap.max() <= 1


def test_load_code_by_name_and_path(tmp_path, fixture_code):
    assert load_code("fixture") == fixture_code
    assert load_code("fixture.qc") == fixture_code
    p = tmp_path / "mine.qc"
    p.write_text(FIXTURE_TEXT)
    code = load_code(p)
    assert code == fixture_code and code.name == "mine"
    with pytest.raises(FileNotFoundError):
        load_code(tmp_path / "missing.qc")


def test_edge_index(fixture_code):
    e = fixture_code.edge(2, 3)
    assert (e.block_row, e.block_col, e.offset_in_circulant) == (0, 3, 3)
    with pytest.raises(IndexError):
        fixture_code.edge(0, 4)
