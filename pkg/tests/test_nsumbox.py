import numpy as np
import pytest

from oracles import PolyField, dual_v
from qxbtpir.fieldcore import field_make, field_of_order
from qxbtpir.matfield import EvalPoints
from qxbtpir.nsumbox import (
    box_apply, dual_from_u, dual_scalings, is_self_orthogonal, kept_rows, transfer_matrix,
)

# Transfer matrices frozen from tests/oracles.py (alphas 0..N-1, f = N.., u = 1..N).
G_N2_Q5 = [[3, 1, 0, 0], [0, 0, 2, 4]]
G_N3_Q7 = [[3, 4, 1, 0, 0, 0], [0, 0, 0, 6, 5, 4], [0, 0, 0, 4, 3, 4]]


def test_dual_examples():
    F = field_make(5)
    pts = EvalPoints(F, (1, 2), (3,))
    with pytest.raises(ValueError):
        dual_from_u(pts, [1, 1])
    with pytest.raises(ValueError):
        dual_from_u(pts, [0, 1])
    dp = dual_from_u(pts, [1, 2])
    assert dp.v == (4, 3)


def test_dual_round_trip():
    # Applying the reciprocity formula to v gives back u.
    F = field_make(11)
    pts = EvalPoints.default(F, 6, 2)
    u = [3, 1, 4, 5, 9, 2]
    v = dual_scalings(pts, u)
    assert dual_scalings(pts, v).tolist() == u


@pytest.mark.parametrize("q,N", [(7, 5), (8, 6), (9, 4), (13, 9)])
def test_dual_matches_oracle(q, N):
    F = field_of_order(q)
    pts = EvalPoints.default(F, N, 1)
    dp = dual_from_u(pts)
    assert list(dp.v) == dual_v(PolyField(F.p, F.r), list(range(N)), list(dp.u))


def test_transfer_frozen():
    dp = dual_from_u(EvalPoints.default(field_make(5), 2, 1))
    assert transfer_matrix(dp, 1).G.data.tolist() == G_N2_Q5
    dp = dual_from_u(EvalPoints.default(field_make(7), 3, 1))
    assert transfer_matrix(dp, 1).G.data.tolist() == G_N3_Q7


def test_selector_shapes():
    assert kept_rows(2, 1, 1) == ((0,), (0,))
    r1, r2 = kept_rows(3, 1, 1)
    assert len(r1) == 1 and len(r2) == 2
    for N in range(2, 12):
        for L in range(N // 2 + 1):
            r1, r2 = kept_rows(N, L, L)
            assert len(r1) == N // 2 and len(r2) == (N + 1) // 2
            assert 2 * N - len(r1) - len(r2) == N  # N decoded symbols are dropped


def test_width_bound():
    dp = dual_from_u(EvalPoints.default(field_make(11), 6, 4))
    with pytest.raises(ValueError):
        transfer_matrix(dp, 4)


@pytest.mark.parametrize("q", [7, 8])
def test_random_dual_pairs_rank_and_orthogonality(q):
    F = field_of_order(q)
    rng = np.random.default_rng(q)
    for _ in range(50):
        N = int(rng.integers(2, q // 2 + 1))
        L = int(rng.integers(0, N // 2 + 1))
        if N + L > q:
            continue
        pts = EvalPoints.default(F, N, L)
        u = rng.choice(np.arange(1, q), size=N, replace=False)
        tm = transfer_matrix(dual_from_u(pts, u), L)
        assert tm.G.shape == (N, 2 * N)
        assert tm.G.rank() == N
        assert is_self_orthogonal(tm.G)


@pytest.mark.parametrize("N,L1,L2,q", [(5, 2, 3, 8), (9, 2, 3, 16), (7, 1, 2, 11), (6, 0, 1, 7)])
def test_unequal_widths_self_orthogonal(N, L1, L2, q):
    F = field_of_order(q)
    tm = transfer_matrix(dual_from_u(EvalPoints.default(F, N, max(L1, L2))), (L1, L2))
    assert tm.G.rank() == N and is_self_orthogonal(tm.G)


def test_u_independence_allows_gf2():
    F = field_make(2)
    dp = dual_from_u(EvalPoints.default(F, 2, 0), [1, 1], require_distinct=False)
    tm = transfer_matrix(dp, 0)
    assert tm.G.data.tolist() == [[1, 1, 0, 0], [0, 0, 1, 1]]
    assert is_self_orthogonal(tm.G)


def test_box_linear():
    F = field_make(2, 3)
    tm = transfer_matrix(dual_from_u(EvalPoints.default(F, 5, 2)), 2)
    rng = np.random.default_rng(0)
    assert not np.any(box_apply(tm, np.zeros(5, np.int64), np.zeros(5, np.int64)))
    for _ in range(50):
        x1, x2, z1, z2 = F.random(rng, (4, 5))
        c = int(F.random(rng))
        lhs = box_apply(tm, F.add(F.mul(c, x1), x2), F.add(F.mul(c, z1), z2))
        rhs = F.add(F.mul(c, box_apply(tm, x1, z1)), box_apply(tm, x2, z2))
        assert np.array_equal(lhs, rhs)
    with pytest.raises(ValueError):
        box_apply(tm, np.zeros(4, np.int64), np.zeros(5, np.int64))


def test_serialization():
    dp = dual_from_u(EvalPoints.default(field_make(7), 3, 1))
    d = transfer_matrix(dp, 1).to_dict()
    assert d["selector"] == {"L": [1, 1], "mu": 1, "nu": 2}
    assert d["rows_u"] == [1] and d["rows_v"] == [1, 3]
    assert d["dual"]["u"] == [1, 2, 3]
