import itertools

import numpy as np
import pytest

from oracles import PolyField, csa, mat_inv, mat_mul
from qxbtpir.decoder import (
    DecodeInvariantError, InstanceDecoder, LayoutError, candidate_sets, consistency_check,
    decode_full, noise_estimate, recover, rty_build,
)
from qxbtpir.fieldcore import field_make
from qxbtpir.matfield import EvalPoints, MatrixFq, csa_build
from qxbtpir.protocol import make_params

C7_GF8 = [[7, 6, 5, 4, 3, 2, 1], [0, 5, 2, 6, 7, 3, 4], [4, 5, 1, 2, 3, 6, 7], [0, 4, 6, 6, 1, 3, 6],
          [5, 4, 3, 2, 7, 6, 1], [0, 2, 5, 1, 2, 2, 6], [3, 2, 7, 6, 5, 4, 1]]


def c_matrix(q_p, r, N, L):
    F = field_make(q_p, r)
    return csa_build(EvalPoints.default(F, N, L)).inv()


def received(C, L, interference, B, w, rng, byz=(), U=None):
    """``C @ (CSA [w; I]) + C[:, byz] U`` built directly in the C domain."""
    F = C.field
    N = C.rows
    full = np.zeros(N, np.int64)
    full[:L] = w
    full[L: L + interference] = F.random(rng, interference)
    if byz:
        full = F.add(full, C.select_cols(byz) @ np.asarray(U, np.int64))
    return full


def test_b_zero_bundle():
    C = c_matrix(2, 3, 7, 1)
    b = rty_build(C, (), 1, 3, 3, 0)
    assert b.Tmat.shape == (0, 0) and b.Ymat.shape == (0, 0) and b.R.shape == (1, 0)
    assert b.check_rows == () and b.tail_rows == ()
    assert candidate_sets(7, 0) == [()]


def test_frozen_slices_n7():
    C = c_matrix(2, 3, 7, 1)
    assert C.data.tolist() == C7_GF8
    for j in range(7):
        b = rty_build(C, (j,), 1, 2, 2, 1)
        assert b.Ymat.data.tolist() == [[C7_GF8[6][j]]]
        assert b.Tmat.data.tolist() == [[C7_GF8[5][j]]]
        assert b.R.data.tolist() == [[C7_GF8[0][j]]]
        assert b.check_rows == (5,) and b.tail_rows == (6,)


def test_rty_rejects():
    C = c_matrix(2, 3, 7, 1)
    with pytest.raises(ValueError):
        rty_build(C, (0,), 1, 2, 1, 1)
    with pytest.raises(ValueError):
        rty_build(C, (0, 1), 1, 2, 2, 1)
    with pytest.raises(ValueError):
        rty_build(C, (7,), 1, 2, 2, 1)
    assert rty_build(C, (), 1, 2, 2, 1, exact_size=False).Yinv is None


@pytest.mark.parametrize("N,L,B,p,r", [(7, 1, 1, 2, 3), (8, 2, 1, 11, 1), (10, 2, 2, 13, 1), (9, 1, 2, 11, 1)])
def test_noise_estimate_true_and_zero(N, L, B, p, r):
    C = c_matrix(p, r, N, L)
    F = C.field
    I = N - L - 2 * B
    rng = np.random.default_rng(N)
    for j in itertools.combinations(range(N), B):
        U = F.random(rng, B)
        y = received(C, L, I, B, F.random(rng, L), rng, j, U)
        b = rty_build(C, j, L, I, 0, B)
        assert np.array_equal(noise_estimate(y[N - B:], b), U)
        assert consistency_check(noise_estimate(y[N - B:], b), b, y[N - 2 * B: N - B])
        # U = 0 reads zero for every candidate
        y0 = received(C, L, I, B, F.random(rng, L), rng)
        for j2 in itertools.combinations(range(N), B):
            b2 = rty_build(C, j2, L, I, 0, B)
            assert not np.any(noise_estimate(y0[N - B:], b2))


def test_wrong_candidate_formula():
    # U~ = Y(j2)^-1 Y(j1) U, checked against schoolbook arithmetic
    N, L, B = 10, 2, 2
    C = c_matrix(13, 1, N, L)
    F, O = C.field, PolyField(13)
    Cl = C.data.tolist()
    rng = np.random.default_rng(1)
    for j1, j2 in [((0, 1), (2, 3)), ((4, 9), (4, 5)), ((3, 7), (0, 8))]:
        U = F.random(rng, B)
        y = received(C, L, N - L - 2 * B, B, F.random(rng, L), rng, j1, U)
        Y1 = [[Cl[r][c] for c in j1] for r in range(N - B, N)]
        Y2 = [[Cl[r][c] for c in j2] for r in range(N - B, N)]
        expect = mat_mul(O, mat_mul(O, mat_inv(O, Y2), Y1), [[int(u)] for u in U])
        got = noise_estimate(y[N - B:], rty_build(C, j2, L, N - L - 2 * B, 0, B))
        assert got.tolist() == [e[0] for e in expect]


@pytest.mark.parametrize("N,L,B,p,r", [(7, 1, 1, 2, 3), (8, 2, 1, 11, 1), (10, 3, 1, 13, 1)])
def test_wrong_candidates_fail_or_agree(N, L, B, p, r):
    C = c_matrix(p, r, N, L)
    F = C.field
    I = N - L - 2 * B
    dec = InstanceDecoder(C, L, I, B)
    rng = np.random.default_rng(7)
    for _ in range(1000):
        j1 = tuple(sorted(rng.choice(N, B, replace=False).tolist()))
        w = F.random(rng, L)
        y = received(C, L, I, B, w, rng, j1, F.random(rng, B))
        rec, passing, chosen, _, agree = dec.decode(y, "assert-all-agree")
        assert np.array_equal(rec, w) and agree and j1 in passing
        for j2 in passing:
            b = rty_build(C, j2, L, I, 0, B, exact_size=len(j2) == B)
            assert np.array_equal(recover(y[:L], noise_estimate(y[N - B:], b), b), w)


def test_short_candidates_consistent():
    # one corrupted coordinate under B = 2 passes some size-2 set and may pass a size-1 set
    N, L, B = 10, 2, 2
    C = c_matrix(13, 1, N, L)
    F = C.field
    dec = InstanceDecoder(C, L, N - L - 2 * B, B)
    rng = np.random.default_rng(2)
    w = F.random(rng, L)
    y = received(C, L, N - L - 2 * B, B, w, rng, (4,), [5])
    rec, passing, _, _, agree = dec.decode(y, "assert-all-agree")
    assert np.array_equal(rec, w) and agree and (4,) in passing
    b = rty_build(C, (4,), L, N - L - 2 * B, 0, B, exact_size=False)
    assert noise_estimate(y[N - B:], b).tolist() == [5]


def test_all_b_subsets_invertible_up_to_10():
    # every B x B sub-block of the tail rows is invertible for default points
    for N in range(3, 11):
        for B in range(1, (N - 1) // 2 + 1):
            for L in range(1, N - 2 * B + 1):
                P = make_params(N, 1, 0, N - L - 2 * B, B, scheme="classical", L=L) \
                    if N - L - 2 * B >= 1 else None
                if P is None:
                    continue
                C = P.instances[0].C
                O = PolyField(P.field.p, P.field.r)
                Cl = C.data.tolist()
                for j in itertools.combinations(range(N), B):
                    Y = [[Cl[r][c] for c in j] for r in range(N - B, N)]
                    assert mat_inv(O, Y) is not None, (N, L, B, j)
                InstanceDecoder(C, L, N - L - 2 * B, B)


def test_no_passing_candidate_raises():
    N, L, B = 7, 1, 1
    C = c_matrix(2, 3, N, L)
    dec = InstanceDecoder(C, L, N - L - 2 * B, B)
    rng = np.random.default_rng(0)
    raised = 0
    for _ in range(50):
        y = C.field.random(rng, N)
        try:
            dec.decode(y)
        except DecodeInvariantError:
            raised += 1
    assert raised > 0


def test_interference_rows_ignored():
    N, L, B = 8, 2, 1
    C = c_matrix(11, 1, N, L)
    F = C.field
    dec = InstanceDecoder(C, L, N - L - 2 * B, B)
    rng = np.random.default_rng(5)
    w = F.random(rng, L)
    U = F.random(rng, B)
    y = received(C, L, N - L - 2 * B, B, w, rng, (3,), U)
    base = dec.decode(y)
    for _ in range(20):
        y2 = y.copy()
        y2[L: N - 2 * B] = F.random(rng, N - L - 2 * B)
        out = dec.decode(y2)
        assert np.array_equal(out[0], base[0]) and out[2] == base[2]


def test_decode_full_layouts():
    P = make_params(10, 2, 1, 1, 3)
    with pytest.raises(LayoutError):
        decode_full(np.zeros(9, np.int64), P)
    with pytest.raises(ValueError):
        decode_full(np.zeros(10, np.int64), P, mode="vote")
    rep = decode_full(np.zeros(10, np.int64), P)
    assert rep.recovered_flat.tolist() == [0, 0] and rep.chosen_set == [(0, 1, 2)]
    assert rep.to_dict()["chosen_set"] == [[1, 2, 3]]


def test_decode_full_classical_answers():
    # classical path: y = CSA [w; I] + e on the Byzantine coordinates
    P = make_params(10, 2, 1, 1, 3)
    inst = P.instances[0]
    F = P.field
    rng = np.random.default_rng(8)
    M = csa_build(inst.pts, inst.L + P.X + P.T)
    for byz in itertools.combinations(range(10), 3):
        w = F.random(rng, inst.L)
        y = M @ np.concatenate([w, F.random(rng, P.X + P.T)])
        y[list(byz)] = F.add(y[list(byz)], F.random(rng, 3))
        assert np.array_equal(decode_full(y, P).recovered_flat, w)
