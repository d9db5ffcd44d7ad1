"""Dual QCSA pairs and the algebraic N-sum box ``y = G(u, v) [x; z]``.

The box keeps, from instance 1 (``x`` inputs), rows ``1..L1`` and
``L1+nu+1..N`` of ``Hu^-1 x``; from instance 2 (``z`` inputs), rows
``1..L2`` and ``L2+mu+1..N`` of ``Hv^-1 z``, where ``mu = floor(N/2)`` and
``nu = ceil(N/2)``. With ``L1 == L2`` this is the square-block selector of
the dual-QCSA construction; unequal widths cover the padded two-instance
layout for odd N.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .fieldcore import FieldSpec
from .matfield import EvalPoints, MatrixFq, SingularMatrixError, qcsa_build


def _widths(L) -> tuple[int, int]:
    if isinstance(L, (tuple, list)):
        L1, L2 = (int(x) for x in L)
    else:
        L1 = L2 = int(L)
    return L1, L2


def dual_scalings(pts: EvalPoints, u) -> np.ndarray:
    """``v_j = (u_j * prod_{i != j}(alpha_j - alpha_i))^-1``."""
    F = pts.field
    a = np.array(pts.alphas, dtype=np.int64)
    u = np.asarray([int(x) for x in u], dtype=np.int64)
    diff = F.sub(a[:, None], a[None, :])
    np.fill_diagonal(diff, 1)
    prod = np.ones(len(a), dtype=np.int64)
    for col in range(len(a)):
        prod = F.mul(prod, diff[:, col])
    return F.inv(F.mul(u, prod))


@dataclass(frozen=True)
class DualPair:
    pts: EvalPoints
    u: tuple[int, ...]
    v: tuple[int, ...]

    @property
    def field(self) -> FieldSpec:
        return self.pts.field

    @property
    def N(self) -> int:
        return self.pts.N

    def h_u(self, L: int | None = None) -> MatrixFq:
        pts = self.pts if L is None else self.pts.truncate(L)
        return qcsa_build(pts, self.u)

    def h_v(self, L: int | None = None) -> MatrixFq:
        pts = self.pts if L is None else self.pts.truncate(L)
        return qcsa_build(pts, self.v)

    @cached_property
    def Hu(self) -> MatrixFq:
        return self.h_u()

    @cached_property
    def Hv(self) -> MatrixFq:
        return self.h_v()

    def to_dict(self) -> dict:
        return {
            "field": self.field.to_dict(),
            "points": self.pts.to_dict(),
            "u": list(self.u),
            "v": list(self.v),
        }


def default_u(field: FieldSpec, N: int) -> tuple[int, ...]:
    """First N nonzero elements in index order."""
    if field.q - 1 < N:
        raise ValueError(f"GF({field.q}) has fewer than {N} nonzero elements")
    return tuple(range(1, N + 1))


def dual_from_u(pts: EvalPoints, u=None, require_distinct: bool = True) -> DualPair:
    """Build the dual QCSA pair for scalings ``u``.

    ``require_distinct=False`` admits repeated ``u`` entries; the resulting
    transfer matrix is still self-orthogonal (``Hu^-1 Hv^-T`` does not depend
    on ``u``), which is what lets a two-qudit box live over GF(2).
    """
    if u is None:
        u = default_u(pts.field, pts.N)
    u = tuple(int(x) for x in u)
    if len(u) != pts.N:
        raise ValueError(f"need {pts.N} scalings, got {len(u)}")
    if any(x == 0 for x in u):
        raise ValueError("dual QCSA scalings u must be nonzero")
    if require_distinct and len(set(u)) != len(u):
        raise ValueError("dual QCSA scalings u must be distinct")
    v = tuple(int(x) for x in dual_scalings(pts, u))
    return DualPair(pts, u, v)


def kept_rows(N: int, L1: int, L2: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """0-based rows of ``Hu^-1 x`` and ``Hv^-1 z`` that survive the box."""
    mu, nu = N // 2, (N + 1) // 2
    r1 = tuple(range(L1)) + tuple(range(L1 + nu, N))
    r2 = tuple(range(L2)) + tuple(range(L2 + mu, N))
    return r1, r2


@dataclass(frozen=True)
class TransferMatrix:
    G: MatrixFq
    widths: tuple[int, int]
    rows_u: tuple[int, ...]
    rows_v: tuple[int, ...]
    dual: DualPair = field(repr=False, compare=False)

    @property
    def N(self) -> int:
        return self.G.rows

    @property
    def field(self) -> FieldSpec:
        return self.G.field

    @property
    def selector(self) -> dict:
        N = self.N
        return {"L": list(self.widths), "mu": N // 2, "nu": (N + 1) // 2}

    def split(self, y) -> tuple[np.ndarray, np.ndarray]:
        """Outputs coming from instance 1 and instance 2, respectively."""
        y = np.asarray(y)
        return y[: len(self.rows_u)], y[len(self.rows_u):]

    def to_dict(self) -> dict:
        return {
            "G": self.G.to_json(),
            "selector": self.selector,
            "rows_u": [r + 1 for r in self.rows_u],
            "rows_v": [r + 1 for r in self.rows_v],
            "dual": self.dual.to_dict(),
        }


def transfer_matrix(dp: DualPair, L) -> TransferMatrix:
    """``G(u, v) = S blockdiag(Hu, Hv)^-1``; ``L`` is one width or ``(L1, L2)``."""
    N = dp.N
    L1, L2 = _widths(L)
    mu, nu = N // 2, (N + 1) // 2
    if not (0 <= L1 <= mu and 0 <= L2 <= nu) or (L1 == L2 and L1 > mu):
        raise ValueError(f"message widths {(L1, L2)} exceed mu={mu}/nu={nu}")
    if max(L1, L2) > dp.pts.L:
        raise ValueError(f"dual pair has only {dp.pts.L} message points")
    hu_inv = dp.h_u(L1).inv()
    hv_inv = dp.h_v(L2).inv()
    r1, r2 = kept_rows(N, L1, L2)
    if len(r1) + len(r2) != N:
        raise ValueError(f"selector keeps {len(r1) + len(r2)} rows, need {N}")
    F = dp.field
    G = np.zeros((N, 2 * N), dtype=np.int64)
    G[: len(r1), :N] = hu_inv.data[list(r1)]
    G[len(r1):, N:] = hv_inv.data[list(r2)]
    return TransferMatrix(MatrixFq(F, G), (L1, L2), r1, r2, dp)


def box_apply(tm: TransferMatrix, x, z) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    z = np.asarray(z, dtype=np.int64)
    if x.shape != (tm.N,) or z.shape != (tm.N,):
        raise ValueError(f"box inputs must both have length {tm.N}")
    return tm.G @ np.concatenate([x, z])


def is_self_orthogonal(G: MatrixFq) -> bool:
    """Rows of ``[G1 | G2]`` pairwise symplectic-orthogonal: ``G1 G2^T`` symmetric."""
    N = G.cols // 2
    G1 = G.select_cols(range(N))
    G2 = G.select_cols(range(N, 2 * N))
    return (G1 @ G2.T) == (G2 @ G1.T)
