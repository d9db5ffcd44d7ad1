"""Dense exact matrices over GF(q) and the Cauchy-Vandermonde constructors."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fieldcore import FieldError, FieldSpec, field_make


class SingularMatrixError(ArithmeticError):
    """Raised by inversion/solve when the matrix has no inverse."""


class MatrixFq:
    """Immutable dense matrix with entries stored as field indices.

    Zero-row or zero-column shapes are allowed so that degenerate protocol
    blocks (no Cauchy part, no Byzantine rows) compose without special cases.
    """

    __slots__ = ("field", "data")

    def __init__(self, field: FieldSpec, data):
        arr = np.array(data, dtype=np.int64)
        if arr.ndim != 2:
            raise ValueError(f"matrix data must be 2-D, got shape {arr.shape}")
        if arr.size and (arr.min() < 0 or arr.max() >= field.q):
            raise FieldError(f"entries outside [0, {field.q})")
        arr.setflags(write=False)
        self.field = field
        self.data = arr

    @classmethod
    def identity(cls, field: FieldSpec, n: int) -> "MatrixFq":
        return cls(field, np.eye(n, dtype=np.int64))

    @classmethod
    def zeros(cls, field: FieldSpec, rows: int, cols: int) -> "MatrixFq":
        return cls(field, np.zeros((rows, cols), dtype=np.int64))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def _check(self, other: "MatrixFq") -> None:
        if other.field is not self.field:
            raise FieldError("matrices over different fields")

    def __matmul__(self, other):
        if isinstance(other, MatrixFq):
            self._check(other)
            if self.cols != other.rows:
                raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
            if self.cols == 0:
                return MatrixFq.zeros(self.field, self.rows, other.cols)
            return MatrixFq(self.field, self.field.matmul(self.data, other.data))
        vec = np.asarray(other, dtype=np.int64)
        if vec.ndim != 1 or vec.shape[0] != self.cols:
            raise ValueError(f"cannot multiply {self.shape} by vector of shape {vec.shape}")
        if self.cols == 0:
            return np.zeros(self.rows, dtype=np.int64)
        return self.field.matmul(self.data, vec)

    def __add__(self, other: "MatrixFq") -> "MatrixFq":
        self._check(other)
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        return MatrixFq(self.field, self.field.add(self.data, other.data))

    def __sub__(self, other: "MatrixFq") -> "MatrixFq":
        self._check(other)
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        return MatrixFq(self.field, self.field.sub(self.data, other.data))

    def __eq__(self, other):
        if not isinstance(other, MatrixFq):
            return NotImplemented
        return (
            self.field is other.field
            and self.shape == other.shape
            and bool(np.array_equal(self.data, other.data))
        )

    __hash__ = None

    def __repr__(self):
        return f"MatrixFq({self.field}, {self.data.tolist()})"

    @property
    def T(self) -> "MatrixFq":
        return MatrixFq(self.field, self.data.T)

    def select_rows(self, idx: Sequence[int]) -> "MatrixFq":
        idx = np.asarray(list(idx), dtype=np.int64)
        return MatrixFq(self.field, self.data[idx, :].reshape(len(idx), self.cols))

    def select_cols(self, idx: Sequence[int]) -> "MatrixFq":
        idx = np.asarray(list(idx), dtype=np.int64)
        return MatrixFq(self.field, self.data[:, idx].reshape(self.rows, len(idx)))

    def scale_rows(self, beta) -> "MatrixFq":
        beta = np.asarray(beta, dtype=np.int64)
        return MatrixFq(self.field, self.field.mul(beta[:, None], self.data))

    def hstack(self, other: "MatrixFq") -> "MatrixFq":
        self._check(other)
        return MatrixFq(self.field, np.hstack([self.data, other.data]))

    def vstack(self, other: "MatrixFq") -> "MatrixFq":
        self._check(other)
        return MatrixFq(self.field, np.vstack([self.data, other.data]))

    # -- elimination ---------------------------------------------------------

    def _rref(self, aug: np.ndarray | None = None):
        """Reduced row echelon form of ``[self | aug]``; first nonzero pivot."""
        F = self.field
        m = self.data.copy() if aug is None else np.hstack([self.data, aug])
        m = np.array(m, dtype=np.int64)
        pivots = []
        row = 0
        for col in range(self.cols):
            if row >= m.shape[0]:
                break
            nz = np.nonzero(m[row:, col])[0]
            if nz.size == 0:
                continue
            piv = row + int(nz[0])
            if piv != row:
                m[[row, piv]] = m[[piv, row]]
            m[row] = F.mul(F.inv(m[row, col]), m[row])
            factors = m[:, col].copy()
            factors[row] = 0
            nzr = np.nonzero(factors)[0]
            if nzr.size:
                m[nzr] = F.sub(m[nzr], F.mul(factors[nzr, None], m[row][None, :]))
            pivots.append(col)
            row += 1
        return m, pivots

    def rank(self) -> int:
        if self.rows == 0 or self.cols == 0:
            return 0
        return len(self._rref()[1])

    def is_invertible(self) -> bool:
        return self.rows == self.cols and self.rank() == self.rows

    def inv(self) -> "MatrixFq":
        if self.rows != self.cols:
            raise ValueError(f"cannot invert non-square {self.shape}")
        n = self.rows
        if n == 0:
            return self
        m, piv = self._rref(np.eye(n, dtype=np.int64))
        if len(piv) < n:
            raise SingularMatrixError(f"{n}x{n} matrix over {self.field} is singular")
        return MatrixFq(self.field, m[:, n:])

    def solve(self, b) -> np.ndarray | "MatrixFq":
        """Solve ``self @ x = b`` for square invertible ``self``."""
        if isinstance(b, MatrixFq):
            return self.inv() @ b
        return self.inv() @ np.asarray(b, dtype=np.int64)

    def solve_consistent(self, b) -> np.ndarray | None:
        """Some ``x`` with ``self @ x = b``, or None if the system is inconsistent.

        Works for any shape; free variables are set to zero.
        """
        b = np.asarray(b, dtype=np.int64).reshape(self.rows, 1)
        if self.cols == 0:
            return np.zeros(0, dtype=np.int64) if not np.any(b) else None
        m, piv = self._rref(b)
        rhs = m[:, -1]
        if np.any(rhs[len(piv):]):
            return None
        x = np.zeros(self.cols, dtype=np.int64)
        for r, c in enumerate(piv):
            x[c] = rhs[r]
        return x

    def det(self) -> int:
        if self.rows != self.cols:
            raise ValueError("determinant of non-square matrix")
        F = self.field
        m = self.data.copy()
        n = self.rows
        d = 1
        for col in range(n):
            nz = np.nonzero(m[col:, col])[0]
            if nz.size == 0:
                return 0
            piv = col + int(nz[0])
            if piv != col:
                m[[col, piv]] = m[[piv, col]]
                d = int(F.neg(d))
            d = int(F.mul(d, m[col, col]))
            inv = F.inv(m[col, col])
            below = np.arange(col + 1, n)
            if below.size:
                f = F.mul(m[below, col], inv)
                m[below] = F.sub(m[below], F.mul(f[:, None], m[col][None, :]))
        return d

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "field": self.field.to_dict(),
            "entries": self.data.tolist(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "MatrixFq":
        field = field_make(d["field"]["p"], d["field"]["r"], d["field"]["modulus"])
        entries = np.array(d["entries"], dtype=np.int64).reshape(d["rows"], d["cols"])
        return cls(field, entries)


def mat_ops(a: MatrixFq, b, kind: str):
    """Dispatcher for mul/add/sub/select_rows/select_cols/solve."""
    if kind == "mul":
        return a @ b
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "select_rows":
        return a.select_rows(b)
    if kind == "select_cols":
        return a.select_cols(b)
    if kind == "solve":
        return a.solve(b)
    raise ValueError(f"unknown matrix operation {kind!r}")


def mat_invert(m: MatrixFq) -> MatrixFq:
    return m.inv()


@dataclass(frozen=True)
class EvalPoints:
    """Distinct evaluation points: server points ``alphas`` and message points ``fs``."""

    field: FieldSpec
    alphas: tuple[int, ...]
    fs: tuple[int, ...]

    def __post_init__(self):
        pts = list(self.alphas) + list(self.fs)
        if any(not 0 <= int(x) < self.field.q for x in pts):
            raise FieldError("evaluation point outside the field")
        if len(set(pts)) != len(pts):
            raise ValueError("evaluation points must be pairwise distinct")
        object.__setattr__(self, "alphas", tuple(int(a) for a in self.alphas))
        object.__setattr__(self, "fs", tuple(int(f) for f in self.fs))

    @property
    def N(self) -> int:
        return len(self.alphas)

    @property
    def L(self) -> int:
        return len(self.fs)

    def truncate(self, L: int) -> "EvalPoints":
        if L > self.L:
            raise ValueError(f"cannot take {L} message points from {self.L}")
        return EvalPoints(self.field, self.alphas, self.fs[:L])

    @classmethod
    def default(cls, field: FieldSpec, N: int, L: int) -> "EvalPoints":
        """alpha_n is element n-1 in index order, f_j the next L elements."""
        if field.q < N + L:
            raise ValueError(f"GF({field.q}) too small for {N} + {L} distinct points")
        return cls(field, tuple(range(N)), tuple(range(N, N + L)))

    def to_dict(self) -> dict:
        return {"alphas": list(self.alphas), "fs": list(self.fs)}


def csa_build(pts: EvalPoints, width: int | None = None) -> MatrixFq:
    """Cauchy-Vandermonde matrix with rows
    ``[1/(f_1-a_n), ..., 1/(f_L-a_n), 1, a_n, ..., a_n^(width-L-1)]``.

    ``width`` defaults to N (the square matrix).
    """
    F = pts.field
    N, L = pts.N, pts.L
    width = N if width is None else width
    if width < L:
        raise ValueError(f"width {width} smaller than Cauchy block {L}")
    alphas = np.array(pts.alphas, dtype=np.int64)
    fs = np.array(pts.fs, dtype=np.int64)
    cauchy = F.inv(F.sub(fs[None, :], alphas[:, None])) if L else np.zeros((N, 0), np.int64)
    vand = np.stack([F.pow(alphas, k) for k in range(width - L)], axis=1) if width > L else np.zeros((N, 0), np.int64)
    return MatrixFq(F, np.hstack([cauchy, vand]).reshape(N, width))


def qcsa_build(pts: EvalPoints, beta) -> MatrixFq:
    """``diag(beta) @ csa_build(pts)`` with every beta_n nonzero."""
    beta = np.asarray([int(b) for b in beta], dtype=np.int64)
    if beta.shape != (pts.N,):
        raise ValueError(f"need {pts.N} scalings, got {beta.shape[0]}")
    if np.any(beta == 0):
        raise ValueError("QCSA scalings must be nonzero")
    return csa_build(pts).scale_rows(beta)
