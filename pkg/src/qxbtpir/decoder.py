"""Byzantine-resilient decoding of CSA answers.

After ``C = CSA^-1`` the received rows read ``[W_theta; interference; 0; 0]``
plus ``C[:, j] U`` for the Byzantine columns ``j``. The last 2B rows contain
only noise: the first B of them (check rows, ``T``) verify a guess, the last
B (``Y``) estimate it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .fieldcore import FieldSpec
from .matfield import MatrixFq, SingularMatrixError


class DecodeInvariantError(RuntimeError):
    """A property that holds under the model failed: singular Y or no passing candidate."""


class LayoutError(ValueError):
    """Received vector does not match the instance row layout."""


@dataclass(frozen=True)
class RTYBundle:
    C: MatrixFq
    candidate: tuple[int, ...]
    L: int
    B: int
    R: MatrixFq  # L x |j|
    Tmat: MatrixFq  # B x |j|
    Ymat: MatrixFq  # B x |j|
    Yinv: MatrixFq | None  # only for |j| == B

    @property
    def check_rows(self) -> tuple[int, ...]:
        N = self.C.rows
        return tuple(range(N - 2 * self.B, N - self.B))

    @property
    def tail_rows(self) -> tuple[int, ...]:
        N = self.C.rows
        return tuple(range(N - self.B, N))


def rty_build(C: MatrixFq, candidate, L: int, X: int, T: int, B: int,
              exact_size: bool = True) -> RTYBundle:
    """Slice ``R = C[:L, j]``, ``T = C[L+X+T : L+X+T+B, j]``, ``Y = C[L+X+T+B:, j]``.

    ``exact_size=False`` admits candidates smaller than B (then ``Y`` is tall
    and there is no inverse).
    """
    N = C.rows
    cand = tuple(int(c) for c in candidate)
    if L + X + T + 2 * B != N:
        raise ValueError(f"L+X+T+2B={L + X + T + 2 * B} != N={N}")
    if len(set(cand)) != len(cand) or any(not 0 <= c < N for c in cand):
        raise ValueError(f"invalid candidate {cand}")
    if (exact_size and len(cand) != B) or len(cand) > B:
        raise ValueError(f"candidate size {len(cand)} != B={B}")
    cols = C.select_cols(cand)
    off = L + X + T
    R = cols.select_rows(range(L))
    Tm = cols.select_rows(range(off, off + B))
    Y = cols.select_rows(range(off + B, N))
    Yinv = None
    if len(cand) == B:
        try:
            Yinv = Y.inv()
        except SingularMatrixError as exc:
            raise DecodeInvariantError(f"Y({[c + 1 for c in cand]}) is singular") from exc
    return RTYBundle(C, cand, L, B, R, Tm, Y, Yinv)


def noise_estimate(tail, bundle: RTYBundle) -> np.ndarray | None:
    """``U~ = Y^-1 tail``; for a short candidate, the unique consistent solution or None."""
    tail = np.asarray(tail, dtype=np.int64)
    if bundle.Yinv is not None:
        return bundle.Yinv @ tail
    return bundle.Ymat.solve_consistent(tail)


def consistency_check(U_est, bundle: RTYBundle, check_rows) -> bool:
    if U_est is None:
        return False
    return bool(np.array_equal(bundle.Tmat @ np.asarray(U_est, np.int64),
                               np.asarray(check_rows, np.int64)))


def recover(first_L, U_est, bundle: RTYBundle) -> np.ndarray:
    F = bundle.C.field
    return F.sub(np.asarray(first_L, np.int64), bundle.R @ np.asarray(U_est, np.int64))


def candidate_sets(N: int, B: int) -> list[tuple[int, ...]]:
    """B-subsets in lexicographic order, then sizes B-1 down to 0."""
    return [c for s in range(B, -1, -1) for c in itertools.combinations(range(N), s)]


class InstanceDecoder:
    """Precomputed candidate slices for one (C, L, X+T, B) layout."""

    def __init__(self, C: MatrixFq, L: int, interference: int, B: int):
        self.C, self.L, self.I, self.B = C, L, interference, B
        self.N = C.rows
        self.field: FieldSpec = C.field
        full = list(itertools.combinations(range(self.N), B))
        self.full = full
        self.bundles = [rty_build(C, j, L, interference, 0, B) for j in full]
        if B:
            self.Yinv = np.stack([b.Yinv.data for b in self.bundles])  # (c, B, B)
            self.Tm = np.stack([b.Tmat.data for b in self.bundles])
            self.R = np.stack([b.R.data for b in self.bundles]).reshape(len(full), L, B)
        self._short = None

    @property
    def short(self) -> list[RTYBundle]:
        if self._short is None:
            self._short = [
                rty_build(self.C, j, self.L, self.I, 0, self.B, exact_size=False)
                for s in range(self.B - 1, -1, -1)
                for j in itertools.combinations(range(self.N), s)
            ]
        return self._short

    def _bmv(self, M: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Batched ``M[c] @ v[c]`` (or a shared ``v``)."""
        F = self.field
        if M.shape[-1] == 0:
            return np.zeros(M.shape[:-1], dtype=np.int64)
        return F.sum(F.mul(M, v[..., None, :]), axis=-1)

    def decode(self, full_rows: np.ndarray, mode: str = "first-pass"):
        """``full_rows`` is indexed by C row; only message and noise rows are read.

        Returns (recovered, passing, chosen, U_est, agreement).
        """
        F = self.field
        L, B, N = self.L, self.B, self.N
        first = full_rows[:L]
        if B == 0:
            return first.copy(), [()], (), np.zeros(0, np.int64), True
        check = full_rows[N - 2 * B: N - B]
        tail = full_rows[N - B:]
        U = self._bmv(self.Yinv, np.broadcast_to(tail, (len(self.full), B)))
        ok = np.all(self._bmv(self.Tm, U) == check, axis=-1)
        passing = [self.full[i] for i in np.nonzero(ok)[0]]
        results = {}
        if mode == "first-pass" and passing:
            i = int(np.nonzero(ok)[0][0])
            rec = F.sub(first, self._bmv(self.R[i], U[i]))
            return rec, passing, self.full[i], U[i], True
        for i in np.nonzero(ok)[0]:
            results[self.full[int(i)]] = (F.sub(first, self._bmv(self.R[i], U[i])), U[i])
        for b in self.short:
            Ue = noise_estimate(tail, b)
            if consistency_check(Ue, b, check):
                passing.append(b.candidate)
                results[b.candidate] = (recover(first, Ue, b), Ue)
                if mode == "first-pass":
                    break
        if not passing:
            raise DecodeInvariantError("no candidate Byzantine set passed the consistency check")
        chosen = passing[0]
        rec, Ue = results[chosen]
        agree = all(np.array_equal(rec, r) for r, _ in results.values())
        return rec, passing, chosen, Ue, agree


@dataclass
class DecodeReport:
    recovered: list[np.ndarray]
    passing_sets: list[list[tuple[int, ...]]]
    chosen_set: list[tuple[int, ...]]
    agreement: bool
    u_estimates: list[np.ndarray] = field(default_factory=list)

    @property
    def recovered_flat(self) -> np.ndarray:
        if not self.recovered:
            return np.zeros(0, np.int64)
        return np.concatenate(self.recovered)

    def to_dict(self) -> dict:
        one = lambda s: [c + 1 for c in s]  # noqa: E731
        return {
            "recovered": [r.tolist() for r in self.recovered],
            "passing_sets": [[one(s) for s in inst] for inst in self.passing_sets],
            "chosen_set": [one(s) for s in self.chosen_set],
            "agreement": bool(self.agreement),
            "u_estimates": [np.asarray(u).tolist() for u in self.u_estimates],
        }


def decode_full(y, params, mode: str = "first-pass") -> DecodeReport:
    """Decode every instance of a received N-vector.

    ``params`` supplies ``N``, ``X``, ``B`` and ``instances`` (each with ``L``,
    ``kept_rows`` and a cached ``decoder(X, B)``). The quantum box delivers the kept
    rows of each instance back to back; the classical path delivers all N
    answers of its single instance, which are multiplied by ``C`` here.
    """
    if mode not in ("first-pass", "assert-all-agree"):
        raise ValueError(f"unknown decode mode {mode!r}")
    y = np.asarray(y, dtype=np.int64)
    N, B = params.N, params.B
    if y.shape != (N,):
        raise LayoutError(f"received vector of shape {y.shape}, expected ({N},)")
    report = DecodeReport([], [], [], True)
    pos = 0
    for inst in params.instances:
        rows = inst.kept_rows
        part = y[pos: pos + len(rows)]
        pos += len(rows)
        full = np.zeros(N, dtype=np.int64)
        if len(rows) == N and params.scheme == "classical":
            full = inst.C @ part
        else:
            needed = set(range(inst.L)) | set(range(N - 2 * B, N))
            if not needed <= set(rows):
                raise LayoutError(f"instance {inst.index + 1} misses rows {sorted(needed - set(rows))}")
            full[list(rows)] = part
        dec = inst.decoder(params.X, B)
        rec, passing, chosen, Ue, agree = dec.decode(full, mode)
        report.recovered.append(rec)
        report.passing_sets.append(passing)
        report.chosen_set.append(chosen)
        report.u_estimates.append(Ue)
        report.agreement = report.agreement and agree
    if pos != N:
        raise LayoutError(f"instances consume {pos} rows of {N}")
    return report
