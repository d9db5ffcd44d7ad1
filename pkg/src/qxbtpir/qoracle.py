"""Brute-force qudit state-vector oracle for the N-sum box.

Conventions
-----------
``X(a)|j> = |j + a>`` and ``Z(b)|j> = w^tr(b j) |j>`` with ``w = exp(2 pi i/p)``.
A Weyl label ``v`` of length 2N stands for
``X(v_1)Z(v_{N+1}) (x) ... (x) X(v_N)Z(v_{2N})``. With these definitions

    W(a) W(b) = w^tr(a_z . b_x) W(a + b)
    W(a) W(b) = w^tr(<a, b>) W(b) W(a),   <a, b> = a_z . b_x - a_x . b_z

A transfer matrix row ``g = (g_x, g_z)`` becomes the stabilizer label
``(-g_z, g_x)``; on ``W(s)|psi>`` that stabilizer has eigenvalue
``w^tr(g . s)``, so the syndrome of the quotient measurement is ``G s``.
Over GF(p^r) each F_q-generator ``w_k`` is expanded to the Z_p-generators
``beta_t w_k`` (``beta_t = x^t``), whose eigenvalue digits ``tr(beta_t y_k)``
determine ``y_k``.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fieldcore import FieldSpec, fourier_matrix
from .matfield import MatrixFq
from .nsumbox import DualPair, TransferMatrix, box_apply, transfer_matrix

ATOL = 1e-9


class OracleError(RuntimeError):
    """Internal consistency failure of the simulated quantum system."""


# -- single-qudit operators ---------------------------------------------------

def pauli_matrix(field: FieldSpec, a: int, b: int) -> np.ndarray:
    """Dense ``X(a) Z(b)``."""
    q = field.q
    j = field.elements()
    M = np.zeros((q, q), dtype=np.complex128)
    M[field.add(j, int(a)), j] = field.character(field.mul(int(b), j))
    return M


def pauli_decompose(M, field: FieldSpec) -> np.ndarray:
    """Coefficients ``u[k, l]`` with ``M = sum u[k, l] X(k) Z(l)``.

    For each shift ``k`` the diagonal-like vector ``c_b = M[k + b, b]`` obeys
    ``c = F u[k, :]`` with ``F[b, l] = character(b l)``; ``F^-1 = F^* / q``.
    """
    M = np.asarray(M, dtype=np.complex128)
    q = field.q
    if M.shape != (q, q):
        raise ValueError(f"expected a {q}x{q} matrix, got {M.shape}")
    Finv = fourier_matrix(field).conj().T / q
    b = field.elements()
    u = np.empty((q, q), dtype=np.complex128)
    for k in range(q):
        c = M[field.add(k, b), b]
        u[k] = Finv @ c
    return u


def pauli_reconstruct(u, field: FieldSpec) -> np.ndarray:
    q = field.q
    out = np.zeros((q, q), dtype=np.complex128)
    for k in range(q):
        for l in range(q):
            if u[k, l] != 0:
                out += u[k, l] * pauli_matrix(field, k, l)
    return out


@dataclass(frozen=True)
class KrausChannel:
    """Single-qudit channel ``rho -> sum_i M_i rho M_i^dagger``."""

    elements: tuple[np.ndarray, ...]

    def __post_init__(self):
        els = tuple(np.asarray(m, dtype=np.complex128) for m in self.elements)
        if not els:
            raise ValueError("channel needs at least one Kraus element")
        d = els[0].shape[0]
        if any(m.shape != (d, d) for m in els):
            raise ValueError("Kraus elements must be square and equally sized")
        total = sum(m.conj().T @ m for m in els)
        if not np.allclose(total, np.eye(d), atol=ATOL):
            raise ValueError("channel is not trace preserving: sum M^dag M != I")
        object.__setattr__(self, "elements", els)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    @classmethod
    def unitary(cls, U) -> "KrausChannel":
        return cls((np.asarray(U),))

    @classmethod
    def depolarizing(cls, field: FieldSpec, eps: float) -> "KrausChannel":
        q = field.q
        els = [np.sqrt(1 - eps) * np.eye(q)]
        w = np.sqrt(eps / (q * q - 1))
        for k, l in itertools.product(range(q), repeat=2):
            if (k, l) != (0, 0):
                els.append(w * pauli_matrix(field, k, l))
        return cls(tuple(els))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    Q, R = np.linalg.qr(z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


# -- states --------------------------------------------------------------------

@dataclass
class StateVector:
    """Pure state of N qudits; ``amps`` has shape ``(q,) * N``."""

    field: FieldSpec
    amps: np.ndarray

    @property
    def n_qudits(self) -> int:
        return self.amps.ndim

    @property
    def dim(self) -> int:
        return self.amps.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def copy(self) -> "StateVector":
        return StateVector(self.field, self.amps.copy())

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amps, other.amps))

    @classmethod
    def basis(cls, field: FieldSpec, digits: Sequence[int]) -> "StateVector":
        amps = np.zeros((field.q,) * len(digits), dtype=np.complex128)
        amps[tuple(int(d) for d in digits)] = 1.0
        return cls(field, amps)


def random_state(field: FieldSpec, N: int, rng: np.random.Generator) -> StateVector:
    shape = (field.q,) * N
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return StateVector(field, z / np.linalg.norm(z))


def apply_single(state: StateVector, U: np.ndarray, qudit: int) -> StateVector:
    amps = np.tensordot(U, state.amps, axes=([1], [qudit]))
    return StateVector(state.field, np.moveaxis(amps, 0, qudit))


def _check_label(v, N: int) -> np.ndarray:
    v = np.asarray(v, dtype=np.int64)
    if v.shape != (2 * N,):
        raise ValueError(f"Weyl label must have length {2 * N}, got {v.shape}")
    return v


def weyl_apply(state: StateVector, v) -> StateVector:
    """Apply ``W(v)``; norm is preserved."""
    F = state.field
    N = state.n_qudits
    v = _check_label(v, N)
    j = F.elements()
    amps = state.amps
    for n in range(N):
        a, b = int(v[n]), int(v[N + n])
        if b:
            shape = [1] * N
            shape[n] = F.q
            amps = amps * F.character(F.mul(b, j)).reshape(shape)
        if a:
            amps = np.take(amps, F.sub(j, a), axis=n)
    return StateVector(F, amps)


def _weyl_action(field: FieldSpec, N: int, v: np.ndarray, phase: complex):
    """Flat ``(perm, phases)`` with ``(c W(v) psi)[i] = phases[i] psi[perm[i]]``."""
    q = field.q
    idx = np.arange(q ** N, dtype=np.int64)
    perm = np.zeros_like(idx)
    ph = np.full(idx.shape, phase, dtype=np.complex128)
    for n in range(N):
        w = q ** (N - 1 - n)
        d = (idx // w) % q
        src = field.sub(d, int(v[n]))
        perm += src * w
        if v[N + n]:
            ph *= field.character(field.mul(int(v[N + n]), src))
    return perm, ph


def symplectic(field: FieldSpec, a, b) -> int:
    """``<a, b> = a_z . b_x - a_x . b_z`` over F_q."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    N = a.shape[0] // 2
    return int(field.sub(field.dot(a[N:], b[:N]), field.dot(a[:N], b[N:])))


# -- stabilizer groups -----------------------------------------------------------

@dataclass
class StabilizerSpec:
    """Abelian stabilizer group generated over F_q by the rows of ``labels``.

    ``phases`` belong to the Z_p generators ``beta_t * labels[k]`` (k-major);
    by default they are the ones making every generator have order p.
    """

    field: FieldSpec
    labels: np.ndarray
    phases: np.ndarray | None = None
    _actions: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        F = self.field
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 2 or self.labels.shape[1] != 2 * self.labels.shape[0]:
            raise ValueError("need N generator labels of length 2N")
        N = self.N
        for i in range(N):
            for k in range(i + 1, N):
                if symplectic(F, self.labels[i], self.labels[k]) != 0:
                    raise OracleError(f"generators {i} and {k} do not commute")
        if MatrixFq(F, self.labels).rank() != N:
            raise OracleError("generator labels are linearly dependent")
        gens = self.group_generators_labels()
        if self.phases is None:
            self.phases = np.array([_order_p_phase(F, g) for g in gens])
        else:
            self.phases = np.asarray(self.phases, dtype=np.complex128)
            if self.phases.shape != (len(gens),):
                raise ValueError(f"need {len(gens)} generator phases")
        self.phases.setflags(write=False)

    @property
    def N(self) -> int:
        return self.labels.shape[0]

    @classmethod
    def from_transfer(cls, G: MatrixFq) -> "StabilizerSpec":
        F = G.field
        N = G.rows
        gx, gz = G.data[:, :N], G.data[:, N:]
        return cls(F, np.hstack([F.neg(gz), gx]))

    def group_generators_labels(self) -> list[np.ndarray]:
        F = self.field
        out = []
        for k in range(self.N):
            for t in range(F.r):
                out.append(F.mul(F.p ** t, self.labels[k]))
        return out

    def generators(self) -> list[tuple[np.ndarray, complex]]:
        return list(zip(self.group_generators_labels(), self.phases))

    def action(self, t: int):
        if t not in self._actions:
            lab, c = self.generators()[t]
            self._actions[t] = _weyl_action(self.field, self.N, lab, complex(c))
        return self._actions[t]

    def syndrome(self, s) -> np.ndarray:
        """F_q outcome labelling ``W(s)|psi>``: ``y_k = <labels[k], s>``."""
        return np.array([symplectic(self.field, w, s) for w in self.labels], dtype=np.int64)

    def decode_digits(self, digits: np.ndarray) -> np.ndarray:
        """Map eigenvalue exponents (k-major, r per generator) to ``y in F_q^N``."""
        F = self.field
        d = np.asarray(digits, dtype=np.int64).reshape(self.N, F.r)
        key = (d * F._weights).sum(axis=1)
        return F.subfield_solver()[key]

    def group_phase(self, d) -> complex:
        """Phase ``c`` with ``c W(d)`` in the group; ``d`` must lie in the label span."""
        F = self.field
        d = np.asarray(d, dtype=np.int64)
        lam = MatrixFq(F, self.labels.T).solve_consistent(d)
        if lam is None:
            raise OracleError("label is outside the stabilizer span")
        label = np.zeros(2 * self.N, dtype=np.int64)
        phase = 1.0 + 0j
        N = self.N
        for t, (g, c) in enumerate(self.generators()):
            k, digit = divmod(t, F.r)
            m = int(F._digits[lam[k], digit])
            for _ in range(m):
                phase *= c * F.character(int(F.dot(label[N:], g[:N])))
                label = F.add(label, g)
        if not np.array_equal(label, d):  # pragma: no cover
            raise OracleError("group element reconstruction failed")
        return complex(phase)

    def group(self):
        """All ``(label, phase)`` pairs; exponential in N*r, small cases only."""
        F = self.field
        gens = self.generators()
        N = self.N
        for ms in itertools.product(range(F.p), repeat=len(gens)):
            label = np.zeros(2 * N, dtype=np.int64)
            phase = 1.0 + 0j
            for (g, c), m in zip(gens, ms):
                for _ in range(m):
                    phase *= c * F.character(int(F.dot(label[N:], g[:N])))
                    label = F.add(label, g)
            yield label, phase


def _order_p_phase(field: FieldSpec, label: np.ndarray) -> complex:
    # (X(a)Z(b))^p = I for odd p; for p = 2 it is (-1)^tr(a.b), fixed by c = i.
    if field.p != 2:
        return 1.0 + 0j
    N = label.shape[0] // 2
    t = int(field.trace(int(field.dot(label[:N], label[N:]))))
    return 1j if t % 2 else 1.0 + 0j


def weyl_dense(field: FieldSpec, v) -> np.ndarray:
    N = len(v) // 2
    out = np.ones((1, 1), dtype=np.complex128)
    for n in range(N):
        out = np.kron(out, pauli_matrix(field, int(v[n]), int(v[N + n])))
    return out


def stabilizer_projector(spec: StabilizerSpec) -> np.ndarray:
    """Dense ``P = q^-N sum_g c_g W(g)`` over the whole group."""
    F = spec.field
    dim = F.q ** spec.N
    P = np.zeros((dim, dim), dtype=np.complex128)
    for label, phase in spec.group():
        P += phase * weyl_dense(F, label)
    return P / dim


def _apply_action(action, flat: np.ndarray) -> np.ndarray:
    perm, ph = action
    return ph * flat[perm]


def _eigen_branches(spec: StabilizerSpec, t: int, flat: np.ndarray) -> np.ndarray:
    """Rows ``e`` hold the projection of ``flat`` onto eigenvalue ``w^e`` of generator t."""
    p = spec.field.p
    powers = [flat]
    act = spec.action(t)
    for _ in range(p - 1):
        powers.append(_apply_action(act, powers[-1]))
    return np.fft.fft(np.stack(powers), axis=0) / p


@functools.lru_cache(maxsize=64)
def _seed_vector(q: int, N: int) -> np.ndarray:
    rng = np.random.default_rng(0xB0C5 + 131 * q + N)
    z = rng.standard_normal(q ** N) + 1j * rng.standard_normal(q ** N)
    return z / np.linalg.norm(z)


def stabilizer_prepare(spec: StabilizerSpec) -> StateVector:
    """Unique joint +1 eigenstate, phase fixed so its largest amplitude is real."""
    F = spec.field
    flat = _seed_vector(F.q, spec.N).copy()
    for t in range(len(spec.generators())):
        flat = _eigen_branches(spec, t, flat)[0]
    nrm = np.linalg.norm(flat)
    if nrm < 1e-6:
        raise OracleError("projected seed vanished; stabilizer phases inconsistent")
    flat = flat / nrm
    i = int(np.argmax(np.abs(flat)))
    flat = flat * (abs(flat[i]) / flat[i])
    return StateVector(F, flat.reshape((F.q,) * spec.N))


def outcome_distribution(state: StateVector, spec: StabilizerSpec, prune: float = 1e-15) -> dict:
    """Born probabilities ``{y: <psi|P_y|psi>}`` of the quotient-space PVM."""
    n_gen = len(spec.generators())
    out: dict[tuple[int, ...], float] = {}

    def walk(t, flat, digits):
        if t == n_gen:
            y = tuple(int(x) for x in spec.decode_digits(np.array(digits)))
            out[y] = out.get(y, 0.0) + float(np.vdot(flat, flat).real)
            return
        branches = _eigen_branches(spec, t, flat)
        for e in range(spec.field.p):
            b = branches[e]
            if np.vdot(b, b).real > prune:
                walk(t + 1, b, digits + [e])

    walk(0, state.amps.reshape(-1), [])
    total = sum(out.values())
    if abs(total - 1.0) > 1e-6 * max(1.0, state.norm() ** 2):
        if abs(total - state.norm() ** 2) > 1e-6:
            raise OracleError(f"PVM probabilities sum to {total}")
    return out


def pvm_measure(state: StateVector, spec: StabilizerSpec, rng: np.random.Generator) -> np.ndarray:
    """Sample one outcome by measuring the commuting generators in turn."""
    flat = state.amps.reshape(-1)
    norm2 = float(np.vdot(flat, flat).real)
    digits = []
    for t in range(len(spec.generators())):
        branches = _eigen_branches(spec, t, flat)
        probs = np.einsum("ij,ij->i", branches.conj(), branches).real
        if abs(probs.sum() - norm2) > 1e-6:
            raise OracleError("generator projectors are not complete")
        e = int(rng.choice(len(probs), p=probs / probs.sum()))
        digits.append(e)
        flat = branches[e]
        norm2 = probs[e]
    return spec.decode_digits(np.array(digits))


def pvm_projectors(spec: StabilizerSpec) -> dict:
    """Dense ``{y: P_y}``; for completeness checks at small dimensions."""
    F = spec.field
    dim = F.q ** spec.N
    gens = [phase * weyl_dense(F, lab) for lab, phase in spec.generators()]
    p = F.p
    omega = np.exp(2j * np.pi / p)
    per_gen = []
    for O in gens:
        powers = [np.eye(dim, dtype=np.complex128)]
        for _ in range(p - 1):
            powers.append(O @ powers[-1])
        per_gen.append([sum(omega ** (-m * e) * powers[m] for m in range(p)) / p for e in range(p)])
    out = {}
    for digits in itertools.product(range(p), repeat=len(gens)):
        P = np.eye(dim, dtype=np.complex128)
        for t, e in enumerate(digits):
            P = P @ per_gen[t][e]
        y = tuple(int(x) for x in spec.decode_digits(np.array(digits)))
        out[y] = P
    return out


def kraus_apply(state: StateVector, ch: KrausChannel, qudit: int, rng: np.random.Generator,
                return_index: bool = False):
    """One quantum trajectory: pick ``M_i`` with probability ``||M_i psi||^2``."""
    if ch.dim != state.field.q:
        raise ValueError(f"channel acts on dimension {ch.dim}, qudits have {state.field.q}")
    outs = [apply_single(state, M, qudit) for M in ch.elements]
    probs = np.array([o.norm() ** 2 for o in outs])
    if abs(probs.sum() - state.norm() ** 2) > 1e-6:
        raise ValueError("channel is not trace preserving on this state")
    i = int(rng.choice(len(outs), p=probs / probs.sum()))
    res = StateVector(state.field, outs[i].amps / np.sqrt(probs[i]))
    return (res, i) if return_index else res


# -- the physical box --------------------------------------------------------------

@dataclass(frozen=True)
class QuditError:
    """Operation a Byzantine server applies to its own qudit after encoding."""

    qudit: int
    op: object  # q x q matrix (unitary) or KrausChannel


@dataclass
class QuantumBox:
    """Stabilizer state and PVM realising a transfer matrix."""

    tm: TransferMatrix
    spec: StabilizerSpec
    psi: StateVector

    @property
    def field(self) -> FieldSpec:
        return self.tm.field

    def encode(self, x, z) -> StateVector:
        return weyl_apply(self.psi, np.concatenate([np.asarray(x), np.asarray(z)]))


_BOX_CACHE: dict = {}


def quantum_box(tm: TransferMatrix) -> QuantumBox:
    key = (tm.field.to_dict().__repr__(), tm.G.data.tobytes(), tm.G.shape)
    box = _BOX_CACHE.get(key)
    if box is None:
        spec = StabilizerSpec.from_transfer(tm.G)
        box = QuantumBox(tm, spec, stabilizer_prepare(spec))
        if len(_BOX_CACHE) > 32:
            _BOX_CACHE.clear()
        _BOX_CACHE[key] = box
    return box


def _as_errors(error) -> list[QuditError]:
    if error is None:
        return []
    if isinstance(error, QuditError):
        return [error]
    return list(error)


def _branch_states(state: StateVector, errors: list[QuditError]):
    """Expand errors into weighted pure branches ``[(weight, normalized state)]``."""
    branches = [(1.0, state)]
    for err in errors:
        ch = err.op if isinstance(err.op, KrausChannel) else KrausChannel.unitary(err.op)
        nxt = []
        for w, s in branches:
            for M in ch.elements:
                o = apply_single(s, M, err.qudit)
                pw = o.norm() ** 2
                if pw > 1e-15:
                    nxt.append((w * pw, StateVector(s.field, o.amps / np.sqrt(pw))))
        branches = nxt
    return branches


def box_distribution(dp: DualPair | TransferMatrix, L=None, x=None, z=None, error=None) -> dict:
    """Exact outcome distribution of the simulated box (mixture over Kraus branches)."""
    tm = dp if isinstance(dp, TransferMatrix) else transfer_matrix(dp, L)
    box = quantum_box(tm)
    state = box.encode(x, z)
    dist: dict = {}
    for w, s in _branch_states(state, _as_errors(error)):
        for y, pr in outcome_distribution(s, box.spec).items():
            dist[y] = dist.get(y, 0.0) + w * pr
    return dist


def box_simulate(dp: DualPair | TransferMatrix, L=None, x=None, z=None, error=None,
                 rng: np.random.Generator | None = None, shots: int | None = None):
    """Prepare, encode ``X(x_n)Z(z_n)``, apply errors, measure.

    Returns one outcome vector, or a ``(shots, N)`` array when ``shots`` is set.
    Each shot draws a Kraus trajectory and then a PVM outcome from that
    trajectory's Born distribution.
    """
    rng = np.random.default_rng() if rng is None else rng
    tm = dp if isinstance(dp, TransferMatrix) else transfer_matrix(dp, L)
    box = quantum_box(tm)
    state = box.encode(x, z)
    errors = _as_errors(error)
    if shots is None:
        for err in errors:
            if isinstance(err.op, KrausChannel):
                state = kraus_apply(state, err.op, err.qudit, rng)
            else:
                state = apply_single(state, np.asarray(err.op), err.qudit)
        return pvm_measure(state, box.spec, rng)
    branches = _branch_states(state, errors)
    weights = np.array([w for w, _ in branches])
    picks = rng.choice(len(branches), size=shots, p=weights / weights.sum())
    out = np.empty((shots, tm.N), dtype=np.int64)
    for b in np.unique(picks):
        dist = outcome_distribution(branches[b][1], box.spec)
        ys = list(dist)
        pr = np.array([dist[y] for y in ys])
        sel = picks == b
        draws = rng.choice(len(ys), size=int(sel.sum()), p=pr / pr.sum())
        out[sel] = np.array(ys, dtype=np.int64)[draws]
    return out


# -- discretization ----------------------------------------------------------------

def outcome_index(y, q: int) -> int:
    idx = 0
    for v in y:
        idx = idx * q + int(v)
    return idx


def index_outcome(idx: int, q: int, N: int) -> tuple[int, ...]:
    out = []
    for _ in range(N):
        idx, d = divmod(idx, q)
        out.append(d)
    return tuple(reversed(out))


def predict_pauli_mixture(tm: TransferMatrix, x, z, op, qudit: int, tol: float = 1e-14) -> dict:
    """Outcome distribution predicted from the Pauli expansion of ``op``.

    Each term ``u[k, l] X(k)Z(l)`` turns ``W(s)|psi>`` into a phase times
    ``W(s + (k e_n, l e_n))|psi>``, an eigenvector for outcome
    ``box_apply(x + k e_n, z + l e_n)``. Terms landing on the same outcome differ
    by a stabilizer and are added coherently with the group phase.
    """
    F = tm.field
    N = tm.N
    x = np.asarray(x, dtype=np.int64)
    z = np.asarray(z, dtype=np.int64)
    spec = quantum_box(tm).spec
    ch = op if isinstance(op, KrausChannel) else KrausChannel.unitary(op)
    dist: dict = {}
    for M in ch.elements:
        u = pauli_decompose(M, F)
        groups: dict = {}
        for k in range(F.q):
            for l in range(F.q):
                if abs(u[k, l]) <= tol:
                    continue
                xs = x.copy()
                zs = z.copy()
                amp = u[k, l] * F.character(F.mul(l, int(x[qudit])))
                xs[qudit] = F.add(xs[qudit], k)
                zs[qudit] = F.add(zs[qudit], l)
                s = np.concatenate([xs, zs])
                y = tuple(int(v) for v in box_apply(tm, xs, zs))
                if y not in groups:
                    groups[y] = [s, amp]
                    continue
                ref = groups[y][0]
                d = F.sub(s, ref)
                # W(ref + d) psi = w^-tr(ref_z . d_x) W(ref) W(d) psi, W(d) psi = psi / c_d
                rel = F.character(F.neg(F.dot(ref[N:], d[:N]))) / spec.group_phase(d)
                groups[y][1] += amp * rel
        for y, (_, amp) in groups.items():
            dist[y] = dist.get(y, 0.0) + abs(amp) ** 2
    return dist


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


@dataclass
class DiscretizationResult:
    histogram: dict
    predicted: dict
    shots: int
    tv: float

    def to_dict(self, q: int) -> dict:
        return {
            "histogram": {str(outcome_index(y, q)): int(c) for y, c in sorted(self.histogram.items())},
            "predicted": {str(outcome_index(y, q)): float(p) for y, p in sorted(self.predicted.items())},
            "shots": self.shots,
            "tv": self.tv,
        }


def discretization_demo(dp: DualPair | TransferMatrix, L, x, z, arbitrary_error, shots: int,
                        rng: np.random.Generator | None = None, qudit: int = 0) -> DiscretizationResult:
    """Simulate an arbitrary single-qudit error and compare with the Pauli-mixture prediction."""
    tm = dp if isinstance(dp, TransferMatrix) else transfer_matrix(dp, L)
    if tm.N > 3:
        raise ValueError("exhaustive prediction is limited to N <= 3")
    rng = np.random.default_rng() if rng is None else rng
    outs = box_simulate(tm, x=x, z=z, error=QuditError(qudit, arbitrary_error), rng=rng, shots=shots)
    hist: dict = {}
    for row in outs:
        key = tuple(int(v) for v in row)
        hist[key] = hist.get(key, 0) + 1
    predicted = predict_pauli_mixture(tm, x, z, arbitrary_error, qudit)
    empirical = {k: c / shots for k, c in hist.items()}
    return DiscretizationResult(hist, predicted, shots, total_variation(empirical, predicted))
