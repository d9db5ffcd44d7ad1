"""Protocol roles: regime planning, storage, queries, answers, adversaries.

Indexing: servers, message symbols and Byzantine sets are 0-based here; the
harness converts to 1-based for configs and reports. ``theta`` is 1-based
everywhere, as a message number.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .fieldcore import FieldSpec, field_make, smallest_prime_power_at_least
from .matfield import EvalPoints, MatrixFq, csa_build
from .nsumbox import DualPair, TransferMatrix, box_apply, dual_from_u, kept_rows, transfer_matrix


class ParamError(ValueError):
    """Protocol parameters outside the scheme's feasibility conditions."""


# -- rates --------------------------------------------------------------------

@dataclass(frozen=True)
class RegimePlan:
    regime: int
    scheme: str  # "quantum" | "classical"
    L: int | tuple[int, int]
    rate: Fraction
    classical_rate: Fraction


def classical_rate(N: int, X: int, T: int, B: int) -> Fraction:
    return 1 - Fraction(X + T + 2 * B, N)


def plan_regime(N: int, X: int, T: int, B: int) -> RegimePlan:
    """Classify ``(N, X, T, B)`` into the three achievable-rate regimes."""
    if min(X, B) < 0 or T < 1 or N < 1:
        raise ParamError("need X >= 0, B >= 0, T >= 1, N >= 1")
    if N <= X + T + 2 * B:
        raise ParamError(f"infeasible: N={N} <= X+T+2B={X + T + 2 * B}")
    cls_rate = classical_rate(N, X, T, B)
    L = N - X - T - 2 * B
    if 2 * (X + T) >= N:
        return RegimePlan(1, "quantum", L, 2 * cls_rate, cls_rate)
    if N <= 2 * (N - 2 * B):
        q_rate = Fraction(N - 4 * B, N)
        pad = regime2_pad(N, X, T, B)
        if N - 4 * B > L:
            return RegimePlan(2, "quantum", (pad.L1, pad.L2), q_rate, cls_rate)
        return RegimePlan(2, "classical", L, max(q_rate, cls_rate), cls_rate)
    return RegimePlan(3, "classical", L, cls_rate, cls_rate)


def rate_xbtepir(N: int, X: int, T: int, B: int, E: int) -> Fraction:
    """Rate with E eavesdroppers: ``min{1, 2(1 - (X+M+2B)/N)}``, ``M = max(E, T)``."""
    M = max(E, T)
    if not 2 * (X + M) >= N:
        raise ParamError(f"outside corollary conditions: X+M={X + M} < N/2={Fraction(N, 2)}")
    if not X + M + 2 * B <= N:
        raise ParamError(f"outside corollary conditions: X+M+2B={X + M + 2 * B} > N={N}")
    if not N + E <= 2 * X + 2 * M + 4 * B:
        raise ParamError(
            f"outside corollary conditions: N+E={N + E} > 2X+2M+4B={2 * X + 2 * M + 4 * B}"
        )
    return min(Fraction(1), 2 * (1 - Fraction(X + M + 2 * B, N)))


@dataclass(frozen=True)
class Padding:
    T1: int
    T2: int
    L1: int
    L2: int


def regime2_pad(N: int, X: int, T: int, B: int) -> Padding:
    """Pad query noise to ``X+T' = ceil(N/2)`` and ``X+T'' = floor(N/2)``."""
    T1 = (N + 1) // 2 - X
    T2 = N // 2 - X
    if T1 < T or T2 < T:
        raise ParamError(f"padding T'={T1}, T''={T2} below the collusion level T={T}")
    L1 = N - X - T1 - 2 * B
    L2 = N - X - T2 - 2 * B
    if L1 < 0 or L2 < 0:
        raise ParamError(f"no room for message symbols: L1={L1}, L2={L2}")
    return Padding(T1, T2, L1, L2)


# -- parameters -----------------------------------------------------------------

@dataclass(frozen=True)
class InstancePlan:
    """One retrieval instance: its Cauchy width, query noise count and visible rows."""

    index: int
    L: int
    noise_terms: int
    offset: int  # first message symbol column carried by this instance
    pts: EvalPoints
    kept_rows: tuple[int, ...]

    @cached_property
    def csa(self) -> MatrixFq:
        return csa_build(self.pts)

    @cached_property
    def C(self) -> MatrixFq:
        return self.csa.inv()

    def decoder(self, X: int, B: int):
        """Cached InstanceDecoder for this layout."""
        cache = self.__dict__.setdefault("_decoders", {})
        if (X, B) not in cache:
            from .decoder import InstanceDecoder
            cache[(X, B)] = InstanceDecoder(self.C, self.L, X + self.noise_terms, B)
        return cache[(X, B)]

    @cached_property
    def D(self) -> np.ndarray:
        """``f_j - alpha_n`` as an ``(N, L)`` array."""
        F = self.pts.field
        a = np.array(self.pts.alphas, dtype=np.int64)
        f = np.array(self.pts.fs, dtype=np.int64)
        return F.sub(f[None, :], a[:, None]).reshape(len(a), len(f))


@dataclass(frozen=True)
class SchemeParams:
    N: int
    K: int
    X: int
    T: int
    B: int
    field: FieldSpec
    pts: EvalPoints
    regime: int | None
    scheme: str
    rate: Fraction
    instances: tuple[InstancePlan, ...]
    dual: DualPair | None = None
    padding: Padding | None = None

    @property
    def q(self) -> int:
        return self.field.q

    @property
    def L(self) -> int:
        return self.instances[0].L

    @property
    def total_symbols(self) -> int:
        return sum(inst.L for inst in self.instances)

    @property
    def downloads(self) -> int:
        """Downloaded q-ary units per round (qudits, or classical dits)."""
        return self.N

    @property
    def realized_rate(self) -> Fraction:
        return Fraction(self.total_symbols, self.downloads)

    @cached_property
    def transfer(self) -> TransferMatrix | None:
        if self.dual is None:
            return None
        return transfer_matrix(self.dual, tuple(inst.L for inst in self.instances))

    def to_dict(self) -> dict:
        d = {
            "N": self.N, "K": self.K, "X": self.X, "T": self.T, "B": self.B,
            "field": self.field.to_dict(), "q": self.q,
            "regime": self.regime, "scheme": self.scheme, "rate": str(self.rate),
            "instances": [
                {"L": i.L, "noise_terms": i.noise_terms, "kept_rows": [r + 1 for r in i.kept_rows]}
                for i in self.instances
            ],
            "points": self.pts.to_dict(),
        }
        if self.dual is not None:
            d["u"] = list(self.dual.u)
            d["v"] = list(self.dual.v)
        return d


def default_field(N: int, L: int) -> FieldSpec:
    """Smallest prime power q >= max(N + L, N + 1)."""
    p, r = smallest_prime_power_at_least(max(N + L, N + 1))
    return field_make(p, r)


def make_params(N: int, K: int, X: int, T: int, B: int, *, field: FieldSpec | None = None,
                p: int | None = None, r: int = 1, scheme: str | None = None,
                L: int | None = None, u: Sequence[int] | None = None) -> SchemeParams:
    """Build validated scheme parameters.

    ``scheme`` forces "quantum" or "classical" (comparison mode); by default
    the regime plan decides. ``L`` overrides the sub-packetization of every
    instance; this is only meant for tiny privacy/security experiments, where
    decodability is not exercised.
    """
    if K < 1:
        raise ParamError("need K >= 1")
    if L is None:
        plan = plan_regime(N, X, T, B)
        regime = plan.regime
        chosen = scheme or plan.scheme
    else:
        try:
            plan = plan_regime(N, X, T, B)
            regime = plan.regime
        except ParamError:
            plan, regime = None, None
        chosen = scheme or "classical"
    if chosen not in ("quantum", "classical"):
        raise ParamError(f"unknown scheme {chosen!r}")

    padding = None
    if chosen == "classical":
        Ls = [N - X - T - 2 * B if L is None else L]
        noise = [T]
    elif L is not None:
        Ls, noise = [L, L], [T, T]
    elif regime == 1:
        Ls, noise = [plan.L, plan.L], [T, T]
    elif regime == 2:
        padding = regime2_pad(N, X, T, B)
        Ls, noise = [padding.L1, padding.L2], [padding.T1, padding.T2]
    else:
        raise ParamError(f"quantum scheme unavailable in regime {regime}")
    if min(Ls) < 0:
        raise ParamError(f"negative sub-packetization {Ls}")

    Lmax = max(Ls)
    if field is None:
        field = field_make(p, r) if p is not None else default_field(N, Lmax)
    if field.q < N + Lmax:
        raise ParamError(f"GF({field.q}) too small: need q >= N + L = {N + Lmax}")
    pts = EvalPoints.default(field, N, Lmax)

    dual = None
    if chosen == "quantum":
        if field.q - 1 < N:
            raise ParamError(f"GF({field.q}) lacks {N} distinct nonzero scalings")
        dual = dual_from_u(pts, u)
        rows = kept_rows(N, Ls[0], Ls[1])
    else:
        rows = (tuple(range(N)),)

    instances = []
    offset = 0
    for i, (Li, Ti) in enumerate(zip(Ls, noise)):
        instances.append(InstancePlan(i, Li, Ti, offset, pts.truncate(Li), rows[i]))
        offset += Li
    rate = Fraction(sum(Ls), N)
    return SchemeParams(N, K, X, T, B, field, pts, regime, chosen, rate,
                        tuple(instances), dual, padding)


# -- storage / queries / answers -----------------------------------------------------

@dataclass(frozen=True)
class MessageTable:
    """``W[k, j]``: symbol j of message k+1."""

    field: FieldSpec
    W: np.ndarray

    @classmethod
    def random(cls, params: SchemeParams, rng: np.random.Generator) -> "MessageTable":
        return cls(params.field, params.field.random(rng, (params.K, params.total_symbols)))

    def symbols(self, theta: int) -> np.ndarray:
        return self.W[theta - 1]

    def block(self, inst: InstancePlan) -> np.ndarray:
        """``W_{., j}`` columns of one instance as an ``(L, K)`` array."""
        return self.W[:, inst.offset: inst.offset + inst.L].T


@dataclass(frozen=True)
class StorageShare:
    server: int
    S: tuple[np.ndarray, ...]  # per instance, (L, K)


@dataclass(frozen=True)
class QueryShare:
    server: int
    Q: tuple[np.ndarray, ...]  # per instance, (L, K)


def _powers(field: FieldSpec, D: np.ndarray, count: int) -> np.ndarray:
    """``D^1 .. D^count`` stacked on a new last axis."""
    return np.stack([field.pow(D, i) for i in range(1, count + 1)], axis=-1).reshape(D.shape + (count,))


def encode_instance(field: FieldSpec, inst: InstancePlan, block: np.ndarray, X: int,
                    rng: np.random.Generator | None, batch: tuple[int, ...] = (),
                    R: np.ndarray | None = None) -> np.ndarray:
    """Shares ``S[..., n, j, :] = W_{., j} + sum_i (f_j - a_n)^i R_{j i}``.

    ``R`` (shape ``batch + (L, X, K)``) is drawn once and evaluated at every
    server; pass it explicitly to enumerate. ``block`` may carry the batch
    dimensions too. Output shape is ``batch + (N, L, K)``.
    """
    L, K = block.shape[-2:]
    N = inst.D.shape[0]
    out = np.broadcast_to(np.expand_dims(block, -3), batch + (N, L, K)).copy()
    if X == 0 or L == 0:
        return out
    if R is None:
        R = field.random(rng, batch + (L, X, K))
    Dp = _powers(field, inst.D, X)  # (N, L, X)
    terms = field.mul(Dp[..., None], np.expand_dims(R, -4))  # batch + (N, L, X, K)
    return field.add(out, field.sum(terms, axis=-2))


def query_instance(field: FieldSpec, inst: InstancePlan, theta: int, K: int, noise_terms: int,
                   rng: np.random.Generator | None, batch: tuple[int, ...] = (),
                   Z: np.ndarray | None = None) -> np.ndarray:
    """``Q[..., n, j, :] = (f_j - a_n)^-1 (e_theta + sum_t (f_j - a_n)^t Z_{j t})``."""
    N, L = inst.D.shape
    e = np.zeros(K, dtype=np.int64)
    e[theta - 1] = 1
    base = np.broadcast_to(e, batch + (N, L, K)).copy()
    if noise_terms and L:
        if Z is None:
            Z = field.random(rng, batch + (L, noise_terms, K))
        Dp = _powers(field, inst.D, noise_terms)
        base = field.add(base, field.sum(field.mul(Dp[..., None], np.expand_dims(Z, -4)), axis=-2))
    if L == 0:
        return base
    return field.mul(field.inv(inst.D)[..., None], base)


def storage_encode(W: MessageTable, params: SchemeParams, rng: np.random.Generator,
                   noise_terms: int | None = None) -> list[np.ndarray]:
    """Per instance ``(N, L, K)`` share arrays; ``noise_terms`` overrides X (negative controls)."""
    X = params.X if noise_terms is None else noise_terms
    return [encode_instance(params.field, inst, W.block(inst), X, rng) for inst in params.instances]


def query_gen(theta: int, params: SchemeParams, rng: np.random.Generator,
              noise_terms: int | None = None) -> list[np.ndarray]:
    """Per instance ``(N, L, K)`` query arrays with fresh noise per instance."""
    if not 1 <= theta <= params.K:
        raise ParamError(f"theta={theta} outside [1, {params.K}]")
    return [
        query_instance(params.field, inst, theta, params.K,
                       inst.noise_terms if noise_terms is None else noise_terms, rng)
        for inst in params.instances
    ]


def storage_share(storage: list[np.ndarray], n: int) -> StorageShare:
    return StorageShare(n, tuple(s[n] for s in storage))


def query_share(queries: list[np.ndarray], n: int) -> QueryShare:
    return QueryShare(n, tuple(qi[n] for qi in queries))


def answer_honest(field: FieldSpec, S, Q) -> np.ndarray:
    """``A_n = S_n^t Q_n``: field inner product over the trailing (L, K) axes."""
    S = np.asarray(S, dtype=np.int64)
    Q = np.asarray(Q, dtype=np.int64)
    if S.shape != Q.shape:
        raise ValueError(f"storage {S.shape} and query {Q.shape} do not match")
    prod = field.mul(S, Q).reshape(S.shape[:-2] + (-1,))
    if prod.shape[-1] == 0:
        return np.zeros(S.shape[:-2], dtype=np.int64)
    return field.sum(prod, axis=-1)


def answers_all(params: SchemeParams, storage, queries) -> list[np.ndarray]:
    return [answer_honest(params.field, s, qi) for s, qi in zip(storage, queries)]


# -- adversaries --------------------------------------------------------------------

ADVERSARY_MODES = ("honest", "additive-dit", "arbitrary-answer", "pauli-error", "kraus-error")


@dataclass(frozen=True)
class AdversarySpec:
    """Byzantine behaviour.

    ``noise`` fixes additive values as an ``(instances, |byz_set|)`` array
    (default: fresh uniform draws per instance). ``strategy(server, instance,
    honest_value, rng)`` chooses arbitrary answers. ``pauli`` fixes
    ``(a, b)`` per server for pauli-error; ``channel`` is the KrausChannel (or
    unitary) of kraus-error.
    """

    byz_set: tuple[int, ...] = ()
    mode: str = "honest"
    noise: np.ndarray | None = None
    strategy: Callable | None = None
    pauli: tuple[tuple[int, int], ...] | None = None
    channel: object = None

    def __post_init__(self):
        if self.mode not in ADVERSARY_MODES:
            raise ParamError(f"unknown adversary mode {self.mode!r}")
        object.__setattr__(self, "byz_set", tuple(int(b) for b in self.byz_set))
        if len(set(self.byz_set)) != len(self.byz_set):
            raise ParamError("Byzantine set has repeated servers")
        if self.mode == "kraus-error" and self.channel is None and self.byz_set:
            raise ParamError("kraus-error needs a channel")


@dataclass
class AdversaryEffect:
    values: list[np.ndarray]
    qudit_errors: list = dc_field(default_factory=list)
    injected: dict = dc_field(default_factory=dict)


def adversary_apply(values: list[np.ndarray], spec: AdversarySpec, params: SchemeParams,
                    rng: np.random.Generator, physical: bool = False) -> AdversaryEffect:
    """Corrupt classical answers / box inputs of the Byzantine servers.

    ``values`` holds one length-N array per instance (for the quantum path
    these are the encoder inputs ``x`` and ``z``). Pauli errors become qudit
    operations when ``physical``; otherwise they are folded in as the input
    shift ``X(a)Z(b) X(x)Z(z) ~ X(x+a)Z(z+b)``.
    """
    F = params.field
    if len(spec.byz_set) > params.B:
        raise ParamError(f"|byz_set|={len(spec.byz_set)} exceeds B={params.B}")
    if any(not 0 <= n < params.N for n in spec.byz_set):
        raise ParamError("Byzantine server index out of range")
    vals = [np.array(v, dtype=np.int64) for v in values]
    effect = AdversaryEffect(vals)
    if spec.mode == "honest" or not spec.byz_set:
        return effect
    idx = np.array(spec.byz_set, dtype=np.int64)
    if spec.mode == "additive-dit":
        for i, v in enumerate(vals):
            U = F.random(rng, len(idx)) if spec.noise is None else np.asarray(spec.noise)[i]
            v[idx] = F.add(v[idx], U)
            effect.injected[i] = U
    elif spec.mode == "arbitrary-answer":
        for i, v in enumerate(vals):
            for n in spec.byz_set:
                honest = int(v[n])
                v[n] = (int(spec.strategy(n, i, honest, rng)) if spec.strategy
                        else int(F.random(rng)))
            effect.injected[i] = F.sub(v[idx], values[i][idx])
    elif spec.mode in ("pauli-error", "kraus-error"):
        if params.scheme != "quantum":
            raise ParamError(f"{spec.mode} only applies to the quantum scheme")
        from .qoracle import QuditError, pauli_matrix
        if spec.mode == "pauli-error":
            for m, n in enumerate(spec.byz_set):
                a, b = spec.pauli[m] if spec.pauli else (int(F.random(rng)), int(F.random(rng)))
                if physical:
                    effect.qudit_errors.append(QuditError(n, pauli_matrix(F, a, b)))
                else:
                    vals[0][n] = F.add(vals[0][n], a)
                    vals[1][n] = F.add(vals[1][n], b)
                effect.injected[n] = (a, b)
        else:
            if not physical:
                raise ParamError("kraus-error requires the quantum-oracle channel")
            effect.qudit_errors.extend(QuditError(n, spec.channel) for n in spec.byz_set)
    return effect


# -- end-to-end retrieval ------------------------------------------------------------

CHANNELS = ("classical", "box-algebraic", "box-quantum-oracle")


@dataclass
class RetrievalResult:
    theta: int
    expected: np.ndarray
    recovered: np.ndarray
    received: np.ndarray
    report: object  # decoder.DecodeReport

    @property
    def success(self) -> bool:
        return bool(np.array_equal(self.expected, self.recovered))


def encoder_inputs(params: SchemeParams, answers: list[np.ndarray]) -> list[np.ndarray]:
    """Quantum servers feed ``u_n A_n(1)`` to X and ``v_n A_n(2)`` to Z."""
    F = params.field
    u = np.array(params.dual.u, dtype=np.int64)
    v = np.array(params.dual.v, dtype=np.int64)
    return [F.mul(u, answers[0]), F.mul(v, answers[1])]


def retrieve(params: SchemeParams, W: MessageTable, theta: int, adversary: AdversarySpec,
             rng: np.random.Generator, channel: str | None = None, storage=None,
             mode: str = "first-pass", log: Callable | None = None) -> RetrievalResult:
    """One full round: queries, answers, Byzantine corruption, channel, decode."""
    from .decoder import decode_full

    channel = channel or ("classical" if params.scheme == "classical" else "box-algebraic")
    if channel not in CHANNELS:
        raise ParamError(f"unknown channel {channel!r}")
    if (channel == "classical") != (params.scheme == "classical"):
        raise ParamError(f"channel {channel} does not match the {params.scheme} scheme")
    if storage is None:
        storage = storage_encode(W, params, rng)
        if log:
            log("setup", servers=params.N, instances=len(params.instances))
    queries = query_gen(theta, params, rng)
    if log:
        log("query", servers=params.N, instances=len(queries))
    answers = answers_all(params, storage, queries)
    if log:
        log("answer", servers=params.N)

    if params.scheme == "classical":
        effect = adversary_apply(answers, adversary, params, rng)
        y = effect.values[0]
    else:
        inputs = encoder_inputs(params, answers)
        physical = channel == "box-quantum-oracle"
        effect = adversary_apply(inputs, adversary, params, rng, physical=physical)
        x, z = effect.values
        if physical:
            from .qoracle import box_simulate
            y = box_simulate(params.transfer, x=x, z=z, error=effect.qudit_errors or None, rng=rng)
        else:
            y = box_apply(params.transfer, x, z)
    if log:
        log("channel", channel=channel, corrupted=[n + 1 for n in adversary.byz_set])
    report = decode_full(y, params, mode=mode)
    if log:
        log("decode", chosen=report.chosen_set)
    expected = W.symbols(theta)
    return RetrievalResult(theta, expected, report.recovered_flat, np.asarray(y), report)


def classical_run(params: SchemeParams, theta: int, adversary: AdversarySpec,
                  rng: np.random.Generator, W: MessageTable | None = None) -> RetrievalResult:
    """Single-instance classical retrieval: all N answers are observed."""
    if params.scheme != "classical":
        raise ParamError("classical_run needs classical scheme parameters")
    W = MessageTable.random(params, rng) if W is None else W
    return retrieve(params, W, theta, adversary, rng, channel="classical")


def byzantine_placements(N: int, B: int, sizes: str = "exact") -> list[tuple[int, ...]]:
    """All B-subsets ("exact") or all subsets of size <= B ("upto")."""
    if sizes == "upto":
        return [c for s in range(B + 1) for c in itertools.combinations(range(N), s)]
    return list(itertools.combinations(range(N), B))
