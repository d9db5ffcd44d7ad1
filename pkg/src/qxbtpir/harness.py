"""Simulated network, experiment runner and rate tables."""
from __future__ import annotations

import itertools
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .fieldcore import FieldError, field_make
from .protocol import (
    ADVERSARY_MODES, CHANNELS, AdversarySpec, MessageTable, ParamError, RetrievalResult,
    SchemeParams, byzantine_placements, make_params, plan_regime, retrieve, storage_encode,
)

SEED_ENV = "QXBTPIR_SEED"


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


# -- network --------------------------------------------------------------------------

class SimNetwork:
    """One user and N servers exchanging messages through a chosen channel."""

    PHASES = ("setup", "query", "answer", "channel", "decode")

    def __init__(self, params: SchemeParams, channel: str | None = None):
        self.params = params
        self.channel = channel or ("classical" if params.scheme == "classical" else "box-algebraic")
        if self.channel not in CHANNELS:
            raise ConfigError("channel", f"unknown channel {self.channel!r}")
        self.log: list[dict] = []
        self.storage = None
        self.W: MessageTable | None = None

    def _log(self, phase: str, **info):
        self.log.append({"phase": phase, **info})

    def setup(self, W: MessageTable, rng: np.random.Generator) -> None:
        self.W = W
        self.storage = storage_encode(W, self.params, rng)
        self._log("setup", servers=self.params.N, instances=len(self.params.instances))

    def round(self, theta: int, adversary: AdversarySpec, rng: np.random.Generator,
              mode: str = "first-pass") -> RetrievalResult:
        if self.storage is None:
            raise RuntimeError("setup must run before a retrieval round")
        return retrieve(self.params, self.W, theta, adversary, rng, channel=self.channel,
                        storage=self.storage, mode=mode, log=self._log)

    def phase_order_ok(self) -> bool:
        """Each round runs query, answer, channel, decode in that order."""
        phases = [e["phase"] for e in self.log if e["phase"] != "setup"]
        cycle = list(self.PHASES[1:])
        return len(phases) % 4 == 0 and all(
            phases[i: i + 4] == cycle for i in range(0, len(phases), 4)
        )


# -- configuration ------------------------------------------------------------------------

SWEEPS = ("fixed", "all-placements", "random")


@dataclass
class ExperimentConfig:
    N: int
    K: int
    X: int
    T: int
    B: int
    p: int | None = None
    r: int = 1
    theta: int | None = None  # None: every theta in [K]
    adversary: str = "honest"
    byz_set: tuple[int, ...] = ()  # 1-based
    sweep: str = "fixed"
    seed: int = 0
    trials: int = 1
    scheme: str | None = None
    channel: str | None = None
    decode_mode: str = "first-pass"
    workers: int = 1
    u: tuple[int, ...] | None = None

    def validate(self) -> None:
        for name in ("N", "K", "X", "T", "B", "trials", "workers"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConfigError(name, f"expected an integer, got {v!r}")
        if self.trials < 1:
            raise ConfigError("trials", "must be >= 1")
        if self.adversary not in ADVERSARY_MODES:
            raise ConfigError("adversary", f"unknown mode {self.adversary!r}; choose from {ADVERSARY_MODES}")
        if self.sweep not in SWEEPS:
            raise ConfigError("sweep", f"unknown sweep {self.sweep!r}; choose from {SWEEPS}")
        if self.channel is not None and self.channel not in CHANNELS:
            raise ConfigError("channel", f"unknown channel {self.channel!r}")
        if self.decode_mode not in ("first-pass", "assert-all-agree"):
            raise ConfigError("decode_mode", f"unknown decode mode {self.decode_mode!r}")
        if self.theta is not None and not 1 <= self.theta <= self.K:
            raise ConfigError("theta", f"{self.theta} outside [1, {self.K}]")
        if len(self.byz_set) > self.B:
            raise ConfigError("byz_set", f"{len(self.byz_set)} servers exceed B={self.B}")
        if any(not 1 <= b <= self.N for b in self.byz_set):
            raise ConfigError("byz_set", f"server indices must lie in [1, {self.N}]")
        if self.adversary == "kraus-error":
            raise ConfigError("adversary", "kraus-error needs a channel object; use the library API")
        if self.adversary in ("pauli-error",) and self.channel == "classical":
            raise ConfigError("adversary", "pauli-error needs a box channel")
        try:
            plan_regime(self.N, self.X, self.T, self.B)
        except ParamError as exc:
            raise ConfigError("N", str(exc)) from exc

    def build_params(self) -> SchemeParams:
        self.validate()
        try:
            field_ = field_make(self.p, self.r) if self.p is not None else None
            params = make_params(self.N, self.K, self.X, self.T, self.B, field=field_,
                                 scheme=self.scheme, u=self.u)
        except (ParamError, FieldError, ValueError) as exc:
            raise ConfigError("params", str(exc)) from exc
        channel = self.resolved_channel(params)
        if (channel == "classical") != (params.scheme == "classical"):
            raise ConfigError("channel", f"{channel} does not match the {params.scheme} scheme")
        return params

    def resolved_channel(self, params: SchemeParams) -> str:
        if self.channel:
            return self.channel
        return "classical" if params.scheme == "classical" else "box-algebraic"

    def placements(self) -> list[tuple[int, ...]] | None:
        """0-based placements for the fixed / all-placements sweeps; None for random."""
        if self.sweep == "fixed":
            return [tuple(b - 1 for b in self.byz_set)]
        if self.sweep == "all-placements":
            return byzantine_placements(self.N, self.B)
        return None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["byz_set"] = list(self.byz_set)
        d["u"] = None if self.u is None else list(self.u)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        """Accepts the flat form and ``{adversary: {mode, byz_set, sweep}, mode: ...}``."""
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        adv = d.pop("adversary", None)
        if isinstance(adv, dict):
            d["adversary"] = adv.get("mode", "honest")
            if "byz_set" in adv:
                d["byz_set"] = adv["byz_set"]
            if "sweep" in adv:
                d["sweep"] = adv["sweep"]
        elif adv is not None:
            d["adversary"] = adv
        mode = d.pop("mode", None)
        if mode is not None:
            if mode == "quantum":
                d.setdefault("scheme", "quantum")
            elif mode == "classical":
                d.setdefault("scheme", "classical")
            elif mode == "oracle":
                d.setdefault("scheme", "quantum")
                d.setdefault("channel", "box-quantum-oracle")
            else:
                raise ConfigError("mode", f"unknown mode {mode!r}")
        for name in ("N", "K", "X", "T", "B"):
            if name not in d:
                raise ConfigError(name, "missing required field")
        extra = set(d) - known
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown field")
        d["byz_set"] = tuple(d.get("byz_set") or ())
        if d.get("u") is not None:
            d["u"] = tuple(d["u"])
        if d.get("seed") is None:
            d["seed"] = default_seed()
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", str(exc)) from exc
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be an object")
        return cls.from_dict(data)


# -- experiments ----------------------------------------------------------------------------

def expected_rate(params: SchemeParams) -> Fraction:
    """Closed-form rate of the scheme actually run."""
    N, X, T, B = params.N, params.X, params.T, params.B
    classical = 1 - Fraction(X + T + 2 * B, N)
    if params.scheme == "classical":
        return classical
    if params.padding is not None:
        return Fraction(N - 4 * B, N)
    return 2 * classical


@dataclass
class TrialRecord:
    trial: int
    placement: list[int]  # 1-based
    thetas: list[int]
    successes: list[bool]
    agreement: bool
    chosen_sets: list[list[list[int]]]
    symbols: int
    seconds: float | None = None

    @property
    def success(self) -> bool:
        return all(self.successes)


@dataclass
class RunReport:
    config: dict
    params: dict
    channel: str
    trials: list[TrialRecord]
    downloads: int
    symbols_per_round: int
    realized_rate: Fraction
    closed_form_rate: Fraction
    plan_rate: Fraction | None
    log_ok: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def n_rounds(self) -> int:
        return sum(len(t.successes) for t in self.trials)

    @property
    def success_ratio(self) -> float:
        n = self.n_rounds
        return sum(sum(t.successes) for t in self.trials) / n if n else 1.0

    @property
    def agreement_ratio(self) -> float:
        return sum(t.agreement for t in self.trials) / len(self.trials) if self.trials else 1.0

    @property
    def rate_ok(self) -> bool:
        return (self.realized_rate == self.closed_form_rate
                and all(t.symbols == self.symbols_per_round for t in self.trials))

    @property
    def accepted(self) -> bool:
        return self.success_ratio == 1.0 and self.rate_ok and self.agreement_ratio == 1.0 and self.log_ok

    def summary(self) -> dict:
        return {
            "channel": self.channel,
            "rounds": self.n_rounds,
            "success_ratio": self.success_ratio,
            "agreement_ratio": self.agreement_ratio,
            "downloads": self.downloads,
            "symbols_per_round": self.symbols_per_round,
            "realized_rate": str(self.realized_rate),
            "closed_form_rate": str(self.closed_form_rate),
            "plan_rate": None if self.plan_rate is None else str(self.plan_rate),
            "rate_ok": self.rate_ok,
            "log_ok": self.log_ok,
            "accepted": self.accepted,
        }

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "params": self.params,
            "summary": self.summary(),
            "trials": [asdict(t) | {"success": t.success} for t in self.trials],
            **({"extra": self.extra} if self.extra else {}),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def csv_rows(self) -> list[dict]:
        return [
            {
                "trial": t.trial,
                "placement": " ".join(map(str, t.placement)),
                "thetas": " ".join(map(str, t.thetas)),
                "success": t.success,
                "agreement": t.agreement,
                "symbols": t.symbols,
            }
            for t in self.trials
        ]


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def _run_units(cfg: ExperimentConfig, units: list[tuple[int, tuple[int, ...] | None]],
               timing: bool, params: SchemeParams | None = None) -> tuple[list[TrialRecord], bool]:
    params = cfg.build_params() if params is None else params
    channel = cfg.resolved_channel(params)
    thetas = [cfg.theta] if cfg.theta else list(range(1, params.K + 1))
    records = []
    log_ok = True
    for trial, placement in units:
        t0 = time.perf_counter()
        rng = _trial_rng(cfg.seed, trial)
        if placement is None:
            placement = tuple(sorted(rng.choice(params.N, size=params.B, replace=False).tolist()))
        adv = AdversarySpec(placement, cfg.adversary if placement else "honest")
        net = SimNetwork(params, channel)
        net.setup(MessageTable.random(params, rng), rng)
        succ, agree, chosen, symbols = [], True, [], None
        for theta in thetas:
            res = net.round(theta, adv, rng, mode=cfg.decode_mode)
            succ.append(res.success)
            agree = agree and res.report.agreement
            chosen.append([[c + 1 for c in s] for s in res.report.chosen_set])
            n_sym = len(res.recovered)
            symbols = n_sym if symbols is None else min(symbols, n_sym)
        log_ok = log_ok and net.phase_order_ok() and _queries_complete(net, params, len(thetas))
        records.append(TrialRecord(trial, [b + 1 for b in placement], thetas, succ, agree, chosen,
                                   symbols or 0, time.perf_counter() - t0 if timing else None))
    return records, log_ok


def _queries_complete(net: SimNetwork, params: SchemeParams, rounds: int) -> bool:
    q = [e for e in net.log if e["phase"] == "query"]
    return len(q) == rounds and all(
        e["servers"] == params.N and e["instances"] == len(params.instances) for e in q
    )


def _work_units(cfg: ExperimentConfig) -> list[tuple[int, tuple[int, ...] | None]]:
    places = cfg.placements()
    if places is None:
        return [(t, None) for t in range(cfg.trials)]
    units = []
    for pi, pl in enumerate(places):
        units.extend((pi * cfg.trials + t, pl) for t in range(cfg.trials))
    return units


def run_experiment(cfg: ExperimentConfig, timing: bool = False) -> RunReport:
    """Run every trial; the report is a pure function of the config (timing off)."""
    params = cfg.build_params()
    channel = cfg.resolved_channel(params)
    units = _work_units(cfg)
    if cfg.workers > 1 and len(units) > 1:
        chunks = [units[i:: cfg.workers] for i in range(cfg.workers)]
        with ProcessPoolExecutor(cfg.workers) as ex:
            parts = list(ex.map(_run_units, [cfg] * len(chunks), chunks, [timing] * len(chunks)))
        records = [r for rs, _ in parts for r in rs]
        log_ok = all(ok for _, ok in parts)
    else:
        records, log_ok = _run_units(cfg, units, timing, params)
    records.sort(key=lambda r: r.trial)
    try:
        plan_rate = plan_regime(params.N, params.X, params.T, params.B).rate
    except ParamError:
        plan_rate = None
    return RunReport(
        config=cfg.to_dict(),
        params=params.to_dict(),
        channel=channel,
        trials=records,
        downloads=params.downloads,
        symbols_per_round=params.total_symbols,
        realized_rate=Fraction(min((r.symbols for r in records), default=0), params.downloads),
        closed_form_rate=expected_rate(params),
        plan_rate=plan_rate,
        log_ok=log_ok,
    )


# -- rate tables -------------------------------------------------------------------------------

@dataclass(frozen=True)
class RateRow:
    N: int
    X: int
    T: int
    B: int
    regime: int | None
    scheme: str
    rate: Fraction
    classical_rate: Fraction
    quantum_rate: Fraction | None

    @property
    def gain(self) -> Fraction | None:
        if self.classical_rate <= 0:
            return None
        return self.rate / self.classical_rate

    def as_dict(self) -> dict:
        return {
            "N": self.N, "X": self.X, "T": self.T, "B": self.B,
            "regime": self.regime, "scheme": self.scheme,
            "rate": str(self.rate), "classical_rate": str(self.classical_rate),
            "quantum_rate": None if self.quantum_rate is None else str(self.quantum_rate),
            "gain": None if self.gain is None else str(self.gain),
        }


def rate_table(N_range: Iterable[int], X_range: Iterable[int], T_range: Iterable[int],
               B_range: Iterable[int]) -> list[RateRow]:
    """One row per combination; infeasible combinations get scheme "infeasible" and rate 0."""
    rows = []
    for N, X, T, B in itertools.product(N_range, X_range, T_range, B_range):
        cls_rate = 1 - Fraction(X + T + 2 * B, N)
        try:
            plan = plan_regime(N, X, T, B)
        except ParamError:
            rows.append(RateRow(N, X, T, B, None, "infeasible", Fraction(0), max(cls_rate, Fraction(0)), None))
            continue
        if plan.regime == 1:
            q_rate = 2 * cls_rate
        elif plan.regime == 2:
            q_rate = Fraction(N - 4 * B, N)
        else:
            q_rate = None
        rows.append(RateRow(N, X, T, B, plan.regime, plan.scheme, plan.rate, cls_rate, q_rate))
    return rows


def parse_range(text: str) -> list[int]:
    """``"5..12"``, ``"1,3,5"`` or ``"4"``."""
    text = str(text).strip()
    out: list[int] = []
    for part in text.split(","):
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise ConfigError("range", f"empty range {text!r}")
    return out


# -- oracle verification -------------------------------------------------------------------------

@dataclass
class OracleReport:
    N: int
    q: int
    widths: tuple[int, int]
    cases: int
    exhaustive: bool
    mismatches: int
    min_mass: float
    G: list

    @property
    def passed(self) -> bool:
        return self.mismatches == 0 and self.min_mass > 1 - 1e-9

    def to_dict(self) -> dict:
        d = asdict(self)
        d["widths"] = list(self.widths)
        d["passed"] = self.passed
        return d


def oracle_box(N: int, field_, L: int | None = None, u=None):
    """Transfer matrix used for oracle checks: widest Cauchy block the field allows."""
    from .matfield import EvalPoints
    from .nsumbox import dual_from_u, transfer_matrix

    if L is None:
        L = max(0, min(N // 2, field_.q - N))
    pts = EvalPoints.default(field_, N, L)
    distinct = field_.q - 1 >= N
    if u is None and not distinct:
        u = (1,) * N
    dp = dual_from_u(pts, u, require_distinct=distinct and u is None)
    return transfer_matrix(dp, L)


def verify_oracle(N: int, field_, cases: int | None = None, rng: np.random.Generator | None = None,
                  L: int | None = None, exhaustive_limit: int = 5000) -> OracleReport:
    """Compare the simulated stabilizer box with ``G [x; z]``.

    Every input pair is checked when there are at most ``exhaustive_limit``
    of them and ``cases`` is not given; otherwise ``cases`` random pairs.
    """
    from .nsumbox import box_apply
    from .qoracle import box_distribution

    tm = oracle_box(N, field_, L)
    q = field_.q
    total = q ** (2 * N)
    exhaustive = cases is None and total <= exhaustive_limit
    if exhaustive:
        inputs = itertools.product(range(q), repeat=2 * N)
    else:
        rng = np.random.default_rng(0) if rng is None else rng
        n = cases or 200
        inputs = (tuple(int(v) for v in row) for row in field_.random(rng, (n, 2 * N)))
    mism, min_mass, count = 0, 1.0, 0
    for s in inputs:
        x, z = np.array(s[:N]), np.array(s[N:])
        expect = tuple(int(v) for v in box_apply(tm, x, z))
        dist = box_distribution(tm, x=x, z=z)
        y, mass = max(dist.items(), key=lambda kv: kv[1])
        min_mass = min(min_mass, mass)
        mism += (y != expect) or mass <= 1 - 1e-9
        count += 1
    return OracleReport(N, q, tm.widths, count, exhaustive, int(mism), float(min_mass), tm.G.data.tolist())
