import json
from fractions import Fraction

import numpy as np
import pytest

from qxbtpir.fieldcore import field_make
from qxbtpir.harness import (
    ConfigError, ExperimentConfig, SimNetwork, default_seed, expected_rate, oracle_box,
    parse_range, rate_table, run_experiment, verify_oracle,
)
from qxbtpir.protocol import AdversarySpec, MessageTable, make_params, retrieve


def cfg(**kw):
    base = dict(N=7, K=3, X=2, T=2, B=1, adversary="additive-dit", byz_set=(3,), seed=5, trials=3)
    base.update(kw)
    return ExperimentConfig.from_dict(base)


def test_report_is_deterministic():
    a = run_experiment(cfg()).to_json()
    b = run_experiment(cfg()).to_json()
    assert a == b
    assert run_experiment(cfg(seed=6)).to_json() != a
    d = json.loads(a)
    assert d["summary"]["accepted"] and d["summary"]["realized_rate"] == "2/7"


def test_workers_match_serial():
    c1 = cfg(sweep="all-placements", trials=2)
    c2 = cfg(sweep="all-placements", trials=2, workers=2)
    r1, r2 = run_experiment(c1), run_experiment(c2)
    assert [t.__dict__ for t in r1.trials] == [t.__dict__ for t in r2.trials]
    assert len(r1.trials) == 14 and r1.accepted


def test_timing_is_opt_in():
    r = run_experiment(cfg(trials=1), timing=True)
    assert r.trials[0].seconds is not None
    assert run_experiment(cfg(trials=1)).trials[0].seconds is None


def test_network_log_order():
    P = make_params(7, 2, 2, 2, 1)
    rng = np.random.default_rng(0)
    net = SimNetwork(P)
    with pytest.raises(RuntimeError):
        net.round(1, AdversarySpec(), rng)
    net.setup(MessageTable.random(P, rng), rng)
    for theta in (1, 2, 1):
        assert net.round(theta, AdversarySpec((2,), "additive-dit"), rng).success
    phases = [e["phase"] for e in net.log]
    assert phases[0] == "setup" and phases[1:5] == ["query", "answer", "channel", "decode"]
    assert net.phase_order_ok()
    q = [e for e in net.log if e["phase"] == "query"]
    assert all(e["servers"] == 7 for e in q)
    net.log.append({"phase": "decode"})
    assert not net.phase_order_ok()
    with pytest.raises(ConfigError):
        SimNetwork(P, "pigeon")


@pytest.mark.parametrize("bad,field", [
    (dict(adversary="shouting"), "adversary"),
    (dict(sweep="diagonal"), "sweep"),
    (dict(byz_set=(1, 2)), "byz_set"),
    (dict(byz_set=(9,)), "byz_set"),
    (dict(theta=4), "theta"),
    (dict(trials=0), "trials"),
    (dict(N="seven"), "N"),
    (dict(X=4, T=4), "N"),
    (dict(decode_mode="vote"), "decode_mode"),
    (dict(colour="red"), "colour"),
    (dict(adversary="kraus-error"), "adversary"),
])
def test_config_errors(bad, field):
    with pytest.raises(ConfigError) as exc:
        cfg(**bad)
    assert exc.value.field == field


def test_config_missing_and_mode():
    with pytest.raises(ConfigError) as exc:
        ExperimentConfig.from_dict({"N": 7, "X": 2, "T": 2, "B": 1})
    assert exc.value.field == "K"
    c = ExperimentConfig.from_dict({"N": 7, "K": 2, "X": 2, "T": 2, "B": 1, "mode": "classical",
                                    "adversary": {"mode": "additive-dit", "byz_set": [2], "sweep": "fixed"}})
    assert c.scheme == "classical" and c.byz_set == (2,)
    assert run_experiment(c).channel == "classical"
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"N": 7, "K": 2, "X": 2, "T": 2, "B": 1, "mode": "psychic"})
    with pytest.raises(ConfigError):
        cfg(scheme="quantum", channel="classical").build_params()


def test_config_round_trip(tmp_path):
    c = cfg(u=(1, 2, 3, 4, 5, 6, 7))
    path = tmp_path / "c.json"
    path.write_text(json.dumps(c.to_dict()))
    assert ExperimentConfig.load(str(path)) == c
    path.write_text("[1]")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(str(path))
    path.write_text("{")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(str(path))


def test_seed_env(monkeypatch):
    monkeypatch.setenv("QXBTPIR_SEED", "42")
    assert default_seed() == 42
    assert ExperimentConfig.from_dict({"N": 7, "K": 2, "X": 2, "T": 2, "B": 1}).seed == 42


def test_rate_table_rows():
    rows = rate_table([8, 10], [1, 2], [1, 2], [0, 1, 2, 3])
    get = {(r.N, r.X, r.T, r.B): r for r in rows}
    assert get[(8, 2, 2, 1)].rate == Fraction(1, 2) and get[(8, 2, 2, 1)].gain == 2
    assert get[(10, 1, 1, 2)].scheme == "classical" and get[(10, 1, 1, 2)].rate == Fraction(2, 5)
    assert get[(10, 1, 1, 3)].regime == 3
    assert get[(8, 2, 2, 2)].scheme == "infeasible" and get[(8, 2, 2, 2)].rate == 0
    assert all(r.rate >= r.classical_rate for r in rows if r.scheme != "infeasible")
    assert parse_range("5..7") == [5, 6, 7] and parse_range("1,4") == [1, 4] and parse_range("3") == [3]
    with pytest.raises(ConfigError):
        parse_range("")


def test_expected_rate():
    assert expected_rate(make_params(8, 2, 2, 2, 1)) == Fraction(1, 2)
    assert expected_rate(make_params(10, 2, 1, 1, 1)) == Fraction(6, 10)
    assert expected_rate(make_params(10, 2, 1, 1, 3)) == Fraction(1, 5)


def test_oracle_box_and_report():
    F = field_make(5)
    rep = verify_oracle(2, F)
    assert rep.exhaustive and rep.cases == 625 and rep.passed
    assert rep.G == [[3, 1, 0, 0], [0, 0, 2, 4]]
    assert oracle_box(2, field_make(2)).G.data.tolist() == [[1, 1, 0, 0], [0, 0, 1, 1]]
    assert verify_oracle(3, field_make(7), cases=50, rng=np.random.default_rng(1)).passed


def test_oracle_and_algebraic_channels_agree():
    P = make_params(2, 2, 0, 1, 0, p=5)
    W = MessageTable.random(P, np.random.default_rng(0))
    for theta in (1, 2):
        for trial in range(5):
            outs = []
            for ch in ("box-algebraic", "box-quantum-oracle"):
                res = retrieve(P, W, theta, AdversarySpec(), np.random.default_rng(trial), channel=ch)
                outs.append(res.recovered.tolist())
                assert res.success
            assert outs[0] == outs[1]
    c = ExperimentConfig.from_dict({"N": 2, "K": 2, "X": 0, "T": 1, "B": 0, "p": 5, "mode": "oracle", "trials": 3})
    assert run_experiment(c).accepted
