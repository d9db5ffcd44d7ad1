"""Command line interface.

Exit status: 0 on success, 1 when an acceptance check fails, 2 on
configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import plotting
from .fieldcore import FieldError, field_make, field_of_order
from .harness import (
    ConfigError, ExperimentConfig, default_seed, parse_range, rate_table, run_experiment, verify_oracle,
)
from .protocol import ParamError, make_params
from .stats import SampleSizeError, privacy_test, repeated, security_test

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _field_args(p):
    p.add_argument("--q", type=int, help="field order (prime power)")
    p.add_argument("--p", type=int, help="field characteristic")
    p.add_argument("--r", type=int, default=None, help="extension degree")


def _param_args(p, required=False):
    for name in ("N", "X", "T", "B", "K"):
        p.add_argument(f"--{name}", type=int, required=required and name != "K")
    _field_args(p)
    p.add_argument("--scheme", choices=("quantum", "classical"))


def _out_args(p):
    p.add_argument("--out", help="output file (stdout when omitted)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--no-plot", action="store_true", help="skip the figure next to --out")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qxbtpir", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run seeded retrieval trials")
    run.add_argument("--config", help="JSON experiment config")
    _param_args(run)
    run.add_argument("--theta", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--trials", type=int)
    run.add_argument("--adversary", help="honest | additive-dit | arbitrary-answer | pauli-error")
    run.add_argument("--byz", help="comma separated 1-based Byzantine servers")
    run.add_argument("--sweep", choices=("fixed", "all-placements", "random"))
    run.add_argument("--channel", choices=("classical", "box-algebraic", "box-quantum-oracle"))
    run.add_argument("--decode-mode", choices=("first-pass", "assert-all-agree"))
    run.add_argument("--workers", type=int)
    run.add_argument("--timing", action="store_true", help="record per-trial wall time")
    _out_args(run)

    rt = sub.add_parser("rate-table", help="achievable rates over parameter ranges")
    for name, default in (("N", "5..12"), ("X", "1..3"), ("T", "1..3"), ("B", "0..2")):
        rt.add_argument(f"--{name}", default=default, help=f"range such as {default}")
    _out_args(rt)

    vo = sub.add_parser("verify-oracle", help="stabilizer oracle against the algebraic box")
    vo.add_argument("--N", type=int, default=2)
    _field_args(vo)
    vo.add_argument("--L", type=int)
    vo.add_argument("--cases", type=int, help="random cases instead of the exhaustive sweep")
    vo.add_argument("--seed", type=int)
    vo.add_argument("--shots", type=int, default=0,
                    help="also run the random-unitary discretization check (N <= 3)")
    _out_args(vo)

    for name, helptext in (("privacy-test", "query distribution across theta"),
                           ("security-test", "storage distribution across messages")):
        st = sub.add_parser(name, help=helptext)
        _param_args(st, required=True)
        st.add_argument("--L", type=int, help="override the sub-packetization")
        st.add_argument("--subset", help="comma separated 1-based servers (default: first T or X)")
        st.add_argument("--samples", type=int, default=10_000)
        st.add_argument("--repeats", type=int, default=1)
        st.add_argument("--method", choices=("auto", "exact", "chi2"), default="auto")
        st.add_argument("--noise-terms", type=int, help="under-noised negative control")
        st.add_argument("--expect-leak", action="store_true", help="succeed only if leakage is detected")
        st.add_argument("--seed", type=int)
        if name == "privacy-test":
            st.add_argument("--thetas", default="1,2")
        _out_args(st)
    return ap


def _field_from(args):
    if args.q is not None:
        return field_of_order(args.q)
    if args.p is not None:
        return field_make(args.p, args.r or 1)
    return None


def _write(args, payload: dict, rows: list[dict] | None = None) -> None:
    if args.format == "csv" and rows is not None:
        buf = io.StringIO()
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _plot(args, fn, *a) -> str | None:
    if not args.out or args.no_plot:
        return None
    return str(fn(*a, plotting.figure_path(args.out)))


def _cmd_run(args) -> int:
    data = {}
    if args.config:
        with open(args.config) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError("config", str(exc)) from exc
    overrides = {
        "N": args.N, "X": args.X, "T": args.T, "B": args.B, "K": args.K, "theta": args.theta,
        "seed": args.seed, "trials": args.trials, "channel": args.channel, "sweep": args.sweep,
        "scheme": args.scheme, "decode_mode": args.decode_mode, "workers": args.workers,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.adversary is not None:
        adv = data.get("adversary") if isinstance(data.get("adversary"), dict) else {}
        data["adversary"] = {**adv, "mode": args.adversary}
    if args.byz is not None:
        data.pop("byz_set", None)
        adv = data.get("adversary") if isinstance(data.get("adversary"), dict) else {"mode": data.get("adversary", "honest")}
        data["adversary"] = {**adv, "byz_set": [int(b) for b in args.byz.split(",") if b]}
    F = _field_from(args)
    if F is not None:
        data["p"], data["r"] = F.p, F.r
    data.setdefault("K", 1)
    cfg = ExperimentConfig.from_dict(data)
    report = run_experiment(cfg, timing=args.timing)
    payload = report.to_dict()
    fig = _plot(args, plotting.plot_run_report, report)
    if fig:
        payload["figure"] = fig
    _write(args, payload, report.csv_rows())
    s = report.summary()
    print(f"rounds={s['rounds']} success={s['success_ratio']:.6f} rate={s['realized_rate']} "
          f"closed-form={s['closed_form_rate']} accepted={s['accepted']}", file=sys.stderr)
    return EXIT_OK if report.accepted else EXIT_FAIL


def _cmd_rate_table(args) -> int:
    rows = rate_table(parse_range(args.N), parse_range(args.X), parse_range(args.T), parse_range(args.B))
    dicts = [r.as_dict() for r in rows]
    payload = {"rows": dicts}
    fig = _plot(args, plotting.plot_rate_table, rows)
    if fig:
        payload["figure"] = fig
    _write(args, payload, dicts)
    return EXIT_OK


def _cmd_verify_oracle(args) -> int:
    F = _field_from(args) or field_make(5)
    seed = default_seed() if args.seed is None else args.seed
    rng = np.random.default_rng(seed)
    rep = verify_oracle(args.N, F, cases=args.cases, rng=rng, L=args.L)
    payload = {"oracle": rep.to_dict()}
    ok = rep.passed
    if args.shots:
        from .harness import oracle_box
        from .qoracle import discretization_demo, random_unitary

        tm = oracle_box(args.N, F, args.L)
        x = F.random(rng, args.N)
        z = F.random(rng, args.N)
        res = discretization_demo(tm, None, x, z, random_unitary(F.q, rng), args.shots, rng)
        payload["discretization"] = res.to_dict(F.q)
        ok = ok and res.tv <= 0.02
        if args.out and not args.no_plot:
            d = payload["discretization"]
            emp = {k: c / res.shots for k, c in d["histogram"].items()}
            payload["figure"] = str(plotting.plot_histogram(
                emp, d["predicted"], plotting.figure_path(args.out), f"random unitary, TV {res.tv:.4f}"))
    rows = [{"N": rep.N, "q": rep.q, "cases": rep.cases, "mismatches": rep.mismatches,
             "min_mass": rep.min_mass, "passed": rep.passed}]
    _write(args, payload, rows)
    print(f"cases={rep.cases} mismatches={rep.mismatches} min_mass={rep.min_mass:.12f}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_leakage(args, kind: str) -> int:
    F = _field_from(args)
    params = make_params(args.N, args.K or 2, args.X, args.T, args.B, field=F,
                         scheme=args.scheme, L=args.L)
    limit = params.T if kind == "privacy" else params.X
    if args.subset:
        subset = tuple(int(s) - 1 for s in args.subset.split(",") if s)
    else:
        subset = tuple(range(limit))
    seed = default_seed() if args.seed is None else args.seed
    kw = dict(params=params, samples=args.samples, method=args.method, noise_terms=args.noise_terms)
    if kind == "privacy":
        kw.update(t_subset=subset, thetas=tuple(int(t) for t in args.thetas.split(",")))
        reps = repeated(privacy_test, args.repeats, seed, **kw)
    else:
        kw.update(x_subset=subset)
        reps = repeated(security_test, args.repeats, seed, **kw)
    passes = sum(r.passed for r in reps)
    if args.expect_leak:
        ok = passes == 0
    else:
        ok = passes >= 0.98 * len(reps)
    payload = {"params": params.to_dict(), "runs": [r.to_dict() for r in reps],
               "passes": passes, "repeats": len(reps), "ok": ok}
    fig = _plot(args, lambda rs, path: plotting.plot_pvalues([r.p_value for r in rs], path, f"{kind} test"), reps)
    if fig:
        payload["figure"] = fig
    _write(args, payload, [{"run": i, **{k: v for k, v in r.to_dict().items() if k != "subset"}}
                           for i, r in enumerate(reps)])
    print(f"{kind}: {passes}/{len(reps)} runs with p > 0.01, ok={ok}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "run":
            return _cmd_run(args)
        if args.cmd == "rate-table":
            return _cmd_rate_table(args)
        if args.cmd == "verify-oracle":
            return _cmd_verify_oracle(args)
        if args.cmd == "privacy-test":
            return _cmd_leakage(args, "privacy")
        return _cmd_leakage(args, "security")
    except (ConfigError, ParamError, FieldError, SampleSizeError, ValueError, OSError) as exc:
        print(f"qxbtpir: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
