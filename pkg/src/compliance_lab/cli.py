"""Command-line experiment runner.

    python -m compliance_lab simulate recipe.json --out results/
    python -m compliance_lab cone recipe.json
    python -m compliance_lab bounds [params.json]
    python -m compliance_lab attacks [--prices p.csv --attacks a.csv]
    python -m compliance_lab trace-dump recipe.json --seed 7

Exit codes: 0 ok, 2 config error, 3 partial or indeterminate result,
4 internal invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import traceback
from importlib import resources
from pathlib import Path

from . import __version__
from .analysis import attacks as attacks_mod
from .analysis import bounds as B
from .analysis.montecarlo import CSV_HEADER, estimate_utility
from .analysis.reachability import explore_cone
from .config import ConfigError, load_config
from .errors import ComplianceLabError, DomainError, MalformedConfig
from .execution import run_execution
from .ledger import chain_to_csv, observer_output

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL, EXIT_INTERNAL = 0, 2, 3, 4


def data_path(*parts: str) -> Path:
    return Path(str(resources.files("compliance_lab").joinpath("data", *parts)))


def _meta(digest: str, seed) -> dict:
    return {"tool": "compliance_lab", "version": __version__, "config": digest, "seed": seed}


def _csv_text(meta: dict, header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# compliance_lab {meta['version']} config={meta['config']} seed={meta['seed']}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    p = out / name
    p.write_text(text)
    return p


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def _load(args):
    exp = load_config(args.config)
    if args.seed is not None:
        exp.seed = args.seed
    if args.runs is not None:
        exp.runs = args.runs
    return exp


def _out_dir(args, exp=None) -> Path:
    if args.out:
        return Path(args.out)
    if exp is not None and exp.output:
        return Path(exp.output)
    return Path("out")


def cmd_simulate(args) -> int:
    exp = _load(args)
    out = _out_dir(args, exp)
    meta = _meta(exp.digest, exp.seed)
    reports, rows = [], []
    for prof in exp.profiles:
        rep = estimate_utility(exp.execution, prof, None, exp.runs, exp.seed, exp.externality, exp.confidence)
        reports.append(rep.to_json())
        rows.extend(rep.csv_rows())
    payload = {"meta": meta, "name": exp.name, "reports": reports}
    _write(out, f"{exp.name}.json", json.dumps(payload, indent=2) + "\n")
    p = _write(out, f"{exp.name}.csv", _csv_text(meta, CSV_HEADER, rows))
    _say(args, f"wrote {p}")
    if not args.quiet:
        for r in reports:
            utils = ", ".join(f"{q['utility']:.6g}±{q['utility_ci']:.2g}" for q in r["parties"])
            print(f"  {' | '.join(r['profile'])}: {utils}")
    return EXIT_OK


def cmd_cone(args) -> int:
    exp = _load(args)
    out = _out_dir(args, exp)
    if not exp.strategies:
        raise ConfigError(f"{args.config}: cone needs a non-empty 'strategies' list")
    res = explore_cone(exp.execution, exp.strategies, exp.epsilon, None, exp.runs, exp.max_depth,
                       exp.seed, exp.infractions, exp.confidence, exp.max_runs, exp.externality)
    meta = _meta(exp.digest, exp.seed)
    payload = {"meta": meta, "name": exp.name, **res.to_json()}
    _write(out, f"{exp.name}.json", json.dumps(payload, indent=2) + "\n")
    buf = res.to_csv()
    p = _write(out, f"{exp.name}.csv",
               f"# compliance_lab {meta['version']} config={meta['config']} seed={meta['seed']}\n" + buf)
    _say(args, f"wrote {p}")
    for k, (verdict, path) in res.verdicts.items():
        line = f"  {k.value}: {verdict}"
        if path:
            from .economics import profile_label
            line += " via " + " -> ".join(profile_label(q) for q in path)
        _say(args, line)
    if res.partial:
        _say(args, "  result is partial (depth cap or unresolved comparison)")
        return EXIT_PARTIAL
    return EXIT_OK


TABLE1_MU = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5)

DEFAULT_BOUND_ROWS = (
    [{"op": "selfish_discard_rate", "args": {"mu": m}} for m in TABLE1_MU] + [
        {"op": "reward_proportional_slack", "args": {"alpha": 0.01, "xi_mu": [0.3, 0.7], "R_total": 100}},
        {"op": "sl_pos_abstain_gain", "args": {"mu": 0.4, "N": 100, "C": 1, "R": 10}},
        {"op": "bitcoin_reward_gain_bound", "args": {"N": 2000, "R": 1, "q": 10, "delta": 0.005}},
        {"op": "bitcoin_reward_gain_bound", "args": {"N": 10000, "R": 1, "q": 10, "delta": 0.001}},
        {"op": "lossy_conflict_bound", "args": {"d": 0.5, "R": 100, "C": 1, "s_P": 1}},
        {"op": "race_conflict_bound", "args": {"p_l": 0.09, "R": 100, "C": 1, "s_P": 1}},
        {"op": "selfish_signing_gain", "args": {"mu": 0.5, "R": 2, "C": 1}},
        {"op": "selfish_signing_gain", "args": {"mu": 0.3, "R": 2, "C": 1}},
        {"op": "externality_slack", "args": {"rho": [100], "x_honest": 1, "x_dev": [0.9], "b_dev": [20]}},
        {"op": "penalty_slack", "args": {"rho": [100], "x_honest": 1, "b_dev": [1000]}},
        {"op": "confirmation_window", "args": {"v_tx": 1000, "x": 0.75, "d": 5, "R": 5}},
        {"op": "confirmation_window", "args": {"v_tx": 1000, "x": 0.5, "d": 5, "R": 5}},
    ])

BOUND_OPS = {
    "selfish_discard_rate": B.selfish_discard_rate, "reward_proportional_slack": B.reward_proportional_slack, "abstain_profit_slack": B.abstain_profit_slack,
    "bitcoin_reward_gain_bound": B.bitcoin_reward_gain_bound, "lossy_conflict_bound": B.lossy_conflict_bound, "race_conflict_bound": B.race_conflict_bound,
    "sl_pos_abstain_gain": B.sl_pos_abstain_gain, "selfish_signing_gain": B.selfish_signing_gain, "externality_slack": B.externality_slack,
    "penalty_slack": B.penalty_slack, "confirmation_window": B.confirmation_window,
}


def _bound_value(res) -> tuple[str, str]:
    if isinstance(res, (B.ConflictBound,)):
        note = f"t*={res.t_star} eps_profit={res.eps_profit!r}" + (f" warning: {res.warning}" if res.warning else "")
        return repr(res.eps_reward), note
    if isinstance(res, B.AbstainBound):
        return repr(res.eps_max), "" if res.precondition_ok else f"precondition fails for {list(res.violations)}"
    if isinstance(res, B.PenaltyBound):
        return repr(res.eps_max), f"deposit_needed={res.deposit_needed!r}"
    return repr(res), ""


def cmd_bounds(args) -> int:
    rows_in = DEFAULT_BOUND_ROWS
    digest = "default"
    if args.config:
        try:
            text = Path(args.config).read_text()
            obj = json.loads(text)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{args.config}: {exc}") from exc
        if not isinstance(obj, dict) or not isinstance(obj.get("rows"), list):
            raise ConfigError(f"{args.config}: expected an object with a 'rows' list")
        rows_in = obj["rows"]
        import hashlib
        digest = hashlib.sha256(text.encode()).hexdigest()[:16]
    rows = []
    for i, row in enumerate(rows_in):
        op = row.get("op") if isinstance(row, dict) else None
        if op not in BOUND_OPS:
            raise ConfigError(f"{args.config}: rows[{i}].op: unknown bound {op!r}")
        a = row.get("args", {})
        try:
            value, note = _bound_value(BOUND_OPS[op](**a))
        except DomainError as exc:
            value, note = "", f"error: {exc}"
        except TypeError as exc:
            raise ConfigError(f"{args.config}: rows[{i}].args: {exc}") from exc
        rows.append([op, json.dumps(a, sort_keys=True), value, note])
    meta = _meta(digest, None)
    p = _write(_out_dir(args), "bounds.csv", _csv_text(meta, ["op", "args", "value", "note"], rows))
    _say(args, f"wrote {p}")
    if not args.quiet:
        for r in rows:
            print(f"  {r[0]:<20} {r[1]:<60} {r[2]:<24} {r[3]}")
    return EXIT_OK


def cmd_attacks(args) -> int:
    prices = Path(args.prices) if args.prices else data_path("fixtures", "etc_2020-08-01_prices.csv")
    attacks = Path(args.attacks) if args.attacks else data_path("fixtures", "etc_2020-08-01_attacks.csv")
    try:
        rows = attacks_mod.attack_report(attacks_mod.load_prices(prices), attacks_mod.load_attacks(attacks))
    except OSError as exc:
        raise ConfigError(f"cannot read input: {exc}") from exc
    except MalformedConfig as exc:
        raise ConfigError(str(exc)) from exc
    import hashlib
    digest = hashlib.sha256(prices.read_bytes() + attacks.read_bytes()).hexdigest()[:16]
    text = attacks_mod.report_csv(rows)
    meta = _meta(digest, None)
    p = _write(_out_dir(args), "attacks.csv",
               f"# compliance_lab {meta['version']} config={meta['config']} seed={meta['seed']}\n" + text)
    _say(args, f"wrote {p}")
    if not args.quiet:
        for r in rows:
            print(f"  {r.asset} {r.date}: rewards ${r.rewards:,.0f}, reward difference ${r.reward_difference:,.0f}")
    return EXIT_OK


def cmd_trace_dump(args) -> int:
    exp = _load(args)
    out = _out_dir(args, exp)
    trace = run_execution(exp.execution, exp.profiles[0], exp.seed)
    _write(out, f"{exp.name}.trace.jsonl", trace.to_jsonl())
    meta = _meta(exp.digest, exp.seed)
    chain = observer_output(trace).chain
    _write(out, f"{exp.name}.chain.csv",
           f"# compliance_lab {meta['version']} config={meta['config']} seed={meta['seed']}\n" + chain_to_csv(chain))
    if trace.schedule is not None:
        _write(out, f"{exp.name}.schedule.csv",
               f"# compliance_lab {meta['version']} config={meta['config']} seed={meta['seed']}\n"
               + trace.schedule.to_csv())
    _say(args, f"wrote {out / (exp.name + '.trace.jsonl')}")
    return EXIT_OK


def _common_flags(defaults: bool) -> argparse.ArgumentParser:
    # subcommands repeat the global flags without defaults, so a flag given
    # before the subcommand is not overwritten by the subparser
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=d(None), help="master seed (overrides the config)")
    common.add_argument("--runs", type=int, default=d(None), help="Monte Carlo replicas (overrides the config)")
    common.add_argument("--out", default=d(None), help="output directory (default: ./out)")
    common.add_argument("--quiet", action="store_true", default=d(False))
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags(defaults=False)
    p = argparse.ArgumentParser(prog="compliance_lab", parents=[_common_flags(defaults=True)],
                                description="Blockchain compliance simulator and bound calculator")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, help_ in (("simulate", cmd_simulate, "estimate utilities of configured profiles"),
                            ("cone", cmd_cone, "explore the cone of the honest profile"),
                            ("trace-dump", cmd_trace_dump, "write one execution trace")):
        s = sub.add_parser(name, parents=[common], help=help_)
        s.add_argument("config")
        s.set_defaults(func=fn)
    s = sub.add_parser("bounds", parents=[common], help="evaluate closed-form bounds")
    s.add_argument("config", nargs="?", default=None)
    s.set_defaults(func=cmd_bounds)
    s = sub.add_parser("attacks", parents=[common], help="reward difference of double-spend attacks")
    s.add_argument("--prices", default=None)
    s.add_argument("--attacks", default=None)
    s.set_defaults(func=cmd_attacks)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, MalformedConfig) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ComplianceLabError as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception:  # noqa: BLE001 - anything else is a bug, reported with exit 4
        traceback.print_exc()
        return EXIT_INTERNAL
