"""Command-line front end.

Subcommands: ``simulate``, ``verify``, ``oracle``, ``scan``. Exit status is
0 when every asserted bound holds, 1 when any is violated and 2 on usage or
configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import warnings

import jsonschema

from .engine import THREADS_ENV, EnsembleConfig, run_ensemble
from .models import KINDS, ModelError, ModelSpec, build_model
from .oracle import OracleError, exact_absorption
from .verify import (
    EpsilonK,
    any_violated,
    check_assumptions,
    check_doob_above,
    check_excursion_geometry,
    check_hit_zero,
    check_return_time,
    extinction_report,
    report,
    reports_to_csv,
    reports_to_json,
    scan_capacity,
)

log = logging.getLogger("softcap")

EXIT_OK, EXIT_VIOLATED, EXIT_USAGE = 0, 1, 2

VERIFIERS = ("assumptions", "extinction", "doob", "hit_zero", "geometry", "return_time")

_pos_int = {"type": "integer", "minimum": 1}
_nonneg_int = {"type": "integer", "minimum": 0}
_prob = {"type": "number", "minimum": 0, "maximum": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model"],
    "properties": {
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "K"],
            "properties": {
                "kind": {"enum": list(KINDS)},
                "K": _pos_int,
                "delta": {"type": "number"},
                "offspring_pmf": {"type": "array", "items": {
                    "type": "array", "prefixItems": [_nonneg_int, _prob],
                    "minItems": 2, "maxItems": 2}},
                "offspring_pmf_below": {"type": "array", "items": {
                    "type": "array", "prefixItems": [_nonneg_int, _prob],
                    "minItems": 2, "maxItems": 2}},
                "p_die": {"oneOf": [_prob, {"type": "array", "items": _prob, "minItems": 1}]},
                "decay_base": {"type": "number"},
                "z_max": _pos_int,
            },
        },
        "ensemble": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "reps": _pos_int,
                "step_budget": _nonneg_int,
                "master_seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "parallelism": _pos_int,
                "record_full_traces": {"type": "boolean"},
                "K": _pos_int,
                "z0": _nonneg_int,
            },
        },
        "verifiers": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name"],
                "properties": {
                    "name": {"enum": list(VERIFIERS)},
                    "z_max": _pos_int,
                    "k_max": _pos_int,
                    "x_list": {"type": "array", "items": _pos_int, "minItems": 1},
                    "delta": {"type": "number", "exclusiveMinimum": 0},
                    "c_max": _pos_int,
                },
            },
        },
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "state_cap": _pos_int,
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "strict": {"type": "boolean"},
            },
        },
        "scan": {
            "type": "object",
            "additionalProperties": False,
            "required": ["K_list"],
            "properties": {
                "K_list": {"type": "array", "items": _pos_int, "minItems": 1},
                "reps": _pos_int,
                "step_budget": _nonneg_int,
            },
        },
    },
}

HELP_EPILOG = f"""\
CSV outputs use RFC 4180 quoting and '.' as decimal separator.
  reports:  {', '.join(('name', 'theoretical', 'empirical', 'stderr', 'n', 'verdict'))}
  oracle:   z, extinction_probability, expected_absorption_time, tail_mass
  scan:     K, mean_time, stderr, n_extinct, n_censored, oracle_mean
Exit status: 0 all asserted bounds hold, 1 a bound is violated, 2 usage/config error.
Parallelism: --parallelism, else the config, else ${THREADS_ENV}, else 1.
"""


class ConfigError(Exception):
    pass


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    errors = sorted(jsonschema.Draft202012Validator(CONFIG_SCHEMA).iter_errors(cfg),
                    key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{path}: field {where}: {e.message}")
    return cfg


def _parallelism(args, ens: dict) -> int:
    if args.parallelism is not None:
        return args.parallelism
    if "parallelism" in ens:
        return ens["parallelism"]
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV}={env!r} is not an integer") from None
    return 1


def _prepare(args):
    cfg = load_config(args.config)
    try:
        model = build_model(ModelSpec.from_dict(cfg["model"]))
    except (ModelError, TypeError) as exc:
        raise ConfigError(f"{args.config}: field model: {exc}") from None
    ens = dict(cfg.get("ensemble", {}))
    ens.setdefault("reps", 1000)
    ens.setdefault("step_budget", 10**6)
    ens.setdefault("z0", max(model.K - 1, 1))
    if args.seed is not None:
        ens["master_seed"] = args.seed
    ens["parallelism"] = _parallelism(args, ens)
    try:
        ensemble = EnsembleConfig.from_dict(ens)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{args.config}: field ensemble: {exc}") from None
    return cfg, model, ensemble


def _write(out_dir, name, text):
    if out_dir is None:
        return
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _run_verifiers(cfg, model, ensemble_cfg):
    specs = cfg.get("verifiers") or [{"name": n} for n in VERIFIERS]
    K = ensemble_cfg.K or model.K
    reports = []
    summary = None
    if any(v["name"] != "assumptions" for v in specs):
        summary = run_ensemble(model, ensemble_cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for v in specs:
            name = v["name"]
            if name == "assumptions":
                reports += check_assumptions(model, K=K, z_max=v.get("z_max"),
                                             k_max=v.get("k_max", 50))
            elif name == "extinction":
                reports.append(extinction_report(summary, model))
            elif name == "doob":
                reports += check_doob_above(summary, K, v.get("x_list", [K + 5, 2 * K, 5 * K]))
            elif name == "hit_zero":
                reports.append(check_hit_zero(summary, K, model))
            elif name == "geometry":
                if model.epsilon is None:
                    reports.append(report("above_excursions_geometry", float("nan"),
                                          float("nan"), float("nan"), 0, asserted=False,
                                          note="no uniform death-risk floor"))
                else:
                    reports += check_excursion_geometry(summary, EpsilonK(model.epsilon, K),
                                                        v.get("k_max", 5), model)
            elif name == "return_time":
                delta = v.get("delta", model.spec.delta)
                if delta is None:
                    reports.append(report("above_duration_mean", float("nan"), float("nan"),
                                          float("nan"), 0, asserted=False,
                                          note="no drift margin delta given"))
                else:
                    reports += check_return_time(summary, K, delta, v.get("c_max", 1), model)
    for w in caught:
        log.info("%s", w.message)
    return reports, summary


def cmd_simulate(args):
    cfg, model, ens = _prepare(args)
    emit = args.emit or "summary"
    buf = io.StringIO() if emit == "traces" or args.out else None
    summary = run_ensemble(model, ens, trace_file=buf)
    _write(args.out, "summary.json", summary.to_json() + "\n")
    if buf is not None:
        _write(args.out, "traces.jsonl", buf.getvalue())
    sys.stdout.write(buf.getvalue() if emit == "traces" else summary.to_json() + "\n")
    return EXIT_OK


def cmd_verify(args):
    cfg, model, ens = _prepare(args)
    reports, summary = _run_verifiers(cfg, model, ens)
    csv_text = reports_to_csv(reports)
    _write(args.out, "reports.csv", csv_text)
    _write(args.out, "reports.json", reports_to_json(reports) + "\n")
    if summary is not None:
        _write(args.out, "summary.json", summary.to_json() + "\n")
    if args.emit == "summary" and summary is not None:
        sys.stdout.write(summary.to_json() + "\n")
    else:
        sys.stdout.write(csv_text)
    return EXIT_VIOLATED if any_violated(reports) else EXIT_OK


def cmd_oracle(args):
    cfg, model, _ = _prepare(args)
    o = cfg.get("oracle", {})
    try:
        sol = exact_absorption(model, o.get("state_cap", 4 * model.K), o.get("tol", 1e-12),
                               o.get("strict", True))
    except OracleError as exc:
        raise ConfigError(str(exc)) from None
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(("z", "extinction_probability", "expected_absorption_time", "tail_mass"))
    for z, p, t, m in sol.rows():
        w.writerow((z, repr(p), repr(t), repr(m)))
    _write(args.out, "oracle.csv", buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_scan(args):
    cfg, model, ens = _prepare(args)
    if "scan" not in cfg:
        raise ConfigError(f"{args.config}: field scan: required for the scan subcommand")
    sc = cfg["scan"]
    table = scan_capacity(model.spec, sc["K_list"], sc.get("reps", ens.reps),
                          sc.get("step_budget", ens.step_budget), ens.master_seed,
                          parallelism=ens.parallelism)
    _write(args.out, "scan.csv", table.to_csv())
    _write(args.out, "scan.json", json.dumps(table.to_dict(), indent=2, sort_keys=True) + "\n")
    sys.stdout.write(table.to_csv())
    print(f"log-slope {table.slope!r} exponential {table.exponential}", file=sys.stderr)
    return EXIT_OK


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _pos(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser():
    parser = argparse.ArgumentParser(
        prog="softcap-sim",
        description="Simulate and verify populations under a soft carrying capacity.",
        epilog=HELP_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="JSON run configuration")
    common.add_argument("--seed", type=_u64, metavar="U64", help="override ensemble.master_seed")
    common.add_argument("--parallelism", type=_pos, metavar="N", help="worker threads")
    common.add_argument("--out", metavar="DIR", help="directory for output files")
    common.add_argument("--emit", choices=("traces", "summary", "reports"),
                        help="what to print on stdout")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, text in (
        ("simulate", cmd_simulate, "run an ensemble; print its summary or per-trace records"),
        ("verify", cmd_verify, "evaluate bound reports"),
        ("oracle", cmd_oracle, "exact absorption probabilities and times per start size"),
        ("scan", cmd_scan, "mean extinction time across capacities"),
    ):
        p = sub.add_parser(name, parents=[common], help=text, epilog=HELP_EPILOG,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.set_defaults(func=fn)
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
