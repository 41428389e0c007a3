"""Command-line entry point: ``credalcfr estimate | infer | simulate | compare``.

Exit codes: 0 success, 1 runtime or domain error, 2 usage or configuration error.
Every command that writes files also writes ``manifest.json`` next to them with
the resolved configuration and SHA-256 digests of inputs and outputs.  The
default output directory is taken from ``CREDALCFR_OUTPUT_DIR``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .cfr import (
    CONDITION_VARIABLES,
    DESCRIPTIONS,
    LINE_PRIORS,
    LINE_VARIABLE,
    NETWORK_VARIANTS,
    STATES,
    CfrNetworkSpec,
    CredibleMode,
    DirichletMode,
    IdmMode,
    build_cfr_network,
    case_study_network,
    case_study_scenarios,
    classify_record,
    count_contingencies,
    estimate_tables,
    load_fixture,
    read_records_csv,
    with_line_prior,
)
from .credal import CredalNetwork, Evidence, credal_infer, credal_infer_soft
from .estimation import round_half_away
from .exceptions import ConfigError, CredalCfrError, NetworkError
from .oltsim import RNG_ALGORITHM, ConvergenceTrace, SimulationConfig, compare_traces, run_convergence_study

OUTPUT_DIR_ENV = "CREDALCFR_OUTPUT_DIR"
BUILTIN_CONFIGS = {
    "two-condition": "sim_two_condition.json",
    "small-sample": "sim_small_sample.json",
    "s-sweep": "sim_s_sweep.json",
}


class UsageError(CredalCfrError):
    pass


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _output_dir(args) -> Path | None:
    out = args.out or os.environ.get(OUTPUT_DIR_ENV)
    return Path(out) if out else None


def _write_outputs(out: Path, files: dict[str, str], manifest: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    digests = {}
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8")
        digests[name] = _sha256(out / name)
    manifest = dict(manifest, outputs=digests, tool={"name": "credalcfr", "version": __version__})
    (out / "manifest.json").write_text(_dump(manifest), encoding="utf-8")


def _fmt2(x: float) -> str:
    return f"{round_half_away(x, 2):.2f}"


# --- estimate -------------------------------------------------------------


def _load_tables_arg(value: str, fixture_names: dict[str, str]):
    if value in fixture_names:
        return load_fixture(fixture_names[value]), value
    path = Path(value)
    try:
        return json.loads(path.read_text(encoding="utf-8")), str(path)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None


def _estimate_mode(args):
    if args.dirichlet_weights is not None:
        weights, source = _load_tables_arg(
            args.dirichlet_weights, {"primary": "weights_primary.json", "alternative": "weights_alternative.json"}
        )
        return DirichletMode(weights), {"kind": "dirichlet", "weights": source}
    if args.credible_gamma is not None:
        s = 1.0 if args.idm_s is None else args.idm_s
        return CredibleMode(args.credible_gamma, s), {"kind": "credible", "gamma": args.credible_gamma, "s": s}
    s = 1.0 if args.idm_s is None else args.idm_s
    return IdmMode(s), {"kind": "idm", "s": s}


def cmd_estimate(args) -> int:
    inputs = {}
    if args.records:
        records = read_records_csv(args.records)
        counts = count_contingencies(classify_record(r) for r in records)
        inputs[args.records] = _sha256(Path(args.records))
        source = {"records": args.records, "hours": len(records)}
    else:
        counts, name = _load_tables_arg(args.counts, {"bundled": "failure_counts.json"})
        if name != "bundled":
            inputs[name] = _sha256(Path(name))
        source = {"counts": name}
    h1, h1_name = _load_tables_arg(args.h1, {"bundled": "h1_statistics.json"})
    if h1_name != "bundled":
        inputs[h1_name] = _sha256(Path(h1_name))
    mode, mode_doc = _estimate_mode(args)
    if isinstance(mode, DirichletMode) and mode_doc["weights"] not in ("primary", "alternative"):
        inputs[mode_doc["weights"]] = _sha256(Path(mode_doc["weights"]))
    spec = CfrNetworkSpec(args.prior, counts, h1, mode_doc.get("s", 1.0))
    tables = estimate_tables(spec.h2_counts, mode)

    doc = {"mode": mode_doc, "source": source, "counts": spec.h2_counts, "tables": {}}
    for var in CONDITION_VARIABLES:
        doc["tables"][var] = {}
        for ctx, row in tables[var].items():
            doc["tables"][var][ctx] = [
                {
                    "state": state,
                    "lower": iv.lower,
                    "upper": iv.upper,
                    "lower_2dp": round_half_away(iv.lower, 2),
                    "upper_2dp": round_half_away(iv.upper, 2),
                }
                for state, iv in zip(STATES[var], row)
            ]
    text = _render_tables(spec, tables, mode_doc)
    sys.stdout.write(_dump(doc) if args.format == "json" else text)

    out = _output_dir(args)
    if out is not None or args.network_out:
        network = build_cfr_network(spec, mode)
        files = {"tables.json": _dump(doc), "tables.txt": text}
        if out is not None:
            files["network.json"] = _dump(network.to_dict())
            manifest = {
                "command": "estimate",
                "config": {"mode": mode_doc, "source": source, "prior_failure_rate": args.prior, "h1": h1_name},
                "inputs": inputs,
            }
            _write_outputs(out, files, manifest)
        if args.network_out:
            network.save(args.network_out)
    return 0


def _render_tables(spec: CfrNetworkSpec, tables, mode_doc) -> str:
    label = ", ".join(f"{k}={v}" for k, v in mode_doc.items())
    lines = [f"Conditional tables P(E | H, parents)  [{label}]", ""]
    for var in CONDITION_VARIABLES:
        lines.append(f"{var} ({DESCRIPTIONS[var]})")
        lines.append("  " + "row".ljust(10) + "".join(s.ljust(16) for s in STATES[var]))
        for ctx, row in tables[var].items():
            suffix = f",{ctx}" if ctx else ""
            h1 = "".join(_fmt2(p).ljust(16) for p in spec.h1_tables[var][ctx])
            lines.append("  " + f"h1{suffix}".ljust(10) + h1)
            cells = []
            for iv in row:
                cells.append((_fmt2(iv.lower) if iv.is_point else f"[{_fmt2(iv.lower)}, {_fmt2(iv.upper)}]").ljust(16))
            lines.append("  " + f"h2{suffix}".ljust(10) + "".join(cells))
        lines.append("")
    return "\n".join(lines)


# --- infer ----------------------------------------------------------------


def _parse_assignment(text: str, flag: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key or not value:
        raise UsageError(f"{flag} expects VARIABLE=VALUE, got {text!r}")
    return key.strip(), value.strip()


def _parse_soft(text: str) -> tuple[str, dict[str, float]]:
    var, spec = _parse_assignment(text, "--soft")
    weights = {}
    for part in spec.split(","):
        state, sep, w = part.partition(":")
        if not sep:
            raise UsageError(f"--soft expects VARIABLE=state:weight,..., got {text!r}")
        try:
            weights[state.strip()] = float(w)
        except ValueError:
            raise UsageError(f"--soft weight {w!r} is not a number") from None
    return var, weights


def _resolve_network(name: str) -> tuple[CredalNetwork, dict, dict]:
    line, _, variant = name.partition("-")
    if line.upper() in LINE_PRIORS and variant in NETWORK_VARIANTS:
        return case_study_network(line.upper(), variant), {"builtin": name}, {}
    path = Path(name)
    if not path.exists():
        builtins = [f"{ln.lower()}-{v}" for ln in LINE_PRIORS for v in NETWORK_VARIANTS]
        raise ConfigError(f"network {name!r} is neither a file nor a bundled network ({', '.join(builtins)})")
    return CredalNetwork.load(path), {"file": str(path)}, {str(path): _sha256(path)}


def cmd_infer(args) -> int:
    network, net_doc, inputs = _resolve_network(args.network)
    hard: dict[str, str] = {}
    soft: dict[str, dict[str, float]] = {}
    prior = args.prior
    if args.scenario:
        scenarios = case_study_scenarios()
        if args.scenario not in scenarios:
            raise UsageError(f"unknown scenario {args.scenario!r}; choose from {', '.join(scenarios)}")
        sc = scenarios[args.scenario]
        hard.update(sc.hard)
        soft.update(sc.soft)
        if prior is None:
            prior = sc.prior_failure_rate
    for item in args.evidence:
        var, state = _parse_assignment(item, "--evidence")
        soft.pop(var, None)
        hard[var] = state
    for item in args.soft:
        var, weights = _parse_soft(item)
        hard.pop(var, None)
        soft[var] = weights
    if "=" in args.query:
        query_var, query_state = _parse_assignment(args.query, "--query")
    else:
        query_var, query_state = LINE_VARIABLE, args.query.strip()
    network.variable(query_var).index(query_state)
    for var, state in hard.items():
        network.variable(var).index(state)
    for var, weights in soft.items():
        v = network.variable(var)
        for state in weights:
            v.index(state)
    if prior is not None:
        network = with_line_prior(network, prior)
    evidence = Evidence(hard, soft)
    if soft:
        result = credal_infer_soft(network, query_var, query_state, evidence, args.max_combinations)
    else:
        result = credal_infer(network, query_var, query_state, hard, args.max_combinations)
    doc = {
        "query": {"variable": query_var, "state": query_state},
        "lower": result.lower,
        "upper": result.upper,
        "mode": "point" if network.is_precise else "interval",
        "network": net_doc,
        "prior_failure_rate": prior,
        "evidence": {"hard": hard, "soft": soft},
    }
    if args.format == "json":
        sys.stdout.write(_dump(doc))
    else:
        sys.stdout.write(
            f"P({query_var}={query_state} | evidence) in [{result.lower:.6e}, {result.upper:.6e}]"
            f"  ({doc['mode']}; rounded [{result.lower:.2E}, {result.upper:.2E}])\n"
        )
    out = _output_dir(args)
    if out is not None:
        manifest = {"command": "infer", "config": {k: v for k, v in doc.items() if k not in ("lower", "upper")}, "inputs": inputs}
        _write_outputs(out, {"result.json": _dump(doc)}, manifest)
    return 0


# --- simulate -------------------------------------------------------------


def cmd_simulate(args) -> int:
    inputs = {}
    if args.config in BUILTIN_CONFIGS:
        config = SimulationConfig.from_dict(load_fixture(BUILTIN_CONFIGS[args.config]))
    else:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(
                f"config {args.config!r} is neither a file nor a bundled config ({', '.join(BUILTIN_CONFIGS)})"
            )
        config = SimulationConfig.load(path)
        inputs[str(path)] = _sha256(path)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    if args.replications < 1:
        raise UsageError("--replications must be at least 1")
    seeds = list(range(config.seed, config.seed + args.replications))
    rows = []
    for seed in seeds:
        rows.extend(run_convergence_study(config, seed).rows)
    trace = ConvergenceTrace(rows, config.to_dict())
    out = _output_dir(args) or Path("credalcfr-output")
    manifest = {
        "command": "simulate",
        "config": config.to_dict(),
        "seeds": seeds,
        "rng": RNG_ALGORITHM,
        "inputs": inputs,
    }
    _write_outputs(out, {"trace.csv": trace.to_csv(), "trace.json": trace.to_json()}, manifest)
    n_applicable = sum(r.applicable for r in rows)
    print(f"wrote {len(rows)} trace rows ({len(rows) - n_applicable} inapplicable) for {len(seeds)} seed(s) to {out}")
    return 0


# --- compare --------------------------------------------------------------


def cmd_compare(args) -> int:
    rows = []
    inputs = {}
    for name in args.trace:
        path = Path(name)
        rows.extend(ConvergenceTrace.read(path).rows)
        inputs[str(path)] = _sha256(path)
    summary = compare_traces(rows)
    if args.format == "json":
        sys.stdout.write(_dump(summary))
    else:
        for key, s in summary.items():
            widths = [w for w in s["mean_width"].values() if w is not None]
            print(
                f"{key}: runs={s['runs']} coverage={s['coverage']:.3f} final_coverage={s['final_coverage']:.3f} "
                f"below0={s['bounds_below_0']} above1={s['bounds_above_1']} "
                f"first_applicable={s['first_applicable_checkpoint']} "
                f"final_mean_width={widths[-1] if widths else float('nan'):.4g}"
            )
    out = _output_dir(args)
    if out is not None:
        _write_outputs(out, {"summary.json": _dump(summary)}, {"command": "compare", "config": {}, "inputs": inputs})
    return 0


# --- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="credalcfr", description="Interval-valued conditional failure rates of transmission lines.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, default_format="text"):
        p.add_argument("--out", help=f"output directory (default: ${OUTPUT_DIR_ENV})")
        p.add_argument("--format", choices=("text", "json"), default=default_format, help="stdout format")

    p = sub.add_parser("estimate", help="estimate the failure-side conditional tables")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--records", help="hourly records CSV")
    src.add_argument("--counts", default="bundled", help="failure counts JSON (default: bundled case study)")
    p.add_argument("--h1", default="bundled", help="normal-operation tables JSON (default: bundled)")
    p.add_argument("--prior", type=float, default=LINE_PRIORS["TL1"], help="line failure rate P(h2)")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--dirichlet-weights", metavar="FILE", help="Dirichlet weights JSON, or 'primary'/'alternative'")
    mode.add_argument("--credible-gamma", type=float, metavar="GAMMA", help="IDM credible intervals at this credibility")
    p.add_argument("--idm-s", type=float, metavar="S", help="equivalent sample size (default 1)")
    p.add_argument("--network-out", metavar="PATH", help="also write the assembled network JSON here")
    common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("infer", help="bound P(query | evidence) on a network")
    p.add_argument("network", help="network JSON file or bundled name such as tl1-idm, tl2-dirichlet")
    p.add_argument("--evidence", action="append", default=[], metavar="VAR=STATE")
    p.add_argument("--soft", action="append", default=[], metavar="VAR=STATE:W,STATE:W")
    p.add_argument("--scenario", help="bundled scenario name (I, II, III, IV) supplying evidence and prior")
    p.add_argument("--query", default="H=h2", metavar="VAR=STATE", help="query state; a bare state refers to H")
    p.add_argument("--prior", type=float, help="override the line failure rate P(h2)")
    p.add_argument("--max-combinations", type=int, default=10**7)
    common(p, "json")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("simulate", help="run the virtual-line convergence study")
    p.add_argument("--config", required=True, help=f"config JSON or bundled name ({', '.join(BUILTIN_CONFIGS)})")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--replications", type=int, default=1, help="number of consecutive seeds to run")
    p.add_argument("--out", help=f"output directory (default: ${OUTPUT_DIR_ENV} or ./credalcfr-output)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="summarize convergence traces")
    p.add_argument("--trace", action="append", required=True, help="trace CSV (repeatable)")
    common(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"credalcfr: error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, NetworkError) as exc:
        print(f"credalcfr: error: {exc}", file=sys.stderr)
        return 2
    except (CredalCfrError, OSError, ValueError) as exc:
        print(f"credalcfr: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
