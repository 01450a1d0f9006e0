"""Command-line entry point exposing every pipeline stage.

Subcommands: gen-dataset, space-size, leading-power, canonical, search,
eval-policy, complete, report, serve-policy.  Every run that writes outputs
also writes a manifest (config, package version, seeds) next to them, so any
emitted table can be regenerated byte-identically.

Exit codes: 0 success, 2 usage error, 3 unreadable or malformed input file,
4 policy service unavailable or protocol failure, 1 any other error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from . import corpus as corpus_mod
from . import ea as ea_mod
from . import mcts as mcts_mod
from . import metrics as metrics_mod
from . import reporting
from .grammar import ParseError, parse_text, render, to_rules
from .objective import TargetSpec, classify, perturb_with_noise
from .policies import (
    DEFAULT_ENDPOINT_ENV,
    NeuralPolicyClient,
    PolicyError,
    ProtocolError,
    ServiceUnavailableError,
    TeacherPolicy,
    UniformPolicy,
    build_empirical,
    parse_model_name,
)
from .rational import Condition, canonicalize, leading_powers

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_SERVICE = 4
EXIT_ERROR = 1

SEARCH_METHODS = ("mcts", "ng-mcts", "mcts-pw", "mcts-pw-only", "ea", "ea-pw")

_METHOD_MODE = {
    "mcts": "data_only",
    "ng-mcts": "data_plus_pw",
    "mcts-pw": "data_plus_pw",
    "mcts-pw-only": "pw_only",
    "ea": "data_only",
    "ea-pw": "data_plus_pw",
}


class CliInputError(Exception):
    pass


def _write_manifest(out_dir: Path, command: str, config: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"command": command, "version": __version__, "config": config}
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_targets(path, noise_sd: float, seed: int) -> list[TargetSpec]:
    try:
        records = corpus_mod.read_jsonl(path)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise CliInputError(f"cannot read holdout file {path}: {exc}")
    targets = []
    for idx, rec in enumerate(records):
        try:
            t = TargetSpec.from_expression(rec.expr)
        except (ParseError, ValueError) as exc:
            raise CliInputError(f"holdout row {idx}: {exc}")
        if noise_sd > 0:
            t = perturb_with_noise(t, noise_sd, mcts_mod.derive_seed(seed, idx))
        targets.append(t)
    return targets


def cmd_gen_dataset(args) -> int:
    if args.scale == "paper":
        config = corpus_mod.DatasetConfig.paper_scale()
    else:
        config = corpus_mod.DatasetConfig()
    if args.config:
        try:
            with open(args.config) as fh:
                overrides = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliInputError(f"cannot read config {args.config}: {exc}")
        for key, value in overrides.items():
            if not hasattr(config, key):
                raise CliInputError(f"unknown dataset config key {key!r}")
            setattr(config, key, value)
    config.seed = args.seed
    out_dir = Path(args.out)
    result = corpus_mod.build_dataset(config)
    stats = corpus_mod.write_dataset(result, config, out_dir)
    _write_manifest(out_dir, "gen-dataset", asdict(config))
    for name, s in stats["splits"].items():
        print(f"{name}: {s.get('count', 0)} expressions")
    for line in result.log:
        print(f"# {line}")
    return EXIT_OK


def cmd_space_size(args) -> int:
    print(corpus_mod.space_size(args.n))
    return EXIT_OK


def _parse_expr_arg(text: str):
    try:
        return parse_text(text)
    except ParseError as exc:
        raise CliInputError(f"cannot parse expression: {exc}")


def cmd_leading_power(args) -> int:
    lp = leading_powers(_parse_expr_arg(args.expr))
    if lp.status == "defined":
        print(f"p0={lp.p0} pinf={lp.pinf}")
    else:
        print(lp.status)
    return EXIT_OK


def cmd_canonical(args) -> int:
    print(canonicalize(_parse_expr_arg(args.expr)).text)
    return EXIT_OK


def _policy_factory(method: str, endpoint: str | None):
    if method in ("mcts", "mcts-pw", "mcts-pw-only"):
        shared = UniformPolicy()
        return lambda target: shared
    if method == "ng-mcts":
        client = NeuralPolicyClient(endpoint)
        return lambda target: client
    raise ValueError(method)


def cmd_search(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.fixtures:
        return _run_fixtures(args, out_dir)

    if not args.holdout:
        raise CliInputError("search needs --holdout (or --fixtures)")
    targets = _load_targets(args.holdout, args.noise_sd, args.seed)
    method = args.method
    mode = _METHOD_MODE[method]
    results_path = out_dir / f"results_{method.replace('-', '_')}.jsonl"
    log: list[str] = []

    if method in ("ea", "ea-pw"):
        config = ea_mod.EaConfig(eval_budget=args.sims, mode=mode, seed=args.seed)
        rows, _ = ea_mod.run_batch(targets, config, method, results_path)
    else:
        config = mcts_mod.MctsConfig(simulations=args.sims, mode=mode, seed=args.seed,
                                     length_limit=args.length_limit)
        if args.teacher_prior:
            factory = lambda target: TeacherPolicy(to_rules(parse_text(target.expr_text)))
        else:
            factory = _policy_factory(method, args.endpoint)
        rows, _ = mcts_mod.run_batch(targets, factory, config, method, results_path, log)

    summary = reporting.join_summary({method: rows})
    with open(out_dir / f"summary_{method.replace('-', '_')}.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(out_dir, "search", {
        "method": method, "holdout": str(args.holdout), "sims": args.sims,
        "seed": args.seed, "noise_sd": args.noise_sd,
        "teacher_prior": args.teacher_prior,
    })
    m = summary["methods"][method]
    print(f"{method}: {m['count']} targets, solved {m['solved_percent']:.2f}%, "
          f"invalid {m['invalid_percent']:.2f}%")
    print(f"results: {results_path}")
    for line in log:
        print(f"# {line}", file=sys.stderr)
    return EXIT_OK


def _run_fixtures(args, out_dir: Path) -> int:
    """Score quoted candidate expressions against their targets without any
    search; rows are {target, candidate, method?} JSON objects."""
    try:
        with open(args.fixtures) as fh:
            fixture_rows = [json.loads(line) for line in fh if line.strip()]
    except (OSError, json.JSONDecodeError) as exc:
        raise CliInputError(f"cannot read fixtures {args.fixtures}: {exc}")
    results_path = out_dir / "results_fixtures.jsonl"
    with open(results_path, "w") as fh:
        for idx, row in enumerate(fixture_rows):
            try:
                target = TargetSpec.from_expression(row["target"])
                candidate = parse_text(row["candidate"])
            except (KeyError, ParseError, ValueError) as exc:
                raise CliInputError(f"fixture row {idx}: {exc}")
            report = classify(candidate, target)
            out = {
                "target": row["target"],
                "method": row.get("method", "fixture"),
                "best_expr": render(candidate),
            }
            out.update(report.to_json())
            fh.write(json.dumps(out, separators=(",", ":")) + "\n")
            dg = "/".join(
                "inf" if v is None else f"{v:.2f}"
                for v in (out["dg_train"], out["dg_int"], out["dg_ext"]))
            print(f"{out['method']}: {dg} dp={out['dp']} {out['status']}")
    _write_manifest(out_dir, "search --fixtures", {"fixtures": str(args.fixtures)})
    return EXIT_OK


def cmd_eval_policy(args) -> int:
    kind, l = parse_model_name(args.model)
    records = corpus_mod.read_jsonl(args.corpus) if args.corpus else []
    index = metrics_mod.TrainingIndex.from_records(records)

    client = None
    if kind in ("nn", "nnnc"):
        client = NeuralPolicyClient(args.endpoint)
        if not client.ping():
            raise ServiceUnavailableError("policy service did not answer ping")
        policy_for = lambda cond: client
    elif kind == "random":
        shared = UniformPolicy()
        policy_for = lambda cond: shared
    else:
        if not records:
            raise CliInputError(f"model {args.model} needs --corpus")
        shared = build_empirical(records, kind, l)
        policy_for = lambda cond: shared

    try:
        grid = metrics_mod.condition_grid(policy_for, args.k, index, args.seed,
                                          bound=args.bound,
                                          length_limit=args.length_limit)
    finally:
        if client is not None:
            client.close()
    report = metrics_mod.aggregate(grid, args.model)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    safe = args.model.replace(":", "_")
    if args.grid:
        metrics_mod.write_grid_csv(grid, out_dir / f"grid_{safe}.csv")
    with open(out_dir / f"report_{safe}.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(out_dir, "eval-policy", {
        "model": args.model, "k": args.k, "seed": args.seed,
        "corpus": str(args.corpus) if args.corpus else None,
    })
    ins, outs = report["in_sample"], report["out_of_sample"]
    print(f"{args.model}: in-sample success {100 * ins['success_rate_avg']:.1f}% "
          f"syn {100 * ins['syn_rate_avg']:.1f}% sem {100 * ins['sem_rate_avg']:.1f}% | "
          f"out-of-sample successes {outs['success_total']} "
          f"in {outs['conditions_with_success']} conditions")
    return EXIT_OK


def _parse_condition(text: str) -> Condition:
    try:
        c0, cinf = (int(p) for p in text.split(","))
    except ValueError:
        raise CliInputError(f"condition must be C0,CINF, got {text!r}")
    return Condition(c0, cinf)


def cmd_complete(args) -> int:
    from .policies import sample_from_prefix

    try:
        prefix = [int(p) for p in args.template.split(",") if p.strip() != ""]
    except ValueError:
        raise CliInputError(f"template must be comma-separated rule ids, got {args.template!r}")
    condition = _parse_condition(args.condition)

    kind, l = parse_model_name(args.model)
    if kind in ("nn", "nnnc"):
        policy = NeuralPolicyClient(args.endpoint)
    elif kind == "random":
        policy = UniformPolicy()
    else:
        if not args.corpus:
            raise CliInputError(f"model {args.model} needs --corpus")
        policy = build_empirical(corpus_mod.read_jsonl(args.corpus), kind, l)

    pairs, incomplete = sample_from_prefix(policy, prefix, condition, args.n, args.seed)
    for text, freq in pairs[:args.top]:
        print(f"{100 * freq:6.2f}%  {text}")
    if incomplete:
        print(f"# {incomplete}/{args.n} samples hit the length cap", file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    rows_by_method: dict[str, list[dict]] = {}
    for path in args.join:
        try:
            rows = reporting.read_results_jsonl(path)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliInputError(f"cannot read results {path}: {exc}")
        for row in rows:
            rows_by_method.setdefault(row.get("method", "unknown"), []).append(row)
    summary = reporting.join_summary(rows_by_method)
    out = json.dumps(summary, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(out + "\n")
    print(out)
    return EXIT_OK


def cmd_serve_policy(args) -> int:
    """Passthrough launcher for the policy service package."""
    try:
        import policy_service.cli as service_cli
    except ImportError:
        print("policy service package is not installed; install the service "
              "package and retry", file=sys.stderr)
        return EXIT_SERVICE
    passthrough = list(args.service_args)
    if passthrough and passthrough[0] == "--":
        passthrough = passthrough[1:]
    return service_cli.main(["serve"] + passthrough)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asymreg",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dataset", help="run the corpus pipeline and write splits")
    p.add_argument("--out", default="dataset", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", choices=("desk", "paper"), default="desk")
    p.add_argument("--config", help="JSON file overriding dataset config fields")
    p.set_defaults(fn=cmd_gen_dataset)

    p = sub.add_parser("space-size", help="exact size of the expression space")
    p.add_argument("n", type=int, help="maximum rule-sequence length")
    p.set_defaults(fn=cmd_space_size)

    p = sub.add_parser("leading-power", help="leading powers of an expression")
    p.add_argument("expr")
    p.set_defaults(fn=cmd_leading_power)

    p = sub.add_parser("canonical", help="canonical rational-form key")
    p.add_argument("expr")
    p.set_defaults(fn=cmd_canonical)

    p = sub.add_parser("search", help="run a search method over a holdout file")
    p.add_argument("--method", choices=SEARCH_METHODS, default="mcts")
    p.add_argument("--holdout", help="holdout JSONL of corpus records")
    p.add_argument("--fixtures", help="score fixture candidates instead of searching")
    p.add_argument("--noise-sd", type=float, default=0.0)
    p.add_argument("--sims", type=int, default=500,
                   help="simulations (tree search) or evaluation budget (ea)")
    p.add_argument("--length-limit", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="runs")
    p.add_argument("--endpoint", help=f"policy service address, default ${DEFAULT_ENDPOINT_ENV}")
    p.add_argument("--teacher-prior", action="store_true",
                   help="diagnostic prior that follows each target's own derivation")
    p.set_defaults(fn=cmd_search)

    p = sub.add_parser("eval-policy", help="generative metrics over the condition grid")
    p.add_argument("--model", required=True,
                   help="nn, nnnc, random, fh, fhnc, lh:L or lhnc:L")
    p.add_argument("--grid", action="store_true", help="emit the per-condition CSV grid")
    p.add_argument("--corpus", help="training corpus JSONL (novelty reference and "
                                    "empirical-model source)")
    p.add_argument("-k", type=int, default=25, help="generations per condition")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--length-limit", type=int, default=100)
    p.add_argument("--bound", type=int, default=9,
                   help="grid half-width: conditions with |p0|,|pinf| <= bound")
    p.add_argument("--out", default="policy_eval")
    p.add_argument("--endpoint")
    p.set_defaults(fn=cmd_eval_policy)

    p = sub.add_parser("complete", help="complete a template prefix under a condition")
    p.add_argument("--template", required=True, help="comma-separated rule ids")
    p.add_argument("--condition", required=True, help="C0,CINF")
    p.add_argument("-n", type=int, default=1000)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--model", default="random")
    p.add_argument("--corpus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--endpoint")
    p.set_defaults(fn=cmd_complete)

    p = sub.add_parser("report", help="join result files and compute the hard set")
    p.add_argument("--join", nargs="+", required=True, help="results JSONL files")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("serve-policy", help="launch the policy service (passthrough)")
    p.add_argument("service_args", nargs=argparse.REMAINDER)
    p.set_defaults(fn=cmd_serve_policy)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ServiceUnavailableError, ProtocolError) as exc:
        print(f"policy service error: {exc}", file=sys.stderr)
        return EXIT_SERVICE
    except PolicyError as exc:
        print(f"policy error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
