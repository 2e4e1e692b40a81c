"""Command-line entry point.

Batch subcommands (gen, validate, build, solve, heur, sweep, compare) are
file-to-file and run in process; ``serve`` hosts the bidding service; the
``session`` subcommands are a thin HTTP client for a running service.
Human-readable summaries go to stdout, machine artifacts only to --out
paths, and failures print one JSON error document to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, exact, lpformat, metaheuristics, milp
from .instance import (
    GeneratorConfig,
    SsoaError,
    config_from_doc,
    generate_instance,
    instance_to_json,
    load_instance,
    validate_instance,
)

_HEUR_PARAMS = {
    "ga": metaheuristics.GaParams,
    "pso": metaheuristics.PsoParams,
    "aco": metaheuristics.AcoParams,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except SsoaError as exc:
        _error_doc(type(exc).__name__, str(exc))
        return 1
    except FileNotFoundError as exc:
        _error_doc("FileNotFound", str(exc))
        return 1


def _error_doc(kind: str, message: str) -> None:
    json.dump({"error": {"type": kind, "message": message}}, sys.stderr)
    sys.stderr.write("\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssoa",
        description="Two-tier supplier selection and order allocation toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--config", type=Path, help="generator config JSON")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(handler=cmd_gen)

    p = sub.add_parser("validate", help="check instance invariants")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("build", help="compile a model and export it")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--model", choices=["machinist", "forger", "integrated"],
                   required=True)
    p.add_argument("--mode", choices=["single", "dual"])
    p.add_argument("--split", type=float, help="uniform first-proportion share")
    p.add_argument("--export", choices=["lp", "mps"], default="lp")
    p.add_argument("--tier1-report", type=Path,
                   help="machinist solve report feeding a forger build "
                        "(solved on the fly when omitted)")
    p.add_argument("--max-variables", type=int, default=milp.DEFAULT_VARIABLE_CAP)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(handler=cmd_build)

    p = sub.add_parser("solve", help="exact solve at desk scale")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--model",
                   choices=["machinist", "forger", "integrated", "two-phase"],
                   default="two-phase")
    p.add_argument("--mode", choices=["single", "dual"])
    p.add_argument("--split", type=float)
    p.add_argument("--time-limit", type=float, default=300.0)
    p.add_argument("--node-limit", type=int, default=2_000_000)
    p.add_argument("--gap", type=float, default=1e-6)
    p.add_argument("--out", type=Path)
    p.add_argument("--trace", type=Path, help="incumbent trace CSV")
    p.set_defaults(handler=cmd_solve)

    p = sub.add_parser("heur", help="meta-heuristic solve")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--algo", choices=["ga", "pso", "aco"], required=True)
    p.add_argument("--params", type=Path, help="JSON parameter overrides")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", choices=["machinist", "forger", "integrated"],
                   default="integrated")
    p.add_argument("--mode", choices=["single", "dual"])
    p.add_argument("--split", type=float)
    p.add_argument("--reference", type=float,
                   help="known optimum for relative-cost tracing")
    p.add_argument("--wall-limit", type=float)
    p.add_argument("--out", type=Path)
    p.add_argument("--trace", type=Path, help="(iter,best,relative) CSV")
    p.set_defaults(handler=cmd_heur)

    p = sub.add_parser("sweep", help="sensitivity sweeps")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--type", dest="sweep_type", required=True,
                   choices=["sourcing", "penalty-factor", "penalty-threshold"])
    p.add_argument("--values", required=True,
                   help="sourcing: 50:50,70:30,100:0; penalty: 1,2,5")
    p.add_argument("--model", default="machinist",
                   choices=["machinist", "forger", "integrated", "two-phase"])
    p.add_argument("--supplier", type=int, default=0,
                   help="designated tier2 supplier for penalty sweeps")
    p.add_argument("--time-limit", type=float, default=300.0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("compare", help="solver comparison table")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--solvers", default="exact,ga,pso,aco")
    p.add_argument("--model", default="machinist",
                   choices=["machinist", "forger", "integrated", "two-phase"])
    p.add_argument("--seeds", default="0")
    p.add_argument("--params", type=Path,
                   help="JSON {algo: {param: value}} heuristic overrides")
    p.add_argument("--time-limit", type=float, default=300.0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("serve", help="run the bidding-conference service")
    p.add_argument("--data-dir", type=Path, required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=cmd_serve)

    p = sub.add_parser("session", help="thin client for a running service")
    session_sub = p.add_subparsers(dest="session_command", required=True)

    sp = session_sub.add_parser("create")
    sp.add_argument("--server", default="http://127.0.0.1:8000")
    sp.add_argument("--in", dest="input", type=Path, required=True)
    sp.add_argument("--model", default="two-phase")
    sp.add_argument("--solver", default="exact")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(handler=cmd_session_create)

    sp = session_sub.add_parser("bid")
    sp.add_argument("--server", default="http://127.0.0.1:8000")
    sp.add_argument("--id", required=True)
    sp.add_argument("--delta", type=Path, required=True,
                    help="JSON list of cost overrides")
    sp.add_argument("--label", default="")
    sp.add_argument("--skip-unsolved", action="store_true")
    sp.set_defaults(handler=cmd_session_bid)

    sp = session_sub.add_parser("solve")
    sp.add_argument("--server", default="http://127.0.0.1:8000")
    sp.add_argument("--id", required=True)
    sp.add_argument("--round", type=int, required=True)
    sp.add_argument("--out", type=Path)
    sp.set_defaults(handler=cmd_session_solve)

    sp = session_sub.add_parser("allocation")
    sp.add_argument("--server", default="http://127.0.0.1:8000")
    sp.add_argument("--id", required=True)
    sp.add_argument("--round", type=int, required=True)
    sp.set_defaults(handler=cmd_session_allocation)

    sp = session_sub.add_parser("summary")
    sp.add_argument("--server", default="http://127.0.0.1:8000")
    sp.add_argument("--id", required=True)
    sp.set_defaults(handler=cmd_session_summary)

    return parser


# ---------------------------------------------------------------------------
# batch commands


def _load_input(path: Path):
    inst = load_instance(path.read_text(encoding="utf-8"))
    return inst


def _apply_mode(inst, args):
    if getattr(args, "mode", None) or getattr(args, "split", None) is not None:
        return milp.with_sourcing(inst, args.mode, args.split)
    return inst


def cmd_gen(args) -> int:
    config = GeneratorConfig()
    if args.config:
        config = config_from_doc(json.loads(args.config.read_text(encoding="utf-8")))
    inst = generate_instance(config, seed=args.seed)
    args.out.write_text(instance_to_json(inst), encoding="utf-8")
    print(f"wrote {args.out}: {inst!r}")
    return 0


def cmd_validate(args) -> int:
    inst = _load_input(args.input)
    violations = validate_instance(inst)
    if not violations:
        print(f"{args.input}: valid ({inst!r})")
        return 0
    for violation in violations:
        print(violation)
    _error_doc("ValidationFailed", f"{len(violations)} violation(s)")
    return 1


def cmd_build(args) -> int:
    inst = _apply_mode(_load_input(args.input), args)
    if args.model == "machinist":
        model = milp.build_machinist(inst)
    elif args.model == "forger":
        tier1 = _tier1_for_forger(inst, args)
        model = milp.build_forger(inst, tier1)
    else:
        model = milp.build_integrated_linearized(inst, max_variables=args.max_variables)
    text = lpformat.export_model(model, args.export)
    args.out.write_text(text, encoding="utf-8")
    print(f"wrote {args.out}: {model.kind} model, {model.n_variables} variables, "
          f"{len(model.constraints)} rows")
    return 0


def _tier1_for_forger(inst, args) -> np.ndarray:
    report_path = getattr(args, "tier1_report", None)
    if report_path:
        doc = json.loads(Path(report_path).read_text(encoding="utf-8"))
        report = exact.SolveReport.from_doc(doc)
        if report.allocation is None or report.allocation.tier1 is None:
            raise SsoaError("tier1 report carries no machinist allocation")
        return report.allocation.tier1
    phase1 = exact.solve_bb(milp.build_machinist(inst), inst=inst)
    if phase1.allocation is None:
        raise SsoaError(f"machinist phase failed: {phase1.status}")
    return phase1.allocation.tier1


def _limits(args) -> exact.SolveLimits:
    return exact.SolveLimits(time_limit=args.time_limit,
                             node_limit=getattr(args, "node_limit", 2_000_000),
                             gap_target=getattr(args, "gap", 1e-6))


def cmd_solve(args) -> int:
    inst = _apply_mode(_load_input(args.input), args)
    report, _alloc = analysis.solve_exact(inst, args.model, _limits(args))
    doc = report.to_doc()
    if args.out:
        args.out.write_text(json.dumps(doc, indent=1, sort_keys=True), encoding="utf-8")
    if args.trace:
        lines = ["time,incumbent"] + [f"{t!r},{v!r}" for t, v in report.trace]
        args.trace.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"{args.model}: {report.status}, objective="
          f"{report.objective if report.objective is not None else 'n/a'}, "
          f"nodes={report.nodes}, wall={report.wall_time:.3f}s")
    return 0 if report.status in (exact.OPTIMAL, exact.FEASIBLE) else 1


def cmd_heur(args) -> int:
    inst = _apply_mode(_load_input(args.input), args)
    params_cls = _HEUR_PARAMS[args.algo]
    params = params_cls()
    if args.params:
        overrides = json.loads(args.params.read_text(encoding="utf-8"))
        params = dataclasses.replace(params, **overrides)
    tier1_base = None
    if args.model == "forger":
        phase1 = exact.solve_bb(milp.build_machinist(inst), inst=inst)
        tier1_base = phase1.allocation.tier1
    run = {"ga": metaheuristics.ga_solve, "pso": metaheuristics.pso_solve,
           "aco": metaheuristics.aco_solve}[args.algo]
    report, trace = run(inst, params, seed=args.seed, kind=args.model,
                        tier1_base=tier1_base, reference=args.reference,
                        wall_clock_limit=args.wall_limit)
    if args.out:
        args.out.write_text(json.dumps(report.to_doc(), indent=1, sort_keys=True),
                            encoding="utf-8")
    if args.trace:
        args.trace.write_text(trace.to_csv(), encoding="utf-8")
    print(f"{args.algo} on {args.model}: best={report.objective}, "
          f"evaluations={report.nodes}, wall={report.wall_time:.3f}s")
    return 0


def cmd_sweep(args) -> int:
    inst = _load_input(args.input)
    limits = exact.SolveLimits(time_limit=args.time_limit)
    if args.sweep_type == "sourcing":
        ratios = []
        for token in args.values.split(","):
            first, second = token.strip().split(":")
            ratios.append((float(first), float(second)))
        result = analysis.sweep_sourcing(inst, ratios, kind=args.model, limits=limits)
    else:
        which = "factor" if args.sweep_type == "penalty-factor" else "threshold"
        values = [float(v) for v in args.values.split(",")]
        result = analysis.sweep_penalty(inst, which, values, supplier=args.supplier,
                                        kind=args.model, limits=limits)
    args.out.write_text(result.to_csv(), encoding="utf-8")
    print(f"wrote {args.out}: {len(result.points)} points on {result.axis}")
    return 0


def cmd_compare(args) -> int:
    inst = _load_input(args.input)
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    seeds = [int(s) for s in args.seeds.split(",")]
    heuristic_params = {}
    if args.params:
        raw = json.loads(args.params.read_text(encoding="utf-8"))
        for algo, overrides in raw.items():
            heuristic_params[algo] = dataclasses.replace(
                _HEUR_PARAMS[algo](), **overrides)
    result = analysis.compare_solvers(
        inst, solvers, kind=args.model, seeds=seeds,
        limits=exact.SolveLimits(time_limit=args.time_limit),
        heuristic_params=heuristic_params)
    args.out.write_text(result.to_csv(), encoding="utf-8")
    print(result.to_csv())
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server.app import create_app

    app = create_app(str(args.data_dir))
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


# ---------------------------------------------------------------------------
# thin session client


def _client(server: str):
    import httpx

    return httpx.Client(base_url=server.rstrip("/") + "/v1", timeout=600.0)


def _check(response) -> dict:
    if response.status_code >= 400:
        raise SsoaError(f"server returned {response.status_code}: "
                        f"{response.json().get('detail', response.text)}")
    return response.json()


def cmd_session_create(args) -> int:
    doc = json.loads(args.input.read_text(encoding="utf-8"))
    body = {"instance": doc,
            "settings": {"model_kind": args.model, "solver": args.solver,
                         "seed": args.seed}}
    with _client(args.server) as client:
        out = _check(client.post("/sessions", json=body))
    print(out["id"])
    return 0


def cmd_session_bid(args) -> int:
    delta = json.loads(args.delta.read_text(encoding="utf-8"))
    body = {"delta": delta, "label": args.label, "skip_unsolved": args.skip_unsolved}
    with _client(args.server) as client:
        out = _check(client.post(f"/sessions/{args.id}/rounds", json=body))
    print(out["number"])
    return 0


def cmd_session_solve(args) -> int:
    with _client(args.server) as client:
        out = _check(client.post(f"/sessions/{args.id}/rounds/{args.round}/solve",
                                 json={}))
    if args.out:
        args.out.write_text(json.dumps(out, indent=1, sort_keys=True), encoding="utf-8")
    print(f"round {args.round}: {out['status']}, objective={out['objective']}")
    return 0


def cmd_session_allocation(args) -> int:
    with _client(args.server) as client:
        out = _check(client.get(f"/sessions/{args.id}/rounds/{args.round}/allocation"))
    print(json.dumps(out, indent=1, sort_keys=True))
    return 0


def cmd_session_summary(args) -> int:
    with _client(args.server) as client:
        out = _check(client.get(f"/sessions/{args.id}/summary"))
    for entry in out["rounds"]:
        status = entry["status"] or ("solved" if entry["solved"] else "open")
        objective = entry["objective"]
        print(f"round {entry['number']:>3}  {status:<10} "
              f"{objective if objective is not None else '-'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
