"""Command-line surface.

Subcommands cover the whole workflow: simulate a scenario, profile an NF
into a dataset, train a prediction bundle, predict and evaluate, run the
placement strategies, and diagnose bottlenecks.  Every command that
writes a file also writes a run manifest beside it (inputs, outputs,
seeds, digests) so runs can be reproduced and outputs verified.

Exit codes: 0 success, 1 usage error, 2 domain error.  Domain errors
print a machine-readable JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .accel_model import AccelModelParams, InferenceError
from .apps import (
    Fleet,
    NfInstance,
    PlacementStrategy,
    SlaSpec,
    diagnose,
    evaluate_placement,
    nic_lower_bound,
    optimal_nic_count,
    place_sequence,
)
from .catalog import SimulatorRunner, get_nf
from .composer import AmbiguousPatternError
from .core import (
    DEFAULT_TRAFFIC,
    InvalidInputError,
    ResourceKind,
    TrafficProfile,
    band_accuracy,
    mape,
)
from .predictor import (
    ACCEL_ATTRIBUTE,
    ContentionDescriptor,
    ExtrapolationError,
    NfPredictor,
    build,
)
from .profiler import (
    ProfilingConfig,
    QuotaExhaustedError,
    adaptive_profile,
    full_profile,
    load_dataset,
    random_profile,
    save_dataset,
)
from .simulator import ContentionScenario, ConvergenceError, run_scenario

REPORT_SCHEMA_VERSION = 1

#: The known per-request time of the accelerator benchmark NFs, used to
#: translate a contention level into an offered rate.
_BENCH_T0 = 10e-6

_ERROR_TYPES = {
    ExtrapolationError: "out-of-domain",
    InvalidInputError: "invalid-input",
    ConvergenceError: "non-convergence",
    InferenceError: "inference-failure",
    AmbiguousPatternError: "ambiguous-pattern",
    QuotaExhaustedError: "quota-exhausted",
    FileNotFoundError: "missing-file",
    json.JSONDecodeError: "malformed-json",
    KeyError: "malformed-input",
    ValueError: "invalid-input",
}


class _Parser(argparse.ArgumentParser):
    """argparse maps usage errors to exit code 2; this tool uses 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


# --------------------------------------------------------------------------
# Shared plumbing
# --------------------------------------------------------------------------

def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load_json(path: str) -> dict:
    with open(path) as f:
        return json.load(f)


def _dump_json(doc, path: Path) -> None:
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"
    )


def _write_manifest(command: str, args: argparse.Namespace,
                    inputs: list[str], outputs: list[str]) -> None:
    doc = {
        "schema": "run-manifest",
        "tool_version": __version__,
        "command": command,
        "arguments": {
            k: v for k, v in sorted(vars(args).items()) if k != "func"
        },
        "inputs": {str(p): _sha256(Path(p)) for p in inputs},
        "outputs": {str(p): _sha256(Path(p)) for p in outputs},
    }
    main_out = Path(outputs[0])
    Path(str(main_out) + ".manifest.json").write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n"
    )


def _parse_levels(doc: dict) -> dict:
    levels = {}
    for key, v in doc.items():
        kind = ResourceKind(key)
        levels[kind] = tuple(float(x) for x in v) if isinstance(v, list) else float(v)
    return levels


def _bench_descriptor(bundle: NfPredictor, levels_doc: dict, counters) -> ContentionDescriptor:
    """Contention descriptor for co-running against benchmark NFs."""
    accel = {}
    for kind in bundle.accel_models:
        lvl = float(levels_doc.get(kind.value, 0.0))
        if lvl <= 0:
            accel[kind] = ()
            continue
        params = AccelModelParams(queue_count=1, t0=_BENCH_T0, a=0.0, resource=kind)
        rate = math.inf if lvl >= 1.0 else lvl / _BENCH_T0
        attr = DEFAULT_TRAFFIC.attribute(ACCEL_ATTRIBUTE[kind])
        accel[kind] = ((params, attr, rate),)
    return ContentionDescriptor(counters=counters, accel=accel)


def _config_from_dataset(dataset) -> ProfilingConfig:
    cfg = dataset.config
    if "attributes" in cfg:
        return ProfilingConfig.from_dict(cfg)
    # Full-grid datasets carry the grid instead of attribute bounds.
    grid = cfg["grid"]
    return ProfilingConfig(
        attributes=tuple((n, min(v), max(v)) for n, v in sorted(grid.items())),
        seed=int(cfg.get("seed", 0)),
    )


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    doc = _load_json(args.scenario)
    if args.seed is not None:
        doc["seed"] = args.seed
    scenario = ContentionScenario.from_dict(doc)
    result = run_scenario(scenario)
    out_doc = {
        "schema": "simulation-result",
        "per_nf_throughput": result.per_nf_throughput,
        "per_nf_counters": {n: c.to_dict() for n, c in result.per_nf_counters.items()},
        "per_nf_stage_throughput": {
            n: {k.value: v for k, v in st.items()}
            for n, st in result.per_nf_stage_throughput.items()
        },
        "bottleneck": {n: k.value for n, k in result.bottleneck.items()},
    }
    _dump_json(out_doc, args.out)
    _write_manifest("simulate", args, [args.scenario], [args.out])
    return 0


def cmd_profile(args) -> int:
    runner = SimulatorRunner(get_nf(args.nf), seed=args.seed or 0)
    cfg_doc = _load_json(args.config)
    if args.strategy == "full":
        dataset = full_profile(
            args.nf, cfg_doc["grid"], runner,
            contention_resources=tuple(
                ResourceKind(r)
                for r in cfg_doc.get("contention_resources", ["memory"])
            ),
            draws_per_cell=int(cfg_doc.get("draws_per_cell", 1)),
            seed=args.seed if args.seed is not None else int(cfg_doc.get("seed", 0)),
        )
    else:
        if args.seed is not None:
            cfg_doc = {**cfg_doc, "seed": args.seed}
        config = ProfilingConfig.from_dict(cfg_doc)
        fn = adaptive_profile if args.strategy == "adaptive" else random_profile
        dataset = fn(args.nf, config, runner)
    save_dataset(dataset, args.out)
    _write_manifest("profile", args, [args.config], [args.out])
    return 0


def cmd_train(args) -> int:
    runner = SimulatorRunner(get_nf(args.nf), seed=args.seed or 0)
    dataset = load_dataset(args.dataset)
    if dataset.nf_name != args.nf:
        raise InvalidInputError(
            f"dataset was profiled for {dataset.nf_name!r}, not {args.nf!r}"
        )
    config = _config_from_dataset(dataset)
    bundle = build(args.nf, config, runner, dataset=dataset)
    Path(args.out).write_text(bundle.to_json() + "\n")
    _write_manifest("train", args, [args.dataset], [args.out])
    return 0


def cmd_predict(args) -> int:
    bundle = NfPredictor.from_json(Path(args.bundle).read_text())
    traffic = TrafficProfile.from_dict(_load_json(args.traffic))
    contention = ContentionDescriptor.from_dict(_load_json(args.contention))
    result = bundle.predict(traffic, contention)
    doc = {"schema": "prediction", "nf": bundle.nf_name, **result.to_dict()}
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    if args.out:
        Path(args.out).write_text(text + "\n")
        _write_manifest("predict", args,
                        [args.bundle, args.traffic, args.contention], [args.out])
    else:
        print(text)
    return 0


def _evaluate_point(payload) -> tuple[float, float]:
    """Worker: one (traffic, levels) point -> (actual, predicted)."""
    bundle_text, nf, seed, traffic_doc, levels_doc = payload
    bundle = NfPredictor.from_json(bundle_text)
    runner = SimulatorRunner(get_nf(nf), seed=seed)
    traffic = TrafficProfile.from_dict(traffic_doc)
    sample = runner.sample("eval", traffic, _parse_levels(levels_doc))
    desc = _bench_descriptor(bundle, levels_doc, sample.competitor_counters)
    pred = bundle.predict(traffic, desc)
    return sample.observed_throughput, pred.throughput


def cmd_evaluate(args) -> int:
    bundle_text = Path(args.bundle).read_text()
    bundle = NfPredictor.from_json(bundle_text)
    grid = _load_json(args.testgrid)
    seed = args.seed or 0
    payloads = [
        (bundle_text, bundle.nf_name, seed, p["traffic"], p.get("levels", {}))
        for p in grid["points"]
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            pairs = list(pool.map(_evaluate_point, payloads))
    else:
        pairs = [_evaluate_point(p) for p in payloads]

    actuals = [a for a, _ in pairs]
    preds = [p for _, p in pairs]
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["row_type", "flow_count", "packet_size", "mtbr", "levels",
                    "actual", "predicted", "error_pct"])
        for point, (actual, pred) in zip(grid["points"], pairs):
            t = point["traffic"]
            w.writerow([
                "point", t.get("flow_count"), t.get("packet_size"), t.get("mtbr"),
                json.dumps(point.get("levels", {}), sort_keys=True),
                f"{actual:.6g}", f"{pred:.6g}",
                f"{100.0 * abs(pred - actual) / actual:.4f}",
            ])
        w.writerow(["summary_mape", "", "", "", "", "", "",
                    f"{mape(preds, actuals):.4f}"])
        w.writerow(["summary_acc5", "", "", "", "", "", "",
                    f"{band_accuracy(preds, actuals, 5.0):.2f}"])
        w.writerow(["summary_acc10", "", "", "", "", "", "",
                    f"{band_accuracy(preds, actuals, 10.0):.2f}"])
    _write_manifest("evaluate", args, [args.bundle, args.testgrid], [args.out])
    return 0


def _load_arrivals(path: str) -> list[NfInstance]:
    doc = _load_json(path)
    base = Path(path).parent
    out = []
    for entry in doc["arrivals"]:
        if "bundle_path" in entry:
            bpath = Path(entry["bundle_path"])
            if not bpath.is_absolute():
                bpath = base / bpath
            predictor = NfPredictor.from_json(bpath.read_text())
        else:
            predictor = NfPredictor.from_json(json.dumps(entry["bundle"]))
        out.append(NfInstance(
            instance_id=entry["instance_id"],
            predictor=predictor,
            traffic=TrafficProfile.from_dict(entry["traffic"]),
            sla=SlaSpec(float(entry["max_drop_ratio"])),
        ))
    return out


def cmd_schedule(args) -> int:
    arrivals = _load_arrivals(args.arrivals)
    fleet = place_sequence(arrivals, PlacementStrategy(args.strategy))
    _dump_json({"schema": "fleet", **fleet.to_dict()}, args.out)
    _write_manifest("schedule", args, [args.arrivals], [args.out])
    return 0


def cmd_schedule_eval(args) -> int:
    doc = _load_json(args.fleet)
    fleet = Fleet.from_dict(doc)
    report = evaluate_placement(fleet)
    out_doc = {"schema": "placement-report", **report.to_dict()}
    n = report.nf_count
    if args.optimum and n <= 12:
        opt = optimal_nic_count(fleet.instances)
        out_doc["optimum_nic_count"] = opt
        out_doc["wastage_pct"] = report.wastage_pct(opt)
    else:
        out_doc["nic_lower_bound"] = nic_lower_bound(n)
    text = json.dumps(out_doc, sort_keys=True, separators=(",", ":"))
    if args.out:
        Path(args.out).write_text(text + "\n")
        _write_manifest("schedule-eval", args, [args.fleet], [args.out])
    else:
        print(text)
    return 0


def cmd_diagnose(args) -> int:
    bundle = NfPredictor.from_json(Path(args.bundle).read_text())
    sweep = _load_json(args.sweep)
    attr = sweep["attribute"]
    if "values" in sweep:
        values = [float(v) for v in sweep["values"]]
    else:
        lo, hi, n = float(sweep["start"]), float(sweep["stop"]), int(sweep["points"])
        values = [lo + (hi - lo) * i / (n - 1) for i in range(n)]
    base = TrafficProfile.from_dict(sweep.get("traffic", {}))
    levels_doc = sweep.get("levels", {})
    runner = SimulatorRunner(get_nf(bundle.nf_name), seed=args.seed or 0)

    rows = []
    agree = 0
    for v in values:
        traffic = base.replace(**{attr: int(round(v)) if attr != "mtbr" else v})
        levels = _parse_levels(levels_doc)
        result = runner.run(traffic, levels)
        truth = result.bottleneck[bundle.nf_name]
        sample = runner.sample(f"diag-{v:g}", traffic, levels)
        desc = _bench_descriptor(bundle, levels_doc, sample.competitor_counters)
        pred = diagnose(bundle, traffic, desc)
        agree += pred == truth
        rows.append((v, pred.value, truth.value, pred == truth))

    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["row_type", attr, "predicted_bottleneck",
                    "simulated_bottleneck", "agree"])
        for v, p, t, ok in rows:
            w.writerow(["point", f"{v:g}", p, t, str(ok).lower()])
        w.writerow(["summary_agreement_pct", "", "", "",
                    f"{100.0 * agree / len(rows):.2f}"])
    _write_manifest("diagnose", args, [args.bundle, args.sweep], [args.out])
    return 0


def _summarize_input(path: Path) -> dict:
    """One summary row per report input, keyed by its schema."""
    if path.suffix == ".csv":
        with path.open(newline="") as f:
            rows = list(csv.reader(f))
        summary = {r[0]: r[-1] for r in rows[1:] if r and r[0].startswith("summary_")}
        kind = "evaluation" if "summary_mape" in summary else "diagnosis"
        return {"input": path.name, "kind": kind, **summary}
    doc = json.loads(path.read_text())
    schema = doc.get("schema", "")
    if schema == "placement-report":
        out = {"input": path.name, "kind": "placement",
               "nic_count": doc["nic_count"], "nf_count": doc["nf_count"],
               "violation_pct": f"{doc['violation_pct']:.4f}"}
        if "wastage_pct" in doc:
            out["wastage_pct"] = f"{doc['wastage_pct']:.4f}"
        return out
    if schema == "simulation-result":
        return {"input": path.name, "kind": "simulation",
                "nf_count": len(doc["per_nf_throughput"])}
    raise InvalidInputError(f"unrecognized report input {path}")


def cmd_report(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    summaries = [_summarize_input(Path(p)) for p in args.inputs]
    fields = ["schema_version", "input", "kind"]
    for s in summaries:
        for k in s:
            if k not in fields:
                fields.append(k)
    out_path = out_dir / "summary.csv"
    with out_path.open("w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=fields, restval="")
        w.writeheader()
        for s in summaries:
            w.writerow({"schema_version": REPORT_SCHEMA_VERSION, **s})
    _write_manifest("report", args, list(args.inputs), [str(out_path)])
    return 0


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(prog="nicperf", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.add_argument("--seed", type=int, default=None,
                       help="override the seed recorded in the inputs")
        p.add_argument("--jobs", type=int, default=1,
                       help="max concurrent workers for batch work")
        p.set_defaults(func=fn)
        return p

    p = add("simulate", cmd_simulate, help="run one ground-truth scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)

    p = add("profile", cmd_profile, help="collect a training dataset")
    p.add_argument("--nf", required=True)
    p.add_argument("--strategy", required=True,
                   choices=["adaptive", "random", "full"])
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = add("train", cmd_train, help="build a prediction bundle")
    p.add_argument("--nf", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)

    p = add("predict", cmd_predict, help="one prediction with breakdown")
    p.add_argument("--bundle", required=True)
    p.add_argument("--traffic", required=True)
    p.add_argument("--contention", required=True)
    p.add_argument("--out")

    p = add("evaluate", cmd_evaluate, help="accuracy table on a test grid")
    p.add_argument("--bundle", required=True)
    p.add_argument("--testgrid", required=True)
    p.add_argument("--out", required=True)

    p = add("schedule", cmd_schedule, help="place an arrival sequence")
    p.add_argument("--arrivals", required=True)
    p.add_argument("--strategy", required=True,
                   choices=[s.value for s in PlacementStrategy])
    p.add_argument("--out", required=True)

    p = add("schedule-eval", cmd_schedule_eval,
            help="score a placed fleet against the simulator")
    p.add_argument("--fleet", required=True)
    p.add_argument("--optimum", action="store_true",
                   help="also compute the exhaustive optimum (<= 12 NFs)")
    p.add_argument("--out")

    p = add("diagnose", cmd_diagnose, help="bottleneck sweep table")
    p.add_argument("--bundle", required=True)
    p.add_argument("--sweep", required=True)
    p.add_argument("--out", required=True)

    p = add("report", cmd_report, help="aggregate outputs into tables")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except tuple(_ERROR_TYPES) as exc:
        for etype, label in _ERROR_TYPES.items():
            if isinstance(exc, etype):
                break
        print(json.dumps({"error": {"type": label, "message": str(exc)}},
                         sort_keys=True), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
