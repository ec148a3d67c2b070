"""Command-line interface.

Subcommands cover the full workflow: expand a decision space, synthesize
a dataset, run the multiverse, analyze and render a store, plus panel and
fit inspection commands for single universes.  All engine errors exit
with status 1 and a one-line message; success is exit 0.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from forkgarden import __version__, analysis, data, jsonio, outcomes, report, runner
from forkgarden import spec as specmod
from forkgarden.errors import ForkgardenError
from forkgarden.pipeline import PanelParams, build_panel
from forkgarden.rdit import ModelParams, fit_universe_dv
from forkgarden.runner import ResultsStore


def _resolve_spec(arg: str | None):
    if arg is None:
        return specmod.load_spec(specmod.default_spec_path("default"))
    if os.path.exists(arg):
        return specmod.load_spec(arg)
    try:
        return specmod.load_spec(specmod.default_spec_path(arg))
    except OSError:
        raise ForkgardenError(f"spec not found: {arg}") from None


# ---------------------------------------------------------------------------
# synth preset

_PRESET = {
    "n_projects": 200,
    "events_per_day": 1.0,
    "span_days": 830.0,
    "seed": 7,
    "intercept_sd": 0.8,
    "noise_sd": 1.0,
    "reference_period_days": 30.0,
    "intervention_range": [1000.0, 2000.0],
    "dv_effects": {
        "metric_a": {"level": 10.0, "trend": 0.05, "step": -2.0, "trend_change": -0.08},
        "metric_b": {"level": 6.0, "trend": -0.02, "step": 1.5, "trend_change": 0.0},
        "metric_c": {"level": 14.0, "trend": 0.0, "step": 0.0, "trend_change": 0.12},
        "metric_d": {"level": 8.0, "trend": 0.03, "step": 0.0, "trend_change": 0.0},
    },
    "covariates": {
        "community_size": {"base": 100.0, "trend": 1.0, "jitter_sd": 40.0, "effect": 0.01},
        "community_activity": {"base": 5.0, "trend": 0.0, "jitter_sd": 2.0, "effect": 0.05},
    },
}


def synth_config_from_dict(doc: dict) -> data.SynthConfig:
    """SynthConfig from its JSON form (the synth --config schema)."""
    dv_effects = tuple(
        (nm, data.DvEffect(**eff)) for nm, eff in doc.get("dv_effects", {}).items()
    )
    covariates = tuple(
        (nm, data.CovariateSpec(**cs)) for nm, cs in doc.get("covariates", {}).items()
    )
    return data.SynthConfig(
        n_projects=int(doc["n_projects"]),
        events_per_day=float(doc["events_per_day"]),
        span_days=float(doc["span_days"]),
        dv_effects=dv_effects,
        covariates=covariates,
        intercept_sd=float(doc.get("intercept_sd", 0.5)),
        noise_sd=float(doc.get("noise_sd", 1.0)),
        reference_period_days=float(doc.get("reference_period_days", 30.0)),
        intervention_range=tuple(doc.get("intervention_range", (1000.0, 2000.0))),
        seed=int(doc.get("seed", 0)),
    )


# ---------------------------------------------------------------------------
# subcommands


def _cmd_expand(args) -> int:
    sp = _resolve_spec(args.spec)
    universes = sp.expand()
    print(len(universes))
    if args.manifest:
        with open(args.manifest, "w", encoding="utf-8") as fh:
            for u in universes:
                fh.write(
                    jsonio.dumps_canonical(
                        {
                            "universe_id": u.universe_id,
                            "digest": u.digest(),
                            "assignment": {
                                d: specmod.format_value(v) for d, v in u.assignment
                            },
                        }
                    )
                    + "\n"
                )
        print(f"manifest: {args.manifest}", file=sys.stderr)
    return 0


def _cmd_synth(args) -> int:
    doc = dict(_PRESET)
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    if args.projects is not None:
        doc["n_projects"] = args.projects
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.rate is not None:
        doc["events_per_day"] = args.rate
    if args.span is not None:
        doc["span_days"] = args.span
    cfg = synth_config_from_dict(doc)
    dataset = data.synthesize(cfg)
    data.serialize(dataset, args.out)
    print(
        f"wrote {dataset.n_projects} projects, {dataset.n_events} events "
        f"to {args.out}",
        file=sys.stderr,
    )
    return 0


def _cmd_run(args) -> int:
    sp = _resolve_spec(args.spec)
    dataset = data.ingest(args.dataset)
    if dataset.ingest_report and dataset.ingest_report.rejected and not args.quiet:
        for pid, reason in dataset.ingest_report.rejected:
            print(f"rejected project {pid}: {reason}", file=sys.stderr)
    baseline = outcomes.load_baseline(args.baseline)

    progress = None
    if not args.quiet:
        def progress(done, total):
            print(f"\r{done}/{total} universes", end="", file=sys.stderr, flush=True)

    store, telemetry = runner.run_multiverse(
        dataset,
        sp,
        baseline,
        args.out,
        alpha=args.alpha,
        workers=args.workers,
        resume=args.resume,
        progress=progress,
    )
    if not args.quiet:
        print("", file=sys.stderr)
        print(
            f"{telemetry.universes} universes "
            f"({telemetry.fits_attempted} fit attempts) in "
            f"{telemetry.wall_seconds:.1f}s; "
            f"{telemetry.projections} panel builds, "
            f"{telemetry.panel_cache_hits} cache hits",
            file=sys.stderr,
        )
    print(args.out)
    return 0


def _parse_filters(pairs):
    pins: dict = {}
    for raw in pairs or ():
        if "=" not in raw:
            raise ForkgardenError(f"--filter expects decision=value[,value...], got {raw!r}")
        did, _, values = raw.partition("=")
        did = did.strip()
        tokens = [t for t in specmod._split_top_level(values) if t]
        if not tokens:
            raise ForkgardenError(f"--filter {did}= names no values")
        pins.setdefault(did, set()).update(tokens)
    return pins


def _cmd_analyze(args) -> int:
    store = ResultsStore.load(args.store)
    pins = _parse_filters(args.filter)
    if pins:
        try:
            store = analysis.filter_records(store, pins)
        except KeyError as e:
            raise ForkgardenError(str(e.args[0])) from None
    include = not args.exclude_fit_failures
    docs = {
        "spec_curve": analysis.spec_curve(store, include),
        "change_stability": analysis.change_stability(store, include),
        "time_curve": analysis.time_curve(store, include),
    }
    os.makedirs(args.out, exist_ok=True)
    for name, doc in docs.items():
        path = os.path.join(args.out, f"{name}.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(jsonio.dumps_canonical(doc) + "\n")
        tsv = analysis_tsv(name, doc)
        with open(os.path.join(args.out, f"{name}.tsv"), "w", encoding="utf-8") as fh:
            fh.write(tsv)
    print(args.out)
    return 0


def analysis_tsv(name: str, doc: dict) -> str:
    if name == "spec_curve":
        lines = ["universe_id\tmatch_count\tstudy_bucket"]
        for e in doc["universes"]:
            lines.append(f"{e['universe_id']}\t{e['match_count']}\t{e['study_bucket']}")
        return "\n".join(lines) + "\n"
    if name == "change_stability":
        lines = ["decision\tn_groups\tpairs_total\tpairs_differing\tflip_rate\thistogram"]
        for did, e in doc["decisions"].items():
            hist = ",".join(f"{k}:{v}" for k, v in sorted(e["histogram"].items()))
            lines.append(
                f"{did}\t{e['n_groups']}\t{e['pairs_total']}\t{e['pairs_differing']}"
                f"\t{e['flip_rate']:.6f}\t{hist}"
            )
        return "\n".join(lines) + "\n"
    lines = ["days\tn_universes\t" + "\t".join(outcomes.BUCKETS)]
    for fr in doc["timeframes"]:
        props = fr["study"]["proportions"]
        cells = [
            str(int(fr["days"])) if float(fr["days"]).is_integer() else repr(fr["days"]),
            str(fr["n_universes"]),
        ]
        cells.extend("%.6f" % props.get(b, 0.0) for b in outcomes.BUCKETS)
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def _cmd_report(args) -> int:
    store = ResultsStore.load(args.store)
    docs = {}
    if args.analysis:
        for key, fname in (
            ("spec-curve", "spec_curve.json"),
            ("change-stability", "change_stability.json"),
            ("time-curve", "time_curve.json"),
        ):
            path = os.path.join(args.analysis, fname)
            if not os.path.exists(path):
                raise ForkgardenError(f"missing analysis file: {path}")
            with open(path, "r", encoding="utf-8") as fh:
                docs[key] = json.load(fh)
    else:
        docs = {
            "spec-curve": analysis.spec_curve(store),
            "change-stability": analysis.change_stability(store),
            "time-curve": analysis.time_curve(store),
        }
    written = report.render_report(store, docs, args.out)
    print(report.summary_table(store), end="")
    for p in written:
        print(p, file=sys.stderr)
    return 0


def _universe_of(args, sp):
    try:
        uid = int(args.universe)
    except ValueError:
        return sp.universe_from_digest(args.universe)
    return sp.universe(uid)


def _cmd_panel(args) -> int:
    sp = _resolve_spec(args.spec)
    dataset = data.ingest(args.dataset)
    u = _universe_of(args, sp)
    params = PanelParams.from_universe(sp, u)
    frame = build_panel(dataset, args.dv, params)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            frame.to_text(fh)
        print(args.out)
    else:
        frame.to_text(sys.stdout)
    return 0


def _cmd_fit(args) -> int:
    sp = _resolve_spec(args.spec)
    dataset = data.ingest(args.dataset)
    u = _universe_of(args, sp)
    params = PanelParams.from_universe(sp, u)
    model = ModelParams.from_universe(sp, u)
    frame = build_panel(dataset, args.dv, params)
    outcome, fit = fit_universe_dv(frame, model, args.alpha)
    doc = {
        "universe_id": u.universe_id,
        "dv": args.dv,
        "alpha": args.alpha,
        "status": outcome.status,
    }
    if outcome.fitted:
        from forkgarden.runner import _fit_payload

        doc["fit"] = _fit_payload(fit)
        doc["verdicts"] = {
            nm: {"significant": bool(sig), "sign": sign}
            for nm, sig, sign in outcome.coefficients
        }
    else:
        doc["failure"] = outcome.failure
    print(jsonio.dumps_canonical(doc))
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="forkgarden",
        description="Multiverse analysis engine for regression-discontinuity-in-time studies.",
    )
    ap.add_argument("--version", action="version", version=f"forkgarden {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expand", help="expand a decision space into universes")
    p.add_argument("--spec", help="spec file, or bundled name (default/restricted)")
    p.add_argument("--manifest", help="write one JSON line per universe here")
    p.set_defaults(func=_cmd_expand)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True, help="dataset file to write")
    p.add_argument("--config", help="JSON file overriding the built-in recipe")
    p.add_argument("--projects", type=int, help="number of projects")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--rate", type=float, help="events per day")
    p.add_argument("--span", type=float, help="days of data on each side")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("run", help="fit every universe and write a results store")
    p.add_argument("--dataset", required=True)
    p.add_argument("--baseline", required=True, help="baseline outcome file")
    p.add_argument("--spec", help="spec file, or bundled name")
    p.add_argument("--out", required=True, help="results store path")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--resume", action="store_true", help="continue from the journal")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("analyze", help="summarize a results store")
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True, help="directory for analysis files")
    p.add_argument(
        "--exclude-fit-failures",
        action="store_true",
        help="drop fit-failed universes first",
    )
    p.add_argument(
        "--filter",
        action="append",
        metavar="DECISION=V1[,V2...]",
        help="keep only universes matching (repeatable)",
    )
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("report", help="render figures and summary from a store")
    p.add_argument("--store", required=True)
    p.add_argument("--analysis", help="directory written by analyze (else recompute)")
    p.add_argument("--out", required=True, help="directory for figures")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("panel", help="dump the panel of one universe")
    p.add_argument("--dataset", required=True)
    p.add_argument("--spec", help="spec file, or bundled name")
    p.add_argument("--universe", required=True, help="universe id or digest")
    p.add_argument("--dv", required=True, help="dependent variable")
    p.add_argument("--out", help="file to write (default stdout)")
    p.set_defaults(func=_cmd_panel)

    p = sub.add_parser("fit", help="fit one universe and dump the full result")
    p.add_argument("--dataset", required=True)
    p.add_argument("--spec", help="spec file, or bundled name")
    p.add_argument("--universe", required=True, help="universe id or digest")
    p.add_argument("--dv", required=True, help="dependent variable")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=_cmd_fit)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ForkgardenError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 1


if __name__ == "__main__":
    sys.exit(main())
