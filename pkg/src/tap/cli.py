"""Command-line workflows: ingest, optimize, label, search, unique, stats, synth.

Exit codes: 0 success, 1 validation/usage error, 2 I/O error.  Human-readable
tables go to stdout; errors are emitted as one JSON object on stderr.

Configuration files are flat ``key = value`` text with dotted keys; values
given on the command line override the file, which overrides built-in
defaults.  Unknown keys are rejected.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor

from . import labels as L
from .labels import read_labels_jsonl, serialize, write_labels_jsonl
from .optimizer import OptimizerConfig, combined_thresholds, optimize_all
from .partitioning import DOMAIN_THRESHOLDS, ThresholdSet, build_distributions
from .pipeline import PipelineConfig, label_trajectory
from .report import convergence_plot_svg, render_table
from .search import LabeledCorpus, SearchQuery, find_unique, label_stats, search
from .synth import BehaviorScript, LateralPrimitive, LongitudinalPrimitive, ScriptMix, generate_corpus
from .trajectory import export, ingest


class CliError(ValueError):
    """Usage or validation failure surfaced with exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


_OPTIMIZER_KEYS = {
    "optimizer.eta": float,
    "optimizer.epsilon": float,
    "optimizer.step_scale": float,
    "optimizer.max_epochs": int,
    "optimizer.convergence_tol": float,
    "optimizer.patience": int,
    "optimizer.n_seeds": int,
    "optimizer.projection_margin": float,
    "optimizer.method": str,
    "optimizer.cem_population": int,
    "optimizer.cem_elite_frac": float,
    "optimizer.cem_seed": int,
}


def _parse_flat_config(path) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, raw = (part.strip() for part in line.split("=", 1))
            values[key] = raw
    return values


def _optimizer_config(args) -> OptimizerConfig:
    settings: dict[str, object] = {}
    if args.config:
        for key, raw in _parse_flat_config(args.config).items():
            if key not in _OPTIMIZER_KEYS:
                raise CliError(f"unknown config key: {key!r}")
            name = key.split(".", 1)[1]
            try:
                settings[name] = _OPTIMIZER_KEYS[key](raw)
            except ValueError:
                raise CliError(f"bad value for {key}: {raw!r}") from None
    for name in ("eta", "epsilon", "max_epochs", "method"):
        value = getattr(args, name, None)
        if value is not None:
            settings[name] = value
    try:
        return OptimizerConfig(**settings)
    except (TypeError, ValueError) as exc:
        raise CliError(str(exc)) from None


def _cmd_ingest(args) -> int:
    corpus = ingest(args.path, format=args.format, default_sample_rate_hz=args.default_rate)
    export(corpus, args.out, format="jsonl")
    frames = sum(len(t) for t in corpus)
    print(f"ingested {len(corpus)} trajectories ({frames} frames) -> {args.out}")
    return 0


def _cmd_optimize(args) -> int:
    corpus = ingest(args.corpus, format="jsonl", default_sample_rate_hz=args.default_rate)
    distributions = build_distributions(corpus)
    config = _optimizer_config(args)
    traces = optimize_all(distributions, config)
    thresholds = combined_thresholds(traces)
    thresholds.save(args.out)

    rows = []
    for channel, trace in traces.items():
        best = trace.best
        rows.append(
            (
                channel,
                f"{best.j_final:.6g}",
                best.epochs_used,
                "yes" if best.converged else "no",
                ", ".join(f"{v:.4g}" for v in best.final_thresholds.channel_values(channel)),
            )
        )
    print(render_table(("channel", "J*", "epochs", "converged", "thresholds"), rows))
    print(f"thresholds -> {args.out}")

    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write("epoch,channel,J,theta_1,theta_2,theta_3\n")
            for channel, trace in traces.items():
                for rec in trace.best.history:
                    values = list(rec.values) + [""] * (3 - len(rec.values))
                    cells = [str(rec.epoch), channel, repr(rec.j)] + [
                        repr(v) if v != "" else "" for v in values
                    ]
                    fh.write(",".join(cells) + "\n")
        print(f"trace -> {args.trace}")
    if args.plot:
        with open(args.plot, "w", encoding="utf-8") as fh:
            fh.write(convergence_plot_svg(traces))
        print(f"plot -> {args.plot}")
    return 0


def _cmd_label(args) -> int:
    corpus = ingest(args.corpus, format="jsonl", default_sample_rate_hz=args.default_rate)
    thresholds = ThresholdSet.load(args.thresholds)
    config = PipelineConfig(
        thresholds=thresholds,
        min_action_duration_s=args.min_action_duration,
        merge_max_gap_s=args.merge_max_gap,
        smoother_max_blip_s=args.smoother_blip,
    )

    def one(trajectory):
        return label_trajectory(trajectory, config, level=args.level)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            labeled = list(pool.map(one, corpus.trajectories))
    else:
        labeled = [one(t) for t in corpus.trajectories]
    n = write_labels_jsonl(labeled, args.out)
    print(f"labeled {n} trajectories at level {args.level!r} -> {args.out}")
    return 0


def _load_labeled(path, level: str) -> LabeledCorpus:
    return LabeledCorpus.from_jsonl(path, level=level)


def _cmd_search(args) -> int:
    corpus = _load_labeled(args.labels, args.level)
    if ":" in args.ref and len(args.ref.split(":")) == 2:
        sid, vid = args.ref.split(":")
        try:
            reference = corpus.get(sid, vid)
        except KeyError:
            raise CliError(f"reference {args.ref!r} not found in corpus") from None
    else:
        records = read_labels_jsonl(args.ref)
        if len(records) != 1:
            raise CliError(f"reference file must hold exactly one record, got {len(records)}")
        reference = records[0]
    results = search(corpus, SearchQuery(reference=reference, d_sim=args.dsim, level=args.level))
    print(render_table(("scenario_id", "vehicle_id", "distance"), results))
    if not results and args.dsim == 0:
        print("no exact matches: the reference label is unique in this corpus")
    return 0


def _cmd_unique(args) -> int:
    corpus = _load_labeled(args.labels, args.level)
    unique = sorted(find_unique(corpus))
    print(render_table(("scenario_id", "vehicle_id"), unique))
    print(f"{len(unique)} unique of {len(corpus)} records at level {args.level!r}")
    return 0


def _cmd_stats(args) -> int:
    corpus = _load_labeled(args.labels, args.level)
    stats = label_stats(corpus)
    print(f"records: {stats['n_records']}  level: {stats['level']}")
    print()
    print(
        render_table(
            ("label", "segments", "records_containing"),
            [
                (name, count, stats["record_label_counts"].get(name, 0))
                for name, count in stats["segment_label_counts"].items()
            ],
            title="label frequencies",
        )
    )
    print()
    signature_rows = sorted(
        ((count, " ".join(sig)) for sig, count in stats["signature_counts"].items()),
        key=lambda item: (-item[0], item[1]),
    )
    shown = signature_rows[: args.top]
    print(
        render_table(
            ("count", "signature"),
            shown,
            title=f"top {len(shown)} of {len(signature_rows)} distinct signatures "
            f"(counts sum to {stats['n_records']})",
        )
    )
    return 0


def _scripts_from_json(path) -> list[tuple[BehaviorScript, float]]:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        entries = raw["scripts"]
        out = []
        for entry in entries:
            script = BehaviorScript(
                lateral=tuple(
                    LateralPrimitive(p["action"], float(p["duration_s"]), p.get("yaw_rate"))
                    for p in entry["lateral"]
                ),
                longitudinal=tuple(
                    LongitudinalPrimitive(
                        p["action"], float(p["duration_s"]), p.get("accel"), p.get("speed")
                    )
                    for p in entry["longitudinal"]
                ),
                noise_omega=float(entry.get("noise_omega", 0.0)),
                noise_a=float(entry.get("noise_a", 0.0)),
                noise_v=float(entry.get("noise_v", 0.0)),
            )
            out.append((script, float(entry.get("weight", 1.0))))
    except (KeyError, TypeError) as exc:
        raise CliError(f"bad scripts file {path}: {exc!r}") from None
    if not out:
        raise CliError(f"scripts file {path} defines no scripts")
    return out


def _cmd_synth(args) -> int:
    thresholds = ThresholdSet.load(args.thresholds) if args.thresholds else DOMAIN_THRESHOLDS
    if args.scripts:
        mix = _scripts_from_json(args.scripts)
    else:
        mix = ScriptMix(
            merge_fraction=args.merge_fraction,
            stop_fraction=args.stop_fraction,
            n_unique=args.n_unique,
            noise_omega=args.noise_omega,
            noise_a=args.noise_a,
            noise_v=args.noise_v,
        )
    corpus, truths = generate_corpus(
        args.n,
        mix,
        thresholds=thresholds,
        sample_rate_hz=args.rate,
        seed=args.seed,
        chatter_blips=args.chatter,
    )
    export(corpus, args.out, format="jsonl")
    print(f"synthesized {len(corpus)} trajectories -> {args.out}")
    if args.truth:
        n = write_labels_jsonl((t.at(args.truth_level) for t in truths.values()), args.truth)
        print(f"ground truth ({args.truth_level}) -> {args.truth} ({n} records)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tap", description="Trajectory-to-behavior labeling toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[], help="load an interchange file into a corpus artifact")
    p.add_argument("path")
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--out", required=True)
    p.add_argument("--default-rate", type=float, default=10.0, dest="default_rate")
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("optimize", help="learn separation thresholds from a corpus")
    p.add_argument("corpus")
    p.add_argument("--config", default=None, help="flat key=value optimizer config")
    p.add_argument("--out", required=True, help="output thresholds config")
    p.add_argument("--trace", default=None, help="per-epoch CSV trace")
    p.add_argument("--plot", default=None, help="objective-vs-epoch SVG")
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--max-epochs", type=int, default=None, dest="max_epochs")
    p.add_argument("--method", choices=("fd", "cem"), default=None)
    p.add_argument("--default-rate", type=float, default=10.0, dest="default_rate")
    p.set_defaults(fn=_cmd_optimize)

    p = sub.add_parser("label", help="run the labeling pipeline over a corpus")
    p.add_argument("corpus")
    p.add_argument("--thresholds", required=True)
    p.add_argument("--level", choices=L.LEVELS, default=L.ACTION)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--min-action-duration", type=float, default=1.0, dest="min_action_duration")
    p.add_argument("--merge-max-gap", type=float, default=4.0, dest="merge_max_gap")
    p.add_argument("--smoother-blip", type=float, default=1.0, dest="smoother_blip")
    p.add_argument("--default-rate", type=float, default=10.0, dest="default_rate")
    p.set_defaults(fn=_cmd_label)

    p = sub.add_parser("search", help="find labels similar to a reference")
    p.add_argument("labels")
    p.add_argument("--ref", required=True, help="record file or scenario_id:vehicle_id")
    p.add_argument("--dsim", type=float, default=0.0)
    p.add_argument("--level", choices=L.LEVELS, default=L.ACTION)
    p.set_defaults(fn=_cmd_search)

    p = sub.add_parser("unique", help="list behaviors that occur exactly once")
    p.add_argument("labels")
    p.add_argument("--level", choices=L.LEVELS, default=L.ACTION)
    p.set_defaults(fn=_cmd_unique)

    p = sub.add_parser("stats", help="label frequency histogram")
    p.add_argument("labels")
    p.add_argument("--level", choices=L.LEVELS, default=L.ACTION)
    p.add_argument("--top", type=int, default=20)
    p.set_defaults(fn=_cmd_stats)

    p = sub.add_parser("synth", help="generate a synthetic corpus with ground truth")
    p.add_argument("--scripts", default=None, help="JSON script definitions")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", default=None)
    p.add_argument("--truth-level", choices=L.LEVELS, default=L.ACTION, dest="truth_level")
    p.add_argument("--thresholds", default=None)
    p.add_argument("--rate", type=float, default=10.0)
    p.add_argument("--chatter", type=int, default=0)
    p.add_argument("--merge-fraction", type=float, default=0.008, dest="merge_fraction")
    p.add_argument("--stop-fraction", type=float, default=0.1, dest="stop_fraction")
    p.add_argument("--n-unique", type=int, default=0, dest="n_unique")
    p.add_argument("--noise-omega", type=float, default=0.0, dest="noise_omega")
    p.add_argument("--noise-a", type=float, default=0.0, dest="noise_a")
    p.add_argument("--noise-v", type=float, default=0.0, dest="noise_v")
    p.set_defaults(fn=_cmd_synth)
    return parser


def _emit_error(exc: BaseException) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload), file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except OSError as exc:
        _emit_error(exc)
        return 2
    except (ValueError, KeyError) as exc:
        _emit_error(exc)
        return 1


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
