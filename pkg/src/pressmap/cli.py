"""Command-line entry point.

Subcommands cover the full workflow: simulate synthetic matches, ingest and
validate data, dump pressure vectors, estimate the amplifier, build labeled
datasets, train and evaluate the possession model, predict on possessions,
produce the analytics reports, and run the gradient checker.

Exit codes: 0 success, 2 usage, 3 data validation, 4 training failure.
Every run writes a ``run.json`` log capturing the configuration and seeds,
so results are reproducible from the log alone.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .analytics import (
    event_pressure_deltas,
    parse_roster,
    passing_accuracy_by_level,
    team_pressure_series,
    write_reports,
)
from .datamodel import (
    ValidationError,
    parse_events,
    parse_orientations,
    parse_tracking,
    serialize_tracking,
    derive_velocities,
)
from .gnn import (
    TrainConfig,
    TrainingError,
    evaluate,
    gradient_check,
    load_model,
    predict_pop,
    save_model,
    serialize_metrics,
    train,
)
from .pipeline import (
    GraphProvider,
    MatchData,
    WindowSpec,
    build_dataset,
    load_dataset,
    split_by_match,
    write_dataset,
)
from .pitch_control import ControlParams
from .pressure import (
    PressureAmplifier,
    apply_amplifier,
    estimate_amplifier,
    index_orientations,
    orientation_for,
    parse_amplifier,
    pressure_vectors_for_frame,
    sample_pressure_circle,
    scalar_pressure,
    serialize_amplifier,
    serialize_pressure_rows,
)
from .ppm import VARIANTS
from .synth import SynthConfig, simulate_match

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_TRAIN = 4


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _fail(message: str, code: int) -> int:
    sys.stderr.write("error: " + " ".join(str(message).split()) + "\n")
    return code


def _write_run_log(out: Path, subcommand: str, args: argparse.Namespace,
                   outputs: list[Path], started: str, status: str) -> None:
    config = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k not in ("func",)
    }
    log = {
        "subcommand": subcommand,
        "config": config,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "started": started,
        "finished": _now(),
        "outputs": [str(p) for p in outputs],
        "status": status,
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / "run.json").write_text(json.dumps(log, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_match_dir(path: Path, match_id: str | None = None) -> MatchData:
    tracking_path = path / "tracking.csv"
    if not tracking_path.exists():
        raise ValidationError(f"no tracking.csv under {path}")
    tracking = parse_tracking(tracking_path.read_text(encoding="utf-8"))
    events_path = path / "events.csv"
    if not events_path.exists():
        raise ValidationError(f"no events.csv under {path}")
    events = tuple(parse_events(events_path.read_text(encoding="utf-8")))
    orientations = ()
    orient_path = path / "orientations.csv"
    if orient_path.exists():
        orientations = tuple(parse_orientations(orient_path.read_text(encoding="utf-8")))
    return MatchData(
        match_id=match_id or path.name,
        tracking=tracking,
        events=events,
        orientations=orientations,
    )


def discover_matches(data_dir: Path) -> list[MatchData]:
    if (data_dir / "tracking.csv").exists():
        return [load_match_dir(data_dir)]
    subdirs = sorted(p for p in data_dir.iterdir() if (p / "tracking.csv").exists())
    if not subdirs:
        raise ValidationError(f"no match data under {data_dir}")
    return [load_match_dir(p) for p in subdirs]


def _control_params(args: argparse.Namespace) -> ControlParams:
    return ControlParams(
        reaction_time=args.reaction_time,
        max_speed=args.control_max_speed,
        logistic_scale=args.logistic_scale,
    )


def _window_spec(args: argparse.Namespace) -> WindowSpec:
    return WindowSpec(
        stride_seconds=args.stride,
        horizon_seconds=args.horizon,
        min_possession_seconds=args.min_possession,
    )


def _amplifier(args: argparse.Namespace) -> PressureAmplifier:
    if getattr(args, "amplifier", None):
        return parse_amplifier(Path(args.amplifier).read_text(encoding="utf-8"))
    return PressureAmplifier.default()


# --- subcommand implementations ----------------------------------------


def cmd_simulate(args: argparse.Namespace) -> int:
    out = Path(args.out)
    started = _now()
    press_choices = None
    if args.press_choices:
        press_choices = tuple(float(x) for x in args.press_choices.split(","))
    script = None
    if args.script:
        script = tuple(
            (float(pair.split(":")[0]), float(pair.split(":")[1]))
            for pair in args.script.split(",")
        )

    def run_one(index: int) -> list[Path]:
        config = SynthConfig(
            seed=args.seed + index,
            duration_seconds=args.duration,
            press_intensity=args.press,
            orientation_effect=args.beta,
            pass_rate=args.pass_rate,
            press_choices=press_choices,
            press_script=script,
        )
        target = out if args.matches == 1 else out / f"match_{index:02d}"
        target.mkdir(parents=True, exist_ok=True)
        match = simulate_match(config)
        files = {
            "tracking.csv": match.tracking_csv,
            "events.csv": match.events_csv,
            "orientations.csv": match.orientations_csv,
            "manifest.json": json.dumps(match.manifest, indent=2, sort_keys=True) + "\n",
        }
        written = []
        for name, text in files.items():
            path = target / name
            path.write_text(text, encoding="utf-8")
            written.append(path)
        return written

    outputs: list[Path] = []
    if args.jobs > 1 and args.matches > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            for result in pool.map(run_one, range(args.matches)):
                outputs.extend(result)
    else:
        for i in range(args.matches):
            outputs.extend(run_one(i))
    _write_run_log(out, "simulate", args, outputs, started, "ok")
    return EXIT_OK


def cmd_ingest(args: argparse.Namespace) -> int:
    out = Path(args.out)
    started = _now()
    match = load_match_dir(Path(args.data))
    tracking = derive_velocities(match.tracking)
    out.mkdir(parents=True, exist_ok=True)
    tracking_path = out / "tracking.csv"
    tracking_path.write_text(serialize_tracking(tracking), encoding="utf-8")
    summary = {
        "match_id": match.match_id,
        "frames": len(tracking.frames),
        "frame_rate_hz": tracking.frame_rate_hz,
        "paper_rate": tracking.is_paper_rate,
        "players": sorted({p.player_id for f in tracking.frames for p in f.players}),
        "events": len(match.events),
        "orientation_records": len(match.orientations),
    }
    summary_path = out / "ingest_summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _write_run_log(out, "ingest", args, [tracking_path, summary_path], started, "ok")
    return EXIT_OK


def cmd_pressure(args: argparse.Namespace) -> int:
    out = Path(args.out)
    started = _now()
    match = load_match_dir(Path(args.data))
    params = _control_params(args)
    provider = GraphProvider(match, "ppm2d", params, min_possession_seconds=args.min_possession)
    amplifier = _amplifier(args)
    orient_index = index_orientations(match.orientations)
    rows = []
    for possession in provider.possessions:
        for idx in range(possession.start_frame, possession.end_frame + 1):
            if not provider.tracking.has_frame(idx):
                continue
            frame = provider.tracking.frame_at(idx)
            vectors = pressure_vectors_for_frame(frame, params, possession.team, args.radius)
            for entity_id, vector in sorted(vectors.items()):
                if args.variant == "amplified":
                    oriented = orientation_for(frame, entity_id, orient_index)
                    if oriented is None:
                        vector = apply_amplifier(vector, 0.0, PressureAmplifier.identity())
                    else:
                        vector = apply_amplifier(vector, oriented[0], amplifier)
                rows.append((idx, entity_id, vector))
    out.mkdir(parents=True, exist_ok=True)
    dump = out / "pressure.csv"
    dump.write_text(serialize_pressure_rows(rows), encoding="utf-8")
    _write_run_log(out, "pressure", args, [dump], started, "ok")
    return EXIT_OK


def cmd_amplifier(args: argparse.Namespace) -> int:
    out = Path(args.out)
    started = _now()
    match = load_match_dir(Path(args.data))
    tracking = derive_velocities(match.tracking)
    params = _control_params(args)
    orient_index = index_orientations(match.orientations)
    samples = []
    for event in match.events:
        if event.kind != "pass":
            continue
        if not tracking.has_frame(event.start_frame):
            continue
        frame = tracking.frame_at(event.start_frame)
        passer = frame.player(event.player_id)
        if passer is None:
            continue
        oriented = orientation_for(frame, event.player_id, orient_index)
        if oriented is None:
            continue
        vector = sample_pressure_circle(frame, event.player_id, params, event.team, args.radius)
        samples.append((vector, oriented[0], event.outcome))
    amplifier = estimate_amplifier(samples, min_samples=args.min_samples)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "amplifier.csv"
    path.write_text(serialize_amplifier(amplifier), encoding="utf-8")
    _write_run_log(out, "amplifier", args, [path], started, "ok")
    return EXIT_OK


def cmd_dataset(args: argparse.Namespace) -> int:
    out = Path(args.out)
    started = _now()
    matches = discover_matches(Path(args.data))
    spec = _window_spec(args)
    params = _control_params(args)
    amplifier = _amplifier(args)
    dataset = build_dataset(matches, spec, args.variant, params, amplifier, args.radius)
    outputs = []
    if args.test_match:
        train_set, test_set = split_by_match(dataset, args.test_match)
        write_dataset(train_set, out / "train")
        write_dataset(test_set, out / "test")
        outputs.extend([out / "train" / "manifest.csv", out / "test" / "manifest.csv"])
    else:
        write_dataset(dataset, out / "train")
        outputs.append(out / "train" / "manifest.csv")
    summary = {
        "variant": args.variant,
        "windows": len(dataset.rows),
        "skipped_windows": len(dataset.skipped),
        "class_counts": {m: c for m, c in sorted(dataset.class_counts().items())},
        "matches": dataset.match_ids(),
        "test_matches": args.test_match or [],
    }
    summary_path = out / "dataset_summary.json"
    out.mkdir(parents=True, exist_ok=True)
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    outputs.append(summary_path)
    _write_run_log(out, "dataset", args, outputs, started, "ok")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    out = Path(args.out)
    started = _now()
    data_dir = Path(args.data)
    train_set = load_dataset(data_dir / "train" if (data_dir / "train").exists() else data_dir)
    config = TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
        optimizer=args.optimizer,
        val_fraction=args.val_fraction,
        hidden_width=args.hidden,
        dropout_rate=args.dropout,
    )
    result = train(train_set.sequences, config)
    out.mkdir(parents=True, exist_ok=True)
    ckpt_path = out / "pop.ckpt"
    ckpt_path.write_bytes(save_model(result.model))
    metrics_path = out / "metrics.csv"
    metrics_path.write_text(serialize_metrics(result.history), encoding="utf-8")
    outputs = [ckpt_path, metrics_path]
    eval_summary = {
        "best_epoch": result.best_epoch,
        "best_val_accuracy": result.best_val_accuracy,
        "variant": train_set.variant,
        "train_windows": len(train_set.sequences),
    }
    test_dir = data_dir / "test"
    if test_dir.exists():
        test_set = load_dataset(test_dir)
        test_eval = evaluate(result.model, test_set.sequences)
        eval_summary["test_accuracy"] = test_eval.accuracy
        eval_summary["test_confusion"] = test_eval.confusion.tolist()
        eval_summary["test_windows"] = test_eval.n_examples
    eval_path = out / "eval.json"
    eval_path.write_text(json.dumps(eval_summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    outputs.append(eval_path)
    _write_run_log(out, "train", args, outputs, started, "ok")
    return EXIT_OK


def _load_checkpoint(path_str: str):
    path = Path(path_str)
    if not path.exists():
        raise ValidationError("checkpoint not found: " + str(path))
    return load_model(path.read_bytes())


def cmd_predict(args: argparse.Namespace) -> int:
    out = Path(args.out)
    started = _now()
    model = _load_checkpoint(args.model)
    match = load_match_dir(Path(args.data))
    params = _control_params(args)
    spec = _window_spec(args)
    provider = GraphProvider(
        match, model.variant, params, _amplifier(args), args.radius, args.min_possession
    )
    if not provider.possessions:
        return _fail("no qualifying possessions in the data", EXIT_DATA)
    if args.possession >= len(provider.possessions):
        return _fail(
            f"possession index {args.possession} out of range "
            f"(found {len(provider.possessions)})", EXIT_DATA,
        )
    possession = provider.possessions[args.possession]
    possession_id = f"{match.match_id}:p{args.possession}"
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    from .analytics import AnalyticsSkip, serialize_series  # local to avoid cycle at import

    if args.window_start is not None:
        from .pipeline import Window, window_frame_indices

        indices = window_frame_indices(args.window_start, provider.tracking.frame_rate_hz, spec)
        window = Window(start_frame=args.window_start, frame_indices=indices, label=0)
        seq = provider.sequence(possession, window, possession_id)
        pred = predict_pop(model, seq)
        payload = {
            "possession_id": possession_id,
            "window_start_frame": args.window_start,
            "p_keep": pred.p_keep,
            "p_lose": pred.p_lose,
            "team_pressure": pred.team_pressure,
        }
        path = out / "prediction.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        outputs.append(path)
    else:
        try:
            series = team_pressure_series(model, possession, provider, spec, possession_id)
        except AnalyticsSkip as exc:
            return _fail(str(exc), EXIT_DATA)
        path = out / f"pressure_series_{possession_id.replace(':', '_')}.csv"
        path.write_text(serialize_series(series), encoding="utf-8")
        outputs.append(path)
    _write_run_log(out, "predict", args, outputs, started, "ok")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    out = Path(args.out)
    started = _now()
    model = _load_checkpoint(args.model)
    match = load_match_dir(Path(args.data))
    params = _control_params(args)
    spec = _window_spec(args)
    amplifier = _amplifier(args)
    provider = GraphProvider(match, model.variant, params, amplifier, args.radius, args.min_possession)
    roster = None
    if args.roster:
        roster = parse_roster(Path(args.roster).read_text(encoding="utf-8"))
    orient_index = index_orientations(match.orientations)

    pass_pressures = {}
    for event in match.events:
        if event.kind != "pass" or not provider.tracking.has_frame(event.start_frame):
            continue
        frame = provider.tracking.frame_at(event.start_frame)
        if frame.player(event.player_id) is None:
            continue
        possession = provider.possession_at(event.start_frame)
        if possession is None or possession.team != event.team:
            continue
        vector = sample_pressure_circle(frame, event.player_id, params, event.team, args.radius)
        oriented = orientation_for(frame, event.player_id, orient_index)
        if oriented is not None:
            vector = apply_amplifier(vector, oriented[0], amplifier)
        pass_pressures[event.event_id] = scalar_pressure(vector)

    accuracy_rows, acc_skipped = passing_accuracy_by_level(
        match.events, pass_pressures, roster, args.min_attempts
    )
    from .analytics import AnalyticsSkip

    series_list = []
    for idx, possession in enumerate(provider.possessions):
        possession_id = f"{match.match_id}:p{idx}"
        try:
            series_list.append(team_pressure_series(model, possession, provider, spec, possession_id))
        except AnalyticsSkip:
            continue
    deltas, delta_skipped = event_pressure_deltas(model, match.events, provider, spec)
    outputs = write_reports(out, accuracy_rows, acc_skipped, series_list, deltas, delta_skipped)
    _write_run_log(out, "report", args, outputs, started, "ok")
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    report = gradient_check(seed=args.seed, step=args.step)
    worst = 0.0
    for name, err in report.items():
        print(f"{name}: max relative error {err:.3e}")
        worst = max(worst, err)
    if worst >= args.tolerance:
        return _fail(f"gradient check failed: {worst:.3e} >= {args.tolerance}", EXIT_TRAIN)
    print(f"gradient check passed: worst {worst:.3e} < {args.tolerance}")
    return EXIT_OK


# --- parser wiring -------------------------------------------------------


def _add_control_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--reaction-time", type=float, default=0.7, help="reaction time (s)")
    parser.add_argument("--control-max-speed", type=float, default=7.8, help="top speed (m/s)")
    parser.add_argument("--logistic-scale", type=float, default=0.45, help="arrival-gap scale (s)")
    parser.add_argument("--radius", type=float, default=0.5, help="pressure circle radius (m)")


def _add_window_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--stride", type=float, default=0.5, help="window stride (s)")
    parser.add_argument("--horizon", type=float, default=4.0, help="label horizon (s)")
    parser.add_argument("--min-possession", type=float, default=5.0,
                        help="shortest analyzed possession (s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pressmap",
        description="Pressure quantification for soccer tracking data.",
    )
    parser.add_argument("--version", action="version", version=f"pressmap {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic match")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--press", type=float, default=0.5, help="press intensity in [0, 1]")
    p.add_argument("--duration", type=float, default=120.0, help="match seconds")
    p.add_argument("--beta", type=float, default=8.0, help="orientation effect on the hazard")
    p.add_argument("--pass-rate", type=float, default=0.5, help="passes per second")
    p.add_argument("--matches", type=int, default=1, help="how many matches (seed+i each)")
    p.add_argument("--press-choices", default="", help="per-possession intensities, e.g. 0.2,0.8")
    p.add_argument("--script", default="", help="press drive script t:v,t:v,...")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ingest", help="parse, validate and derive velocities")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("pressure", help="dump per-player pressure vectors")
    p.add_argument("--data", required=True)
    p.add_argument("--variant", choices=["vanilla", "amplified"], default="vanilla")
    p.add_argument("--amplifier", default="", help="amplifier CSV (default weights otherwise)")
    _add_control_flags(p)
    _add_window_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pressure)

    p = sub.add_parser("amplifier", help="estimate the orientation amplifier from passes")
    p.add_argument("--data", required=True)
    p.add_argument("--min-samples", type=int, default=50)
    _add_control_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_amplifier)

    p = sub.add_parser("dataset", help="build labeled PPM sequences")
    p.add_argument("--data", required=True, help="match dir or dir of match dirs")
    p.add_argument("--variant", choices=list(VARIANTS), required=True)
    p.add_argument("--test-match", action="append", default=[],
                   help="hold out this match id (repeatable)")
    p.add_argument("--amplifier", default="")
    _add_control_flags(p)
    _add_window_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("train", help="train the possession outcome model")
    p.add_argument("--data", required=True, help="dataset dir from the dataset subcommand")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--optimizer", choices=["adam", "sgd-momentum"], default="adam")
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="pop for a window or series for a possession")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--possession", type=int, default=0, help="possession index")
    p.add_argument("--window-start", type=int, default=None, help="single-window start frame")
    p.add_argument("--amplifier", default="")
    _add_control_flags(p)
    _add_window_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("report", help="all analytics for one match")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--roster", default="")
    p.add_argument("--amplifier", default="")
    p.add_argument("--min-attempts", type=int, default=10)
    _add_control_flags(p)
    _add_window_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("gradcheck", help="finite-difference check of the network gradients")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=float, default=1e-6)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """key = value config files supply defaults; explicit flags win."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        parser.error("--config needs a file path")
    config_path = Path(argv[idx + 1])
    argv = argv[:idx] + argv[idx + 2:]
    if not config_path.exists():
        parser.error(f"config file {config_path} not found")
    overrides = {}
    for line_no, line in enumerate(config_path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            parser.error(f"config line {line_no}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        overrides[key.replace("-", "_")] = value
    if not argv:
        parser.error("config file given but no subcommand")
    # locate the subparser to validate keys and coerce types
    sub_actions = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)]
    subparser = sub_actions[0].choices.get(argv[0]) if sub_actions else None
    if subparser is None:
        return argv
    known = {}
    for action in subparser._actions:
        if action.dest not in ("help",):
            known[action.dest] = action.type or str
    defaults = {}
    for key, value in overrides.items():
        if key not in known:
            parser.error(f"config key {key!r} is not a flag of {argv[0]!r}")
        caster = known[key]
        defaults[key] = caster(value) if callable(caster) else value
    subparser.set_defaults(**defaults)
    return argv


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    argv = _apply_config_file(parser, argv)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        return _fail(str(exc), EXIT_DATA)
    except TrainingError as exc:
        return _fail(str(exc), EXIT_TRAIN)


if __name__ == "__main__":
    sys.exit(main())
