"""Evaluation outputs: passing accuracy by pressure level, team-pressure
series over possessions, and per-event pressure deltas.

Everything here reads a frozen model and dataset, so results are
deterministic for a fixed checkpoint.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .datamodel import Event, Possession, ValidationError
from .gnn import POPModel, predict_pop
from .pipeline import GraphProvider, Window, WindowSpec, window_frame_indices
from .pressure import pressure_level

DELTA_KINDS = ("pass", "dribble")


@dataclass(frozen=True, slots=True)
class PassAccuracyRow:
    subject: str
    level: int
    attempts: int
    successes: int
    accuracy: float
    low_sample: bool

    def __post_init__(self) -> None:
        if self.successes > self.attempts:
            raise ValidationError("successes exceed attempts")
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValidationError("accuracy outside [0, 1]")


@dataclass(frozen=True, slots=True)
class PressureSeries:
    possession_id: str
    samples: tuple[tuple[float, float], ...]  # (timestamp s, team pressure)


@dataclass(frozen=True, slots=True)
class EventDelta:
    event_id: str
    kind: str
    player_id: str
    delta: float  # positive = pressure relieved


@dataclass(frozen=True, slots=True)
class DeltaSummaryRow:
    player_id: str
    kind: str
    mean_delta: float
    count: int


class AnalyticsSkip(RuntimeError):
    """A single event/possession cannot be analyzed; carries the reason."""


def passing_accuracy_by_level(
    events: Sequence[Event],
    pass_pressures: Mapping[str, float],
    roster: Mapping[str, str] | None = None,
    min_attempts: int = 10,
) -> tuple[list[PassAccuracyRow], list[str]]:
    """Aggregate pass outcomes per subject and pressure level.

    ``pass_pressures`` maps event ids to the passer's scalar pressure at the
    pass start. Passes without a pairing are skipped and reported. With a
    roster, rows are also produced per position group.
    """
    tallies: dict[tuple[str, int], list[int]] = {}
    skipped = []
    for event in events:
        if event.kind != "pass":
            continue
        pressure = pass_pressures.get(event.event_id)
        if pressure is None:
            skipped.append(event.event_id)
            continue
        level = pressure_level(pressure)
        subjects = [event.player_id]
        if roster is not None and event.player_id in roster:
            subjects.append(roster[event.player_id])
        for subject in subjects:
            attempts = tallies.setdefault((subject, level), [0, 0])
            attempts[0] += 1
            if event.outcome == "success":
                attempts[1] += 1
    rows = [
        PassAccuracyRow(
            subject=subject,
            level=level,
            attempts=attempts,
            successes=successes,
            accuracy=successes / attempts,
            low_sample=attempts < min_attempts,
        )
        for (subject, level), (attempts, successes) in sorted(tallies.items())
    ]
    return rows, skipped


def team_pressure_series(
    model: POPModel,
    possession: Possession,
    provider: GraphProvider,
    spec: WindowSpec,
    possession_id: str = "",
) -> PressureSeries:
    """Sample the model's loss probability along one possession.

    One sample per sliding window, placed at the window-end timestamp.
    """
    rate = provider.tracking.frame_rate_hz
    samples = []
    k = 0
    while True:
        start = possession.start_frame + round(k * spec.stride_seconds * rate)
        k += 1
        indices = window_frame_indices(start, rate, spec)
        if indices[-1] > possession.end_frame:
            break
        if not all(provider.tracking.has_frame(i) for i in indices):
            continue
        window = Window(start_frame=start, frame_indices=indices, label=0)
        seq = provider.sequence(possession, window, possession_id)
        pred = predict_pop(model, seq)
        end_time = provider.tracking.frame_at(indices[-1]).timestamp
        samples.append((end_time, pred.team_pressure))
    if not samples:
        raise AnalyticsSkip(
            f"possession at frame {possession.start_frame} is shorter than one window"
        )
    return PressureSeries(possession_id=possession_id, samples=tuple(samples))


def _window_ending_at(
    frame_index: int,
    possession: Possession,
    provider: GraphProvider,
    spec: WindowSpec,
) -> Window:
    rate = provider.tracking.frame_rate_hz
    span = window_frame_indices(0, rate, spec)[-1]
    start = frame_index - span
    if start < possession.start_frame:
        raise AnalyticsSkip(
            f"no full window ends at frame {frame_index} inside the possession"
        )
    indices = window_frame_indices(start, rate, spec)
    if not all(provider.tracking.has_frame(i) for i in indices):
        raise AnalyticsSkip(f"tracking dropout in the window ending at {frame_index}")
    return Window(start_frame=start, frame_indices=indices, label=0)


def event_pressure_delta(
    model: POPModel,
    event: Event,
    provider: GraphProvider,
    spec: WindowSpec,
) -> EventDelta:
    """Team-pressure change across one pass or dribble.

    The pressure at each endpoint comes from the window ending at that
    frame; a positive delta means the event relieved pressure.
    """
    if event.kind not in DELTA_KINDS:
        raise AnalyticsSkip(f"deltas are defined for {DELTA_KINDS}, not {event.kind!r}")
    possession = provider.possession_at(event.start_frame)
    if possession is None or possession.team != event.team:
        raise AnalyticsSkip(f"event {event.event_id} is outside its team's possessions")
    if provider.possession_at(event.end_frame) != possession:
        raise AnalyticsSkip(f"event {event.event_id} straddles a possession change")
    start_window = _window_ending_at(event.start_frame, possession, provider, spec)
    end_window = _window_ending_at(event.end_frame, possession, provider, spec)
    p_start = predict_pop(model, provider.sequence(possession, start_window, event.event_id))
    p_end = predict_pop(model, provider.sequence(possession, end_window, event.event_id))
    return EventDelta(
        event_id=event.event_id,
        kind=event.kind,
        player_id=event.player_id,
        delta=p_start.team_pressure - p_end.team_pressure,
    )


def event_pressure_deltas(
    model: POPModel,
    events: Iterable[Event],
    provider: GraphProvider,
    spec: WindowSpec,
) -> tuple[list[EventDelta], list[tuple[str, str]]]:
    """Deltas for every pass/dribble; skipped events come back with reasons."""
    deltas, skipped = [], []
    for event in events:
        if event.kind not in DELTA_KINDS:
            continue
        try:
            deltas.append(event_pressure_delta(model, event, provider, spec))
        except AnalyticsSkip as exc:
            skipped.append((event.event_id, str(exc)))
    return deltas, skipped


def player_delta_summary(deltas: Sequence[EventDelta]) -> list[DeltaSummaryRow]:
    """Mean delta per (player, kind), best pressure-relievers first."""
    if not deltas:
        raise ValidationError("no deltas to summarize")
    grouped: dict[tuple[str, str], list[float]] = {}
    for d in deltas:
        grouped.setdefault((d.player_id, d.kind), []).append(d.delta)
    rows = [
        DeltaSummaryRow(
            player_id=player,
            kind=kind,
            mean_delta=sum(values) / len(values),
            count=len(values),
        )
        for (player, kind), values in grouped.items()
    ]
    rows.sort(key=lambda r: (-r.mean_delta, r.player_id, r.kind))
    return rows


ROSTER_HEADER = ["player_id", "position_group"]


def parse_roster(source: str | Iterable[str]) -> dict[str, str]:
    lines = io.StringIO(source) if isinstance(source, str) else source
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or [c.strip() for c in header] != ROSTER_HEADER:
        raise ValidationError("roster must start with header player_id,position_group")
    roster = {}
    for row in reader:
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        roster[row[0].strip()] = row[1].strip()
    return roster


def serialize_pass_accuracy(rows: Iterable[PassAccuracyRow]) -> str:
    out = ["subject,level,attempts,successes,accuracy,low_sample"]
    for r in rows:
        out.append(f"{r.subject},{r.level},{r.attempts},{r.successes},{repr(r.accuracy)},{int(r.low_sample)}")
    return "\n".join(out) + "\n"


def serialize_series(series: PressureSeries) -> str:
    out = ["timestamp,team_pressure"]
    for t, v in series.samples:
        out.append(f"{repr(t)},{repr(v)}")
    return "\n".join(out) + "\n"


def serialize_deltas(deltas: Iterable[EventDelta]) -> str:
    out = ["event_id,kind,player_id,delta"]
    for d in deltas:
        out.append(f"{d.event_id},{d.kind},{d.player_id},{repr(d.delta)}")
    return "\n".join(out) + "\n"


def write_reports(
    directory: str | Path,
    accuracy_rows: Sequence[PassAccuracyRow],
    accuracy_skipped: Sequence[str],
    series_list: Sequence[PressureSeries],
    deltas: Sequence[EventDelta],
    delta_skipped: Sequence[tuple[str, str]],
) -> list[Path]:
    """Write the CSV reports plus a JSON summary with the same content."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []

    path = directory / "pass_accuracy.csv"
    path.write_text(serialize_pass_accuracy(accuracy_rows), encoding="utf-8")
    written.append(path)

    for series in series_list:
        path = directory / f"pressure_series_{series.possession_id.replace(':', '_')}.csv"
        path.write_text(serialize_series(series), encoding="utf-8")
        written.append(path)

    path = directory / "event_deltas.csv"
    path.write_text(serialize_deltas(deltas), encoding="utf-8")
    written.append(path)

    summary = {
        "pass_accuracy": [
            {
                "subject": r.subject, "level": r.level, "attempts": r.attempts,
                "successes": r.successes, "accuracy": r.accuracy, "low_sample": r.low_sample,
            }
            for r in accuracy_rows
        ],
        "passes_without_pressure": list(accuracy_skipped),
        "series": {
            s.possession_id: [[t, v] for t, v in s.samples] for s in series_list
        },
        "event_deltas": [
            {"event_id": d.event_id, "kind": d.kind, "player_id": d.player_id, "delta": d.delta}
            for d in deltas
        ],
        "delta_summary": [
            {"player_id": r.player_id, "kind": r.kind, "mean_delta": r.mean_delta, "count": r.count}
            for r in (player_delta_summary(deltas) if deltas else [])
        ],
        "skipped_events": [{"event_id": e, "reason": reason} for e, reason in delta_skipped],
    }
    path = directory / "summary.json"
    path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    written.append(path)
    return written
