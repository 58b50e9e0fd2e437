"""Possession segmentation, window extraction, labeling and dataset assembly.

A possession is the maximal active-play interval in which one team produces
every on-ball event; it ends at the frame before the opponent's first
on-ball event (a tackle immediately recovered by the possessing team does
not end it) or at a stoppage. Windows of 50 frames slide from the
possession start; a window's label is 1 exactly when the team still holds
the possession at the window end plus the prediction horizon.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .datamodel import (
    Event,
    OrientationRecord,
    Possession,
    TrackingSequence,
    ValidationError,
    assign_ball_owners,
    derive_velocities,
)
from .pitch_control import ControlParams
from .ppm import (
    FRAMES_PER_SEQUENCE,
    PPMGraph,
    PPMSequence,
    VARIANTS,
    VARIANT_PPM3D,
    VARIANT_TRACKING,
    build_ppm,
    parse_graphs,
    serialize_graphs,
)
from .pressure import (
    DEFAULT_RADIUS,
    PressureAmplifier,
    apply_amplifier,
    index_orientations,
    orientation_for,
    pressure_vectors_for_frame,
)


@dataclass(frozen=True, slots=True)
class WindowSpec:
    window_seconds: float = 2.0
    frames_per_window: int = FRAMES_PER_SEQUENCE
    stride_seconds: float = 0.5
    horizon_seconds: float = 4.0
    min_possession_seconds: float = 5.0

    def __post_init__(self) -> None:
        if round(self.window_seconds * 25) != self.frames_per_window:
            raise ValidationError(
                "frames_per_window must equal window_seconds x 25 "
                f"({self.window_seconds} s -> {self.frames_per_window})"
            )
        if self.horizon_seconds <= 0 or self.stride_seconds <= 0:
            raise ValidationError("stride and horizon must be positive")


@dataclass(frozen=True, slots=True)
class Window:
    start_frame: int
    frame_indices: tuple[int, ...]
    label: int

    @property
    def end_frame(self) -> int:
        return self.frame_indices[-1]


def segment_possessions(
    events: Sequence[Event],
    tracking: TrackingSequence,
    min_possession_seconds: float = 5.0,
) -> list[Possession]:
    """Split the match into possessions, keeping only those strictly longer
    than ``min_possession_seconds``."""
    if not events:
        raise ValidationError("cannot segment possessions from an empty event list")
    ordered = sorted(events, key=lambda e: (e.start_frame, e.event_id))

    raw: list[tuple[str, int, int, str]] = []
    team: str | None = None
    start = 0

    def close(end_frame: int, ended_by: str) -> None:
        nonlocal team
        if team is not None and end_frame >= start:
            raw.append((team, start, end_frame, ended_by))
        team = None

    for pos, event in enumerate(ordered):
        if event.kind == "other":
            close(event.start_frame - 1, "stoppage")
            continue
        if team is None:
            team = event.team
            start = event.start_frame
        elif event.team != team:
            if event.kind == "tackle":
                nxt = next(
                    (e for e in ordered[pos + 1:] if e.kind != "other"), None
                )
                if nxt is not None and nxt.team == team:
                    continue  # contested touch, possession survives
            close(event.start_frame - 1, "turnover")
            team = event.team
            start = event.start_frame
    close(tracking.last_frame_index, "data_end")

    lo, hi = tracking.first_frame_index, tracking.last_frame_index
    rate = tracking.frame_rate_hz
    possessions = []
    for team_name, s, e, ended_by in raw:
        s, e = max(s, lo), min(e, hi)
        if e < s:
            continue
        duration = (e - s) / rate
        if duration > min_possession_seconds:
            possessions.append(
                Possession(
                    team=team_name, start_frame=s, end_frame=e,
                    duration=duration, ended_by=ended_by,
                )
            )
    return possessions


def window_frame_indices(start_frame: int, rate: float, spec: WindowSpec) -> tuple[int, ...]:
    """The window's frame indices, resampled to the nominal 25 Hz grid."""
    return tuple(
        start_frame + round(j * rate / 25.0) for j in range(spec.frames_per_window)
    )


def make_windows(
    possession: Possession,
    tracking: TrackingSequence,
    spec: WindowSpec,
) -> list[Window]:
    """Enumerate labeled windows inside one possession.

    Windows advance by the stride from the possession start and must fit
    inside the possession. Label 1 means the team still possesses at
    window end + horizon; label 0 means the opponent took over by then.
    Windows with no active-play outcome inside the horizon are dropped:
    the horizon runs past the end of the data, or into a stoppage
    (stopped play carries no keep/lose outcome, matching the
    active-plays-only framing of the upstream data).
    """
    rate = tracking.frame_rate_hz
    horizon_frames = round(spec.horizon_seconds * rate)
    windows = []
    k = 0
    while True:
        start = possession.start_frame + round(k * spec.stride_seconds * rate)
        k += 1
        indices = window_frame_indices(start, rate, spec)
        if indices[-1] > possession.end_frame:
            break
        if not all(tracking.has_frame(i) for i in indices):
            continue  # tracking dropout inside the window
        horizon_frame = indices[-1] + horizon_frames
        if horizon_frame <= possession.end_frame:
            label = 1
        elif possession.ended_by == "turnover":
            label = 0
        else:
            continue  # stoppage or end of data: no keep/lose outcome
        windows.append(Window(start_frame=start, frame_indices=indices, label=label))
    return windows


@dataclass(frozen=True, slots=True)
class MatchData:
    match_id: str
    tracking: TrackingSequence
    events: tuple[Event, ...]
    orientations: tuple[OrientationRecord, ...] = ()


@dataclass(frozen=True, slots=True)
class ManifestRow:
    match_id: str
    possession_id: str
    window_start_frame: int
    label: int
    variant: str


@dataclass(frozen=True, slots=True)
class SkippedWindow:
    match_id: str
    possession_id: str
    window_start_frame: int
    reason: str


@dataclass
class Dataset:
    variant: str
    sequences: list[PPMSequence]
    rows: list[ManifestRow]
    skipped: list[SkippedWindow] = field(default_factory=list)

    def class_counts(self) -> dict[str, dict[int, int]]:
        counts: dict[str, dict[int, int]] = {}
        for row in self.rows:
            per_match = counts.setdefault(row.match_id, {0: 0, 1: 0})
            per_match[row.label] += 1
        return counts

    def match_ids(self) -> list[str]:
        seen = dict.fromkeys(row.match_id for row in self.rows)
        return list(seen)


class GraphProvider:
    """Builds and caches per-frame PPM graphs for one match and variant.

    Prepares the tracking data once (velocities, ball ownership), resolves
    possessions, and computes pressure vectors on demand. Frames belong to
    at most one possession, so caching by frame index is sound.
    """

    def __init__(
        self,
        match: MatchData,
        variant: str,
        params: ControlParams,
        amplifier: PressureAmplifier | None = None,
        radius: float = DEFAULT_RADIUS,
        min_possession_seconds: float = 5.0,
    ):
        if variant not in VARIANTS:
            raise ValidationError(f"unknown variant {variant!r}")
        self.match_id = match.match_id
        self.variant = variant
        self.params = params
        self.amplifier = amplifier if amplifier is not None else PressureAmplifier.default()
        self.radius = radius
        tracking = derive_velocities(match.tracking)
        self.tracking = assign_ball_owners(tracking, match.events)
        self.events = match.events
        self.orientation_index = index_orientations(match.orientations)
        self.possessions = segment_possessions(
            match.events, self.tracking, min_possession_seconds
        )
        self._cache: dict[int, PPMGraph] = {}
        self._identity = PressureAmplifier.identity()

    def possession_at(self, frame_index: int) -> Possession | None:
        for p in self.possessions:
            if p.start_frame <= frame_index <= p.end_frame:
                return p
        return None

    def graph(self, frame_index: int, possession: Possession) -> PPMGraph:
        cached = self._cache.get(frame_index)
        if cached is not None:
            return cached
        frame = self.tracking.frame_at(frame_index)
        pressures = None
        if self.variant != VARIANT_TRACKING:
            pressures = pressure_vectors_for_frame(
                frame, self.params, possession.team, self.radius
            )
            if self.variant == VARIANT_PPM3D:
                amplified = {}
                for entity_id, vector in pressures.items():
                    oriented = orientation_for(frame, entity_id, self.orientation_index)
                    if oriented is None:
                        amplified[entity_id] = apply_amplifier(vector, 0.0, self._identity)
                    else:
                        amplified[entity_id] = apply_amplifier(vector, oriented[0], self.amplifier)
                pressures = amplified
        graph = build_ppm(frame, possession.team, pressures, self.variant, self.tracking.pitch)
        self._cache[frame_index] = graph
        return graph

    def sequence(
        self,
        possession: Possession,
        window: Window,
        possession_id: str,
        label: int | None = None,
    ) -> PPMSequence:
        graphs = tuple(self.graph(i, possession) for i in window.frame_indices)
        return PPMSequence(
            graphs=graphs,
            possession_id=possession_id,
            window_start_frame=window.start_frame,
            label=label,
        )


def build_dataset(
    matches: Sequence[MatchData],
    spec: WindowSpec,
    variant: str,
    params: ControlParams,
    amplifier: PressureAmplifier | None = None,
    radius: float = DEFAULT_RADIUS,
) -> Dataset:
    """Label every window of every qualifying possession across matches."""
    if not matches:
        raise ValidationError("build_dataset needs at least one match")
    dataset = Dataset(variant=variant, sequences=[], rows=[])
    for match in matches:
        provider = GraphProvider(
            match, variant, params, amplifier, radius, spec.min_possession_seconds
        )
        for pidx, possession in enumerate(provider.possessions):
            possession_id = f"{match.match_id}:p{pidx}"
            for window in make_windows(possession, provider.tracking, spec):
                try:
                    seq = provider.sequence(possession, window, possession_id, window.label)
                except ValidationError as exc:
                    dataset.skipped.append(
                        SkippedWindow(match.match_id, possession_id, window.start_frame, str(exc))
                    )
                    continue
                dataset.sequences.append(seq)
                dataset.rows.append(
                    ManifestRow(
                        match_id=match.match_id,
                        possession_id=possession_id,
                        window_start_frame=window.start_frame,
                        label=window.label,
                        variant=variant,
                    )
                )
    return dataset


def split_by_match(dataset: Dataset, test_match_ids: Iterable[str]) -> tuple[Dataset, Dataset]:
    """Hold out whole matches; no window of a test match reaches training."""
    test_ids = set(test_match_ids)
    known = set(dataset.match_ids())
    unknown = test_ids - known
    if unknown:
        raise ValidationError(f"unknown match ids: {sorted(unknown)}")
    train = Dataset(variant=dataset.variant, sequences=[], rows=[])
    test = Dataset(variant=dataset.variant, sequences=[], rows=[])
    for seq, row in zip(dataset.sequences, dataset.rows):
        side = test if row.match_id in test_ids else train
        side.sequences.append(seq)
        side.rows.append(row)
    if not train.rows:
        raise ValidationError("empty training set: every match was held out")
    if not test.rows:
        raise ValidationError("empty test set: no window came from the held-out matches")
    return train, test


MANIFEST_HEADER = ["match_id", "possession_id", "window_start_frame", "label", "variant"]


def serialize_manifest(rows: Iterable[ManifestRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)
    for row in rows:
        writer.writerow(
            [row.match_id, row.possession_id, row.window_start_frame, row.label, row.variant]
        )
    return out.getvalue()


def parse_manifest(source: str | Iterable[str]) -> list[ManifestRow]:
    lines = io.StringIO(source) if isinstance(source, str) else source
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or [c.strip() for c in header] != MANIFEST_HEADER:
        raise ValidationError(f"manifest must start with header {','.join(MANIFEST_HEADER)}")
    rows = []
    for record in reader:
        if not record or (len(record) == 1 and not record[0].strip()):
            continue
        if record[4] not in VARIANTS:
            raise ValidationError(f"manifest row has unknown variant {record[4]!r}")
        rows.append(
            ManifestRow(
                match_id=record[0],
                possession_id=record[1],
                window_start_frame=int(record[2]),
                label=int(record[3]),
                variant=record[4],
            )
        )
    return rows


def write_dataset(dataset: Dataset, directory: str | Path) -> None:
    """Persist a dataset: one manifest plus one graph dump per match.

    Windows must be consecutive frame ranges (25 Hz data); each match file
    stores every distinct graph once and windows are reassembled on load.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    per_match: dict[str, dict[int, PPMGraph]] = {}
    for seq, row in zip(dataset.sequences, dataset.rows):
        frame_indices = [g.frame_index for g in seq.graphs]
        expected = list(range(seq.window_start_frame, seq.window_start_frame + len(seq.graphs)))
        if frame_indices != expected:
            raise ValidationError(
                "dataset files require consecutive-frame windows (25 Hz data); "
                f"window at {seq.window_start_frame} is resampled"
            )
        store = per_match.setdefault(row.match_id, {})
        for g in seq.graphs:
            store.setdefault(g.frame_index, g)
    (directory / "manifest.csv").write_text(serialize_manifest(dataset.rows), encoding="utf-8")
    for match_id, graphs in per_match.items():
        path = directory / f"{_safe_name(match_id)}.ppm"
        ordered = [graphs[i] for i in sorted(graphs)]
        path.write_text(serialize_graphs(ordered), encoding="utf-8")


def load_dataset(directory: str | Path) -> Dataset:
    directory = Path(directory)
    manifest_path = directory / "manifest.csv"
    if not manifest_path.exists():
        raise ValidationError(f"no manifest.csv under {directory}")
    rows = parse_manifest(manifest_path.read_text(encoding="utf-8"))
    variants = {row.variant for row in rows}
    if len(variants) > 1:
        raise ValidationError(f"manifest mixes variants {sorted(variants)}")
    graphs_by_match: dict[str, dict[int, PPMGraph]] = {}
    sequences = []
    for row in rows:
        store = graphs_by_match.get(row.match_id)
        if store is None:
            path = directory / f"{_safe_name(row.match_id)}.ppm"
            if not path.exists():
                raise ValidationError(f"missing graph dump {path.name}")
            store = {g.frame_index: g for g in parse_graphs(path.read_text(encoding="utf-8"))}
            graphs_by_match[row.match_id] = store
        try:
            graphs = tuple(
                store[i]
                for i in range(row.window_start_frame, row.window_start_frame + FRAMES_PER_SEQUENCE)
            )
        except KeyError as exc:
            raise ValidationError(
                f"graph dump for {row.match_id} is missing frame {exc.args[0]}"
            ) from None
        sequences.append(
            PPMSequence(
                graphs=graphs,
                possession_id=row.possession_id,
                window_start_frame=row.window_start_frame,
                label=row.label,
            )
        )
    variant = rows[0].variant if rows else VARIANT_TRACKING
    return Dataset(variant=variant, sequences=sequences, rows=rows)


def _safe_name(match_id: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in match_id)
