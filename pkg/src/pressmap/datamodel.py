"""Domain types and file formats for tracking, event and orientation data.

All values are immutable after construction, so parsed matches can be shared
freely across threads. Coordinates are meters in a pitch frame whose origin
sits at the attacking team's own goal line / left touchline corner, with +x
pointing toward the opponent goal.

File formats (UTF-8, LF, '.' decimal):

* tracking CSV:     ``frame,timestamp,team,player_id,x,y,vx,vy``
                    (ball rows use ``player_id=ball``, ``team=none``;
                    empty vx/vy means velocity absent)
* events CSV:       ``event_id,kind,team,player_id,start_frame,end_frame,
                    outcome,start_x,start_y,end_x,end_y``
* orientations CSV: ``frame,player_id,theta,source``
"""

from __future__ import annotations

import csv
import io
import math
import statistics
import warnings
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

BALL_ID = "ball"
BALL_TEAM = "none"

#: positions may stray this far (meters) beyond the marked pitch before
#: validation rejects them (players sliding out, throw-in run-ups, ...)
PITCH_MARGIN_M = 5.0

#: hard cap on derived speeds; anything faster is a tracking glitch
SPEED_CAP_MS = 12.0

EVENT_KINDS = frozenset(
    {"pass", "dribble", "carry", "tackle", "interception", "clearance", "shot", "other"}
)
EVENT_OUTCOMES = frozenset({"success", "failure"})
ORIENTATION_SOURCES = frozenset({"annotated", "pose-estimated", "velocity-fallback"})

TWO_PI = 2.0 * math.pi


class ValidationError(ValueError):
    """Raised when input data violates the format or a domain invariant."""


@dataclass(frozen=True, slots=True)
class PitchSpec:
    """Pitch dimensions in meters."""

    length: float = 105.0
    width: float = 68.0

    def __post_init__(self) -> None:
        if self.length <= 0 or self.width <= 0:
            raise ValidationError("pitch dimensions must be positive")

    @property
    def diagonal(self) -> float:
        return math.hypot(self.length, self.width)


DEFAULT_PITCH = PitchSpec()


@dataclass(frozen=True, slots=True)
class PlayerState:
    """One player's kinematic state in a single frame."""

    player_id: str
    team: str
    position: tuple[float, float]
    velocity: tuple[float, float] | None = None
    orientation: float | None = None

    def __post_init__(self) -> None:
        if self.orientation is not None and not 0.0 <= self.orientation < TWO_PI:
            raise ValidationError(
                f"orientation {self.orientation} outside [0, 2*pi) for player {self.player_id}"
            )

    @property
    def speed(self) -> float:
        if self.velocity is None:
            return 0.0
        return math.hypot(self.velocity[0], self.velocity[1])


@dataclass(frozen=True, slots=True)
class BallState:
    position: tuple[float, float]
    velocity: tuple[float, float] | None = None


@dataclass(frozen=True, slots=True)
class Frame:
    """All entity states at one instant."""

    frame_index: int
    timestamp: float
    players: tuple[PlayerState, ...]
    ball: BallState | None = None
    ball_owner: str | None = None

    def player(self, player_id: str) -> PlayerState | None:
        for p in self.players:
            if p.player_id == player_id:
                return p
        return None

    def team_players(self, team: str) -> tuple[PlayerState, ...]:
        return tuple(p for p in self.players if p.team == team)


@dataclass(frozen=True)
class TrackingSequence:
    """Time-ordered frames for one match segment."""

    frames: tuple[Frame, ...]
    pitch: PitchSpec = DEFAULT_PITCH
    frame_rate_hz: float = 25.0

    @property
    def is_paper_rate(self) -> bool:
        # two seconds of data must hold exactly 50 frames
        return round(self.frame_rate_hz * 2.0) == 50

    @property
    def first_frame_index(self) -> int:
        return self.frames[0].frame_index

    @property
    def last_frame_index(self) -> int:
        return self.frames[-1].frame_index

    def frame_at(self, frame_index: int) -> Frame:
        frame = self._frame_lookup().get(frame_index)
        if frame is None:
            raise KeyError(f"no frame with index {frame_index}")
        return frame

    def has_frame(self, frame_index: int) -> bool:
        return frame_index in self._frame_lookup()

    def _frame_lookup(self) -> dict[int, Frame]:
        lookup = getattr(self, "_lookup_cache", None)
        if lookup is None:
            lookup = {f.frame_index: f for f in self.frames}
            object.__setattr__(self, "_lookup_cache", lookup)
        return lookup


@dataclass(frozen=True, slots=True)
class Event:
    event_id: str
    kind: str
    team: str
    player_id: str
    start_frame: int
    end_frame: int
    outcome: str
    start_location: tuple[float, float]
    end_location: tuple[float, float]

    def __post_init__(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise ValidationError(
                f"unknown event kind {self.kind!r}; accepted: {', '.join(sorted(EVENT_KINDS))}"
            )
        if self.outcome not in EVENT_OUTCOMES:
            raise ValidationError(f"unknown outcome {self.outcome!r}; accepted: success, failure")
        if self.start_frame > self.end_frame:
            raise ValidationError(
                f"event {self.event_id}: start_frame {self.start_frame} > end_frame {self.end_frame}"
            )


POSSESSION_ENDINGS = frozenset({"turnover", "stoppage", "data_end"})


@dataclass(frozen=True, slots=True)
class Possession:
    """Maximal active-play interval controlled by one team."""

    team: str
    start_frame: int
    end_frame: int
    duration: float
    ended_by: str = "turnover"

    def __post_init__(self) -> None:
        if self.start_frame > self.end_frame:
            raise ValidationError("possession start_frame > end_frame")
        if self.ended_by not in POSSESSION_ENDINGS:
            raise ValidationError(f"unknown possession ending {self.ended_by!r}")


@dataclass(frozen=True, slots=True)
class OrientationRecord:
    frame_index: int
    player_id: str
    theta: float
    source: str

    def __post_init__(self) -> None:
        if self.source not in ORIENTATION_SOURCES:
            raise ValidationError(
                f"unknown orientation source {self.source!r}; "
                f"accepted: {', '.join(sorted(ORIENTATION_SOURCES))}"
            )


def normalize_angle(theta: float) -> float:
    """Map an angle in radians into [0, 2*pi)."""
    if not math.isfinite(theta):
        raise ValidationError(f"angle must be finite, got {theta}")
    theta = math.fmod(theta, TWO_PI)
    if theta < 0.0:
        theta += TWO_PI
    if theta >= TWO_PI:  # fmod corner case
        theta -= TWO_PI
    return theta


def _lines(source: str | Iterable[str]) -> Iterable[str]:
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def _parse_float(token: str, what: str, line_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ValidationError(f"line {line_no}: {what} {token!r} is not a number") from None
    if not math.isfinite(value):
        raise ValidationError(f"line {line_no}: {what} must be finite, got {token!r}")
    return value


def _parse_int(token: str, what: str, line_no: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ValidationError(f"line {line_no}: {what} {token!r} is not an integer") from None


TRACKING_HEADER = ["frame", "timestamp", "team", "player_id", "x", "y", "vx", "vy"]
EVENTS_HEADER = [
    "event_id", "kind", "team", "player_id", "start_frame", "end_frame",
    "outcome", "start_x", "start_y", "end_x", "end_y",
]
ORIENTATIONS_HEADER = ["frame", "player_id", "theta", "source"]


def _check_header(row: list[str], expected: list[str]) -> None:
    got = [c.strip() for c in row]
    if got != expected:
        raise ValidationError(f"bad header: expected {','.join(expected)!r}, got {','.join(got)!r}")


def parse_tracking(source: str | Iterable[str], pitch: PitchSpec = DEFAULT_PITCH) -> TrackingSequence:
    """Parse a tracking CSV into a validated :class:`TrackingSequence`.

    Rows may arrive in any order; frames are sorted by index. Timestamps must
    be strictly increasing with frame index and consistent within a frame.
    Positions beyond the pitch margin, duplicate (frame, player) pairs and
    malformed rows are rejected with the offending line number.
    """
    reader = csv.reader(_lines(source))
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError("empty tracking input: header row required") from None
    _check_header(header, TRACKING_HEADER)

    x_lo, x_hi = -PITCH_MARGIN_M, pitch.length + PITCH_MARGIN_M
    y_lo, y_hi = -PITCH_MARGIN_M, pitch.width + PITCH_MARGIN_M

    by_frame: dict[int, dict] = {}
    seen: set[tuple[int, str]] = set()
    for line_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(TRACKING_HEADER):
            raise ValidationError(
                f"line {line_no}: expected {len(TRACKING_HEADER)} fields, got {len(row)}"
            )
        frame_idx = _parse_int(row[0], "frame", line_no)
        if frame_idx < 0:
            raise ValidationError(f"line {line_no}: frame index must be >= 0")
        timestamp = _parse_float(row[1], "timestamp", line_no)
        team = row[2].strip()
        player_id = row[3].strip()
        if not player_id:
            raise ValidationError(f"line {line_no}: empty player_id")
        x = _parse_float(row[4], "x", line_no)
        y = _parse_float(row[5], "y", line_no)
        if not (x_lo <= x <= x_hi and y_lo <= y <= y_hi):
            raise ValidationError(
                f"line {line_no}: position ({x}, {y}) outside pitch bounds "
                f"[{x_lo}, {x_hi}] x [{y_lo}, {y_hi}] for {player_id}"
            )
        vx_s, vy_s = row[6].strip(), row[7].strip()
        if (vx_s == "") != (vy_s == ""):
            raise ValidationError(f"line {line_no}: vx and vy must both be present or both empty")
        velocity = None
        if vx_s:
            velocity = (_parse_float(vx_s, "vx", line_no), _parse_float(vy_s, "vy", line_no))

        key = (frame_idx, player_id)
        if key in seen:
            raise ValidationError(f"line {line_no}: duplicate entry for frame {frame_idx}, {player_id}")
        seen.add(key)

        slot = by_frame.setdefault(frame_idx, {"timestamp": timestamp, "players": [], "ball": None})
        if slot["timestamp"] != timestamp:
            raise ValidationError(
                f"line {line_no}: frame {frame_idx} has conflicting timestamps "
                f"{slot['timestamp']} and {timestamp}"
            )
        if player_id == BALL_ID:
            slot["ball"] = BallState(position=(x, y), velocity=velocity)
        else:
            slot["players"].append(
                PlayerState(player_id=player_id, team=team, position=(x, y), velocity=velocity)
            )

    if not by_frame:
        raise ValidationError("tracking input has a header but no data rows")

    frames = []
    prev_ts = None
    for idx in sorted(by_frame):
        slot = by_frame[idx]
        if prev_ts is not None and slot["timestamp"] <= prev_ts:
            raise ValidationError(
                f"timestamps not strictly increasing: frame {idx} at {slot['timestamp']} "
                f"follows {prev_ts}"
            )
        prev_ts = slot["timestamp"]
        frames.append(
            Frame(
                frame_index=idx,
                timestamp=slot["timestamp"],
                players=tuple(slot["players"]),
                ball=slot["ball"],
            )
        )

    return TrackingSequence(frames=tuple(frames), pitch=pitch, frame_rate_hz=_infer_rate(frames))


def _infer_rate(frames: Sequence[Frame]) -> float:
    if len(frames) < 2:
        return 25.0
    deltas = [b.timestamp - a.timestamp for a, b in zip(frames, frames[1:])]
    rate = 1.0 / statistics.median(deltas)
    # snap to the nominal integer rate when float noise is the only deviation
    if abs(rate - round(rate)) < 1e-6:
        rate = float(round(rate))
    return rate


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def serialize_tracking(seq: TrackingSequence) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRACKING_HEADER)
    for frame in seq.frames:
        for p in frame.players:
            vx, vy = (p.velocity if p.velocity is not None else (None, None))
            writer.writerow(
                [frame.frame_index, repr(frame.timestamp), p.team, p.player_id,
                 repr(p.position[0]), repr(p.position[1]), _fmt(vx), _fmt(vy)]
            )
        if frame.ball is not None:
            bvx, bvy = (frame.ball.velocity if frame.ball.velocity is not None else (None, None))
            writer.writerow(
                [frame.frame_index, repr(frame.timestamp), BALL_TEAM, BALL_ID,
                 repr(frame.ball.position[0]), repr(frame.ball.position[1]), _fmt(bvx), _fmt(bvy)]
            )
    return out.getvalue()


def parse_events(source: str | Iterable[str], tracking: TrackingSequence | None = None) -> list[Event]:
    """Parse an events CSV; events are returned sorted by start_frame.

    With ``tracking`` supplied, frame references outside its range are
    flagged with a warning (not fatal: event feeds often outlast clips).
    """
    reader = csv.reader(_lines(source))
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError("empty events input: header row required") from None
    _check_header(header, EVENTS_HEADER)

    events = []
    for line_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(EVENTS_HEADER):
            raise ValidationError(f"line {line_no}: expected {len(EVENTS_HEADER)} fields, got {len(row)}")
        try:
            event = Event(
                event_id=row[0].strip(),
                kind=row[1].strip(),
                team=row[2].strip(),
                player_id=row[3].strip(),
                start_frame=_parse_int(row[4], "start_frame", line_no),
                end_frame=_parse_int(row[5], "end_frame", line_no),
                outcome=row[6].strip(),
                start_location=(_parse_float(row[7], "start_x", line_no),
                                _parse_float(row[8], "start_y", line_no)),
                end_location=(_parse_float(row[9], "end_x", line_no),
                              _parse_float(row[10], "end_y", line_no)),
            )
        except ValidationError as exc:
            raise ValidationError(f"line {line_no}: {exc}") from None
        if tracking is not None:
            lo, hi = tracking.first_frame_index, tracking.last_frame_index
            if event.start_frame < lo or event.end_frame > hi:
                warnings.warn(
                    f"event {event.event_id} spans frames [{event.start_frame}, {event.end_frame}] "
                    f"outside tracking range [{lo}, {hi}]",
                    stacklevel=2,
                )
        events.append(event)

    events.sort(key=lambda e: (e.start_frame, e.end_frame, e.event_id))
    return events


def serialize_events(events: Iterable[Event]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(EVENTS_HEADER)
    for e in events:
        writer.writerow(
            [e.event_id, e.kind, e.team, e.player_id, e.start_frame, e.end_frame, e.outcome,
             repr(e.start_location[0]), repr(e.start_location[1]),
             repr(e.end_location[0]), repr(e.end_location[1])]
        )
    return out.getvalue()


def parse_orientations(
    source: str | Iterable[str], known_players: set[str] | None = None
) -> list[OrientationRecord]:
    """Parse an orientations CSV; thetas are normalized into [0, 2*pi)."""
    reader = csv.reader(_lines(source))
    try:
        header = next(reader)
    except StopIteration:
        return []
    _check_header(header, ORIENTATIONS_HEADER)

    records = []
    for line_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(ORIENTATIONS_HEADER):
            raise ValidationError(
                f"line {line_no}: expected {len(ORIENTATIONS_HEADER)} fields, got {len(row)}"
            )
        player_id = row[1].strip()
        if known_players is not None and player_id not in known_players:
            raise ValidationError(f"line {line_no}: unknown player {player_id!r}")
        theta_raw = _parse_float(row[2], "theta", line_no)
        try:
            record = OrientationRecord(
                frame_index=_parse_int(row[0], "frame", line_no),
                player_id=player_id,
                theta=normalize_angle(theta_raw),
                source=row[3].strip(),
            )
        except ValidationError as exc:
            raise ValidationError(f"line {line_no}: {exc}") from None
        records.append(record)
    return records


def serialize_orientations(records: Iterable[OrientationRecord]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(ORIENTATIONS_HEADER)
    for r in records:
        writer.writerow([r.frame_index, r.player_id, repr(r.theta), r.source])
    return out.getvalue()


def derive_velocities(seq: TrackingSequence, overwrite: bool = False) -> TrackingSequence:
    """Fill in velocities by finite differences of positions.

    Central differences on interior frames, one-sided at the boundaries,
    speeds clamped to :data:`SPEED_CAP_MS`. Velocities already present are
    kept unless ``overwrite`` is set. A single appearance yields (0, 0).
    """
    timelines: dict[tuple[str, str], list[int]] = {}
    for i, frame in enumerate(seq.frames):
        for p in frame.players:
            timelines.setdefault((p.team, p.player_id), []).append(i)
        if frame.ball is not None:
            timelines.setdefault((BALL_TEAM, BALL_ID), []).append(i)

    derived: dict[tuple[int, str, str], tuple[float, float]] = {}
    for (team, pid), idxs in timelines.items():
        positions = []
        times = []
        for i in idxs:
            frame = seq.frames[i]
            state = frame.ball if pid == BALL_ID else frame.player(pid)
            positions.append(state.position)
            times.append(frame.timestamp)
        for k, i in enumerate(idxs):
            lo = max(k - 1, 0)
            hi = min(k + 1, len(idxs) - 1)
            if lo == hi:
                v = (0.0, 0.0)
            else:
                dt = times[hi] - times[lo]
                v = ((positions[hi][0] - positions[lo][0]) / dt,
                     (positions[hi][1] - positions[lo][1]) / dt)
                speed = math.hypot(v[0], v[1])
                if speed > SPEED_CAP_MS:
                    scale = SPEED_CAP_MS / speed
                    v = (v[0] * scale, v[1] * scale)
            derived[(i, team, pid)] = v

    new_frames = []
    for i, frame in enumerate(seq.frames):
        players = tuple(
            p if (p.velocity is not None and not overwrite)
            else replace(p, velocity=derived[(i, p.team, p.player_id)])
            for p in frame.players
        )
        ball = frame.ball
        if ball is not None and (ball.velocity is None or overwrite):
            ball = replace(ball, velocity=derived[(i, BALL_TEAM, BALL_ID)])
        new_frames.append(replace(frame, players=players, ball=ball))
    return replace(seq, frames=tuple(new_frames))


def assign_ball_owners(seq: TrackingSequence, events: Iterable[Event]) -> TrackingSequence:
    """Attach per-frame ball ownership inferred from on-ball events.

    The owner at frame f is the player of the most recent non-stoppage event
    whose start_frame is <= f. The tracking format carries no owner column,
    so this is the canonical way to recover it from an event feed.
    """
    on_ball = sorted((e for e in events if e.kind != "other"), key=lambda e: e.start_frame)
    if not on_ball:
        return seq
    new_frames = []
    j = -1
    for frame in seq.frames:
        while j + 1 < len(on_ball) and on_ball[j + 1].start_frame <= frame.frame_index:
            j += 1
        owner = on_ball[j].player_id if j >= 0 else None
        new_frames.append(replace(frame, ball_owner=owner))
    return replace(seq, frames=tuple(new_frames))
