"""Per-player pressure vectors on the eight-direction pressure circle.

A player's pressure vector samples the defensive control field at 8 compass
points on a circle of radius 0.5 m around them (index k sits at angle
2*pi*k/8 from the +x axis, counterclockwise). The vanilla vector can be
fine-tuned with a body-orientation amplifier: multiplicative mean-1 weights
indexed by direction relative to where the torso faces (0 = straight ahead).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .datamodel import (
    BALL_ID,
    Frame,
    OrientationRecord,
    ValidationError,
    normalize_angle,
)
from .pitch_control import ControlEvaluator, ControlParams

N_DIRECTIONS = 8
DEFAULT_RADIUS = 0.5  # paper circle is 1 m across

AMPLIFIER_CLAMP = (0.5, 2.0)

#: fallback weights by body-relative direction (0 = front, counterclockwise,
#: so 2 = left, 6 = right): front and right carry the most pressure
DEFAULT_AMPLIFIER_WEIGHTS = (1.30, 1.15, 1.20, 1.00, 0.75, 0.80, 0.85, 0.95)

#: below this speed the velocity direction is noise, not orientation
ORIENTATION_SPEED_FLOOR = 0.5

ONE_THIRD = 1.0 / 3.0
TWO_THIRDS = 2.0 / 3.0

VARIANT_VANILLA = "vanilla"
VARIANT_AMPLIFIED = "amplified"


@dataclass(frozen=True, slots=True)
class PressureVector:
    """Eight directional pressure values around one player."""

    values: tuple[float, ...]
    radius: float = DEFAULT_RADIUS
    variant: str = VARIANT_VANILLA

    def __post_init__(self) -> None:
        if len(self.values) != N_DIRECTIONS:
            raise ValidationError(f"pressure vector needs {N_DIRECTIONS} components, got {len(self.values)}")
        for v in self.values:
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"pressure component {v} outside [0, 1]")
        if self.variant not in (VARIANT_VANILLA, VARIANT_AMPLIFIED):
            raise ValidationError(f"unknown pressure variant {self.variant!r}")
        if self.radius <= 0:
            raise ValidationError("pressure circle radius must be positive")


@dataclass(frozen=True, slots=True)
class PressureAmplifier:
    """Mean-1 multiplicative weights over body-relative directions."""

    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.weights) != N_DIRECTIONS:
            raise ValidationError(f"amplifier needs {N_DIRECTIONS} weights, got {len(self.weights)}")
        lo, hi = AMPLIFIER_CLAMP
        for w in self.weights:
            if not lo <= w <= hi:
                raise ValidationError(f"amplifier weight {w} outside [{lo}, {hi}]")
        mean = sum(self.weights) / N_DIRECTIONS
        if abs(mean - 1.0) > 1e-9:
            raise ValidationError(f"amplifier weights must average 1, got {mean}")

    @classmethod
    def identity(cls) -> "PressureAmplifier":
        return cls(weights=(1.0,) * N_DIRECTIONS)

    @classmethod
    def default(cls) -> "PressureAmplifier":
        mean = sum(DEFAULT_AMPLIFIER_WEIGHTS) / N_DIRECTIONS
        return cls(weights=tuple(w / mean for w in DEFAULT_AMPLIFIER_WEIGHTS))


def circle_points(center: tuple[float, float], radius: float) -> np.ndarray:
    """The 8 sample locations around ``center``, index k at angle 2*pi*k/8."""
    pts = np.empty((N_DIRECTIONS, 2))
    for k in range(N_DIRECTIONS):
        ang = 2.0 * math.pi * k / N_DIRECTIONS
        pts[k, 0] = center[0] + radius * math.cos(ang)
        pts[k, 1] = center[1] + radius * math.sin(ang)
    return pts


def sample_pressure_circle(
    frame: Frame,
    player_id: str,
    params: ControlParams,
    attacking_team: str,
    radius: float = DEFAULT_RADIUS,
) -> PressureVector:
    """Vanilla pressure vector for an attacking player in ``frame``."""
    player = frame.player(player_id)
    if player is None:
        raise ValidationError(f"player {player_id!r} not in frame {frame.frame_index}")
    if player.team != attacking_team:
        raise ValidationError(
            f"pressure is defined for attacking players; {player_id!r} is on {player.team!r}"
        )
    evaluator = ControlEvaluator(frame, params, attacking_team)
    values = evaluator.evaluate(circle_points(player.position, radius))
    return PressureVector(values=tuple(float(v) for v in values), radius=radius)


def pressure_vectors_for_frame(
    frame: Frame,
    params: ControlParams,
    attacking_team: str,
    radius: float = DEFAULT_RADIUS,
    include_ball: bool = True,
) -> dict[str, PressureVector]:
    """Vanilla vectors for every attacking player (and the ball) in one pass.

    Batches all circles through a single evaluator; each value is
    bit-identical to the corresponding :func:`sample_pressure_circle` call.
    """
    evaluator = ControlEvaluator(frame, params, attacking_team)
    centers: list[tuple[str, tuple[float, float]]] = [
        (p.player_id, p.position) for p in frame.players if p.team == attacking_team
    ]
    if include_ball:
        if frame.ball is None:
            raise ValidationError(f"frame {frame.frame_index} has no ball")
        centers.append((BALL_ID, frame.ball.position))
    points = np.vstack([circle_points(c, radius) for _, c in centers])
    values = evaluator.evaluate(points)
    out = {}
    for i, (entity_id, _) in enumerate(centers):
        chunk = values[i * N_DIRECTIONS:(i + 1) * N_DIRECTIONS]
        out[entity_id] = PressureVector(values=tuple(float(v) for v in chunk), radius=radius)
    return out


def rotation_index(theta: float) -> int:
    """Nearest of the 8 directions to angle ``theta``."""
    if not math.isfinite(theta):
        raise ValidationError(f"orientation must be finite, got {theta}")
    return round(theta * N_DIRECTIONS / (2.0 * math.pi)) % N_DIRECTIONS


def apply_amplifier(
    vector: PressureVector, theta: float, amplifier: PressureAmplifier
) -> PressureVector:
    """Fine-tune a vanilla vector by body orientation.

    The weight for absolute direction k is the amplifier entry for the
    direction of k relative to the body: ``weights[(k - r) % 8]`` with r the
    nearest direction index of ``theta``. Products are clipped to [0, 1].
    """
    if vector.variant != VARIANT_VANILLA:
        raise ValidationError("amplifier applies to vanilla pressure vectors only")
    r = rotation_index(theta)
    out = tuple(
        min(max(amplifier.weights[(k - r) % N_DIRECTIONS] * vector.values[k], 0.0), 1.0)
        for k in range(N_DIRECTIONS)
    )
    return PressureVector(values=out, radius=vector.radius, variant=VARIANT_AMPLIFIED)


def estimate_amplifier(
    samples: Sequence[tuple[PressureVector, float, str]],
    min_samples: int = 50,
) -> PressureAmplifier:
    """Reconstruct amplifier weights from observed passes.

    Each sample is (vanilla vector, passer orientation, outcome). Pressures
    are rotated into the body frame; the raw weight per relative direction is
    the failed-pass mean over the successful-pass mean. Raw ratios are pulled
    into the clamp range and rescaled to mean 1 (iterated to a fixed point,
    since one rescale can push a clamped weight back out of range).
    """
    if len(samples) < min_samples:
        raise ValidationError(f"need at least {min_samples} samples, got {len(samples)}")
    sums = {"success": np.zeros(N_DIRECTIONS), "failure": np.zeros(N_DIRECTIONS)}
    counts = {"success": 0, "failure": 0}
    for vector, theta, outcome in samples:
        if outcome not in sums:
            raise ValidationError(f"unknown outcome {outcome!r}; accepted: success, failure")
        if vector.variant != VARIANT_VANILLA:
            raise ValidationError("amplifier estimation uses vanilla vectors")
        r = rotation_index(theta)
        rotated = [vector.values[(d + r) % N_DIRECTIONS] for d in range(N_DIRECTIONS)]
        sums[outcome] += rotated
        counts[outcome] += 1
    if counts["success"] == 0 or counts["failure"] == 0:
        raise ValidationError("samples must include both successful and failed passes")

    fail_mean = sums["failure"] / counts["failure"]
    succ_mean = np.maximum(sums["success"] / counts["success"], 1e-6)
    raw = fail_mean / succ_mean

    lo, hi = AMPLIFIER_CLAMP
    w = np.clip(raw, lo, hi)
    for _ in range(200):
        mean = w.mean()
        if abs(mean - 1.0) <= 1e-12:
            break
        w = np.clip(w / mean, lo, hi)
    return PressureAmplifier(weights=tuple(float(x) for x in w))


def scalar_pressure(vector: PressureVector) -> float:
    """Arithmetic mean of the 8 components."""
    return sum(vector.values) / N_DIRECTIONS


def pressure_level(s: float) -> int:
    """Bucket a scalar pressure: 1 while s <= 1/3, 2 up to 2/3, else 3."""
    if not 0.0 <= s <= 1.0:
        raise ValidationError(f"scalar pressure {s} outside [0, 1]")
    if s <= ONE_THIRD:
        return 1
    if s <= TWO_THIRDS:
        return 2
    return 3


OrientationIndex = Mapping[tuple[int, str], OrientationRecord]


def index_orientations(records: Iterable[OrientationRecord]) -> dict[tuple[int, str], OrientationRecord]:
    """Index records by (frame_index, player_id); the last record wins."""
    return {(r.frame_index, r.player_id): r for r in records}


def orientation_for(
    frame: Frame,
    player_id: str,
    orientations: OrientationIndex | Iterable[OrientationRecord] | None,
) -> tuple[float, str] | None:
    """Best available body orientation, or None when only noise is available.

    Prefers an ingested record; falls back to the velocity direction when the
    player moves faster than the noise floor. Velocity-as-orientation is
    known to be wrong for on-ball players, hence the source tag on the result.
    """
    if orientations is not None and not isinstance(orientations, Mapping):
        orientations = index_orientations(orientations)
    if orientations:
        record = orientations.get((frame.frame_index, player_id))
        if record is not None:
            return record.theta, record.source
    player = frame.player(player_id)
    if player is None or player.velocity is None:
        return None
    vx, vy = player.velocity
    if math.hypot(vx, vy) < ORIENTATION_SPEED_FLOOR:
        return None
    return normalize_angle(math.atan2(vy, vx)), "velocity-fallback"


def serialize_amplifier(amplifier: PressureAmplifier) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["relative_direction", "weight"])
    for d, w in enumerate(amplifier.weights):
        writer.writerow([d, repr(w)])
    return out.getvalue()


def parse_amplifier(source: str | Iterable[str]) -> PressureAmplifier:
    lines = io.StringIO(source) if isinstance(source, str) else source
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or [c.strip() for c in header] != ["relative_direction", "weight"]:
        raise ValidationError("amplifier CSV must start with header relative_direction,weight")
    weights: dict[int, float] = {}
    for row in reader:
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        d = int(row[0])
        if d in weights:
            raise ValidationError(f"duplicate relative_direction {d}")
        weights[d] = float(row[1])
    if sorted(weights) != list(range(N_DIRECTIONS)):
        raise ValidationError(f"amplifier CSV must list directions 0..{N_DIRECTIONS - 1} exactly once")
    return PressureAmplifier(weights=tuple(weights[d] for d in range(N_DIRECTIONS)))


PRESSURE_DUMP_HEADER = (
    ["frame", "player_id"] + [f"k{k}" for k in range(N_DIRECTIONS)] + ["scalar", "level", "variant"]
)


def serialize_pressure_rows(
    rows: Iterable[tuple[int, str, PressureVector]],
) -> str:
    """Pressure dump CSV: one row per (frame, player) vector."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(PRESSURE_DUMP_HEADER)
    for frame_index, player_id, vector in rows:
        s = scalar_pressure(vector)
        writer.writerow(
            [frame_index, player_id]
            + [repr(v) for v in vector.values]
            + [repr(s), pressure_level(s), vector.variant]
        )
    return out.getvalue()
