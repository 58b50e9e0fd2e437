"""Deterministic kinematic match generator for desk-scale experiments.

Two 11-player teams: the possessing side circulates the ball between
drifting formation waypoints while the defending side presses the carrier
in coordinated waves whose amplitude is the press intensity. Possession is
lost when a per-frame hazard fires; the hazard is a logistic function of
the carrier's own pressure circle (mean and front-relative components), so
anything downstream that learns pressure -> loss is learnable by
construction. Losses hand the ball to the nearest defender; possessions
that survive the watchdog end in a stoppage and a restart for the other
side.

Same config and seed, same bytes out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .datamodel import (
    BALL_ID,
    BallState,
    Event,
    Frame,
    OrientationRecord,
    PitchSpec,
    PlayerState,
    TrackingSequence,
    ValidationError,
    normalize_angle,
    serialize_events,
    serialize_orientations,
    serialize_tracking,
)
from .pitch_control import ControlEvaluator, ControlParams, DEFAULT_CONTROL
from .pressure import circle_points, rotation_index

FRAME_RATE = 25.0
DT = 1.0 / FRAME_RATE

# hazard constants: h = HAZARD_MAX * sigmoid(c0 + c1 * meanP + beta * (frontP - meanP))
HAZARD_BASE = -7.1
HAZARD_MEAN_GAIN = 3.5
HAZARD_MAX = 0.055
GRACE_SECONDS = 1.5      # no hazard right after a turnover
GRACE_RAMP_S = 1.5       # then ramp the hazard in linearly
PASS_SPEED = 14.0
STOPPAGE_SECONDS = 1.0
BLOCK_GAP = 13.0         # resting distance between the defensive band and the play
N_PRESSERS = 4           # defenders that fully engage during a press episode

# a press episode is a full-commitment squeeze: slow approach, a hold at
# arm's length (where the hazard concentrates), then withdrawal; the press
# intensity sets how often episodes are launched, not how hard they bite
EPISODE_APPROACH_S = 3.0
EPISODE_COLLAPSE_S = 3.5
EPISODE_WITHDRAW_S = 2.0
EPISODE_MEAN_GAP_S = 2.0   # mean time between episodes at full intensity
EPISODE_MIN_DELAY_S = 1.5  # episodes never launch immediately after a turnover

# both teams circulate in the same central zone (small per-team shift), so a
# turnover keeps the play local instead of teleporting it between boxes
_BASE_ANCHORS = np.array([
    (36.0, 34.0),
    (44.0, 12.0), (44.0, 27.0), (44.0, 41.0), (44.0, 56.0),
    (53.0, 16.0), (53.0, 34.0), (53.0, 52.0),
    (62.0, 14.0), (62.0, 34.0), (62.0, 54.0),
])


@dataclass(frozen=True, slots=True)
class SynthConfig:
    seed: int = 0
    duration_seconds: float = 120.0
    press_intensity: float = 0.5
    orientation_effect: float = 11.0
    pass_rate: float = 0.5
    pitch: PitchSpec = field(default_factory=PitchSpec)
    max_player_speed: float = 6.5
    max_defender_speed: float = 7.8
    max_possession_seconds: float = 13.0
    #: when set, each possession draws its press intensity from these values
    press_choices: tuple[float, ...] | None = None
    #: piecewise-linear (time s, press drive) script; scripting disables
    #: losses and stoppages so one possession spans the whole run
    press_script: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self) -> None:
        if self.duration_seconds <= 0:
            raise ValidationError("duration_seconds must be positive")
        if not 0.0 <= self.press_intensity <= 1.0:
            raise ValidationError("press_intensity must lie in [0, 1]")
        if self.orientation_effect < 0:
            raise ValidationError("orientation_effect must be >= 0")
        if self.pass_rate <= 0:
            raise ValidationError("pass_rate must be positive")
        if self.max_player_speed <= 0 or self.max_defender_speed <= 0:
            raise ValidationError("speed caps must be positive")
        if self.press_choices is not None:
            for lam in self.press_choices:
                if not 0.0 <= lam <= 1.0:
                    raise ValidationError("press_choices values must lie in [0, 1]")


@dataclass(frozen=True, slots=True)
class WindowScenario:
    """A reproducible moment of a simulated match to roll forward from."""

    start_frame: int
    horizon_seconds: float = 4.0


@dataclass(frozen=True, slots=True)
class OracleEstimate:
    probability: float
    stderr: float
    n_rollouts: int


@dataclass
class SimulatedMatch:
    tracking_csv: str
    events_csv: str
    orientations_csv: str
    manifest: dict


def _team_ids(prefix: str) -> list[str]:
    return [f"{prefix}{i:02d}" for i in range(11)]


class _Simulator:
    """Stateful kinematic core shared by match generation and the oracle."""

    def __init__(self, config: SynthConfig):
        self.cfg = config
        self.rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0x51A7]))
        pitch = config.pitch
        scale = np.array([pitch.length / 105.0, pitch.width / 68.0])
        self.anchors = {
            "home": (_BASE_ANCHORS + np.array([-4.0, 0.0])) * scale,
            "away": (_BASE_ANCHORS + np.array([4.0, 0.0])) * scale,
        }
        # the defending side retreats toward its own goal (home: -x, away: +x)
        self.goal_offset = {"home": np.array([-1.0, 0.0]), "away": np.array([1.0, 0.0])}
        self.ids = {"home": _team_ids("h"), "away": _team_ids("a")}
        self.pos = {side: self.anchors[side].copy() for side in ("home", "away")}
        self.vel = {side: np.zeros((11, 2)) for side in ("home", "away")}
        self.phase = {side: self.rng.uniform(0, 2 * math.pi, size=11) for side in ("home", "away")}
        self.params = DEFAULT_CONTROL

        self.frame = 0
        self.possessing = "home"
        self.pos["away"] = self._block_waypoints("away", 0.0).copy()
        self.carrier = 6  # central player starts with the ball
        self.ball = self.pos["home"][self.carrier].copy()
        self.ball_vel = np.zeros(2)
        self.flight = None  # (target_index, frames_left, release_frame)
        self.pass_target = self._pick_target()
        self.hold_frames_left = self._draw_hold()
        self.hold_start_frame = 0

        self.loss_enabled = config.press_script is None
        self.possession_start = 0
        self.possession_lambda = self._draw_lambda()
        self.episode_start: int | None = None
        self.next_episode_frame = self._draw_episode_gap(0)
        self.stoppage_frames_left = 0
        self.event_seq = 0

        self.frames: list[Frame] = []
        self.events: list[Event] = []
        self.orientations: list[OrientationRecord] = []
        self.possession_log: list[dict] = []
        self.last_hazard = 0.0

    # --- seeded draws -------------------------------------------------
    def _draw_lambda(self) -> float:
        if self.cfg.press_choices:
            return float(self.rng.choice(self.cfg.press_choices))
        return self.cfg.press_intensity

    def _draw_episode_gap(self, from_frame: int) -> int | None:
        """Frame at which the next press episode launches, None if never."""
        lam = self.possession_lambda
        if lam <= 0.0:
            return None
        gap = self.rng.exponential(EPISODE_MEAN_GAP_S / lam ** 1.6) + EPISODE_MIN_DELAY_S
        return from_frame + round(gap * FRAME_RATE)

    def _draw_hold(self) -> int:
        seconds = min(max(self.rng.exponential(1.0 / self.cfg.pass_rate), 0.5), 6.0)
        return max(1, round(seconds * FRAME_RATE))

    def _pick_target(self) -> int:
        mates = [i for i in range(11) if i != self.carrier]
        dists = np.linalg.norm(
            self.pos[self.possessing][mates] - self.pos[self.possessing][self.carrier], axis=1
        )
        near = [m for m, d in zip(mates, dists) if 5.0 <= d <= 40.0] or mates
        return int(self.rng.choice(near))

    # --- dynamics -----------------------------------------------------
    def _drive(self, t: float) -> float:
        if self.cfg.press_script is not None:
            ts = [p[0] for p in self.cfg.press_script]
            vs = [p[1] for p in self.cfg.press_script]
            return float(np.interp(t, ts, vs))
        if self.episode_start is None:
            if self.next_episode_frame is not None and self.frame >= self.next_episode_frame:
                self.episode_start = self.frame
            else:
                return 0.0
        tau = (self.frame - self.episode_start) / FRAME_RATE
        if tau < EPISODE_APPROACH_S:
            return tau / EPISODE_APPROACH_S
        tau -= EPISODE_APPROACH_S
        if tau < EPISODE_COLLAPSE_S:
            return 1.0
        tau -= EPISODE_COLLAPSE_S
        if tau < EPISODE_WITHDRAW_S:
            return 1.0 - tau / EPISODE_WITHDRAW_S
        self.episode_start = None
        self.next_episode_frame = self._draw_episode_gap(self.frame)
        return 0.0

    def _attack_waypoints(self, side: str, t: float) -> np.ndarray:
        drift = np.stack(
            [
                4.0 * np.sin(0.23 * t + self.phase[side]),
                3.0 * np.cos(0.19 * t + self.phase[side]),
            ],
            axis=1,
        )
        return self.anchors[side] + drift

    def _block_waypoints(self, side: str, t: float) -> np.ndarray:
        """Resting positions of the defending side: a flattened copy of the
        attacking formation parked a block gap toward its own goal."""
        att = self._attack_waypoints(self.possessing, t)
        out = att.copy()
        if self.goal_offset[side][0] > 0:  # defends the +x goal
            anchor = att[:, 0].max() + BLOCK_GAP
        else:
            anchor = att[:, 0].min() - BLOCK_GAP
        out[:, 0] = anchor + 0.2 * (att[:, 0] - att[:, 0].mean())
        lo = np.array([1.0, 1.0])
        hi = np.array([self.cfg.pitch.length - 1.0, self.cfg.pitch.width - 1.0])
        return np.clip(out, lo, hi)

    @staticmethod
    def _cap_speed(vectors: np.ndarray, cap: float) -> np.ndarray:
        speeds = np.linalg.norm(vectors, axis=1, keepdims=True)
        return np.where(speeds > cap, vectors * (cap / np.maximum(speeds, 1e-9)), vectors)

    def _steer(self, side: str, t: float, drive: float) -> None:
        cfg = self.cfg
        if side == self.possessing:
            waypoints = self._attack_waypoints(side, t)
            desired = self._cap_speed(1.1 * (waypoints - self.pos[side]), cfg.max_player_speed * 0.7)
            if self.flight is None:
                # the carrier dribbles gently so the play stays compact
                desired[self.carrier] *= 0.4
            self.vel[side] = desired
        else:
            waypoints = self._block_waypoints(side, t)
            carrier_pos = self.ball if self.flight is not None else self.pos[self.possessing][self.carrier]
            # half the press squeezes the carrier from the side he faces,
            # the other half marks the pass target, so playing out of the
            # press moves the ball into pressure rather than out of it
            theta = self._carrier_theta()
            front = carrier_pos + 1.0 * np.array([math.cos(theta), math.sin(theta)])
            receiver = self.pos[self.possessing][self.pass_target]
            d_front = np.linalg.norm(front - self.pos[side], axis=1)
            d_recv = np.linalg.norm(receiver - self.pos[side], axis=1)
            goals = np.broadcast_to(front, (11, 2)).copy()
            order = np.argsort(d_front)
            on_carrier = list(order[: N_PRESSERS // 2])
            remaining = [i for i in np.argsort(d_recv) if i not in on_carrier]
            for i in remaining[: N_PRESSERS - len(on_carrier)]:
                goals[i] = receiver
            engage = np.full((11, 1), 0.25)
            engage[on_carrier] = 1.0
            engage[remaining[: N_PRESSERS - len(on_carrier)]] = 1.0
            to_goal = goals - self.pos[side]
            dist = np.linalg.norm(to_goal, axis=1, keepdims=True)
            # full-speed chase that eases off at arm's length
            closing = np.clip((dist - 0.4) / 3.0, 0.0, 1.0)
            chase = cfg.max_defender_speed * closing * to_goal / np.maximum(dist, 1e-9)
            weight = drive * engage
            hold = self._cap_speed(1.6 * (waypoints - self.pos[side]), cfg.max_defender_speed * 0.55)
            self.vel[side] = weight * chase + (1.0 - weight) * hold
        self.pos[side] = self.pos[side] + self.vel[side] * DT
        lo = np.array([1.0, 1.0])
        hi = np.array([self.cfg.pitch.length - 1.0, self.cfg.pitch.width - 1.0])
        self.pos[side] = np.clip(self.pos[side], lo, hi)

    def _carrier_theta(self) -> float:
        target_pos = self.pos[self.possessing][self.pass_target]
        origin = self.pos[self.possessing][self.carrier]
        delta = target_pos - origin
        if abs(delta[0]) < 1e-9 and abs(delta[1]) < 1e-9:
            return 0.0
        return normalize_angle(math.atan2(delta[1], delta[0]))

    def _emit_frame(self) -> Frame:
        players = []
        for side in ("home", "away"):
            for i, pid in enumerate(self.ids[side]):
                players.append(
                    PlayerState(
                        player_id=pid,
                        team=side,
                        position=(float(self.pos[side][i, 0]), float(self.pos[side][i, 1])),
                        velocity=(float(self.vel[side][i, 0]), float(self.vel[side][i, 1])),
                    )
                )
        frame = Frame(
            frame_index=self.frame,
            timestamp=self.frame * DT,
            players=tuple(players),
            ball=BallState(
                position=(float(self.ball[0]), float(self.ball[1])),
                velocity=(float(self.ball_vel[0]), float(self.ball_vel[1])),
            ),
            ball_owner=self.ids[self.possessing][self.carrier],
        )
        self.frames.append(frame)
        return frame

    def _hazard(self, frame: Frame, theta: float) -> float:
        age = (self.frame - self.possession_start) / FRAME_RATE
        if age < GRACE_SECONDS or self.stoppage_frames_left > 0:
            return 0.0
        ramp = min((age - GRACE_SECONDS) / GRACE_RAMP_S, 1.0)
        responsible = self.pos[self.possessing][self.carrier]
        evaluator = ControlEvaluator(frame, self.params, self.possessing)
        values = evaluator.evaluate(circle_points((responsible[0], responsible[1]), 0.5))
        mean_p = float(values.mean())
        front_p = float(values[rotation_index(theta)])
        z = HAZARD_BASE + HAZARD_MEAN_GAIN * mean_p + self.cfg.orientation_effect * front_p
        return ramp * HAZARD_MAX / (1.0 + math.exp(-z))

    def _next_event_id(self) -> str:
        self.event_seq += 1
        return f"e{self.event_seq:05d}"

    def _emit_event(self, kind, team, player, start, end, outcome, start_loc, end_loc):
        self.events.append(
            Event(
                event_id=self._next_event_id(),
                kind=kind,
                team=team,
                player_id=player,
                start_frame=start,
                end_frame=end,
                outcome=outcome,
                start_location=start_loc,
                end_location=end_loc,
            )
        )

    def _loc(self, arr) -> tuple[float, float]:
        return (float(arr[0]), float(arr[1]))

    def _close_possession(self, end_frame: int, ended_by: str) -> None:
        self.possession_log.append(
            {
                "team": self.possessing,
                "start_frame": self.possession_start,
                "end_frame": end_frame,
                "duration_seconds": (end_frame - self.possession_start) / FRAME_RATE,
                "ended_by": ended_by,
                "lambda": self.possession_lambda,
            }
        )

    def _turnover(self, interceptor_side: str, interceptor: int, during_flight: bool) -> None:
        loss_frame = self.frame
        carrier_id = self.ids[self.possessing][self.carrier]
        if during_flight:
            release = self.flight[2]
            self._emit_event(
                "pass", self.possessing, carrier_id, release, loss_frame, "failure",
                self._loc(self.frames[release].ball.position if release < len(self.frames) else self.ball),
                self._loc(self.ball),
            )
            kind = "interception"
        else:
            self._emit_event(
                "dribble", self.possessing, carrier_id, self.hold_start_frame, loss_frame,
                "failure", self._loc(self.pos[self.possessing][self.carrier]), self._loc(self.ball),
            )
            kind = "tackle"
        self._emit_event(
            kind, interceptor_side, self.ids[interceptor_side][interceptor],
            loss_frame, loss_frame, "success", self._loc(self.ball), self._loc(self.ball),
        )
        self._close_possession(loss_frame - 1 if loss_frame > self.possession_start else loss_frame, "loss")
        self.possessing = interceptor_side
        self.carrier = interceptor
        self.ball = self.pos[interceptor_side][interceptor].copy()
        self.flight = None
        self.possession_start = loss_frame
        self.possession_lambda = self._draw_lambda()
        self.episode_start = None
        self.next_episode_frame = self._draw_episode_gap(loss_frame)
        self.pass_target = self._pick_target()
        self.hold_frames_left = self._draw_hold()
        self.hold_start_frame = loss_frame
        self._emit_event(
            "dribble", self.possessing, self.ids[self.possessing][self.carrier],
            loss_frame, loss_frame, "success", self._loc(self.ball), self._loc(self.ball),
        )

    def _stoppage(self) -> None:
        start = self.frame
        carrier_id = self.ids[self.possessing][self.carrier]
        end = start + round(STOPPAGE_SECONDS * FRAME_RATE)
        self._emit_event(
            "other", self.possessing, carrier_id, start, end, "success",
            self._loc(self.ball), self._loc(self.ball),
        )
        self._close_possession(start - 1, "stoppage")
        self.stoppage_frames_left = end - start
        other = "away" if self.possessing == "home" else "home"
        dists = np.linalg.norm(self.pos[other] - self.ball, axis=1)
        self.possessing = other
        self.carrier = int(np.argmin(dists))
        self.flight = None
        self.possession_lambda = self._draw_lambda()
        self.episode_start = None
        self.next_episode_frame = self._draw_episode_gap(self.frame)

    def _restart_after_stoppage(self) -> None:
        self.ball = self.pos[self.possessing][self.carrier].copy()
        self.possession_start = self.frame
        self.pass_target = self._pick_target()
        self.hold_frames_left = self._draw_hold()
        self.hold_start_frame = self.frame
        self._emit_event(
            "dribble", self.possessing, self.ids[self.possessing][self.carrier],
            self.frame, self.frame, "success", self._loc(self.ball), self._loc(self.ball),
        )

    def step(self) -> None:
        t = self.frame * DT
        drive = 0.0 if self.stoppage_frames_left > 0 else self._drive(t)
        for side in ("home", "away"):
            self._steer(side, t, drive)

        in_stoppage = self.stoppage_frames_left > 0
        theta = self._carrier_theta()
        if in_stoppage:
            self.ball_vel = np.zeros(2)
        elif self.flight is not None:
            target, frames_left, release = self.flight
            if frames_left <= 1:
                self.ball = self.pos[self.possessing][target].copy()
                self.ball_vel = self.vel[self.possessing][target].copy()
                self._emit_event(
                    "pass", self.possessing, self.ids[self.possessing][self.carrier],
                    release, self.frame, "success",
                    self._loc(self.frames[release].ball.position), self._loc(self.ball),
                )
                self.carrier = target
                self.hold_start_frame = self.frame
                self.hold_frames_left = self._draw_hold()
                self.pass_target = self._pick_target()
                self.flight = None
                theta = self._carrier_theta()
            else:
                step_vec = self.ball_vel * DT
                self.ball = self.ball + step_vec
                self.flight = (target, frames_left - 1, release)
        else:
            self.hold_frames_left -= 1
            if self.hold_frames_left <= 0:
                target_pos = self.pos[self.possessing][self.pass_target]
                origin = self.pos[self.possessing][self.carrier]
                dist = float(np.linalg.norm(target_pos - origin))
                frames = max(2, round(dist / PASS_SPEED * FRAME_RATE))
                self._emit_event(
                    "dribble", self.possessing, self.ids[self.possessing][self.carrier],
                    self.hold_start_frame, self.frame, "success",
                    self._loc(origin), self._loc(origin),
                )
                self.ball_vel = (target_pos - origin) / (frames * DT)
                self.flight = (self.pass_target, frames, self.frame)
            else:
                # the ball rides with the carrier; giving it a facing-aligned
                # offset would leak body orientation into the tracking data
                new_ball = self.pos[self.possessing][self.carrier].copy()
                self.ball_vel = self.vel[self.possessing][self.carrier].copy()
                self.ball = new_ball

        frame = self._emit_frame()
        if not in_stoppage:
            self.orientations.append(
                OrientationRecord(
                    frame_index=self.frame,
                    player_id=self.ids[self.possessing][self.carrier],
                    theta=theta,
                    source="annotated",
                )
            )

        hazard = self._hazard(frame, theta)
        self.last_hazard = hazard
        if self.loss_enabled and hazard > 0.0 and self.rng.random() < hazard:
            other = "away" if self.possessing == "home" else "home"
            dists = np.linalg.norm(self.pos[other] - self.ball, axis=1)
            self._turnover(other, int(np.argmin(dists)), during_flight=self.flight is not None)
        elif (
            self.loss_enabled
            and self.stoppage_frames_left == 0
            and (self.frame - self.possession_start) / FRAME_RATE >= self.cfg.max_possession_seconds
        ):
            self._stoppage()
        elif self.stoppage_frames_left > 0:
            self.stoppage_frames_left -= 1
            if self.stoppage_frames_left == 0:
                self._restart_after_stoppage()

        self.frame += 1

    def run(self, n_frames: int) -> None:
        for _ in range(n_frames):
            self.step()

    def finish(self) -> None:
        last = self.frame - 1
        if self.flight is not None:
            release = self.flight[2]
            self._emit_event(
                "pass", self.possessing, self.ids[self.possessing][self.carrier],
                release, last, "success",
                self._loc(self.frames[release].ball.position), self._loc(self.ball),
            )
        elif self.stoppage_frames_left == 0:
            self._emit_event(
                "dribble", self.possessing, self.ids[self.possessing][self.carrier],
                self.hold_start_frame, last, "success",
                self._loc(self.pos[self.possessing][self.carrier]), self._loc(self.ball),
            )
        self._close_possession(last, "data_end")


def simulate_match(config: SynthConfig) -> SimulatedMatch:
    """Generate one match as the three CSV formats plus a manifest."""
    sim = _Simulator(config)
    n_frames = round(config.duration_seconds * FRAME_RATE)
    sim.run(n_frames)
    sim.finish()

    tracking = TrackingSequence(
        frames=tuple(sim.frames), pitch=config.pitch, frame_rate_hz=FRAME_RATE
    )
    manifest = {
        "config": {
            "seed": config.seed,
            "duration_seconds": config.duration_seconds,
            "press_intensity": config.press_intensity,
            "orientation_effect": config.orientation_effect,
            "pass_rate": config.pass_rate,
            "pitch": {"length": config.pitch.length, "width": config.pitch.width},
            "max_player_speed": config.max_player_speed,
            "max_defender_speed": config.max_defender_speed,
            "max_possession_seconds": config.max_possession_seconds,
            "press_choices": list(config.press_choices) if config.press_choices else None,
            "press_script": [list(p) for p in config.press_script] if config.press_script else None,
        },
        "calibration": {
            "hazard_base": HAZARD_BASE,
            "hazard_mean_gain": HAZARD_MEAN_GAIN,
            "hazard_max": HAZARD_MAX,
            "grace_seconds": GRACE_SECONDS,
            "episode_approach_seconds": EPISODE_APPROACH_S,
            "episode_collapse_seconds": EPISODE_COLLAPSE_S,
            "episode_mean_gap_seconds": EPISODE_MEAN_GAP_S,
        },
        "possessions": sim.possession_log,
        "loss_fraction": _loss_fraction(sim.possession_log),
    }
    return SimulatedMatch(
        tracking_csv=serialize_tracking(tracking),
        events_csv=serialize_events(sim.events),
        orientations_csv=serialize_orientations(sim.orientations),
        manifest=manifest,
    )


def _loss_fraction(log: Sequence[dict]) -> float:
    decided = [p for p in log if p["ended_by"] in ("loss", "stoppage")]
    if not decided:
        return 0.0
    return sum(1 for p in decided if p["ended_by"] == "loss") / len(decided)


def hazard_continuation(config: SynthConfig, scenario: WindowScenario) -> np.ndarray:
    """Per-frame hazards of the no-loss continuation from the scenario state.

    Replays the match to the scenario frame (identical bytes to
    :func:`simulate_match` with the same config), then freezes the loss
    channel and records the hazard the carrier would face each frame.
    """
    sim = _Simulator(config)
    if scenario.start_frame > 0:
        sim.run(scenario.start_frame)
    sim.loss_enabled = False
    hazards = []
    for _ in range(round(scenario.horizon_seconds * FRAME_RATE)):
        sim.step()
        hazards.append(sim.last_hazard)
    return np.array(hazards)


def oracle_loss_probability(
    config: SynthConfig,
    scenario: WindowScenario,
    n_rollouts: int = 10_000,
    rng_seed: int = 0,
    hazard_override: float | None = None,
) -> OracleEstimate:
    """Monte-Carlo P(loss within the horizon) from the scenario state.

    The kinematic continuation is deterministic (fixed by the config seed);
    the rollouts draw the Bernoulli loss channel along it. The estimate
    carries its binomial standard error.
    """
    if hazard_override is not None:
        n = round(scenario.horizon_seconds * FRAME_RATE)
        hazards = np.full(n, float(hazard_override))
    else:
        hazards = hazard_continuation(config, scenario)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, rng_seed, 0x0AC1E]))
    draws = rng.random((n_rollouts, len(hazards)))
    fired = (draws < hazards).any(axis=1)
    p = float(fired.mean())
    stderr = math.sqrt(p * (1.0 - p) / n_rollouts)
    return OracleEstimate(probability=p, stderr=stderr, n_rollouts=n_rollouts)
