"""Defensive pitch-control probability field.

The control model is a nearest-arrival-time logistic: each player's time to
reach a location is a reaction delay plus straight-line travel at top speed
from the position they drift to during that delay. The defending team's
control probability at a location compares the two teams' fastest arrivals
through a logistic in the arrival-time gap.

Every public entry point funnels through one batched evaluator, so a grid
cell, a pressure-circle sample and a lone pointwise query at the same
location produce bit-identical probabilities.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .datamodel import Frame, PitchSpec, PlayerState, ValidationError


@dataclass(frozen=True, slots=True)
class ControlParams:
    """Constants of the arrival-time control model."""

    reaction_time: float = 0.7
    max_speed: float = 7.8
    logistic_scale: float = 0.45

    def __post_init__(self) -> None:
        if self.reaction_time <= 0 or self.max_speed <= 0 or self.logistic_scale <= 0:
            raise ValidationError("all control parameters must be strictly positive")


DEFAULT_CONTROL = ControlParams()


@dataclass(frozen=True)
class ControlGrid:
    """Defensive control probabilities sampled at cell centers.

    ``values[m, n]`` is the probability at x = (m + 0.5) * cell_size,
    y = (n + 0.5) * cell_size.
    """

    pitch: PitchSpec
    cell_size: float
    values: np.ndarray
    frame_index: int

    def cell_center(self, m: int, n: int) -> tuple[float, float]:
        return ((m + 0.5) * self.cell_size, (n + 0.5) * self.cell_size)


def _logistic(z: float) -> float:
    # numerically stable on both tails
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def arrival_time(player: PlayerState, location: tuple[float, float], params: ControlParams) -> float:
    """Seconds for ``player`` to reach ``location`` under the model."""
    vx, vy = player.velocity if player.velocity is not None else (0.0, 0.0)
    rx = player.position[0] + vx * params.reaction_time
    ry = player.position[1] + vy * params.reaction_time
    dx = location[0] - rx
    dy = location[1] - ry
    return params.reaction_time + math.sqrt(dx * dx + dy * dy) / params.max_speed


class ControlEvaluator:
    """Batched defensive-control evaluation for one frame.

    Extracts the two teams' kinematic arrays once, then answers any number
    of location queries. Per-point results are independent of how queries
    are batched (all operations are elementwise or exact reductions).
    """

    def __init__(self, frame: Frame, params: ControlParams, attacking_team: str):
        attackers = [p for p in frame.players if p.team == attacking_team]
        defenders = [p for p in frame.players if p.team != attacking_team]
        if not attackers and not defenders:
            raise ValidationError("frame has no players on either team")
        self.params = params
        self.attacking_team = attacking_team
        self._att = self._kinematics(attackers)
        self._def = self._kinematics(defenders)

    @staticmethod
    def _kinematics(players: list[PlayerState]) -> tuple[np.ndarray, np.ndarray] | None:
        if not players:
            return None
        pos = np.array([p.position for p in players], dtype=np.float64)
        vel = np.array(
            [p.velocity if p.velocity is not None else (0.0, 0.0) for p in players],
            dtype=np.float64,
        )
        return pos, vel

    def _min_arrival(self, side, points: np.ndarray) -> np.ndarray:
        pos, vel = side
        rt = self.params.reaction_time
        drift = pos + vel * rt  # (P_players, 2)
        dx = points[:, None, 0] - drift[None, :, 0]
        dy = points[:, None, 1] - drift[None, :, 1]
        t = rt + np.sqrt(dx * dx + dy * dy) / self.params.max_speed
        return t.min(axis=1)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Defensive control probability at each (x, y) row of ``points``."""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        if self._def is None:
            return np.zeros(len(points))
        if self._att is None:
            return np.ones(len(points))
        gap = (self._min_arrival(self._att, points) - self._min_arrival(self._def, points))
        scale = self.params.logistic_scale
        # scalar exp keeps results identical across batch shapes
        return np.array([_logistic(z / scale) for z in gap], dtype=np.float64)


def defensive_control(
    frame: Frame,
    location: tuple[float, float],
    params: ControlParams,
    attacking_team: str,
) -> float:
    """Probability that the defending side controls a ball at ``location``.

    The defending side is everyone not on ``attacking_team``. An empty
    defending side gives 0, an empty attacking side gives 1.
    """
    return float(ControlEvaluator(frame, params, attacking_team).evaluate(np.array([location]))[0])


def control_grid(
    frame: Frame,
    pitch: PitchSpec,
    cell_size: float,
    params: ControlParams,
    attacking_team: str,
) -> ControlGrid:
    """Evaluate the control field at every cell center of a regular grid."""
    if cell_size <= 0:
        raise ValidationError("cell_size must be positive")
    n_x = int(math.ceil(pitch.length / cell_size))
    n_y = int(math.ceil(pitch.width / cell_size))
    xs = (np.arange(n_x) + 0.5) * cell_size
    ys = (np.arange(n_y) + 0.5) * cell_size
    points = np.column_stack([np.repeat(xs, n_y), np.tile(ys, n_x)])
    flat = ControlEvaluator(frame, params, attacking_team).evaluate(points)
    return ControlGrid(
        pitch=pitch,
        cell_size=cell_size,
        values=flat.reshape(n_x, n_y),
        frame_index=frame.frame_index,
    )


def serialize_grid(grid: ControlGrid) -> str:
    """CSV dump, one row per n (y) index, columns over m (x) cell centers."""
    out = io.StringIO()
    out.write(f"# frame={grid.frame_index} cell_size={grid.cell_size!r} "
              "value[row n][col m] at x=(m+0.5)*cell, y=(n+0.5)*cell\n")
    n_x, n_y = grid.values.shape
    for n in range(n_y):
        out.write(",".join(repr(float(grid.values[m, n])) for m in range(n_x)))
        out.write("\n")
    return out.getvalue()
