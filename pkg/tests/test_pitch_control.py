import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pressmap.datamodel import BallState, Frame, PitchSpec, PlayerState, ValidationError
from pressmap.pitch_control import (
    ControlEvaluator,
    ControlParams,
    arrival_time,
    control_grid,
    defensive_control,
    serialize_grid,
)

PARAMS = ControlParams()


def player(pid, team, x, y, vx=0.0, vy=0.0):
    return PlayerState(player_id=pid, team=team, position=(x, y), velocity=(vx, vy))


def frame_of(*players):
    return Frame(frame_index=0, timestamp=0.0, players=tuple(players), ball=BallState((50, 34)))


class TestArrivalTime:
    def test_standing_at_target(self):
        p = player("1", "home", 10.0, 10.0)
        assert arrival_time(p, (10.0, 10.0), PARAMS) == 0.7

    def test_stationary_at_max_speed_distance(self):
        p = player("1", "home", 10.0, 10.0)
        assert arrival_time(p, (10.0 + 7.8, 10.0), PARAMS) == pytest.approx(1.7, abs=1e-12)

    def test_reaction_drift_reaches_target(self):
        # moving toward q at 5 m/s from 3.5 m: drift covers 5 * 0.7 = 3.5 m
        p = player("1", "home", 10.0, 10.0, vx=5.0)
        assert arrival_time(p, (13.5, 10.0), PARAMS) == 0.7

    def test_missing_velocity_treated_as_zero(self):
        p = PlayerState(player_id="1", team="home", position=(0.0, 0.0))
        assert arrival_time(p, (7.8, 0.0), PARAMS) == pytest.approx(1.7, abs=1e-12)


class TestDefensiveControl:
    def test_mirror_symmetry_gives_half(self):
        f = frame_of(player("a", "home", 40.0, 34.0), player("d", "away", 60.0, 34.0))
        assert defensive_control(f, (50.0, 34.0), PARAMS, "home") == 0.5

    def test_lone_defender_on_spot(self):
        attackers = [player(f"a{i}", "home", 10.0 + i, 60.0) for i in range(3)]
        f = frame_of(player("d", "away", 80.0, 10.0), *attackers)
        a = defensive_control(f, (80.0, 10.0), PARAMS, "home")
        assert a > 0.99

    def test_swap_teams_complements(self):
        f = frame_of(
            player("a1", "home", 42.0, 30.0, 1.0, 0.5),
            player("a2", "home", 55.0, 40.0),
            player("d1", "away", 48.0, 33.0, -2.0, 0.0),
        )
        swapped = Frame(
            frame_index=0,
            timestamp=0.0,
            players=tuple(
                PlayerState(p.player_id, "home" if p.team == "away" else "away", p.position, p.velocity)
                for p in f.players
            ),
            ball=f.ball,
        )
        q = (50.0, 34.0)
        a = defensive_control(f, q, PARAMS, "home")
        b = defensive_control(swapped, q, PARAMS, "home")
        assert abs(a + b - 1.0) < 1e-12

    def test_empty_defending_side(self):
        f = frame_of(player("a", "home", 40.0, 34.0))
        assert defensive_control(f, (50.0, 34.0), PARAMS, "home") == 0.0

    def test_empty_attacking_side(self):
        f = frame_of(player("d", "away", 40.0, 34.0))
        assert defensive_control(f, (50.0, 34.0), PARAMS, "home") == 1.0

    def test_both_empty_is_error(self):
        f = Frame(frame_index=0, timestamp=0.0, players=(), ball=None)
        with pytest.raises(ValidationError):
            defensive_control(f, (50.0, 34.0), PARAMS, "home")

    def test_outside_pitch_is_defined(self):
        f = frame_of(player("a", "home", 1.0, 1.0), player("d", "away", 2.0, 2.0))
        a = defensive_control(f, (-3.0, -3.0), PARAMS, "home")
        assert 0.0 <= a <= 1.0


class TestProperties:
    @given(st.data())
    @settings(max_examples=50, deadline=None)
    def test_complement_random(self, data):
        n_att = data.draw(st.integers(1, 6))
        n_def = data.draw(st.integers(1, 6))
        coord = st.floats(min_value=0.0, max_value=100.0)
        vel = st.floats(min_value=-8.0, max_value=8.0)
        players = []
        for i in range(n_att):
            players.append(player(f"a{i}", "home", data.draw(coord), data.draw(coord) * 0.6,
                                  data.draw(vel), data.draw(vel)))
        for i in range(n_def):
            players.append(player(f"d{i}", "away", data.draw(coord), data.draw(coord) * 0.6,
                                  data.draw(vel), data.draw(vel)))
        f = frame_of(*players)
        swapped = Frame(
            frame_index=0, timestamp=0.0,
            players=tuple(
                PlayerState(p.player_id, "home" if p.team == "away" else "away", p.position, p.velocity)
                for p in f.players
            ),
            ball=f.ball,
        )
        q = (data.draw(coord), data.draw(coord) * 0.6)
        a = defensive_control(f, q, PARAMS, "home")
        b = defensive_control(swapped, q, PARAMS, "home")
        assert 0.0 <= a <= 1.0
        assert abs(a + b - 1.0) < 1e-12

    def test_moving_defender_away_never_increases_control(self):
        q = (50.0, 34.0)
        base = 10.0
        values = []
        for extra in [0.0, 2.0, 5.0, 10.0, 20.0]:
            f = frame_of(
                player("a", "home", 45.0, 34.0),
                player("d", "away", 50.0 + base + extra, 34.0),
            )
            values.append(defensive_control(f, q, PARAMS, "home"))
        assert all(x >= y - 1e-15 for x, y in zip(values, values[1:]))

    def test_continuity_probe(self):
        f = frame_of(player("a", "home", 45.0, 30.0), player("d", "away", 55.0, 38.0))
        q = (50.0, 34.0)
        a0 = defensive_control(f, q, PARAMS, "home")
        for dx, dy in [(1e-6, 0), (-1e-6, 0), (0, 1e-6), (0, -1e-6)]:
            f2 = frame_of(player("a", "home", 45.0 + dx, 30.0 + dy), player("d", "away", 55.0, 38.0))
            assert abs(defensive_control(f2, q, PARAMS, "home") - a0) <= 1e-4


class TestControlGrid:
    def make_frame(self):
        return frame_of(
            player("a1", "home", 30.0, 30.0, 2.0, 0.0),
            player("a2", "home", 60.0, 40.0),
            player("d1", "away", 50.0, 34.0, -1.0, 1.0),
            player("d2", "away", 70.0, 20.0),
        )

    def test_all_values_in_unit_interval(self):
        grid = control_grid(self.make_frame(), PitchSpec(), 4.0, PARAMS, "home")
        assert np.all(grid.values >= 0.0) and np.all(grid.values <= 1.0)

    def test_spot_check_matches_pointwise_exactly(self):
        f = self.make_frame()
        pitch = PitchSpec()
        grid = control_grid(f, pitch, 2.0, PARAMS, "home")
        rng = np.random.default_rng(7)
        n_x, n_y = grid.values.shape
        for _ in range(5):
            m = int(rng.integers(0, n_x))
            n = int(rng.integers(0, n_y))
            q = grid.cell_center(m, n)
            assert grid.values[m, n] == defensive_control(f, q, PARAMS, "home")

    def test_no_defenders_all_zero(self):
        f = frame_of(player("a1", "home", 30.0, 30.0))
        grid = control_grid(f, PitchSpec(), 8.0, PARAMS, "home")
        assert np.all(grid.values == 0.0)

    def test_bad_cell_size(self):
        with pytest.raises(ValidationError):
            control_grid(self.make_frame(), PitchSpec(), 0.0, PARAMS, "home")

    def test_serialize_shape(self):
        grid = control_grid(self.make_frame(), PitchSpec(), 10.0, PARAMS, "home")
        text = serialize_grid(grid)
        lines = [l for l in text.splitlines() if not l.startswith("#")]
        assert len(lines) == grid.values.shape[1]
        assert len(lines[0].split(",")) == grid.values.shape[0]


class TestEvaluatorBatching:
    def test_batch_independence(self):
        f = frame_of(
            player("a1", "home", 30.0, 30.0, 1.0, -1.0),
            player("d1", "away", 50.0, 34.0, 0.5, 0.5),
            player("d2", "away", 45.0, 20.0),
        )
        ev = ControlEvaluator(f, PARAMS, "home")
        pts = np.array([[48.0, 31.0], [52.0, 36.0], [10.0, 60.0]])
        batched = ev.evaluate(pts)
        single = np.array([ev.evaluate(p.reshape(1, 2))[0] for p in pts])
        assert np.array_equal(batched, single)

    def test_params_validation(self):
        with pytest.raises(ValidationError):
            ControlParams(reaction_time=0.0)
