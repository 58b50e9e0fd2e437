import json
import math

import numpy as np
import pytest

from pressmap.analytics import (
    AnalyticsSkip,
    EventDelta,
    PassAccuracyRow,
    event_pressure_delta,
    event_pressure_deltas,
    parse_roster,
    passing_accuracy_by_level,
    player_delta_summary,
    serialize_deltas,
    serialize_pass_accuracy,
    serialize_series,
    team_pressure_series,
    write_reports,
)
from pressmap.datamodel import (
    BallState,
    Event,
    Frame,
    PitchSpec,
    PlayerState,
    TrackingSequence,
    ValidationError,
)
from pressmap.gnn import init_model, named_params
from pressmap.pipeline import GraphProvider, MatchData, WindowSpec
from pressmap.pitch_control import ControlParams

SPEC = WindowSpec()
PARAMS = ControlParams()


def ev(event_id, kind, team, player, start, end=None, outcome="success"):
    return Event(
        event_id=event_id, kind=kind, team=team, player_id=player,
        start_frame=start, end_frame=end if end is not None else start,
        outcome=outcome, start_location=(30.0, 30.0), end_location=(35.0, 30.0),
    )


def pressure_probe_model(variant="ppm2d"):
    """Hand-wired network whose loss probability rises with mean pressure."""
    model = init_model(variant, seed=0, hidden_width=4)
    for _, p in named_params(model):
        p[:] = 0.0
    model.layers[0].w_self[0, 6:14] = 1.0 / 8.0  # unit 0 = node scalar pressure
    model.layers[1].w_self[0, 0] = 1.0
    model.layers[2].w_self[0, 0] = 1.0
    model.head_w[0, 0] = 12.0   # lose logit grows with pooled pressure
    model.head_w[1, 0] = -12.0
    model.head_b[0] = -1.5
    return model


def converging_match(n_frames=400, switch_at=350):
    """Defenders close from 20 m to 2 m and back out over the possession."""
    frames = []
    peak = switch_at // 2
    for i in range(n_frames):
        gap = 2.0 + 18.0 * abs(i - peak) / peak
        players = tuple(
            PlayerState(f"h{j:02d}", "home", (20.0 + 5 * j, 20.0 + (j % 3) * 3), (0.0, 0.0))
            for j in range(11)
        ) + tuple(
            PlayerState(f"a{j:02d}", "away", (20.0 + 5 * j, 20.0 + (j % 3) * 3 + gap), (0.0, 0.0))
            for j in range(11)
        )
        frames.append(Frame(i, i * 0.04, players, BallState((45.0, 31.0), (0.0, 0.0))))
    tracking = TrackingSequence(frames=tuple(frames), pitch=PitchSpec(), frame_rate_hz=25.0)
    events = (
        ev("e1", "dribble", "home", "h05", 0, 40),
        ev("e2", "pass", "home", "h03", 99, 149),
        ev("e3", "interception", "away", "a00", switch_at),
    )
    return MatchData("conv", tracking, events, ())


@pytest.fixture(scope="module")
def provider():
    return GraphProvider(converging_match(), "ppm2d", PARAMS)


@pytest.fixture(scope="module")
def model():
    return pressure_probe_model()


class TestPassingAccuracy:
    def test_basic_accuracy(self):
        events = [ev(f"p{i}", "pass", "home", "h01", 10 * i,
                     outcome="success" if i < 3 else "failure") for i in range(4)]
        pressures = {f"p{i}": 0.2 for i in range(4)}
        rows, skipped = passing_accuracy_by_level(events, pressures)
        assert skipped == []
        assert rows == [
            PassAccuracyRow("h01", 1, 4, 3, 0.75, True),
        ]

    def test_no_row_for_empty_level(self):
        events = [ev("p0", "pass", "home", "h01", 0)]
        rows, _ = passing_accuracy_by_level(events, {"p0": 0.2})
        assert {r.level for r in rows} == {1}

    def test_unpaired_pass_skipped(self):
        events = [ev("p0", "pass", "home", "h01", 0), ev("p1", "pass", "home", "h01", 10)]
        rows, skipped = passing_accuracy_by_level(events, {"p0": 0.5})
        assert skipped == ["p1"]
        assert rows[0].attempts == 1

    def test_roster_grouping(self):
        events = [ev(f"p{i}", "pass", "home", f"h0{i % 2}", i) for i in range(4)]
        pressures = {f"p{i}": 0.9 for i in range(4)}
        rows, _ = passing_accuracy_by_level(events, pressures, roster={"h00": "midfielder", "h01": "midfielder"})
        subjects = {r.subject: r for r in rows}
        assert subjects["midfielder"].attempts == 4
        assert subjects["h00"].attempts == 2

    def test_attempts_sum_over_levels(self):
        events = [ev(f"p{i}", "pass", "home", "h01", i) for i in range(6)]
        pressures = {f"p{i}": s for i, s in enumerate([0.1, 0.1, 0.5, 0.5, 0.9, 0.2])}
        rows, _ = passing_accuracy_by_level(events, pressures)
        assert sum(r.attempts for r in rows if r.subject == "h01") == 6

    def test_min_attempts_flag(self):
        events = [ev(f"p{i}", "pass", "home", "h01", i) for i in range(12)]
        pressures = {f"p{i}": 0.2 for i in range(12)}
        rows, _ = passing_accuracy_by_level(events, pressures)
        assert rows[0].low_sample is False

    def test_per_level_gap_visible_despite_equal_aggregate(self):
        # two players with the same overall accuracy, one collapsing under
        # the heaviest pressure
        events, pressures = [], {}
        eid = 0
        for i in range(10):  # steady player: 80% at every level
            for level_s in (0.2, 0.9):
                events.append(ev(f"s{eid}", "pass", "home", "steady", eid,
                                 outcome="success" if i < 8 else "failure"))
                pressures[f"s{eid}"] = level_s
                eid += 1
        for i in range(10):  # fragile player: 100% calm, 60% pressed
            events.append(ev(f"f{eid}", "pass", "home", "fragile", eid, outcome="success"))
            pressures[f"f{eid}"] = 0.2
            eid += 1
            events.append(ev(f"f{eid}", "pass", "home", "fragile", eid,
                             outcome="success" if i < 6 else "failure"))
            pressures[f"f{eid}"] = 0.9
            eid += 1
        rows, _ = passing_accuracy_by_level(events, pressures)
        table = {(r.subject, r.level): r.accuracy for r in rows}
        overall_steady = sum(r.successes for r in rows if r.subject == "steady") / 20
        overall_fragile = sum(r.successes for r in rows if r.subject == "fragile") / 20
        assert overall_steady == overall_fragile == 0.8
        assert table[("steady", 3)] == pytest.approx(0.8)
        assert table[("fragile", 3)] == pytest.approx(0.6)


class TestTeamPressureSeries:
    def test_sample_count_for_two_second_possession(self, model):
        match = converging_match(n_frames=120, switch_at=60)
        prov = GraphProvider(match, "ppm2d", PARAMS, min_possession_seconds=1.0)
        possession = prov.possessions[0]
        short = type(possession)(team=possession.team, start_frame=0, end_frame=50,
                                 duration=2.0, ended_by="turnover")
        series = team_pressure_series(model, short, prov, SPEC, "p0")
        assert len(series.samples) == 1

    def test_values_in_unit_interval(self, model, provider):
        series = team_pressure_series(model, provider.possessions[0], provider, SPEC, "p0")
        assert all(0.0 <= v <= 1.0 for _, v in series.samples)

    def test_rises_then_falls_with_convergence(self, model, provider):
        series = team_pressure_series(model, provider.possessions[0], provider, SPEC, "p0")
        values = [v for _, v in series.samples]
        peak = int(np.argmax(values))
        assert 0 < peak < len(values) - 1
        assert values[peak] > values[0] + 0.05
        assert values[peak] > values[-1] + 0.05

    def test_too_short_possession_raises(self, model, provider):
        possession = provider.possessions[0]
        tiny = type(possession)(team=possession.team, start_frame=0, end_frame=30,
                                duration=1.2, ended_by="turnover")
        with pytest.raises(AnalyticsSkip, match="shorter than one window"):
            team_pressure_series(model, tiny, provider, SPEC, "p0")


class TestEventDeltas:
    def test_zero_length_event_zero_delta(self, model, provider):
        event = ev("d1", "dribble", "home", "h05", 120, 120)
        delta = event_pressure_delta(model, event, provider, SPEC)
        assert delta.delta == 0.0

    def test_matches_series_at_aligned_windows(self, model, provider):
        # event endpoints on the series grid: delta equals the series gap
        event = ev("p1", "pass", "home", "h03", 99, 149)
        delta = event_pressure_delta(model, event, provider, SPEC)
        series = team_pressure_series(model, provider.possessions[0], provider, SPEC, "p0")
        by_end = {round(t * 25): v for t, v in series.samples}
        assert delta.delta == by_end[99] - by_end[149]

    def test_rising_pressure_gives_negative_delta(self, model, provider):
        event = ev("p2", "pass", "home", "h03", 60, 140)
        delta = event_pressure_delta(model, event, provider, SPEC)
        assert delta.delta < 0.0  # defenders converging: pressure grew

    def test_too_close_to_boundary_skipped(self, model, provider):
        event = ev("p3", "pass", "home", "h03", 20, 60)
        with pytest.raises(AnalyticsSkip, match="no full window"):
            event_pressure_delta(model, event, provider, SPEC)

    def test_straddling_possession_change_skipped(self, model, provider):
        event = ev("p4", "pass", "home", "h03", 300, 360)
        with pytest.raises(AnalyticsSkip, match="straddles"):
            event_pressure_delta(model, event, provider, SPEC)

    def test_batch_collects_skips(self, model, provider):
        events = [
            ev("p1", "pass", "home", "h03", 99, 149),
            ev("p3", "pass", "home", "h03", 20, 60),
            ev("x1", "shot", "home", "h03", 99, 120),
        ]
        deltas, skipped = event_pressure_deltas(model, events, provider, SPEC)
        assert [d.event_id for d in deltas] == ["p1"]
        assert [e for e, _ in skipped] == ["p3"]


class TestDeltaSummary:
    def test_mean_per_player_kind(self):
        deltas = [
            EventDelta("e1", "dribble", "h01", 0.3),
            EventDelta("e2", "dribble", "h01", 0.5),
            EventDelta("e3", "pass", "h01", 0.1),
            EventDelta("e4", "pass", "h02", -0.2),
        ]
        rows = player_delta_summary(deltas)
        table = {(r.player_id, r.kind): r for r in rows}
        assert table[("h01", "dribble")].mean_delta == pytest.approx(0.4)
        assert table[("h01", "dribble")].count == 2
        assert rows[0].mean_delta == max(r.mean_delta for r in rows)

    def test_single_event(self):
        rows = player_delta_summary([EventDelta("e1", "pass", "h01", 0.25)])
        assert rows == [type(rows[0])("h01", "pass", 0.25, 1)]

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            player_delta_summary([])


class TestReportsAndIO:
    def test_roster_round_trip(self):
        roster = parse_roster("player_id,position_group\nh01,midfielder\nh02,defender\n")
        assert roster == {"h01": "midfielder", "h02": "defender"}

    def test_bad_roster_header(self):
        with pytest.raises(ValidationError):
            parse_roster("a,b\n1,2\n")

    def test_write_reports(self, tmp_path, model, provider):
        rows, skipped = passing_accuracy_by_level(
            [ev("p1", "pass", "home", "h03", 99, 149)], {"p1": 0.4}
        )
        series = team_pressure_series(model, provider.possessions[0], provider, SPEC, "conv:p0")
        deltas, dskip = event_pressure_deltas(
            model, [ev("p1", "pass", "home", "h03", 99, 149)], provider, SPEC
        )
        written = write_reports(tmp_path, rows, skipped, [series], deltas, dskip)
        names = {p.name for p in written}
        assert names == {
            "pass_accuracy.csv", "pressure_series_conv_p0.csv", "event_deltas.csv", "summary.json",
        }
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["pass_accuracy"][0]["subject"] == "h03"
        assert summary["delta_summary"]

    def test_serializers_have_headers(self):
        assert serialize_pass_accuracy([]).startswith("subject,level")
        assert serialize_deltas([]).startswith("event_id,kind")
