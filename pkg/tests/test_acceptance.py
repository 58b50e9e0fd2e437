"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s``. The slowest criterion
(the three-variant ordering experiment) budgets ten minutes end to end;
everything else is seconds.
"""

import hashlib
import json
import math
import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from pressmap.cli import main as cli_main
from pressmap.datamodel import (
    BallState,
    Event,
    Frame,
    PitchSpec,
    PlayerState,
    parse_events,
    parse_orientations,
    parse_tracking,
)
from pressmap.gnn import TrainConfig, evaluate, forward, gradient_check, init_model, train
from pressmap.pipeline import (
    GraphProvider,
    MatchData,
    WindowSpec,
    build_dataset,
    make_windows,
    segment_possessions,
    split_by_match,
)
from pressmap.pitch_control import ControlEvaluator, ControlParams, defensive_control
from pressmap.ppm import PPMSequence, permute_graph
from pressmap.pressure import (
    PressureVector,
    circle_points,
    estimate_amplifier,
    pressure_level,
    rotation_index,
    sample_pressure_circle,
)
from pressmap.analytics import team_pressure_series
from pressmap.synth import SynthConfig, simulate_match
from tests.test_gnn import make_sequence

PARAMS = ControlParams()
PITCH = PitchSpec()


def report(n, description):
    print(f"\nACCEPTANCE {n}: PASS - {description}")


def random_frame(rng, n_att, n_def, ball_owner=None):
    players = []
    for i in range(n_att):
        players.append(PlayerState(
            f"a{i:02d}", "home",
            (float(rng.uniform(0, 105)), float(rng.uniform(0, 68))),
            (float(rng.uniform(-8, 8)), float(rng.uniform(-8, 8))),
        ))
    for i in range(n_def):
        players.append(PlayerState(
            f"d{i:02d}", "away",
            (float(rng.uniform(0, 105)), float(rng.uniform(0, 68))),
            (float(rng.uniform(-8, 8)), float(rng.uniform(-8, 8))),
        ))
    return Frame(0, 0.0, tuple(players), BallState((52.5, 34.0), (0.0, 0.0)), ball_owner)


class TestCriterion1:
    def test_pitch_control_complement(self):
        rng = np.random.default_rng(1001)
        start = time.perf_counter()
        worst = 0.0
        for _ in range(1000):
            frame = random_frame(rng, int(rng.integers(1, 8)), int(rng.integers(1, 8)))
            swapped = Frame(
                0, 0.0,
                tuple(
                    PlayerState(p.player_id, "home" if p.team == "away" else "away",
                                p.position, p.velocity)
                    for p in frame.players
                ),
                frame.ball,
            )
            q = (float(rng.uniform(-5, 110)), float(rng.uniform(-5, 73)))
            a = defensive_control(frame, q, PARAMS, "home")
            b = defensive_control(swapped, q, PARAMS, "home")
            assert 0.0 <= a <= 1.0 and 0.0 <= b <= 1.0
            worst = max(worst, abs(a + b - 1.0))
        elapsed = time.perf_counter() - start
        assert worst <= 1e-12
        assert elapsed < 5.0
        report(1, f"complement error {worst:.2e} over 1000 frames in {elapsed:.2f}s")


class TestCriterion2:
    def test_pressure_circle_oracle_equality(self):
        rng = np.random.default_rng(1002)
        checked = 0
        for _ in range(100):
            frame = random_frame(rng, 11, 11)
            for i in range(11):
                pid = f"a{i:02d}"
                vector = sample_pressure_circle(frame, pid, PARAMS, "home")
                center = frame.player(pid).position
                oracle = [
                    defensive_control(frame, (x, y), PARAMS, "home")
                    for x, y in circle_points(center, 0.5)
                ]
                assert list(vector.values) == oracle  # bit-exact
                checked += 1
        report(2, f"{checked} pressure circles bit-identical to pointwise control")


class TestCriterion3:
    def test_gradient_check(self):
        start = time.perf_counter()
        errors = gradient_check(seed=0, step=1e-6)
        elapsed = time.perf_counter() - start
        worst = max(errors.values())
        assert worst < 1e-4, errors
        assert elapsed < 30.0
        report(3, f"max relative gradient error {worst:.2e} across "
                  f"{len(errors)} parameter blocks in {elapsed:.1f}s")


class TestCriterion4:
    def test_permutation_invariance(self):
        rng = np.random.default_rng(1004)
        model = init_model("ppm2d", seed=4, hidden_width=16)
        worst = 0.0
        n_perms = 0
        for s in range(4):
            seq = make_sequence(float(rng.uniform(0.1, 0.9)), seed=900 + s)
            base, _ = forward(model, seq, mode="eval")
            for _ in range(5):
                perm = rng.permutation(12)
                permuted = PPMSequence(
                    graphs=tuple(permute_graph(g, perm) for g in seq.graphs),
                    possession_id=seq.possession_id,
                    window_start_frame=seq.window_start_frame,
                )
                pred, _ = forward(model, permuted, mode="eval")
                worst = max(worst, abs(pred.p_keep - base.p_keep), abs(pred.p_lose - base.p_lose))
                n_perms += 1
        assert worst <= 1e-12
        report(4, f"{n_perms} node permutations moved the output by at most {worst:.2e}")


@pytest.fixture(scope="module")
def table1():
    """Simulate, build all three variants, train and test over 3 seeds."""
    spec = WindowSpec()
    accs = {"tracking": [], "ppm2d": [], "ppm3d": []}
    window_counts = []
    keep_model = None
    start = time.perf_counter()
    for seed in (1, 2, 3):
        matches = []
        for i in range(5):
            cfg = SynthConfig(seed=seed * 1000 + i, duration_seconds=220,
                              press_choices=(0.2, 0.8))
            sim = simulate_match(cfg)
            matches.append(MatchData(
                f"m{i}",
                parse_tracking(sim.tracking_csv),
                tuple(parse_events(sim.events_csv)),
                tuple(parse_orientations(sim.orientations_csv)),
            ))
        for variant in ("tracking", "ppm2d", "ppm3d"):
            dataset = build_dataset(matches, spec, variant, PARAMS)
            window_counts.append(len(dataset.rows))
            train_set, test_set = split_by_match(dataset, ["m4"])
            config = TrainConfig(epochs=12, batch_size=16, hidden_width=16,
                                 seed=seed, learning_rate=3e-3, val_fraction=0.15)
            result = train(train_set.sequences, config)
            accs[variant].append(evaluate(result.model, test_set.sequences).accuracy)
            if variant == "ppm2d" and keep_model is None:
                keep_model = result.model
    elapsed = time.perf_counter() - start
    return {
        "accs": {k: float(np.mean(v)) for k, v in accs.items()},
        "per_seed": accs,
        "windows": min(window_counts),
        "elapsed": elapsed,
        "model": keep_model,
    }


class TestCriterion5:
    def test_table1_ordering(self, table1):
        accs = table1["accs"]
        assert table1["windows"] >= 1000
        assert accs["ppm3d"] >= accs["ppm2d"] >= accs["tracking"]
        assert accs["ppm3d"] >= 0.70
        assert accs["ppm3d"] - accs["tracking"] >= 0.05
        assert table1["elapsed"] < 600.0
        report(5, "mean test accuracy tracking={tracking:.3f} <= ppm2d={ppm2d:.3f} "
                  "<= ppm3d={ppm3d:.3f} over 3 seeds, {w} windows, {t:.0f}s".format(
                      **accs, w=table1["windows"], t=table1["elapsed"]))


class TestCriterion6:
    def test_level_buckets(self):
        assert pressure_level(1 / 3) == 1
        assert pressure_level(1 / 3 + 1e-9) == 2
        assert pressure_level(2 / 3) == 2
        assert pressure_level(2 / 3 + 1e-9) == 3
        report(6, "level buckets match at 1/3 and 2/3 boundaries exactly")


class TestCriterion7:
    def make_match(self, switch_frame, n_frames=500):
        frames = []
        for i in range(n_frames):
            players = tuple(
                PlayerState(f"h{j:02d}", "home", (10.0 + 4 * j, 30.0), (0.0, 0.0))
                for j in range(11)
            ) + tuple(
                PlayerState(f"a{j:02d}", "away", (10.0 + 4 * j, 50.0), (0.0, 0.0))
                for j in range(11)
            )
            frames.append(Frame(i, i * 0.04, players, BallState((30.0, 30.0))))
        from pressmap.datamodel import TrackingSequence
        tracking = TrackingSequence(frames=tuple(frames), pitch=PITCH, frame_rate_hz=25.0)
        events = [
            Event("e1", "dribble", "home", "h00", 0, 10, "success", (10, 30), (12, 30)),
            Event("e2", "interception", "away", "a00", switch_frame, switch_frame,
                  "success", (30, 30), (30, 30)),
            Event("e3", "dribble", "away", "a01", switch_frame + 5, n_frames - 1,
                  "success", (30, 30), (40, 50)),
        ]
        return tracking, events

    def test_windowing_arithmetic(self):
        tracking, events = self.make_match(switch_frame=156)
        possessions = segment_possessions(events, tracking)
        home = [p for p in possessions if p.team == "home"]
        assert len(home) == 1
        assert home[0].duration == pytest.approx(6.2)
        windows = make_windows(home[0], tracking, WindowSpec())
        assert len(windows) == 9
        assert all(len(w.frame_indices) == 50 for w in windows)

        tracking, events = self.make_match(switch_frame=124)
        possessions = segment_possessions(events, tracking)
        assert all(p.team != "home" for p in possessions)  # 4.9 s: filtered
        report(7, "6.2s possession -> 9 windows of 50 frames; 4.9s possession -> none")


class TestCriterion8:
    def run_pipeline(self, root):
        sim = root / "sim"
        assert cli_main(["simulate", "--seed", "42", "--press-choices", "0.2,0.8",
                         "--duration", "120", "--out", str(sim)]) == 0
        ds = root / "ds"
        assert cli_main(["dataset", "--data", str(sim), "--variant", "ppm2d",
                         "--out", str(ds)]) == 0
        model = root / "model"
        assert cli_main(["train", "--data", str(ds), "--epochs", "3", "--hidden", "8",
                         "--seed", "7", "--out", str(model)]) == 0
        rep = root / "rep"
        assert cli_main(["report", "--model", str(model / "pop.ckpt"),
                         "--data", str(sim), "--out", str(rep)]) == 0
        digests = {}
        for path in (list(model.iterdir()) + list(rep.iterdir())):
            if path.name == "run.json":  # carries wall-clock timestamps
                continue
            digests[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
        return digests

    def test_end_to_end_determinism(self, tmp_path):
        first = self.run_pipeline(tmp_path / "run1")
        second = self.run_pipeline(tmp_path / "run2")
        assert first == second
        report(8, f"two simulate->dataset->train->report runs agree on "
                  f"{len(first)} artifact digests")


class TestCriterion9:
    def test_amplifier_recovers_front_pressure(self):
        rng = np.random.default_rng(1009)
        samples = []
        for _ in range(120):
            theta = float(rng.uniform(0, 2 * math.pi))
            base = rng.uniform(0.15, 0.3, size=8)
            failed = bool(rng.random() < 0.4)
            values = base.copy()
            if failed:
                # plant the failure signature only in front of the body
                values[(0 + rotation_index(theta)) % 8] = rng.uniform(0.6, 0.9)
            vector = PressureVector(values=tuple(float(v) for v in values))
            samples.append((vector, theta, "failure" if failed else "success"))
        amplifier = estimate_amplifier(samples)
        assert amplifier.weights[0] == max(amplifier.weights)
        assert abs(sum(amplifier.weights) / 8 - 1.0) <= 1e-9
        report(9, f"front-relative weight {amplifier.weights[0]:.3f} is the maximum, "
                  "weights average 1")


class TestCriterion10:
    def test_scripted_press_series(self, table1):
        model = table1["model"]
        script = ((0.0, 0.02), (8.0, 0.95), (16.0, 0.02))
        sim = simulate_match(SynthConfig(seed=77, duration_seconds=18.0, press_script=script))
        match = MatchData(
            "scripted",
            parse_tracking(sim.tracking_csv),
            tuple(parse_events(sim.events_csv)),
            tuple(parse_orientations(sim.orientations_csv)),
        )
        provider = GraphProvider(match, "ppm2d", PARAMS)
        assert len(provider.possessions) == 1
        series = team_pressure_series(model, provider.possessions[0], provider, WindowSpec(), "s0")
        times = np.array([t for t, _ in series.samples])
        values = np.array([v for _, v in series.samples])
        intensity = np.interp(times, [p[0] for p in script], [p[1] for p in script])
        overall = spearmanr(values, intensity).statistic
        rising = times <= 8.0
        falling = times >= 8.0
        rho_up = spearmanr(times[rising], values[rising]).statistic
        rho_down = spearmanr(times[falling], values[falling]).statistic
        assert overall >= 0.8
        assert rho_up >= 0.8
        assert rho_down <= -0.8
        report(10, f"series tracks the scripted press: Spearman {overall:.2f} overall, "
                   f"{rho_up:.2f} while converging, {rho_down:.2f} while retreating")
