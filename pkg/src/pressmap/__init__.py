"""Pressure quantification for soccer tracking data.

Builds per-player pressure vectors from a pitch-control field, assembles
them into player pressure map graphs, and trains a possession-outcome
network whose loss probability serves as a team-pressure metric.
"""

from .datamodel import (
    Event,
    Frame,
    OrientationRecord,
    PitchSpec,
    PlayerState,
    Possession,
    TrackingSequence,
    ValidationError,
    derive_velocities,
    parse_events,
    parse_orientations,
    parse_tracking,
)
from .estimator import PossessionOutcomeClassifier
from .gnn import (
    POPModel,
    Prediction,
    TrainConfig,
    TrainingError,
    evaluate,
    gradient_check,
    load_model,
    predict_pop,
    save_model,
    train,
)
from .pipeline import (
    Dataset,
    GraphProvider,
    MatchData,
    WindowSpec,
    build_dataset,
    make_windows,
    segment_possessions,
    split_by_match,
)
from .pitch_control import ControlGrid, ControlParams, arrival_time, control_grid, defensive_control
from .ppm import PPMGraph, PPMSequence, build_ppm, build_sequence
from .pressure import (
    PressureAmplifier,
    PressureVector,
    apply_amplifier,
    estimate_amplifier,
    orientation_for,
    pressure_level,
    sample_pressure_circle,
    scalar_pressure,
)
from .synth import SynthConfig, WindowScenario, oracle_loss_probability, simulate_match

__version__ = "0.1.0"

__all__ = [
    "ControlGrid",
    "ControlParams",
    "Dataset",
    "Event",
    "Frame",
    "GraphProvider",
    "MatchData",
    "OrientationRecord",
    "PPMGraph",
    "PPMSequence",
    "POPModel",
    "PitchSpec",
    "PlayerState",
    "Possession",
    "PossessionOutcomeClassifier",
    "Prediction",
    "PressureAmplifier",
    "PressureVector",
    "SynthConfig",
    "TrackingSequence",
    "TrainConfig",
    "TrainingError",
    "ValidationError",
    "WindowScenario",
    "WindowSpec",
    "apply_amplifier",
    "arrival_time",
    "build_dataset",
    "build_ppm",
    "build_sequence",
    "control_grid",
    "defensive_control",
    "derive_velocities",
    "estimate_amplifier",
    "evaluate",
    "gradient_check",
    "load_model",
    "make_windows",
    "orientation_for",
    "oracle_loss_probability",
    "parse_events",
    "parse_orientations",
    "parse_tracking",
    "predict_pop",
    "pressure_level",
    "sample_pressure_circle",
    "save_model",
    "scalar_pressure",
    "segment_possessions",
    "simulate_match",
    "split_by_match",
    "train",
]
