"""Player pressure map graphs.

A PPM is a complete directed graph over the 11 attacking players plus the
ball. Defenders never appear as nodes; their influence enters through the
pressure features. Node features are

    [x/L, y/W, vx/cap, vy/cap, is_ball, has_ball, p0..p7]

and each directed edge (u, v) carries [distance/diag, cos(a), sin(a)] with
``a`` the angle of v as seen from u, measured counterclockwise from +x.
Nodes are ordered attackers-by-id first, ball last, so rebuilding a graph
from the same frame is bit-deterministic.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .datamodel import (
    BALL_ID,
    Frame,
    PitchSpec,
    Possession,
    SPEED_CAP_MS,
    ValidationError,
)
from .pressure import N_DIRECTIONS, PressureVector, VARIANT_AMPLIFIED, VARIANT_VANILLA

ATTACKERS_PER_GRAPH = 11
NODES_PER_GRAPH = 12
NODE_FEATURE_DIM = 6 + N_DIRECTIONS
EDGE_FEATURE_DIM = 3
FRAMES_PER_SEQUENCE = 50

VARIANT_TRACKING = "tracking"
VARIANT_PPM2D = "ppm2d"
VARIANT_PPM3D = "ppm3d"
VARIANTS = (VARIANT_TRACKING, VARIANT_PPM2D, VARIANT_PPM3D)

#: which pressure-vector variant each graph variant embeds
_PRESSURE_VARIANT = {VARIANT_PPM2D: VARIANT_VANILLA, VARIANT_PPM3D: VARIANT_AMPLIFIED}


def directed_edge_index(n_nodes: int) -> np.ndarray:
    """All ordered pairs (u, v), u != v, in lexicographic order."""
    pairs = [(u, v) for u in range(n_nodes) for v in range(n_nodes) if u != v]
    return np.array(pairs, dtype=np.int64)


EDGE_INDEX_12 = directed_edge_index(NODES_PER_GRAPH)
EDGES_PER_GRAPH = len(EDGE_INDEX_12)  # 132 directed = 66 unordered


@dataclass(frozen=True, eq=False)
class PPMGraph:
    """One frame's player pressure map."""

    frame_index: int
    variant: str
    node_ids: tuple[str, ...] | None
    node_features: np.ndarray  # (12, 14)
    edge_features: np.ndarray  # (132, 3), rows follow EDGE_INDEX_12

    def __post_init__(self) -> None:
        if self.node_features.shape != (NODES_PER_GRAPH, NODE_FEATURE_DIM):
            raise ValidationError(f"node feature shape {self.node_features.shape} != "
                                  f"({NODES_PER_GRAPH}, {NODE_FEATURE_DIM})")
        if self.edge_features.shape != (EDGES_PER_GRAPH, EDGE_FEATURE_DIM):
            raise ValidationError(f"edge feature shape {self.edge_features.shape} != "
                                  f"({EDGES_PER_GRAPH}, {EDGE_FEATURE_DIM})")


def graphs_equal(a: PPMGraph, b: PPMGraph) -> bool:
    return (
        a.frame_index == b.frame_index
        and a.variant == b.variant
        and a.node_ids == b.node_ids
        and np.array_equal(a.node_features, b.node_features)
        and np.array_equal(a.edge_features, b.edge_features)
    )


@dataclass(frozen=True, eq=False)
class PPMSequence:
    """A two-second window of 50 consecutive PPMs."""

    graphs: tuple[PPMGraph, ...]
    possession_id: str
    window_start_frame: int
    label: int | None = None  # 0 = lose, 1 = keep

    def __post_init__(self) -> None:
        if len(self.graphs) != FRAMES_PER_SEQUENCE:
            raise ValidationError(f"expected {FRAMES_PER_SEQUENCE} graphs, got {len(self.graphs)}")
        variants = {g.variant for g in self.graphs}
        if len(variants) != 1:
            raise ValidationError(f"graphs mix variants {sorted(variants)}")
        if self.label not in (None, 0, 1):
            raise ValidationError(f"label must be 0, 1 or unset, got {self.label}")

    @property
    def variant(self) -> str:
        return self.graphs[0].variant


def build_ppm(
    frame: Frame,
    attacking_team: str,
    pressures: Mapping[str, PressureVector] | None,
    variant: str,
    pitch: PitchSpec,
) -> PPMGraph:
    """Assemble the 12-node graph for one frame.

    ``pressures`` must cover every attacker and the ball (key ``ball``) for
    the ppm2d/ppm3d variants and may be None for the tracking variant.
    """
    if variant not in VARIANTS:
        raise ValidationError(f"unknown variant {variant!r}; accepted: {', '.join(VARIANTS)}")
    attackers = sorted(
        (p for p in frame.players if p.team == attacking_team), key=lambda p: p.player_id
    )
    if len(attackers) != ATTACKERS_PER_GRAPH:
        raise ValidationError(
            f"frame {frame.frame_index}: expected {ATTACKERS_PER_GRAPH} attacking players, "
            f"found {len(attackers)}"
        )
    if frame.ball is None:
        raise ValidationError(f"frame {frame.frame_index}: missing ball")

    node_ids = tuple(p.player_id for p in attackers) + (BALL_ID,)
    features = np.zeros((NODES_PER_GRAPH, NODE_FEATURE_DIM))
    positions = np.empty((NODES_PER_GRAPH, 2))

    owner = frame.ball_owner
    for i, p in enumerate(attackers):
        vx, vy = p.velocity if p.velocity is not None else (0.0, 0.0)
        positions[i] = p.position
        features[i, 0] = p.position[0] / pitch.length
        features[i, 1] = p.position[1] / pitch.width
        features[i, 2] = vx / SPEED_CAP_MS
        features[i, 3] = vy / SPEED_CAP_MS
        features[i, 5] = 1.0 if owner == p.player_id else 0.0

    bvx, bvy = frame.ball.velocity if frame.ball.velocity is not None else (0.0, 0.0)
    positions[-1] = frame.ball.position
    features[-1, 0] = frame.ball.position[0] / pitch.length
    features[-1, 1] = frame.ball.position[1] / pitch.width
    features[-1, 2] = bvx / SPEED_CAP_MS
    features[-1, 3] = bvy / SPEED_CAP_MS
    features[-1, 4] = 1.0

    if variant != VARIANT_TRACKING:
        expected = _PRESSURE_VARIANT[variant]
        if pressures is None:
            raise ValidationError(f"variant {variant} requires pressure vectors")
        for i, entity_id in enumerate(node_ids):
            vector = pressures.get(entity_id)
            if vector is None:
                raise ValidationError(
                    f"frame {frame.frame_index}: missing pressure vector for {entity_id!r}"
                )
            if vector.variant != expected:
                raise ValidationError(
                    f"variant {variant} needs {expected} pressure, got {vector.variant} "
                    f"for {entity_id!r}"
                )
            features[i, 6:] = vector.values

    return PPMGraph(
        frame_index=frame.frame_index,
        variant=variant,
        node_ids=node_ids,
        node_features=features,
        edge_features=_edge_features(positions, pitch),
    )


def _edge_features(positions: np.ndarray, pitch: PitchSpec) -> np.ndarray:
    u = EDGE_INDEX_12[:, 0]
    v = EDGE_INDEX_12[:, 1]
    dx = positions[v, 0] - positions[u, 0]
    dy = positions[v, 1] - positions[u, 1]
    dist = np.sqrt(dx * dx + dy * dy)
    safe = np.where(dist > 0.0, dist, 1.0)
    out = np.empty((EDGES_PER_GRAPH, EDGE_FEATURE_DIM))
    out[:, 0] = dist / pitch.diagonal
    out[:, 1] = np.where(dist > 0.0, dx / safe, 0.0)
    out[:, 2] = np.where(dist > 0.0, dy / safe, 0.0)
    return out


def build_sequence(
    frames: Sequence[Frame],
    attacking_team: str,
    pressures_by_frame: Mapping[int, Mapping[str, PressureVector]] | None,
    variant: str,
    pitch: PitchSpec,
    possession: Possession | None = None,
    possession_id: str = "",
) -> PPMSequence:
    """Build one 50-graph window. The label is attached later by the pipeline."""
    if len(frames) != FRAMES_PER_SEQUENCE:
        raise ValidationError(f"expected {FRAMES_PER_SEQUENCE} frames, got {len(frames)}")
    for a, b in zip(frames, frames[1:]):
        if b.frame_index <= a.frame_index:
            raise ValidationError("window frames must have strictly increasing indices")
    if possession is not None:
        if attacking_team != possession.team:
            raise ValidationError(
                f"attacking team {attacking_team!r} does not hold possession ({possession.team!r})"
            )
        lo, hi = possession.start_frame, possession.end_frame
        for f in frames:
            if not lo <= f.frame_index <= hi:
                raise ValidationError(
                    f"frame {f.frame_index} crosses possession boundary [{lo}, {hi}]"
                )
    graphs = tuple(
        build_ppm(
            frame,
            attacking_team,
            pressures_by_frame.get(frame.frame_index) if pressures_by_frame else None,
            variant,
            pitch,
        )
        for frame in frames
    )
    return PPMSequence(
        graphs=graphs,
        possession_id=possession_id,
        window_start_frame=frames[0].frame_index,
    )


def serialize_graphs(graphs: Iterable[PPMGraph]) -> str:
    """Line-delimited dump: frame_index, variant, node features, edge features."""
    out = io.StringIO()
    for g in graphs:
        fields = [str(g.frame_index), g.variant]
        fields.extend(repr(float(x)) for x in g.node_features.ravel())
        fields.extend(repr(float(x)) for x in g.edge_features.ravel())
        out.write(",".join(fields))
        out.write("\n")
    return out.getvalue()


def parse_graphs(source: str | Iterable[str]) -> list[PPMGraph]:
    lines = source.splitlines() if isinstance(source, str) else source
    n_node = NODES_PER_GRAPH * NODE_FEATURE_DIM
    n_edge = EDGES_PER_GRAPH * EDGE_FEATURE_DIM
    graphs = []
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 2 + n_node + n_edge:
            raise ValidationError(
                f"line {line_no}: expected {2 + n_node + n_edge} fields, got {len(fields)}"
            )
        variant = fields[1]
        if variant not in VARIANTS:
            raise ValidationError(f"line {line_no}: unknown variant {variant!r}")
        values = np.array([float(x) for x in fields[2:]])
        graphs.append(
            PPMGraph(
                frame_index=int(fields[0]),
                variant=variant,
                node_ids=None,
                node_features=values[:n_node].reshape(NODES_PER_GRAPH, NODE_FEATURE_DIM),
                edge_features=values[n_node:].reshape(EDGES_PER_GRAPH, EDGE_FEATURE_DIM),
            )
        )
    return graphs


def permute_graph(graph: PPMGraph, permutation: Sequence[int]) -> PPMGraph:
    """Relabel nodes by ``permutation`` (new index i holds old node perm[i]).

    Edge rows are remapped so the permuted graph describes the same geometry;
    used to probe the network's permutation equivariance.
    """
    perm = np.asarray(permutation)
    if sorted(perm.tolist()) != list(range(NODES_PER_GRAPH)):
        raise ValidationError("permutation must rearrange all 12 node indices")
    inverse = np.empty_like(perm)
    inverse[perm] = np.arange(NODES_PER_GRAPH)
    # row for new pair (i, j) is the old row for (perm[i], perm[j])
    lookup = {(u, v): r for r, (u, v) in enumerate(map(tuple, EDGE_INDEX_12))}
    rows = [
        lookup[(perm[i], perm[j])]
        for i, j in EDGE_INDEX_12
    ]
    return PPMGraph(
        frame_index=graph.frame_index,
        variant=graph.variant,
        node_ids=tuple(graph.node_ids[p] for p in perm) if graph.node_ids else None,
        node_features=graph.node_features[perm].copy(),
        edge_features=graph.edge_features[rows].copy(),
    )
