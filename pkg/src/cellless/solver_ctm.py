"""Cluster-then-Match: k-means clustering, Hungarian beam matching, and
delta-stepped power descent with bisection refinement."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from .radio_metrics import Evaluator, MetricsBundle
from .scenario import Scenario
from .solution import BeamConfig, SolutionState


class NoFeasibleSolutionError(RuntimeError):
    """The all-max-power starting solution is already infeasible."""


@dataclass(frozen=True)
class CtmConfig:
    delta_db: float = 1.0
    refinement_rounds: int = 3
    kmeans_restarts: int = 10
    kmeans_max_iters: int = 100
    realizations_per_check: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.delta_db <= 0:
            raise ValueError("delta_db must be positive")
        if self.refinement_rounds < 0:
            raise ValueError("refinement_rounds must be non-negative")


@dataclass(frozen=True)
class Clustering:
    assignments: dict          # user id -> cluster index
    centroids: tuple           # (x, y) per cluster, or None when empty

    def members(self, k):
        return sorted(u for u, c in self.assignments.items() if c == k)


# ---------------------------------------------------------------------------
# Step 1: clustering

def _kmeans_once(pts, k, rng, max_iters):
    n = len(pts)
    # k-means++ seeding
    centroids = np.empty((k, 2))
    centroids[0] = pts[rng.integers(n)]
    d2 = ((pts - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[j] = pts[rng.integers(n)]
            continue
        centroids[j] = pts[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((pts - centroids[j]) ** 2).sum(axis=1))

    labels = None
    for _ in range(max_iters):
        dist = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = dist.argmin(axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            mask = labels == j
            if mask.any():
                centroids[j] = pts[mask].mean(axis=0)
    dist = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = dist.argmin(axis=1)
    wcss = float(dist[np.arange(n), labels].sum())
    return labels, centroids, wcss


def cluster_users(users, k: int, config: CtmConfig) -> Clustering:
    """Best-of-restarts k-means on user (x, y) positions.

    When k exceeds the number of users the surplus clusters stay empty
    (their beams end up disabled).
    """
    if k < 1:
        raise ValueError("need at least one cluster")
    if not users:
        return Clustering({}, tuple(None for _ in range(k)))
    pts = np.array([[u.position.x, u.position.y] for u in users])
    n = len(users)
    rng = np.random.default_rng(np.random.SeedSequence([int(config.seed), 0x6B6D]))

    if k >= n:
        # Distinct points get singleton clusters; duplicates share one,
        # surplus clusters stay empty.
        uniq, labels = np.unique(pts, axis=0, return_inverse=True)
        centroids = [tuple(uniq[j]) for j in range(len(uniq))] + [None] * (k - len(uniq))
        assignments = {u.id: int(labels[i]) for i, u in enumerate(users)}
        return Clustering(assignments, tuple(centroids))

    best = None
    for _ in range(max(1, config.kmeans_restarts)):
        labels, centroids, wcss = _kmeans_once(pts, k, rng, config.kmeans_max_iters)
        if best is None or wcss < best[2] - 1e-12:
            best = (labels, centroids, wcss)
    labels, centroids, _ = best
    assignments = {u.id: int(labels[i]) for i, u in enumerate(users)}
    cent = tuple(
        tuple(centroids[j]) if (labels == j).any() else None for j in range(k)
    )
    return Clustering(assignments, cent)


# ---------------------------------------------------------------------------
# Step 2: matching

def match_clusters(clustering: Clustering, beams, scenario: Scenario,
                   user_height: float | None = None) -> dict:
    """Optimal one-to-one beam-to-cluster assignment (Hungarian).

    Cost is the 3-D Euclidean distance from the beam's PoA to the cluster
    centroid at user height; empty clusters cost nothing to any beam.
    """
    k = len(clustering.centroids)
    if len(beams) != k:
        raise ValueError(f"need exactly {k} beams for {k} clusters, got {len(beams)}")
    if user_height is None:
        heights = [scenario.user_by_id(u).position.z for u in clustering.assignments]
        user_height = float(np.mean(heights)) if heights else 1.5
    cost = np.zeros((k, len(beams)))
    for ci, centroid in enumerate(clustering.centroids):
        if centroid is None:
            continue
        for bi, beam_id in enumerate(beams):
            p = scenario.beam_owner(beam_id).position
            cost[ci, bi] = math.sqrt(
                (centroid[0] - p.x) ** 2 + (centroid[1] - p.y) ** 2
                + (user_height - p.z) ** 2)
    rows, cols = linear_sum_assignment(cost)
    return {beams[bi]: int(ci) for ci, bi in zip(rows, cols)}


# ---------------------------------------------------------------------------
# Step 3: widths, steering, powers

def user_azimuth(poa_pos, user_pos) -> float:
    """Azimuth of the user as seen from the PoA, in (-pi, pi].

    Equal to sgn(dy) * arccos(dx / d2d) wherever that is defined; the
    coincident (x, y) case maps to 0.
    """
    dx = user_pos.x - poa_pos.x
    dy = user_pos.y - poa_pos.y
    if dx == 0.0 and dy == 0.0:
        return 0.0
    return math.atan2(dy, dx)


def covering_arc(azimuths):
    """Smallest circular arc containing all azimuths: (center, width)."""
    az = np.sort(np.asarray(azimuths, dtype=float))
    if az.size == 1:
        return float(az[0]), 0.0
    gaps = np.diff(az, append=az[0] + 2.0 * math.pi)
    i = int(np.argmax(gaps))
    width = 2.0 * math.pi - float(gaps[i])
    start = float(az[(i + 1) % az.size])
    center = start + width / 2.0
    center = math.remainder(center, 2.0 * math.pi)
    if center <= -math.pi:
        center += 2.0 * math.pi
    return center, width


def beam_width(poa, served_positions) -> float:
    """Angular width of the served cluster, floored at the PoA minimum.

    Uses the minimal covering arc of the user azimuths (handles the
    wrap-around across +/-pi).
    """
    if not served_positions:
        return poa.min_beam_width
    azimuths = [user_azimuth(poa.position, pos) for pos in served_positions]
    _, width = covering_arc(azimuths)
    return max(poa.min_beam_width, width)


def steer_beam(poa, served_positions, centroid):
    """(azimuth, zenith) of the beam: circular midpoint of the covered arc,
    zenith toward the centroid at user height."""
    if not served_positions:
        raise ValueError("cannot steer a beam with no served users")
    azimuths = [user_azimuth(poa.position, pos) for pos in served_positions]
    phi, _ = covering_arc(azimuths)
    cz = float(np.mean([pos.z for pos in served_positions]))
    dx = centroid[0] - poa.position.x
    dy = centroid[1] - poa.position.y
    dz = cz - poa.position.z
    d3d = math.sqrt(dx * dx + dy * dy + dz * dz)
    theta = math.acos(max(-1.0, min(1.0, dz / d3d))) if d3d > 0 else 0.0
    return phi, theta


def build_geometry(scenario: Scenario, config: CtmConfig) -> SolutionState:
    """CtM steps 1-2 plus width/steering: all PoAs at max power."""
    beams = scenario.all_beams
    clustering = cluster_users(list(scenario.users), len(beams), config)
    assignment = match_clusters(clustering, beams, scenario)
    beam_configs = []
    for beam_id in beams:
        poa = scenario.beam_owner(beam_id)
        cluster_idx = assignment[beam_id]
        members = clustering.members(cluster_idx)
        if not members or clustering.centroids[cluster_idx] is None:
            beam_configs.append(BeamConfig(beam_id, poa.id, 0.0, math.pi / 2.0,
                                           poa.min_beam_width, frozenset()))
            continue
        positions = [scenario.user_by_id(u).position for u in members]
        centroid = clustering.centroids[cluster_idx]
        phi, theta = steer_beam(poa, positions, centroid)
        width = beam_width(poa, positions)
        beam_configs.append(BeamConfig(beam_id, poa.id, phi, theta, width,
                                       frozenset(members)))
    tx_power = {p.id: p.max_tx_power_dbm for p in scenario.poas}
    return SolutionState(beams=tuple(beam_configs), tx_power=tx_power)


def reduce_powers(solution: SolutionState, scenario: Scenario, config: CtmConfig,
                  evaluator: Evaluator | None = None) -> SolutionState:
    """Per-PoA power descent: delta steps while feasible, then halved deltas.

    Feasibility is checked with one fixed evaluation seed for the whole
    descent, making it a deterministic, monotone process. Each round sweeps
    the PoAs (descending power, then id) until a full sweep makes no
    reduction, so at the final delta no single PoA can take another step.
    """
    if evaluator is None:
        evaluator = Evaluator(scenario, config.seed, config.realizations_per_check)

    def feasible(sol):
        return evaluator.metrics(sol).feasible

    if not feasible(solution):
        raise NoFeasibleSolutionError(
            "no feasible solution at maximum transmit power")

    current = solution
    active = set(current.active_poas())
    for round_idx in range(config.refinement_rounds + 1):
        delta = config.delta_db / (2 ** round_idx)
        changed = True
        while changed:
            changed = False
            order = sorted(active, key=lambda pid: (-current.tx_power[pid], pid))
            for pid in order:
                while True:
                    trial = current.with_power(pid, current.tx_power[pid] - delta)
                    if feasible(trial):
                        current = trial
                        changed = True
                    else:
                        break
    return current


def solve_ctm(scenario: Scenario, config: CtmConfig | None = None):
    """Full pipeline; returns (SolutionState, MetricsBundle).

    Raises NoFeasibleSolutionError when even maximum power cannot satisfy
    every rate floor and exposure ceiling.
    """
    config = config or CtmConfig()
    geometry = build_geometry(scenario, config)
    evaluator = Evaluator(scenario, config.seed, config.realizations_per_check)
    if not any(b.active for b in geometry.beams):
        off = replace(geometry, tx_power={p.id: -math.inf for p in scenario.poas})
        return off, evaluator.metrics(off)
    solved = reduce_powers(geometry, scenario, config, evaluator=evaluator)
    return solved, evaluator.metrics(solved)
