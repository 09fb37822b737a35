"""Cluster-then-Match: per-step oracles and end-to-end behavior."""

import itertools
import math

import numpy as np
import pytest

from cellless.radio_metrics import Evaluator
from cellless.scenario import EndUser, Position3D
from cellless.solution import validate
from cellless.solver_ctm import (CtmConfig,
                                 NoFeasibleSolutionError, beam_width,
                                 build_geometry, cluster_users, covering_arc,
                                 match_clusters, reduce_powers, solve_ctm,
                                 steer_beam, user_azimuth)

from conftest import make_poa, make_tiny_scenario


def users_at(points):
    return [EndUser(f"u{i}", Position3D(x, y, 1.5), 1e6)
            for i, (x, y) in enumerate(points)]


# -- step 1: clustering -------------------------------------------------------

def test_singleton_clusters_when_k_at_least_n():
    users = users_at([(0, 0), (5, 5), (9, 2)])
    c = cluster_users(users, 5, CtmConfig(seed=1))
    labels = {c.assignments[u.id] for u in users}
    assert len(labels) == 3
    assert sum(1 for cent in c.centroids if cent is None) == 2
    for u in users:
        cent = c.centroids[c.assignments[u.id]]
        assert cent == (u.position.x, u.position.y)


def test_duplicate_points_share_a_cluster():
    users = users_at([(1, 1), (1, 1), (4, 4)])
    c = cluster_users(users, 4, CtmConfig(seed=1))
    assert c.assignments["u0"] == c.assignments["u1"]
    assert c.assignments["u2"] != c.assignments["u0"]


def exhaustive_wcss(pts, k):
    """Minimum WCSS over every assignment of points to at most k groups."""
    n = len(pts)
    best = math.inf
    for labels in itertools.product(range(k), repeat=n):
        total = 0.0
        for j in range(k):
            member = pts[[i for i in range(n) if labels[i] == j]]
            if len(member):
                total += ((member - member.mean(axis=0)) ** 2).sum()
        best = min(best, total)
    return best


def test_kmeans_matches_exhaustive_on_small_instances():
    rng = np.random.default_rng(2)
    hits = 0
    for _ in range(30):
        pts = rng.uniform(0.0, 10.0, (6, 2))
        users = users_at(pts)
        c = cluster_users(users, 2, CtmConfig(seed=3, kmeans_restarts=10))
        wcss = 0.0
        for j, cent in enumerate(c.centroids):
            for u in users:
                if c.assignments[u.id] == j:
                    wcss += (u.position.x - cent[0]) ** 2 + (u.position.y - cent[1]) ** 2
        if wcss <= exhaustive_wcss(pts, 2) + 1e-9:
            hits += 1
    assert hits >= 28


def test_cluster_users_argument_checks():
    with pytest.raises(ValueError):
        cluster_users(users_at([(0, 0)]), 0, CtmConfig())
    empty = cluster_users([], 3, CtmConfig())
    assert empty.assignments == {} and empty.centroids == (None, None, None)


# -- step 2: matching ---------------------------------------------------------

def brute_force_assignment(cost):
    k = cost.shape[0]
    best, best_perm = math.inf, None
    for perm in itertools.permutations(range(k)):
        total = sum(cost[i, perm[i]] for i in range(k))
        if total < best:
            best, best_perm = total, perm
    return best, best_perm


def test_match_is_distance_optimal(tiny_scenario):
    users = list(tiny_scenario.users)
    beams = tiny_scenario.all_beams
    clustering = cluster_users(users, len(beams), CtmConfig(seed=0))
    assignment = match_clusters(clustering, beams, tiny_scenario)
    assert sorted(assignment) == sorted(beams)
    assert sorted(assignment.values()) == list(range(len(beams)))

    height = float(np.mean([u.position.z for u in users]))
    cost = np.zeros((len(beams), len(beams)))
    for ci, cent in enumerate(clustering.centroids):
        if cent is None:
            continue
        for bi, beam in enumerate(beams):
            p = tiny_scenario.beam_owner(beam).position
            cost[ci, bi] = math.sqrt((cent[0] - p.x) ** 2 + (cent[1] - p.y) ** 2
                                     + (height - p.z) ** 2)
    best, _ = brute_force_assignment(cost)
    got = sum(cost[ci, beams.index(b)] for b, ci in assignment.items())
    assert got == pytest.approx(best, rel=1e-12)


def test_match_requires_square_problem(tiny_scenario):
    clustering = cluster_users(list(tiny_scenario.users), 4, CtmConfig(seed=0))
    with pytest.raises(ValueError):
        match_clusters(clustering, tiny_scenario.all_beams[:3], tiny_scenario)


# -- step 3: widths and steering ----------------------------------------------

def arc_oracle(azimuths):
    """Minimal covering arc width by trying every point as the arc start."""
    best = 2.0 * math.pi
    for start in azimuths:
        offsets = [(a - start) % (2.0 * math.pi) for a in azimuths]
        best = min(best, max(offsets))
    return best


def test_covering_arc_known_cases():
    assert covering_arc([0.5])[1] == 0.0
    c, w = covering_arc([-0.2, 0.2])
    assert w == pytest.approx(0.4) and c == pytest.approx(0.0)
    # Wrap-around across +/- pi.
    c, w = covering_arc([math.pi - 0.1, -math.pi + 0.3])
    assert w == pytest.approx(0.4)
    assert c == pytest.approx(-math.pi + 0.1)  # center crosses the seam
    # Three-quarters circle: arc must avoid the empty quadrant.
    az = [0.0, math.pi / 2, math.pi, -math.pi / 2 - 0.5]
    _, w = covering_arc(az)
    assert w == pytest.approx(arc_oracle(az), abs=1e-12)


def test_covering_arc_against_oracle_random():
    rng = np.random.default_rng(4)
    for _ in range(300):
        n = int(rng.integers(1, 9))
        az = rng.uniform(-math.pi, math.pi, n)
        _, w = covering_arc(az)
        assert w == pytest.approx(arc_oracle(list(az)), abs=1e-9)


def test_user_azimuth_matches_arccos_form():
    rng = np.random.default_rng(6)
    poa = Position3D(3.0, 4.0, 6.0)
    for _ in range(100):
        u = Position3D(float(rng.uniform(-10, 10)), float(rng.uniform(-10, 10)), 1.5)
        dx, dy = u.x - poa.x, u.y - poa.y
        d2d = math.hypot(dx, dy)
        want = math.copysign(math.acos(dx / d2d), dy) if dy != 0 else \
            (0.0 if dx >= 0 else math.pi)
        assert user_azimuth(poa, u) == pytest.approx(want, abs=1e-12)
    assert user_azimuth(poa, Position3D(3.0, 4.0, 0.0)) == 0.0


def test_beam_width_floor_and_oracle():
    poa = make_poa("p", 0.0, 0.0)
    # Tight cluster: floored at the minimum width.
    tight = [Position3D(10.0, 0.0, 1.5), Position3D(10.0, 0.1, 1.5)]
    assert beam_width(poa, tight) == poa.min_beam_width
    # Spread cluster: exactly the minimal covering arc.
    around = [Position3D(math.cos(a) * 5, math.sin(a) * 5, 1.5)
              for a in np.linspace(-3.0, 3.0, 12)]
    want = arc_oracle([user_azimuth(poa.position, p) for p in around])
    assert beam_width(poa, around) == pytest.approx(want, abs=1e-12)
    assert beam_width(poa, []) == poa.min_beam_width


def test_steer_beam_geometry():
    poa = make_poa("p", 0.0, 0.0, z=6.0)
    pos = [Position3D(10.0, -2.0, 1.5), Position3D(10.0, 2.0, 1.5)]
    phi, theta = steer_beam(poa, pos, (10.0, 0.0))
    assert phi == pytest.approx(0.0, abs=1e-12)  # midpoint of the arc
    want_theta = math.acos(-4.5 / math.sqrt(10.0 ** 2 + 4.5 ** 2))
    assert theta == pytest.approx(want_theta)
    with pytest.raises(ValueError):
        steer_beam(poa, [], (0.0, 0.0))


# -- pipeline ------------------------------------------------------------------

def test_build_geometry_is_legal(tiny_scenario):
    sol = build_geometry(tiny_scenario, CtmConfig(seed=2))
    assert validate(sol, tiny_scenario) == []
    served = set()
    for b in sol.beams:
        served |= b.served_users
    assert served == {u.id for u in tiny_scenario.users}
    for p in tiny_scenario.poas:
        assert sol.tx_power[p.id] == p.max_tx_power_dbm


def test_reduce_powers_monotone_and_feasible(tiny_scenario):
    cfg = CtmConfig(seed=2, realizations_per_check=4, refinement_rounds=1)
    geo = build_geometry(tiny_scenario, cfg)
    ev = Evaluator(tiny_scenario, cfg.seed, cfg.realizations_per_check)
    out = reduce_powers(geo, tiny_scenario, cfg, evaluator=ev)
    assert ev.metrics(out).feasible
    for pid in out.tx_power:
        assert out.tx_power[pid] <= geo.tx_power[pid]
    assert out.total_power_watts() < geo.total_power_watts()


def test_infeasible_at_max_power_raises():
    scenario = make_tiny_scenario(required_rate=1e12)
    with pytest.raises(NoFeasibleSolutionError):
        solve_ctm(scenario, CtmConfig(seed=1, realizations_per_check=2))


def test_solve_ctm_deterministic(tiny_scenario):
    cfg = CtmConfig(seed=7, realizations_per_check=4, refinement_rounds=1)
    s1, m1 = solve_ctm(tiny_scenario, cfg)
    s2, m2 = solve_ctm(tiny_scenario, cfg)
    assert s1.tx_power == s2.tx_power
    assert m1.per_user_rate == m2.per_user_rate


def test_ctm_config_validation():
    with pytest.raises(ValueError):
        CtmConfig(delta_db=0.0)
    with pytest.raises(ValueError):
        CtmConfig(refinement_rounds=-1)
