"""MaxRate benchmark: simulated annealing maximizing the minimum user rate.

Starts from the CtM clustering/matching geometry at full power, then
anneals the whole decision vector (powers, steering, widths, user
assignment) under Metropolis acceptance with geometric cooling. Exposure
is evaluated and reported but never used to reject a state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .antenna import wrap_angle
from .radio_metrics import Evaluator, MetricsBundle
from .scenario import Scenario
from .solution import SolutionState
from .solver_ctm import CtmConfig, build_geometry


@dataclass(frozen=True)
class AnnealConfig:
    initial_temp: float | None = None   # None: calibrated from probe moves
    cooling_factor: float = 0.95
    iterations: int = 200               # temperature steps
    moves_per_temp: int = 20
    power_step_db: float = 2.0
    angle_step: float = 0.2             # radians
    width_step: float = 0.1             # radians
    seed: int = 0
    realizations_per_check: int = 10
    parallel_candidates: int = 1

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not (0.0 < self.cooling_factor < 1.0):
            raise ValueError("cooling_factor must lie in (0, 1)")


def objective(solution: SolutionState, evaluator: Evaluator) -> float:
    """Minimum mean per-user rate; -inf when some user is unserved."""
    served = set()
    for b in solution.beams:
        served |= b.served_users
    if {u.id for u in evaluator.scenario.users} - served:
        return -math.inf
    rates = [float(evaluator.rate(u.id, solution).mean())
             for u in evaluator.scenario.users]
    return min(rates) if rates else math.inf


def _replace_beam(solution, beam, **changes):
    beams = tuple(replace(b, **changes) if b.beam_id == beam.beam_id else b
                  for b in solution.beams)
    return replace(solution, beams=beams)


def move_power(solution, scenario, rng, step_db):
    poa = scenario.poas[int(rng.integers(len(scenario.poas)))]
    sign = 1.0 if rng.random() < 0.5 else -1.0
    old = solution.tx_power[poa.id]
    if old == -math.inf:
        return solution
    new = min(poa.max_tx_power_dbm, old + sign * step_db)
    return solution.with_power(poa.id, new)


def move_steering(solution, scenario, rng, step):
    beam = solution.beams[int(rng.integers(len(solution.beams)))]
    if rng.random() < 0.5:
        phi = wrap_angle(beam.azimuth + (1.0 if rng.random() < 0.5 else -1.0) * step)
        return _replace_beam(solution, beam, azimuth=float(phi))
    theta = min(math.pi, max(0.0, beam.zenith + (1.0 if rng.random() < 0.5 else -1.0) * step))
    return _replace_beam(solution, beam, zenith=theta)


def move_width(solution, scenario, rng, step):
    beam = solution.beams[int(rng.integers(len(solution.beams)))]
    wmin = scenario.poa_by_id(beam.owner_poa).min_beam_width
    width = min(math.pi, max(wmin, beam.width + (1.0 if rng.random() < 0.5 else -1.0) * step))
    return _replace_beam(solution, beam, width=width)


def move_reassign(solution, scenario, rng):
    if not scenario.users or len(solution.beams) < 2:
        return solution
    user = scenario.users[int(rng.integers(len(scenario.users)))]
    src = solution.beam_for_user(user.id)
    others = [b for b in solution.beams if b.beam_id != src.beam_id]
    dst = others[int(rng.integers(len(others)))]
    beams = []
    for b in solution.beams:
        if b.beam_id == src.beam_id:
            beams.append(replace(b, served_users=b.served_users - {user.id}))
        elif b.beam_id == dst.beam_id:
            beams.append(replace(b, served_users=b.served_users | {user.id}))
        else:
            beams.append(b)
    return replace(solution, beams=tuple(beams))


def neighbor(solution: SolutionState, scenario: Scenario, rng,
             config: AnnealConfig) -> SolutionState:
    """Exactly one mutation; the output stays structurally legal."""
    kind = int(rng.integers(4))
    if kind == 0:
        return move_power(solution, scenario, rng, config.power_step_db)
    if kind == 1:
        return move_steering(solution, scenario, rng, config.angle_step)
    if kind == 2:
        return move_width(solution, scenario, rng, config.width_step)
    return move_reassign(solution, scenario, rng)


def _calibrate_temperature(start, start_obj, scenario, rng, config, evaluator,
                           probes=100, target_acceptance=0.8):
    """Pick T0 so roughly 80% of early worsening moves would be accepted."""
    drops = []
    for _ in range(probes):
        cand = neighbor(start, scenario, rng, config)
        obj = objective(cand, evaluator)
        if obj < start_obj and obj != -math.inf:
            drops.append(start_obj - obj)
    if not drops:
        return max(1.0, abs(start_obj) * 0.01)
    return float(np.mean(drops)) / (-math.log(target_acceptance))


def solve_maxrate(scenario: Scenario, config: AnnealConfig | None = None,
                  trace: list | None = None):
    """Anneal and return (best SolutionState, MetricsBundle).

    Deterministic given the seed; ``trace`` (if given) collects
    (step, move, current_objective, best_objective, accepted) tuples.
    """
    config = config or AnnealConfig()
    evaluator = Evaluator(scenario, config.seed, config.realizations_per_check)
    rng = np.random.default_rng(np.random.SeedSequence([int(config.seed), 0x5A]))

    ctm_cfg = CtmConfig(seed=config.seed,
                        realizations_per_check=config.realizations_per_check)
    current = build_geometry(scenario, ctm_cfg)
    current_obj = objective(current, evaluator)
    best, best_obj = current, current_obj

    temp = config.initial_temp
    if temp is None:
        temp = _calibrate_temperature(current, current_obj, scenario, rng, config,
                                      evaluator)

    for step in range(config.iterations):
        for move in range(config.moves_per_temp):
            cand = neighbor(current, scenario, rng, config)
            cand_obj = objective(cand, evaluator)
            delta = cand_obj - current_obj
            accepted = delta >= 0 or (
                cand_obj != -math.inf and rng.random() < math.exp(delta / temp))
            if accepted:
                current, current_obj = cand, cand_obj
                if cand_obj > best_obj:
                    best, best_obj = cand, cand_obj
            if trace is not None:
                trace.append((step, move, current_obj, best_obj, accepted))
        temp *= config.cooling_factor

    return best, evaluator.metrics(best)
