"""SINR, per-user rates, per-human exposure, and the constraint system.

The Evaluator samples every link realization once per (scenario, seed) and
reduces a candidate solution to linear algebra over per-beam unit-power
energy tables. Channel ray geometry does not depend on any decision
variable, so beam changes only invalidate the owning PoA's table row and
power changes invalidate nothing; this is what makes the power-descent
loop and annealing benchmark cheap.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import channel as ch
from .antenna import PanelGeometry, SteeringDirection, width_to_panel, wrap_angle
from .exposure import FREE_SPACE_IMPEDANCE
from .scenario import Scenario
from .solution import SolutionState, validate

NOISE_DENSITY_W_HZ = 10.0 ** ((ch.NOISE_DENSITY_DBM_HZ - 30.0) / 10.0)


class UnservedUserError(ValueError):
    """A user is not served by any beam."""


class SolutionInvalidError(ValueError):
    def __init__(self, violations):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


@dataclass
class MetricsBundle:
    """Evaluation outcome: rates, exposure, power, and feasibility verdict."""

    per_user_rate: dict            # user id -> bit/s (mean over realizations)
    per_human_sar: dict            # human id -> W/kg (mean)
    per_human_power_density: dict  # human id -> {frequency -> W/m^2} (mean)
    per_poa_power: dict            # PoA id -> dBm (-inf when off)
    total_power: float             # watts, transmitting PoAs only
    feasible: bool
    violated: list = field(default_factory=list)

    @property
    def min_rate(self):
        return min(self.per_user_rate.values()) if self.per_user_rate else math.inf

    @property
    def max_sar(self):
        return max(self.per_human_sar.values()) if self.per_human_sar else 0.0


def power_density(frequency: float, p_rx: float) -> float:
    """Incident power density [W/m^2]: received power over the isotropic
    effective area lambda^2 / 4*pi."""
    if p_rx < 0:
        raise ValueError("received power must be non-negative")
    return p_rx * 4.0 * math.pi * frequency ** 2 / ch.SPEED_OF_LIGHT ** 2


def shannon_rate(bandwidth: float, sinr: float):
    return bandwidth * np.log2(1.0 + np.asarray(sinr, dtype=float))


def _lin(dbm: float) -> float:
    return 0.0 if dbm == -math.inf else 10.0 ** ((dbm - 30.0) / 10.0)


class Evaluator:
    """Frozen set of channel realizations for one (scenario, seed).

    Per-beam unit-power (1 W) energy tables of shape
    (n_realizations, n_targets) are computed lazily and cached by beam
    geometry, so re-evaluating with different powers is nearly free.
    """

    def __init__(self, scenario: Scenario, seed: int, n_realizations: int = 10,
                 workers: int = 1):
        if n_realizations < 1:
            raise ValueError("need at least one realization")
        self.scenario = scenario
        self.seed = int(seed)
        self.n_realizations = int(n_realizations)
        self.targets = list(scenario.users) + list(scenario.humans)
        self.target_index = {t.id: i for i, t in enumerate(self.targets)}
        self._stacks = {}
        self._gain_cache = {}
        self._sample_all(max(1, workers))

    # -- sampling -----------------------------------------------------------

    def _sample_all(self, workers):
        def sample_poa(p_idx):
            poa = self.scenario.poas[p_idx]
            links = [
                [
                    ch.sample_link(poa.position.as_tuple(), poa.frequency,
                                   t.position.as_tuple(), self.scenario.channel_params,
                                   ch.link_rng(self.seed, r, p_idx, t_idx))
                    for t_idx, t in enumerate(self.targets)
                ]
                for r in range(self.n_realizations)
            ]
            return poa.id, self._stack(links)

        if workers > 1 and len(self.scenario.poas) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(sample_poa, range(len(self.scenario.poas))))
        else:
            results = [sample_poa(i) for i in range(len(self.scenario.poas))]
        self._stacks = dict(results)

    @staticmethod
    def _stack(links):
        """Stack per-(realization, target) LinkRealizations into arrays."""
        if not links or not links[0]:
            return None
        get = lambda attr: np.array([[getattr(l, attr) for l in row] for row in links])
        stack = {
            "aod_zen": get("aod_zenith"),      # (R, T, Nc, Nr)
            "aod_az": get("aod_azimuth"),
            "phases": get("phases"),
            "powers": get("cluster_powers"),   # (R, T, Nc)
            "los": get("los"),                 # (R, T)
            "k": get("rician_k"),
            "pl": get("pathloss_db"),
            "shadow": get("shadow_db"),
            "d3d": get("d_3d"),
            "los_zen": np.array([[l.los_aod[0] for l in row] for row in links]),
            "los_az": np.array([[l.los_aod[1] for l in row] for row in links]),
        }
        stack["links"] = links
        return stack

    def link(self, realization: int, poa_id: str, target_id: str):
        p = next(i for i, q in enumerate(self.scenario.poas) if q.id == poa_id)
        return self._stacks[poa_id]["links"][realization][self.target_index[target_id]]

    # -- per-beam unit-power gains -------------------------------------------

    def beam_gains(self, beam) -> np.ndarray:
        """(n_realizations, n_targets) energies at 1 W transmit power."""
        poa = self.scenario.poa_by_id(beam.owner_poa)
        panel = PanelGeometry(poa.panel_rows, poa.panel_cols,
                              mech_azimuth=poa.mech_azimuth,
                              element_pattern=poa.element_pattern)
        n_eff = width_to_panel(beam.width, panel)
        key = (beam.owner_poa, round(beam.zenith, 12), round(beam.azimuth, 12), n_eff)
        cached = self._gain_cache.get(key)
        if cached is not None:
            return cached
        geom = PanelGeometry(poa.panel_rows, n_eff,
                             mech_azimuth=poa.mech_azimuth,
                             element_pattern=poa.element_pattern)
        steer = SteeringDirection(beam.zenith, wrap_angle(beam.azimuth - poa.mech_azimuth))
        s = self._stacks[poa.id]
        f = ch.panel_field(geom, s["aod_zen"], wrap_angle(s["aod_az"] - poa.mech_azimuth), steer)
        nr = s["phases"].shape[-1]
        amps = np.sqrt(s["powers"] / nr) * (f * np.exp(1j * s["phases"])).sum(axis=-1)
        # K = 0 off-LoS makes the Rician mix reduce to the pure scattered term.
        k = np.where(s["los"], s["k"], 0.0)
        lam = ch.SPEED_OF_LIGHT / poa.frequency
        f0 = ch.panel_field(geom, s["los_zen"], wrap_angle(s["los_az"] - poa.mech_azimuth), steer)
        h_los = f0 * np.exp(-1j * 2.0 * math.pi * s["d3d"] / lam)
        amps = amps * np.sqrt(1.0 / (1.0 + k))[..., None]
        amps[..., 0] += np.sqrt(k / (1.0 + k)) * h_los
        scale2 = 10.0 ** ((-s["pl"] + s["shadow"]) / 10.0)
        gains = scale2 * (np.abs(amps) ** 2).sum(axis=-1)
        self._gain_cache[key] = gains
        return gains

    # -- aggregation -----------------------------------------------------------

    def _active_beams(self, solution):
        return [b for b in solution.beams if b.active]

    def _interference(self, solution, victim_poa, frequency, t_idx):
        """Per-realization interference power [W] at target index t_idx."""
        total = np.zeros(self.n_realizations)
        for pid in solution.active_poas():
            if pid == victim_poa:
                continue
            poa = self.scenario.poa_by_id(pid)
            if poa.frequency != frequency:
                continue
            beams = [b for b in solution.beams_of(pid) if b.active]
            p_lin = _lin(solution.tx_power.get(pid, -math.inf)) / len(beams)
            for b in beams:
                total += p_lin * self.beam_gains(b)[:, t_idx]
        return total

    def sinr(self, user_id: str, solution: SolutionState) -> np.ndarray:
        """Per-realization linear SINR for one user."""
        try:
            beam = solution.beam_for_user(user_id)
        except KeyError:
            raise UnservedUserError(user_id) from None
        poa = self.scenario.poa_by_id(beam.owner_poa)
        t_idx = self.target_index[user_id]
        n_beams = len([b for b in solution.beams_of(poa.id) if b.active])
        p_lin = _lin(solution.tx_power.get(poa.id, -math.inf)) / n_beams
        signal = p_lin * self.beam_gains(beam)[:, t_idx]
        noise = NOISE_DENSITY_W_HZ * poa.bandwidth
        interference = self._interference(solution, poa.id, poa.frequency, t_idx)
        return signal / (noise + interference)

    def rate(self, user_id: str, solution: SolutionState) -> np.ndarray:
        """Per-realization achievable rate [bit/s] for one user."""
        beam = solution.beam_for_user(user_id)
        poa = self.scenario.poa_by_id(beam.owner_poa)
        return shannon_rate(poa.bandwidth, self.sinr(user_id, solution))

    def human_received_power(self, human_id: str, solution: SolutionState,
                             frequency: float) -> np.ndarray:
        """Per-realization power [W] received by a human from one frequency group."""
        t_idx = self.target_index[human_id]
        total = np.zeros(self.n_realizations)
        for pid in solution.active_poas():
            poa = self.scenario.poa_by_id(pid)
            if poa.frequency != frequency:
                continue
            beams = [b for b in solution.beams_of(pid) if b.active]
            p_lin = _lin(solution.tx_power.get(pid, -math.inf)) / len(beams)
            for b in beams:
                total += p_lin * self.beam_gains(b)[:, t_idx]
        return total

    def metrics(self, solution: SolutionState) -> MetricsBundle:
        """Averaged rates and SAR over all realizations, plus feasibility."""
        scenario = self.scenario
        per_user_rate = {}
        violated = []
        for u in scenario.users:
            r = float(self.rate(u.id, solution).mean())
            per_user_rate[u.id] = r
            if r < u.required_rate:
                violated.append(f"rate:{u.id}")

        active_freqs = sorted({
            scenario.poa_by_id(pid).frequency for pid in solution.active_poas()
        })
        per_human_sar = {}
        per_human_density = {}
        for h in scenario.humans:
            phantom = scenario.phantoms[h.phantom_id]
            density_by_freq = {}
            sar_r = np.zeros(self.n_realizations)
            for f in active_freqs:
                p_rx = self.human_received_power(h.id, solution, f)
                s = p_rx * 4.0 * math.pi * f ** 2 / ch.SPEED_OF_LIGHT ** 2
                density_by_freq[f] = float(s.mean())
                e_inc = np.sqrt(s * FREE_SPACE_IMPEDANCE)
                ref_f = scenario.frequency_map.reference(f)
                sar_r += ((e_inc / phantom.e_ref) ** 2
                          * (phantom.bmi / phantom.bmi_ref) * phantom.sar_ref[ref_f])
            sar = float(sar_r.mean())
            per_human_sar[h.id] = sar
            per_human_density[h.id] = density_by_freq
            if sar > scenario.sar_limit:
                violated.append(f"sar:{h.id}")

        per_poa_power = {}
        active = set(solution.active_poas())
        for p in scenario.poas:
            per_poa_power[p.id] = (solution.tx_power.get(p.id, -math.inf)
                                   if p.id in active else -math.inf)
        return MetricsBundle(
            per_user_rate=per_user_rate,
            per_human_sar=per_human_sar,
            per_human_power_density=per_human_density,
            per_poa_power=per_poa_power,
            total_power=solution.total_power_watts(),
            feasible=not violated,
            violated=violated,
        )

    def dump_links(self, solution: SolutionState) -> list:
        """Per-(realization, beam, target) unit-power energies for inspection.

        Together with the solved powers this is enough to recompute every
        SINR, rate, and received power by hand.
        """
        rows = []
        for b in self._active_beams(solution):
            poa = self.scenario.poa_by_id(b.owner_poa)
            gains = self.beam_gains(b)
            for r in range(self.n_realizations):
                for t_idx, t in enumerate(self.targets):
                    link = self._stacks[poa.id]["links"][r][t_idx]
                    rows.append({
                        "realization": r,
                        "beam_id": b.beam_id,
                        "poa_id": poa.id,
                        "frequency_hz": poa.frequency,
                        "bandwidth_hz": poa.bandwidth,
                        "target_id": t.id,
                        "target_kind": "user" if t_idx < len(self.scenario.users) else "human",
                        "unit_energy_w": float(gains[r, t_idx]),
                        "los": bool(link.los),
                        "pathloss_db": link.pathloss_db,
                        "shadow_db": link.shadow_db,
                    })
        return rows


def evaluate(solution: SolutionState, scenario: Scenario, seed: int,
             n_realizations: int = 10, workers: int = 1) -> MetricsBundle:
    """Validate, then evaluate a solution over seeded channel realizations.

    Deterministic given (solution, scenario, seed, n_realizations)
    regardless of worker count.
    """
    violations = validate(solution, scenario)
    if violations:
        if any(v.code == "unserved_user" for v in violations):
            raise UnservedUserError(
                "; ".join(str(v) for v in violations if v.code == "unserved_user"))
        raise SolutionInvalidError(violations)
    ev = Evaluator(scenario, seed, n_realizations, workers=workers)
    return ev.metrics(solution)
