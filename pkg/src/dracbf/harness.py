"""Seeded episodes, batches, sweeps and result export."""

from __future__ import annotations

import csv
import dataclasses
import enum
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .filters import CBFQPFilter, DRACBFFilter
from ._validation import norm3
from .relkin import DegenerateRange, ObstacleEstimate, UavState
from .sim.mission import MissionContext, MissionState, Phase, goal_nominal, mission_update
from .sim.scenario import ConfigError, Scenario
from .sim.tracker import estimate_from_track, init_track
from .sim.tracker import predict as tracker_predict
from .sim.tracker import update as tracker_update
from .sim.world import LatencyBuffer, World, measure, step_world

log = logging.getLogger(__name__)

REACTION_THRESHOLD = 0.1   # m/s^2, deviation that counts as a detectable avoid action
CLEAR_RANGE = 5.0          # m, "encounter over" range for stop_when_clear episodes


class FilterChoice(str, enum.Enum):
    DR_ACBF = "dr-acbf"
    CBF_QP = "cbf-qp"
    ACBF_NO_CVAR = "no-cvar"


class IoFailure(OSError):
    pass


@dataclass
class RunMetrics:
    seed: int
    success: bool
    reason: str
    v_cl_at_trigger: float = math.nan
    t_r: float = math.nan
    t_cm: float = math.nan
    t_cp: float = math.nan
    t_cp_std: float = math.nan
    d_s: float = math.inf
    t_a: float = math.nan
    t_d: float = math.nan
    trigger_time: float = math.nan
    infeasibility_events: int = 0
    n_steps: int = 0


FIELDS = [f.name for f in dataclasses.fields(RunMetrics)]
TIMING_FIELDS = ("t_r", "t_cm", "t_cp", "t_cp_std")
SUMMARY_FIELDS = ("v_cl_at_trigger", "t_r", "t_cm", "t_cp", "d_s", "t_a", "t_d", "infeasibility_events")


@dataclass
class BatchSummary:
    n_runs: int
    success_rate: float
    means: dict
    stds: dict
    fingerprint: str
    seed_base: int
    filter: str
    runs: list = field(default_factory=list, repr=False)

    def to_dict(self, include_runs: bool = False) -> dict:
        out = {k: v for k, v in dataclasses.asdict(self).items() if k != "runs"}
        if include_runs:
            out["runs"] = [dataclasses.asdict(r) for r in self.runs]
        return _json_safe(out)


def _json_safe(x):
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def make_filter(scenario: Scenario, choice: FilterChoice, random_state: int = 0) -> DRACBFFilter:
    choice = FilterChoice(choice)
    lim = scenario.limits
    params = dict(a_max=lim.a_max, v_max=lim.v_max, j_max=lim.j_max, latency=lim.latency,
                  uav_radius=scenario.uav_radius, random_state=random_state)
    params.update(scenario.filter)
    params["trigger"] = "gaussian" if choice is FilterChoice.ACBF_NO_CVAR else params.get("trigger", "cvar")
    cls = CBFQPFilter if choice is FilterChoice.CBF_QP else DRACBFFilter
    try:
        return cls(**params).fit()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid filter settings: {exc}") from exc


def _episode_rngs(seed: int):
    ss = np.random.SeedSequence(int(seed))
    real, sense, filt = ss.spawn(3)
    return (np.random.default_rng(real), np.random.default_rng(sense),
            int(filt.generate_state(1)[0]))


def run_episode(scenario: Scenario, filter_choice: FilterChoice = FilterChoice.DR_ACBF, seed: int = 0,
                stop_when_clear: bool = False, trace: Optional[list] = None) -> RunMetrics:
    """Simulate one episode at the scenario's control rate and score it.

    The episode ends on collision (true centre distance below the radius
    sum), on reaching the goal, on timeout, or, with ``stop_when_clear``,
    once every obstacle is receding beyond a few metres. Wall-clock fields
    (``t_cm``, ``t_r``, ``t_cp``) time the avoidance pipeline only, not the
    simulator.
    """
    choice = FilterChoice(filter_choice)
    stop_when_clear = stop_when_clear or scenario.end_when_clear
    rng_real, rng_sense, filt_seed = _episode_rngs(seed)
    obstacles = scenario.realize(rng_real)
    flt = make_filter(scenario, choice, filt_seed)
    dt = scenario.dt
    lim, sensing, mcfg = scenario.limits, scenario.sensing, scenario.mission
    world = World.create(scenario.uav_start, obstacles, lim)
    buffer = LatencyBuffer(lim.latency, scenario.control_rate)
    goal = np.asarray(scenario.uav_goal, dtype=np.float64)
    r_sum = scenario.uav_radius + world.obs_radius
    n_obs = len(obstacles)

    tracks: dict[int, object] = {}
    first_seen: dict[int, int] = {}
    ms = MissionState()
    n_steps = int(round(scenario.timeout * scenario.control_rate))
    warmup_steps = int(round(sensing.smd_warmup * scenario.control_rate))

    t_cp: list[float] = []
    d_s = math.inf
    k_trigger = None
    k_react = None
    k_avoid_start = None
    k_hover_end = None
    out = dict(v_cl_at_trigger=math.nan, t_cm=math.nan)
    reason = "timeout"
    success = False

    for k in range(n_steps):
        uav = UavState(world.uav_pos, world.uav_vel)
        ranges = world.separations() if n_obs else np.zeros(0)
        z = measure(world, rng_sense, 0.0 if sensing.perfect else sensing.noise_std) if n_obs else None

        # simulator side: sensing and tracking, outside the timed pipeline
        visible = []
        for i in range(n_obs):
            if i not in first_seen:
                if ranges[i] > sensing.range:
                    continue
                first_seen[i] = k
            visible.append(i)
            if not sensing.perfect:
                if i not in tracks:
                    tracks[i] = init_track(z[i], sensing.process_noise, sensing.noise_std)
                else:
                    tracks[i] = tracker_update(tracker_predict(tracks[i], dt), z[i])

        # timed pipeline: acceleration estimation through projection
        t0 = time.perf_counter()
        estimates: list[ObstacleEstimate] = []
        for i in visible:
            if sensing.perfect:
                flt.observe_velocity(i, world.obs_vel[i], dt)
                est = ObstacleEstimate(world.obs_pos[i], world.obs_vel[i], acc_bound=flt.acc_bound(i),
                                       radius=world.obs_radius[i], obstacle_id=i)
            else:
                if k - first_seen[i] >= warmup_steps:
                    flt.observe_velocity(i, tracks[i].mean[3:], dt)
                est = estimate_from_track(tracks[i], world.uav_pos, i, world.obs_radius[i], flt.acc_bound(i))
            estimates.append(est)
        ctx = MissionContext(world.t, world.uav_pos, world.uav_vel, goal, lim.a_max, scenario.uav_radius,
                             {e.obstacle_id: e for e in estimates})
        try:
            kin, decision = flt.assess(uav, estimates, k)
            t1 = time.perf_counter()
            prev_phase = ms.phase
            ms, a_nom = mission_update(ms, decision, ctx, mcfg)
            if isinstance(flt, CBFQPFilter):
                goal_arg = goal if ms.phase in (Phase.CRUISE, Phase.RESUME) else None
                res = flt.safe_acceleration(uav, estimates, a_nom, decision, kin, goal=goal_arg)
            else:
                res = flt.safe_acceleration(uav, estimates, a_nom, decision, kin)
        except DegenerateRange:
            reason, d_s = "collision", 0.0
            break
        t2 = time.perf_counter()
        t_cp.append(t2 - t0)

        if decision.fired and k_trigger is None:
            k_trigger = k
            out["t_cm"] = (t2 - t1) * 1e3
            tid = decision.threat_id
            P = world.obs_pos[tid] - world.uav_pos
            V = world.obs_vel[tid] - world.uav_vel
            out["v_cl_at_trigger"] = max(0.0, -float(P @ V) / norm3(P))
        if ms.phase == Phase.AVOID and prev_phase != Phase.AVOID and k_avoid_start is None:
            k_avoid_start = k
        if prev_phase == Phase.HOVER and ms.phase != Phase.HOVER and k_hover_end is None:
            k_hover_end = k

        cruise_ref = goal_nominal(ctx, mcfg)
        applied = buffer.push(res.acceleration)
        step_world(world, applied, dt)
        if k_trigger is not None and k_react is None:
            if norm3(world.uav_acc - cruise_ref) > REACTION_THRESHOLD:
                k_react = k

        if trace is not None:
            trace.append(dict(step=k, t=round(world.t, 6), phase=ms.phase.value, fired=decision.fired,
                              worst_cvar=decision.worst_cvar, H=res.horizon,
                              px=world.uav_pos[0], py=world.uav_pos[1], pz=world.uav_pos[2],
                              vx=world.uav_vel[0], vy=world.uav_vel[1], vz=world.uav_vel[2],
                              ax=world.uav_acc[0], ay=world.uav_acc[1], az=world.uav_acc[2],
                              min_sep=float(world.separations().min()) if n_obs else math.inf))

        if n_obs:
            seps = world.separations()
            d_s = min(d_s, float(seps.min()))
            if np.any(seps < r_sum):
                reason = "collision"
                break
        if ms.phase in (Phase.CRUISE, Phase.RESUME) and norm3(goal - world.uav_pos) <= mcfg.goal_tol:
            reason, success = "goal", True
            break
        if stop_when_clear and n_obs:
            P = world.obs_pos - world.uav_pos
            V = world.obs_vel - world.uav_vel
            receding = np.einsum("ij,ij->i", P, V) > 0
            if np.all(receding & (world.separations() > CLEAR_RANGE)):
                reason, success = "clear", True
                break

    steps_run = len(t_cp)
    m = RunMetrics(seed=int(seed), success=success, reason=reason, d_s=d_s,
                   infeasibility_events=int(flt.n_infeasible_), n_steps=steps_run)
    if t_cp:
        m.t_cp = float(np.mean(t_cp)) * 1e3
        m.t_cp_std = float(np.std(t_cp)) * 1e3
    if k_trigger is not None:
        m.trigger_time = k_trigger * dt
        m.v_cl_at_trigger = out["v_cl_at_trigger"]
        m.t_cm = out["t_cm"]
        if k_react is not None:
            m.t_r = m.t_cm + (k_react - k_trigger) * dt * 1e3
        seen = [first_seen[i] for i in first_seen]
        if seen:
            m.t_d = (k_trigger - min(seen)) * dt * 1e3
    if k_avoid_start is not None and k_hover_end is not None:
        m.t_a = (k_hover_end - k_avoid_start) * dt * 1e3
    return m


def _run_one(args):
    scenario, choice, seed, stop_when_clear = args
    return run_episode(scenario, choice, seed, stop_when_clear=stop_when_clear)


def summarize(runs: Sequence[RunMetrics], fingerprint: str, seed_base: int, choice) -> BatchSummary:
    n = len(runs)
    succ = sum(1 for r in runs if r.success)
    means, stds = {}, {}
    for name in SUMMARY_FIELDS:
        vals = np.array([getattr(r, name) for r in runs], dtype=np.float64)
        vals = vals[np.isfinite(vals)]
        means[name] = float(vals.mean()) if vals.size else math.nan
        stds[name] = float(vals.std()) if vals.size else math.nan
    return BatchSummary(n, 100.0 * succ / n if n else math.nan, means, stds, fingerprint,
                        int(seed_base), FilterChoice(choice).value, list(runs))


def run_batch(scenario: Scenario, n_runs: int, seed_base: int = 0,
              filter_choice: FilterChoice = FilterChoice.DR_ACBF, workers: int = 1,
              stop_when_clear: bool = False) -> BatchSummary:
    """Episodes with seeds ``seed_base .. seed_base + n_runs - 1``, results in seed order."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    jobs = [(scenario, FilterChoice(filter_choice), seed_base + i, stop_when_clear) for i in range(n_runs)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_one, jobs))
    else:
        runs = [_run_one(j) for j in jobs]
    return summarize(runs, scenario.fingerprint(), seed_base, filter_choice)


SWEEP_PATHS = {"H_max": "filter.H_max", "d_cl": "mission.d_cl", "t_hd": "mission.t_hd"}


def sensitivity_sweep(base: Scenario, parameter: str, values: Iterable, n_runs: int, seed_base: int = 0,
                      filter_choice: FilterChoice = FilterChoice.DR_ACBF, workers: int = 1) -> list[tuple]:
    """One batch per parameter value with everything else held fixed.

    ``parameter`` is ``H_max``, ``d_cl``, ``t_hd`` or any dotted scenario path.
    Returns ``[(value, BatchSummary), ...]``.
    """
    values = list(values)
    if not values:
        raise ValueError("values must be non-empty")
    path = SWEEP_PATHS.get(parameter, parameter)
    rows = []
    for v in values:
        sc = base.with_overrides(**{path: v})
        rows.append((v, run_batch(sc, n_runs, seed_base, filter_choice, workers)))
    return rows


def sweep_table(base: Scenario, rows: list[tuple], parameter: str) -> list[dict]:
    """Rows with the key-parameter columns followed by the batch metrics."""
    table = []
    for value, s in rows:
        sc = base.with_overrides(**{SWEEP_PATHS.get(parameter, parameter): value})
        table.append({
            "H_max": sc.filter.get("H_max", 0.4), "d_cl": sc.mission.d_cl, "t_hd": sc.mission.t_hd,
            "s": s.success_rate, "v_cl": s.means["v_cl_at_trigger"], "t_r": s.means["t_r"],
            "t_cm": s.means["t_cm"], "t_cp": s.means["t_cp"], "d_s": s.means["d_s"],
            "n_runs": s.n_runs, "fingerprint": s.fingerprint,
        })
    return table


def ablate(scenario: Scenario, n_runs: int, seed_base: int = 0, workers: int = 1) -> dict:
    """DR-CVaR trigger against the single-time Gaussian fallback on identical seeds."""
    on = run_batch(scenario, n_runs, seed_base, FilterChoice.DR_ACBF, workers)
    off = run_batch(scenario, n_runs, seed_base, FilterChoice.ACBF_NO_CVAR, workers)
    return {"on": on, "off": off, "gap": on.success_rate - off.success_rate}


# -- export ------------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return "" if not math.isfinite(value) else repr(value)
    return str(value)


def _parse(name: str, text: str):
    typ = {f.name: f.type for f in dataclasses.fields(RunMetrics)}[name]
    if typ in ("bool", bool):
        return text == "1"
    if typ in ("int", int):
        return int(text)
    if typ in ("str", str):
        return text
    if text == "":
        return math.inf if name == "d_s" else math.nan
    return float(text)


def metric_columns(include_timing: bool = True) -> list[str]:
    return [f for f in FIELDS if include_timing or f not in TIMING_FIELDS]


def export(results, out_dir, fmt: str = "csv", stem: str = "episodes", include_timing: bool = True) -> list[Path]:
    """Write episode rows plus a summary JSON; returns the written paths.

    ``results`` is a BatchSummary or a sequence of RunMetrics. ``fmt`` is
    ``csv`` or ``jsonl``. Non-finite values are written as empty CSV cells
    or JSON ``null``.
    """
    if isinstance(results, BatchSummary):
        summary, runs = results, results.runs
    else:
        runs, summary = list(results), None
    if not runs:
        raise ValueError("results must be non-empty")
    cols = metric_columns(include_timing)
    out_dir = Path(out_dir)
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            path = out_dir / f"{stem}.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(cols)
                for r in runs:
                    w.writerow([_fmt(getattr(r, c)) for c in cols])
        elif fmt == "jsonl":
            path = out_dir / f"{stem}.jsonl"
            with path.open("w") as fh:
                for r in runs:
                    fh.write(json.dumps(_json_safe({c: getattr(r, c) for c in cols}), sort_keys=False) + "\n")
        else:
            raise ValueError(f"unknown format {fmt!r}")
        written.append(path)
        if summary is not None:
            spath = out_dir / f"{stem}_summary.json"
            data = summary.to_dict()
            if not include_timing:
                for key in ("means", "stds"):
                    data[key] = {k: v for k, v in data[key].items() if k not in TIMING_FIELDS}
            spath.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
            written.append(spath)
    except OSError as exc:
        raise IoFailure(f"export to {out_dir} failed: {exc}") from exc
    return written


def read_csv(path) -> list[RunMetrics]:
    """Parse an episode CSV written by :func:`export` (missing columns take defaults)."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        kwargs = {k: _parse(k, v) for k, v in row.items()}
        out.append(RunMetrics(**kwargs))
    return out


def read_jsonl(path) -> list[RunMetrics]:
    out = []
    for line in Path(path).read_text().splitlines():
        row = json.loads(line)
        for k, v in row.items():
            if v is None:
                row[k] = math.inf if k == "d_s" else math.nan
        out.append(RunMetrics(**row))
    return out
