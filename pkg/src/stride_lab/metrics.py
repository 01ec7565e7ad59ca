"""Evaluation metrics over episode logs: velocity-tracking error, step
placement error, mechanical cost of transport, push-recovery grids, and
rough-terrain success sweeps. All pure functions of their inputs; the grid
and sweep drivers derive per-sample seeds so results are order-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import BipedParams, EpisodeLog, EpisodeStatus, GaitCommand
from .sim import SimConfig, simulate_episode


class EmptyWindow(ValueError):
    pass


class EmptyLog(ValueError):
    pass


class ZeroDistance(ValueError):
    pass


@dataclass(frozen=True)
class TrackingStats:
    mae: float      # [m/s] mean absolute step-average velocity error
    std: float      # [m/s] population std of the signed error
    n_steps: int


@dataclass(frozen=True)
class PushSample:
    impulse: float     # [N s]
    angle: float       # [rad]
    recovered: bool


@dataclass(frozen=True)
class PushGrid:
    samples: tuple[PushSample, ...]
    success_rate: float


@dataclass(frozen=True)
class CotReport:
    mechanical_cot: float   # [J/(kg m)]
    distance: float         # [m] net forward travel
    positive_work: float    # [J]


_AXES = {"x": 0, "y": 1, 0: 0, 1: 1}


def velocity_tracking_stats(log: EpisodeLog, axis="x", window=None) -> TrackingStats:
    """Step-average velocity error statistics over a [lo, hi) step window
    (whole log when None)."""
    i = _AXES[axis]
    lo, hi = (0, math.inf) if window is None else window
    errs = [rec.v_step_avg[i] - rec.v_desired[i]
            for rec in log.records if lo <= rec.step_index < hi and not rec.fell]
    if not errs:
        raise EmptyWindow("no steps in the requested window")
    errs = np.asarray(errs)
    return TrackingStats(
        mae=float(np.mean(np.abs(errs))),
        std=float(np.std(errs)),
        n_steps=len(errs),
    )


def step_location_mae(log: EpisodeLog) -> float:
    """Mean Euclidean distance between planned and executed footfalls.
    Terminal records without an executed touchdown are skipped."""
    dists = [math.hypot(rec.executed_foot[0] - rec.plan.target[0],
                        rec.executed_foot[1] - rec.plan.target[1])
             for rec in log.records if not rec.fell]
    if not dists:
        raise EmptyLog("no executed steps in the log")
    return float(np.mean(dists))


def cost_of_transport(log: EpisodeLog, params: BipedParams) -> CotReport:
    """Mechanical cost of transport: stance positive work per unit weight and
    net forward distance (step-average velocity times step duration summed)."""
    if not log.records:
        raise EmptyLog("empty episode log")
    distance = 0.0
    t_prev = 0.0
    work = 0.0
    for rec in log.records:
        dt = rec.t_touchdown - t_prev
        distance += rec.v_step_avg[0] * dt
        work += rec.positive_work
        t_prev = rec.t_touchdown
    if distance < 1e-6:
        raise ZeroDistance(f"net forward distance {distance:.2e} m too small")
    return CotReport(
        mechanical_cot=work / (params.mass * params.g * distance),
        distance=distance,
        positive_work=work,
    )


def push_recovery_grid(base_config: SimConfig, i_max: float, n_samples: int = 500,
                       push_step: int = 10, recovery_time: float = 3.0) -> PushGrid:
    """Deterministic push grid at zero commanded velocity.

    Impulses on an n_imp-level grid (i_max/n_imp .. i_max, never 0) crossed
    with 25 angles over [0, 2pi); 20 x 25 = 500 samples at the default count.
    Each sample pushes the settled gait mid-stance of `push_step` and counts
    recovery as no fall within `recovery_time` after the push.
    """
    if i_max <= 0:
        raise ValueError("i_max must be positive")
    n_ang = 25
    n_imp, rem = divmod(n_samples, n_ang)
    if rem or n_imp < 1:
        raise ValueError(f"n_samples must be a positive multiple of {n_ang}")
    td = base_config.schedule[0][1].step_duration
    t_push = (push_step + 0.5) * td
    n_steps = push_step + 1 + math.ceil(recovery_time / td)
    samples = []
    hits = 0
    for ii in range(1, n_imp + 1):
        impulse = i_max * ii / n_imp
        for jj in range(n_ang):
            angle = 2 * math.pi * jj / n_ang
            cfg = replace(
                base_config,
                pushes=((t_push, impulse, (math.cos(angle), math.sin(angle))),),
                n_steps=n_steps,
                duration=None,
            )
            log = simulate_episode(cfg)
            ok = log.status is EpisodeStatus.COMPLETED
            hits += ok
            samples.append(PushSample(impulse=impulse, angle=angle, recovered=ok))
    return PushGrid(samples=tuple(samples), success_rate=hits / len(samples))


def terrain_success_rate(base_config: SimConfig, h_max_list, trials_per_level: int,
                         episode_time: float = 5.0):
    """Success fraction per rough-terrain height bound.

    Runs `trials_per_level` episodes of `episode_time` seconds at each h_max;
    trial seeds derive from the base seed so levels are seed-paired. Success
    is a Completed terminal status.
    """
    if trials_per_level < 1:
        raise ValueError("trials_per_level must be >= 1")
    from .core import Terrain

    td = base_config.schedule[0][1].step_duration
    n_steps = int(episode_time / td + 1e-9)
    out = []
    for h in h_max_list:
        succ = 0
        for trial in range(trials_per_level):
            seed = base_config.rng_seed * 1_000_003 + trial
            terrain = Terrain.flat() if h == 0 else Terrain.rough(h, seed=seed)
            cfg = replace(base_config, terrain=terrain, rng_seed=seed,
                          n_steps=n_steps, duration=None)
            succ += simulate_episode(cfg).status is EpisodeStatus.COMPLETED
        out.append((h, succ / trials_per_level))
    return out
