"""Hybrid 3D-LIP walking simulator.

Continuous stance dynamics are integrated in closed form (cosh/sinh
propagation per axis), touchdowns are instantaneous resets at the
planner-commanded target, pushes are velocity jumps injected by splitting
the stance flow at their exact times. Everything is deterministic for a
fixed config and seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    BipedParams,
    EpisodeLog,
    EpisodeStatus,
    GaitCommand,
    HybridState,
    PlannerId,
    StepPlan,
    StepRecord,
    SwingSide,
    Terrain,
    TerrainKind,
    TorsoState,
)
from .planners import (
    InfeasibleStep,
    PlannerInput,
    adjust_for_gap,
    ls_feedback_velocity,
    plan_step,
)


class ConfigInvalid(ValueError):
    pass


class NoFixedPoint(RuntimeError):
    """Gait fixed-point search failed to converge."""


@dataclass(frozen=True)
class StanceFlowResult:
    r_end: tuple[float, float]          # [m] stance-relative CoM offset
    v_end: tuple[float, float]          # [m/s]
    displacement: tuple[float, float]   # [m] CoM travel over the interval
    positive_work: float                # [J]


def _flow(r, v, dt, w):
    """Closed-form LIP propagation per axis."""
    C, S = math.cosh(w * dt), math.sinh(w * dt)
    return r * C + (v / w) * S, r * w * S + v * C


def _rv_sign_change(r, v, w):
    """Time t* > 0 where r.v = 0 along the flow, or None.

    r(t).v(t) = A cosh(2wt) + B sinh(2wt) with A = r.v(0) and
    B = (w|r|^2 + |v|^2/w)/2 >= |A|, so there is at most one positive root,
    t* = atanh(-A/B)/(2w), existing only when A < 0 strictly inside the cone.
    """
    A = float(np.dot(r, v))
    B = 0.5 * (w * float(np.dot(r, r)) + float(np.dot(v, v)) / w)
    if A >= 0 or B <= 0:
        return None
    x = -A / B
    if x >= 1.0:
        return None
    return math.atanh(x) / (2 * w)


def stance_flow(r0, v0, dt: float, params: BipedParams, omega: float | None = None) -> StanceFlowResult:
    """Propagate the stance dynamics for dt seconds.

    positive_work is the positive part of the leg power m w^2 (r . v),
    i.e. the total rise of horizontal kinetic energy, evaluated in closed
    form on the (at most two) intervals delimited by the r.v sign change.
    """
    if dt < 0:
        raise ValueError("dt must be non-negative")
    w = params.omega if omega is None else omega
    r0 = np.asarray(r0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    re, ve = _flow(r0, v0, dt, w)

    def ke(v):
        return 0.5 * params.mass * float(np.dot(v, v))

    A = float(np.dot(r0, v0))
    if A >= 0:
        work = ke(ve) - ke(v0)
    else:
        ts = _rv_sign_change(r0, v0, w)
        if ts is None or ts >= dt:
            work = 0.0
        else:
            _, vm = _flow(r0, v0, ts, w)
            work = ke(ve) - ke(vm)
    return StanceFlowResult(
        r_end=(float(re[0]), float(re[1])),
        v_end=(float(ve[0]), float(ve[1])),
        displacement=(float(re[0] - r0[0]), float(re[1] - r0[1])),
        positive_work=max(0.0, work),
    )


def _max_offset(r, v, dt, w):
    """max |r(t)| over [0, dt]; the interior extremum sits at the r.v root."""
    cand = [float(np.hypot(*r))]
    ts = _rv_sign_change(r, v, w)
    if ts is not None and ts < dt:
        rm, _ = _flow(np.asarray(r), np.asarray(v), ts, w)
        cand.append(float(np.hypot(*rm)))
    re, _ = _flow(np.asarray(r), np.asarray(v), dt, w)
    cand.append(float(np.hypot(*re)))
    return max(cand)


def apply_push(state: HybridState, impulse: float, direction, params: BipedParams) -> HybridState:
    """Instantaneous velocity jump (impulse / mass) along a unit direction."""
    if impulse < 0:
        raise ValueError("impulse must be non-negative")
    d = np.asarray(direction, dtype=float)
    if abs(float(np.hypot(*d)) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    dv = impulse / params.mass * d
    torso = replace(state.torso, vx=state.torso.vx + dv[0], vy=state.torso.vy + dv[1])
    return replace(state, torso=torso)


def detect_fall(state: HybridState, params: BipedParams, v_cmd_max: float = 0.0) -> bool:
    """Kinematic fall test at one instant: CoM beyond reach of the stance
    foot, or (when a nonzero command scale is known) a runaway velocity."""
    if float(np.hypot(*state.offset)) > params.reach_max:
        return True
    if v_cmd_max > 0 and float(np.hypot(state.torso.vx, state.torso.vy)) > 10 * v_cmd_max:
        return True
    return False


@dataclass(frozen=True)
class SimConfig:
    params: BipedParams = field(default_factory=BipedParams)
    planner_id: PlannerId = PlannerId.LS
    terrain: Terrain = Terrain.flat()
    schedule: tuple[tuple[float, GaitCommand], ...] = ((0.0, GaitCommand(vx=0.0)),)
    pushes: tuple[tuple[float, float, tuple[float, float]], ...] = ()   # (t, impulse, direction)
    n_steps: int | None = None
    duration: float | None = None        # [s] alternative budget
    foot_noise_sigma: float = 0.0        # [m] touchdown execution noise per axis
    vel_noise_sigma: float = 0.0         # [m/s] touchdown velocity noise per axis
    rng_seed: int = 0
    integrator_dt: float = 1e-4          # [s] oracle integration step (tests only)
    gap_margin: float = 0.02             # [m]
    gap_window: float | None = None      # [m] defaults to l_max

    def __post_init__(self):
        if not self.schedule:
            raise ConfigInvalid("command schedule must be non-empty")
        times = [t for t, _ in self.schedule]
        if times != sorted(times):
            raise ConfigInvalid("command schedule must be sorted by start time")
        if times[0] != 0.0:
            raise ConfigInvalid("command schedule must start at t = 0")
        for _, cmd in self.schedule:
            if not (self.params.td_min <= cmd.step_duration <= self.params.td_max):
                raise ConfigInvalid(
                    f"step_duration {cmd.step_duration} outside "
                    f"[{self.params.td_min}, {self.params.td_max}]"
                )
        push_times = [t for t, _, _ in self.pushes]
        if push_times != sorted(push_times):
            raise ConfigInvalid("pushes must be sorted by time")
        for _, imp, d in self.pushes:
            if imp < 0:
                raise ConfigInvalid("push impulse must be non-negative")
            if abs(math.hypot(*d) - 1.0) > 1e-9:
                raise ConfigInvalid("push direction must be a unit vector")
        if self.n_steps is None and self.duration is None:
            raise ConfigInvalid("need a step budget or a duration")
        if self.n_steps is not None and self.n_steps < 1:
            raise ConfigInvalid("n_steps must be >= 1")
        if self.foot_noise_sigma < 0 or self.vel_noise_sigma < 0:
            raise ConfigInvalid("noise sigmas must be non-negative")

    @property
    def v_cmd_max(self) -> float:
        return max(math.hypot(c.vx, c.vy) for _, c in self.schedule)


def step_transition(state: HybridState, plan: StepPlan, fed_back_vel,
                    foot_noise_sigma: float = 0.0, rng=None) -> HybridState:
    """Instantaneous touchdown reset: the swing foot becomes the stance foot
    at the planned target (plus optional execution noise), the torso state is
    continuous, the swing side flips, and the fed-back step velocity is
    stored for the next regulator evaluation."""
    target = np.asarray(plan.target, dtype=float)
    if foot_noise_sigma > 0:
        target = target + rng.normal(0.0, foot_noise_sigma, 2)
    return HybridState(
        torso=state.torso,
        stance_foot=(float(target[0]), float(target[1])),
        swing_side=state.swing_side.other,
        phase_time=0.0,
        step_index=state.step_index + 1,
        prev_step_avg_vel=(float(fed_back_vel[0]), float(fed_back_vel[1])),
    )


def _initial_state(params: BipedParams) -> HybridState:
    # at rest over the right foot, left foot swinging first
    return HybridState(
        torso=TorsoState(0.0, 0.0, 0.0, 0.0),
        stance_foot=(0.0, -params.w_nom),
        swing_side=SwingSide.LEFT,
    )


def _command_at(schedule, t: float) -> GaitCommand:
    cmd = schedule[0][1]
    for t_start, c in schedule:
        if t_start <= t + 1e-12:
            cmd = c
        else:
            break
    return cmd


def simulate_episode(config: SimConfig) -> EpisodeLog:
    """Run the closed-loop gait until the budget, a fall, or an infeasible
    step. One record per touchdown event; bitwise deterministic per config."""
    params = config.params
    rng = np.random.default_rng(config.rng_seed)
    state = _initial_state(params)
    terrain = config.terrain
    rough = terrain.kind is TerrainKind.ROUGH
    gapped = terrain.kind is TerrainKind.GAPPED
    gap_window = config.gap_window if config.gap_window is not None else params.l_max
    v_cmd_max = config.v_cmd_max
    records: list[StepRecord] = []
    status = EpisodeStatus.COMPLETED
    fail_step = None
    t = 0.0
    k = 0
    push_idx = 0

    while True:
        if config.n_steps is not None and k >= config.n_steps:
            break
        cmd = _command_at(config.schedule, t)
        T = cmd.step_duration
        if config.duration is not None and t + T > config.duration + 1e-9:
            break

        w_k = params.omega
        if rough:
            h_k = rng.uniform(-terrain.h_max, terrain.h_max)
            w_k = math.sqrt(params.g / (params.z0 - h_k))

        # split the stance at scheduled push times
        cut_times = []
        j = push_idx
        while j < len(config.pushes) and config.pushes[j][0] < t + T - 1e-12:
            if config.pushes[j][0] >= t - 1e-12:
                cut_times.append(config.pushes[j])
            j += 1

        r = state.offset
        v = state.torso.velocity
        seg_start = 0.0
        work = 0.0
        disp = np.zeros(2)
        fell = False
        for push in (*cut_times, None):
            seg_end = T if push is None else push[0] - t
            dt_seg = seg_end - seg_start
            if _max_offset(r, v, dt_seg, w_k) > params.reach_max:
                fell = True
            res = stance_flow(r, v, dt_seg, params, omega=w_k)
            work += res.positive_work
            disp += np.asarray(res.displacement)
            r = np.asarray(res.r_end)
            v = np.asarray(res.v_end)
            if push is not None:
                _, imp, d = push
                v = v + imp / params.mass * np.asarray(d)
                push_idx = j
            if v_cmd_max > 0 and float(np.hypot(*v)) > 10 * v_cmd_max:
                fell = True
            seg_start = seg_end

        t_td = t + T
        v_avg = disp / T
        com = np.asarray(state.stance_foot) + r
        td_state = HybridState(
            torso=TorsoState(float(com[0]), float(com[1]), float(v[0]), float(v[1])),
            stance_foot=state.stance_foot,
            swing_side=state.swing_side,
            phase_time=T,
            step_index=state.step_index,
            prev_step_avg_vel=state.prev_step_avg_vel,
        )

        if fell:
            plan = StepPlan(
                target=state.stance_foot,
                heuristic=(0.0, 0.0),
                raibert_offset=(0.0, 0.0),
                planner_id=config.planner_id,
            )
            records.append(StepRecord(
                step_index=k, t_touchdown=t_td, v_desired=(cmd.vx, cmd.vy),
                v_step_avg=(float(v_avg[0]), float(v_avg[1])), plan=plan,
                executed_foot=state.stance_foot, positive_work=work, fell=True,
            ))
            status, fail_step = EpisodeStatus.FELL, k
            break

        inp = PlannerInput(
            state=td_state, command=cmd,
            step_avg_vel=(float(v_avg[0]), float(v_avg[1])), terrain=terrain,
        )
        plan = plan_step(inp, params, config.planner_id)
        if gapped:
            try:
                plan = adjust_for_gap(plan, terrain, config.gap_margin, gap_window)
            except InfeasibleStep:
                records.append(StepRecord(
                    step_index=k, t_touchdown=t_td, v_desired=(cmd.vx, cmd.vy),
                    v_step_avg=(float(v_avg[0]), float(v_avg[1])), plan=plan,
                    executed_foot=state.stance_foot, positive_work=work, fell=False,
                ))
                status, fail_step = EpisodeStatus.INFEASIBLE, k
                break

        if config.planner_id is PlannerId.LS:
            fed_back = ls_feedback_velocity(inp, params)
        else:
            fed_back = (float(v_avg[0]), float(v_avg[1]))

        state = step_transition(td_state, plan, fed_back, config.foot_noise_sigma, rng)
        if config.vel_noise_sigma > 0:
            noise = rng.normal(0.0, config.vel_noise_sigma, 2)
            state = replace(state, torso=replace(
                state.torso, vx=state.torso.vx + noise[0], vy=state.torso.vy + noise[1]))
        if rough:
            bound = terrain.h_max * params.omega
            noise = rng.uniform(-bound, bound, 2)
            state = replace(state, torso=replace(
                state.torso, vx=state.torso.vx + noise[0], vy=state.torso.vy + noise[1]))

        records.append(StepRecord(
            step_index=k, t_touchdown=t_td, v_desired=(cmd.vx, cmd.vy),
            v_step_avg=(float(v_avg[0]), float(v_avg[1])), plan=plan,
            executed_foot=state.stance_foot, positive_work=work, fell=False,
        ))
        t = t_td
        k += 1

    return EpisodeLog(records=tuple(records), status=status, fail_step=fail_step)


@dataclass(frozen=True)
class StepMapAnalysis:
    """Linearization of the touchdown-to-touchdown map at the gait orbit.

    Per-axis state is (r, v, m) sampled at the touchdown instant before the
    reset: stance-relative CoM offset, CoM velocity, and the fed-back step
    velocity memory entering the Kd term.
    """

    jacobian_x: np.ndarray          # 3x3
    jacobian_y: np.ndarray          # 3x3
    spectral_radius_x: float
    spectral_radius_y: float
    fixed_point: np.ndarray         # (rx, vx, mx, ry, vy, my)

    @property
    def spectral_radius(self) -> float:
        return max(self.spectral_radius_x, self.spectral_radius_y)


def _one_step_section(z, side: SwingSide, planner_id: PlannerId, cmd: GaitCommand,
                      params: BipedParams):
    """One touchdown-to-touchdown map on the pre-reset section, driven by the
    actual planner + transition + flow machinery."""
    rx, vx, mx, ry, vy, my = (float(c) for c in z)
    T = cmd.step_duration
    w = params.omega
    C, S = math.cosh(w * T), math.sinh(w * T)
    state = HybridState(
        torso=TorsoState(rx, ry, vx, vy),
        stance_foot=(0.0, 0.0),
        swing_side=side,
        phase_time=T,
        prev_step_avg_vel=(mx, my),
    )
    # completed-step average, reconstructed by backward flow from the section
    avg = tuple(((1 - C) * r + (S / w) * v) / T for r, v in ((rx, vx), (ry, vy)))
    inp = PlannerInput(state=state, command=cmd, step_avg_vel=avg)
    plan = plan_step(inp, params, planner_id)
    if planner_id is PlannerId.LS:
        fed = ls_feedback_velocity(inp, params)
    else:
        fed = avg
    nxt = step_transition(state, plan, fed)
    res = stance_flow(nxt.offset, nxt.torso.velocity, T, params)
    return np.array([res.r_end[0], res.v_end[0], fed[0],
                     res.r_end[1], res.v_end[1], fed[1]])


def linearized_step_map(planner_id: PlannerId, v_d: float, params: BipedParams,
                        td: float, max_iter: int = 200, tol: float = 1e-10) -> StepMapAnalysis:
    """Locate the closed-loop gait orbit and linearize the step-to-step map.

    The orbit is a fixed point of the two-step (left+right) map, found by
    Newton iteration with finite-difference Jacobians; the returned Jacobians
    are central differences (h = 1e-6) of the one-step map, which decouples
    per axis on flat ground. Raises NoFixedPoint on non-convergence.
    """
    if not (params.td_min <= td <= params.td_max):
        raise ValueError(f"td {td} outside [{params.td_min}, {params.td_max}]")
    cmd = GaitCommand(vx=v_d, vy=0.0, step_duration=td)
    w = params.omega
    C, S = math.cosh(w * td), math.sinh(w * td)

    def two_step(z):
        z1 = _one_step_section(z, SwingSide.LEFT, planner_id, cmd, params)
        return _one_step_section(z1, SwingSide.RIGHT, planner_id, cmd, params)

    vy_orbit = w * params.w_nom * (C - 1) / S
    z = np.array([v_d * td / 2, v_d * td * w * S / (2 * (C - 1)), v_d,
                  params.w_nom, vy_orbit, 0.0])
    h = 1e-6
    converged = False
    for _ in range(max_iter):
        g = two_step(z) - z
        if float(np.max(np.abs(g))) < tol:
            converged = True
            break
        Jg = np.empty((6, 6))
        for i in range(6):
            e = np.zeros(6)
            e[i] = h
            Jg[:, i] = (two_step(z + e) - two_step(z - e)) / (2 * h) - np.eye(6)[:, i]
        try:
            dz = np.linalg.solve(Jg, -g)
        except np.linalg.LinAlgError as err:
            raise NoFixedPoint(f"singular step-map Jacobian: {err}") from err
        z = z + dz
        if not np.all(np.isfinite(z)):
            raise NoFixedPoint("fixed-point iteration diverged")
    if not converged:
        raise NoFixedPoint(f"no gait fixed point within {max_iter} iterations at tol {tol}")

    J = np.empty((6, 6))
    for i in range(6):
        e = np.zeros(6)
        e[i] = h
        J[:, i] = (_one_step_section(z + e, SwingSide.LEFT, planner_id, cmd, params)
                   - _one_step_section(z - e, SwingSide.LEFT, planner_id, cmd, params)) / (2 * h)
    Jx = J[np.ix_([0, 1, 2], [0, 1, 2])]
    Jy = J[np.ix_([3, 4, 5], [3, 4, 5])]
    return StepMapAnalysis(
        jacobian_x=Jx,
        jacobian_y=Jy,
        spectral_radius_x=float(max(abs(np.linalg.eigvals(Jx)))),
        spectral_radius_y=float(max(abs(np.linalg.eigvals(Jy)))),
        fixed_point=z,
    )
