"""Step planners: the heuristic linear-step (LS) planner with a Raibert-type
velocity regulator, the dead-beat LIP baseline, and the gap-avoidance shift.

Both planners emit a StepPlan whose target decomposes exactly as

    target.x = stance_foot.x + heuristic.x + raibert_offset.x
    target.y = torso.y + side*w_nom + heuristic.y + raibert_offset.y

so feed-forward, feedback and terrain terms stay auditable per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    FEEDBACK_AVERAGE,
    FEEDBACK_PREDICTIVE,
    BipedParams,
    GaitCommand,
    HybridState,
    PlannerId,
    StepPlan,
    SwingSide,
    Terrain,
    TerrainKind,
)


class DegenerateStepDuration(ValueError):
    """omega * T too small for the dead-beat placement formula."""


class InfeasibleStep(RuntimeError):
    """No solid landing point with the required clearance within the search window."""


@dataclass(frozen=True)
class PlannerInput:
    state: HybridState
    command: GaitCommand
    step_avg_vel: tuple[float, float]   # [m/s] average torso velocity of the completed step
    terrain: Terrain = Terrain.flat()


def plan_x_step(vx: float, td: float, l_max: float) -> float:
    """Step length vx*td, saturated at +-l_max."""
    raw = vx * td
    if raw >= l_max:
        return l_max
    if raw <= -l_max:
        return -l_max
    return raw


def plan_y_step(vy: float, td: float, swing_side: SwingSide, w_min: float) -> float:
    """Lateral offset vy*td when the command matches the swing side, else a
    w_min retreat opposing the command (sign(0) = 0, unreachable there)."""
    if (vy >= 0 and swing_side is SwingSide.LEFT) or (vy <= 0 and swing_side is SwingSide.RIGHT):
        return vy * td
    return -math.copysign(w_min, vy)


def raibert_offset(v_a, v_d, v_prev, kp, kd) -> tuple[float, float]:
    """Foot-strike offset Kp*(v_a - v_d) + Kd*(v_a - v_prev), per axis."""
    return (
        kp[0] * (v_a[0] - v_d[0]) + kd[0] * (v_a[0] - v_prev[0]),
        kp[1] * (v_a[1] - v_d[1]) + kd[1] * (v_a[1] - v_prev[1]),
    )


def _heuristic_terms(inp: PlannerInput, params: BipedParams) -> tuple[float, float]:
    cmd = inp.command
    x_step = plan_x_step(cmd.vx, cmd.step_duration, params.l_max)
    y_step = plan_y_step(cmd.vy, cmd.step_duration, inp.state.swing_side, params.w_min)
    return x_step, y_step


def ls_feedback_velocity(inp: PlannerInput, params: BipedParams) -> tuple[float, float]:
    """The per-step velocity fed to the Raibert regulator as v_k^a.

    "average" convention: the measured average of the completed step.
    "predictive" convention: the LIP-predicted average of the step being
    planned, solved consistently with the offset it induces. With
    vhat = avg velocity of the upcoming stance after placing the foot at
    (nominal + Delta), Delta = Kp (vhat - v_d) + Kd (vhat - v_prev) is linear
    in Delta and solved in closed form per axis.
    """
    if params.raibert_feedback == FEEDBACK_AVERAGE:
        return (float(inp.step_avg_vel[0]), float(inp.step_avg_vel[1]))

    st, cmd = inp.state, inp.command
    T = cmd.step_duration
    w = params.omega
    C, S = math.cosh(w * T), math.sinh(w * T)
    a = (C - 1) / T
    x_step, y_step = _heuristic_terms(inp, params)
    r = st.offset
    v = st.torso.velocity
    m = st.prev_step_avg_vel
    v_d = (cmd.vx, cmd.vy)
    # upcoming stance-relative offsets at nominal (offset-free) placement
    r_nom = (r[0] - x_step, -(st.swing_side.sign * params.w_nom + y_step))
    out = []
    for i in range(2):
        kp, kd = params.kp_raibert[i], params.kd_raibert[i]
        k_sum = kp + kd
        vhat0 = ((C - 1) * r_nom[i] + (S / w) * float(v[i])) / T
        delta = (k_sum * vhat0 - kp * v_d[i] - kd * m[i]) / (1 + k_sum * a)
        out.append(float(vhat0 - a * delta))
    return (out[0], out[1])


def plan_step_ls(inp: PlannerInput, params: BipedParams) -> StepPlan:
    """Heuristic planner: clamped feed-forward step plus the Raibert offset.

    Forward target is stance-foot-relative, lateral target is torso-relative
    with the side-signed nominal width added, so zero lateral command yields
    a nominal-width gait.
    """
    st, cmd = inp.state, inp.command
    x_step, y_step = _heuristic_terms(inp, params)
    v_a = ls_feedback_velocity(inp, params)
    delta = raibert_offset(
        v_a, (cmd.vx, cmd.vy), st.prev_step_avg_vel, params.kp_raibert, params.kd_raibert
    )
    # composed strictly as base + heuristic + offset so the decomposition
    # reconstructs bit-exactly
    base_y = st.torso.y + st.swing_side.sign * params.w_nom
    target = (
        float(st.stance_foot[0] + x_step + delta[0]),
        float(base_y + y_step + delta[1]),
    )
    return StepPlan(
        target=target,
        heuristic=(x_step, y_step),
        raibert_offset=delta,
        gap_shift=0.0,
        planner_id=PlannerId.LS,
    )


def plan_step_lipm(inp: PlannerInput, params: BipedParams) -> StepPlan:
    """Dead-beat LIP placement.

    Forward: choose the next stance-relative CoM offset r' so that the
    velocity at the end of the upcoming stance equals the command exactly on
    ideal dynamics, r' = (v_d - v_td cosh(wT)) / (w sinh(wT)), with v_td the
    touchdown-propagated velocity. Lateral: same law driven toward the
    +-w_nom sway orbit (end-of-stance target v_y_d - side*w*w_nom*tanh(wT/2)).
    The forward target is saturated to |target.x - stance_foot.x| <= l_max.
    """
    st, cmd = inp.state, inp.command
    T = cmd.step_duration
    w = params.omega
    if w * T < 1e-6:
        raise DegenerateStepDuration(f"omega*T = {w * T:.2e} too small")
    C, S = math.cosh(w * T), math.sinh(w * T)

    remaining = max(0.0, T - st.phase_time)
    Cr, Sr = math.cosh(w * remaining), math.sinh(w * remaining)
    r = st.offset
    v = st.torso.velocity
    r_td = r * Cr + (v / w) * Sr          # stance-relative CoM at upcoming touchdown
    v_td = r * w * Sr + v * Cr
    com_td = np.asarray(st.stance_foot) + r_td

    side = st.swing_side.sign
    rpx = (cmd.vx - v_td[0] * C) / (w * S)
    dx = float(np.clip(com_td[0] - rpx - st.stance_foot[0], -params.l_max, params.l_max))

    vy_orbit = w * params.w_nom * (C - 1) / S    # = w*w_nom*tanh(wT/2)
    rpy = (cmd.vy - side * vy_orbit - v_td[1] * C) / (w * S)
    # composed through the decomposition so it reconstructs bit-exactly
    base_y = st.torso.y + side * params.w_nom
    dy = float(com_td[1] - rpy) - base_y

    return StepPlan(
        target=(float(st.stance_foot[0] + dx), float(base_y + dy)),
        heuristic=(dx, dy),
        raibert_offset=(0.0, 0.0),
        gap_shift=0.0,
        planner_id=PlannerId.LIPM,
    )


def plan_step(inp: PlannerInput, params: BipedParams, planner_id: PlannerId) -> StepPlan:
    if planner_id is PlannerId.LS:
        return plan_step_ls(inp, params)
    return plan_step_lipm(inp, params)


def _clearance_ok(terrain: Terrain, x: float, margin: float) -> bool:
    """Solid ground everywhere in [x - margin, x + margin]."""
    if terrain.kind is not TerrainKind.GAPPED:
        return True
    return not any(a - margin < x < b + margin for a, b in terrain.gaps)


def adjust_for_gap(plan: StepPlan, terrain: Terrain, margin: float = 0.02,
                   window: float = 0.30) -> StepPlan:
    """Shift the forward target to the nearest cleared solid point.

    Returns the plan unchanged when the target already has margin clearance.
    Candidate landing points are the gap edges offset by the margin; ties
    break forward (+x). Raises InfeasibleStep when no candidate within
    +-window clears every gap.
    """
    if terrain.kind is TerrainKind.ROUGH:
        raise ValueError("gap adjustment is defined for flat or gapped terrain")
    if margin < 0 or window <= 0:
        raise ValueError("need margin >= 0 and window > 0")
    x = plan.target[0]
    if _clearance_ok(terrain, x, margin):
        return plan

    candidates = []
    for a, b in terrain.gaps:
        for c in (a - margin, b + margin):
            if abs(c - x) <= window and _clearance_ok(terrain, c, margin):
                candidates.append(c)
    if not candidates:
        raise InfeasibleStep(
            f"no solid landing within +-{window} m of x = {x:.3f} m at margin {margin} m"
        )
    best = min(candidates, key=lambda c: (abs(c - x), -c))
    return replace(plan, target=(best, plan.target[1]), gap_shift=best - x)
