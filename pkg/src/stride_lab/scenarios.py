"""Benchmark scenarios: TOML configuration, presets that hard-code the
evaluation protocols (step counts, speeds, sample counts), execution, and
CSV/SVG artifact emission.

steps.csv schema (one row per touchdown):
    step_index,t_touchdown_s,vx_cmd_mps,vy_cmd_mps,vx_avg_mps,vy_avg_mps,
    plan_x_m,plan_y_m,raibert_dx_m,raibert_dy_m,gap_shift_m,foot_x_m,
    foot_y_m,positive_work_j,fell
summary.csv schema: metric,value,units.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .core import (
    FEEDBACK_AVERAGE,
    FEEDBACK_PREDICTIVE,
    BipedParams,
    EpisodeLog,
    EpisodeStatus,
    GaitCommand,
    PlannerId,
    SwingSide,
    Terrain,
    TorsoState,
    HybridState,
    default_params,
)
from .metrics import (
    cost_of_transport,
    push_recovery_grid,
    step_location_mae,
    terrain_success_rate,
    velocity_tracking_stats,
)
from .planners import PlannerInput, plan_step
from .sim import SimConfig, simulate_episode
from .svg import Axes, SvgCanvas

SCENARIO_KINDS = (
    "track", "step-track", "cot", "push-grid", "rough", "gaps", "sweep-td", "plan-once",
)

STEPS_CSV_HEADER = (
    "step_index,t_touchdown_s,vx_cmd_mps,vy_cmd_mps,vx_avg_mps,vy_avg_mps,"
    "plan_x_m,plan_y_m,raibert_dx_m,raibert_dy_m,gap_shift_m,foot_x_m,foot_y_m,"
    "positive_work_j,fell"
)

EXIT_COMPLETED = 0
EXIT_FELL = 2
EXIT_INFEASIBLE = 3


class ParseError(ValueError):
    def __init__(self, line, message):
        self.line = line
        self.message = message
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"config parse error{where}: {message}")


class ValidationError(ValueError):
    def __init__(self, field_name, message):
        self.field = field_name
        super().__init__(f"invalid {field_name}: {message}")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "track"
    planner: str = "ls"
    seed: int = 0
    out_dir: str = "out"
    emit_csv: bool = True
    emit_svg: bool = True
    vx: float = 0.5                 # [m/s]
    vy: float = 0.0                 # [m/s]
    step_duration: float = 0.25    # [s]
    n_steps: int = 100
    foot_noise_sigma: float = 0.0  # [m]
    vel_noise_sigma: float = 0.0   # [m/s]
    ramp_time: float = 2.0         # [s] track-profile ramps
    hold_steps: int = 100          # track-profile hold window
    i_max: float = 7.0             # [N s]
    n_samples: int = 500
    h_max_list: tuple[float, ...] = (0.0, 0.005, 0.01, 0.02, 0.03)
    trials: int = 100
    gap_start: float = 1.0         # [m]
    gap_end: float = 1.25          # [m]
    gap_margin: float = 0.02       # [m]
    gap_window: float | None = None
    sweep_durations: tuple[float, ...] = (0.20, 0.25, 0.30, 0.35, 0.40)
    # model constant overrides
    mass: float = 4.8
    z0: float = 0.34
    g: float = 9.81
    l_max: float = 0.30
    w_min: float = 0.03
    w_nom: float = 0.05
    reach_max: float = 0.25
    kp_x: float = 0.3
    kp_y: float = 0.3
    kd_x: float = 0.1
    kd_y: float = 0.1
    td_min: float = 0.20
    td_max: float = 0.40
    raibert_feedback: str = FEEDBACK_PREDICTIVE

    def params(self) -> BipedParams:
        return BipedParams(
            mass=self.mass, z0=self.z0, g=self.g, l_max=self.l_max,
            w_min=self.w_min, w_nom=self.w_nom, reach_max=self.reach_max,
            kp_raibert=(self.kp_x, self.kp_y), kd_raibert=(self.kd_x, self.kd_y),
            td_min=self.td_min, td_max=self.td_max,
            raibert_feedback=self.raibert_feedback,
        )

    @property
    def planner_id(self) -> PlannerId:
        return PlannerId(self.planner)


_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
_LIST_FIELDS = {"h_max_list", "sweep_durations"}


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a TOML scenario config; unknown keys are rejected
    and every default is overridable."""
    try:
        raw = _toml.loads(text)
    except _toml.TOMLDecodeError as err:
        msg = str(err)
        line = None
        if "at line " in msg:
            try:
                line = int(msg.split("at line ")[1].split(",")[0])
            except (ValueError, IndexError):
                line = None
        raise ParseError(line, msg) from err

    kwargs = {}
    for key, value in raw.items():
        if key not in _FIELDS:
            raise ValidationError(key, "unknown configuration key")
        if key in _LIST_FIELDS:
            if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
            ):
                raise ValidationError(key, "expected a list of numbers")
            kwargs[key] = tuple(float(v) for v in value)
        else:
            kwargs[key] = value
    cfg = ScenarioConfig(**kwargs)
    validate_config(cfg)
    return cfg


def validate_config(cfg: ScenarioConfig) -> None:
    if cfg.scenario not in SCENARIO_KINDS:
        raise ValidationError("scenario", f"{cfg.scenario!r} not one of {SCENARIO_KINDS}")
    if cfg.planner not in ("ls", "lipm"):
        raise ValidationError("planner", f"{cfg.planner!r} not one of ('ls', 'lipm')")
    if cfg.raibert_feedback not in (FEEDBACK_PREDICTIVE, FEEDBACK_AVERAGE):
        raise ValidationError("raibert_feedback", f"{cfg.raibert_feedback!r} unknown")
    if not cfg.td_min <= cfg.step_duration <= cfg.td_max:
        raise ValidationError(
            "step_duration",
            f"{cfg.step_duration} outside [td_min, td_max] = [{cfg.td_min}, {cfg.td_max}]",
        )
    for td in cfg.sweep_durations:
        if not cfg.td_min <= td <= cfg.td_max:
            raise ValidationError(
                "sweep_durations", f"{td} outside [td_min, td_max] = [{cfg.td_min}, {cfg.td_max}]"
            )
    if cfg.n_steps < 1:
        raise ValidationError("n_steps", "must be >= 1")
    if cfg.i_max <= 0:
        raise ValidationError("i_max", "must be positive")
    if not cfg.gap_start < cfg.gap_end:
        raise ValidationError("gap_end", "gap interval must be non-empty")
    if cfg.trials < 1:
        raise ValidationError("trials", "must be >= 1")
    try:
        cfg.params()
    except ValueError as err:
        raise ValidationError("params", str(err)) from err


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, tuple):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v)}")


def serialize_config(cfg: ScenarioConfig) -> str:
    """Deterministic TOML rendering; parse(serialize(cfg)) == cfg."""
    lines = []
    for f in dataclasses.fields(ScenarioConfig):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        lines.append(f"{f.name} = {_toml_value(v)}")
    return "\n".join(lines) + "\n"


def preset_config(name: str, seed: int = 0) -> ScenarioConfig:
    """Benchmark presets with protocol constants baked in."""
    presets = {
        # trapezoid forward-velocity profile, tracking error on the 100-step hold
        "track": ScenarioConfig(scenario="track", vx=0.5, step_duration=0.25,
                                hold_steps=100, ramp_time=2.0),
        # planned-vs-executed footfall error at 0.6 m/s over 20 steps
        "step-track": ScenarioConfig(scenario="step-track", vx=0.6, step_duration=0.25,
                                     n_steps=20, foot_noise_sigma=0.002),
        # mechanical cost of transport at 0.6 m/s over 100 steps
        "cot": ScenarioConfig(scenario="cot", vx=0.6, step_duration=0.25, n_steps=100),
        # 500-sample push grid at zero commanded velocity
        "push-grid": ScenarioConfig(scenario="push-grid", vx=0.0, step_duration=0.25,
                                    i_max=7.0, n_samples=500),
        # rough-terrain success sweep, 5 s episodes at 0.4 m/s
        "rough": ScenarioConfig(scenario="rough", vx=0.4, step_duration=0.25,
                                trials=100),
        # one 25 cm gap at x = 1 m, crossed at 0.6 m/s (0.26 s steps give the
        # stride margin the crossing needs)
        "gaps": ScenarioConfig(scenario="gaps", vx=0.6, step_duration=0.26,
                               n_steps=30, gap_start=1.0, gap_end=1.25),
        # step-duration sweep over the admissible range at 0.4 m/s
        "sweep-td": ScenarioConfig(scenario="sweep-td", vx=0.4, n_steps=100),
        # one-shot plan from rest
        "plan-once": ScenarioConfig(scenario="plan-once", vx=0.5, step_duration=0.25),
    }
    if name not in presets:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(presets))}")
    return replace(presets[name], seed=seed)


PRESET_SUMMARIES = {
    "track": "velocity tracking: trapezoid 0->vx->0 profile, MAE/std on the 100-step hold",
    "step-track": "planned vs executed footfall MAE, 20 steps at 0.6 m/s",
    "cot": "mechanical cost of transport, 100 steps at 0.6 m/s",
    "push-grid": "push recovery at zero velocity, 20 impulse x 25 angle grid (500 samples)",
    "rough": "rough-terrain success rate vs height bound, 100 x 5 s trials at 0.4 m/s",
    "gaps": "gap crossing: one 25 cm gap at x = 1 m, 0.6 m/s",
    "sweep-td": "step-duration sweep 0.20..0.40 s at 0.4 m/s, 100 steps each",
    "plan-once": "print a single step plan from rest",
}


import numpy as _np


def _fmt(v) -> str:
    if isinstance(v, (bool, _np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, _np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, header: str, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _steps_rows(log: EpisodeLog):
    for rec in log.records:
        yield (
            rec.step_index, rec.t_touchdown, rec.v_desired[0], rec.v_desired[1],
            rec.v_step_avg[0], rec.v_step_avg[1], rec.plan.target[0], rec.plan.target[1],
            rec.plan.raibert_offset[0], rec.plan.raibert_offset[1], rec.plan.gap_shift,
            rec.executed_foot[0], rec.executed_foot[1], rec.positive_work, rec.fell,
        )


def _exit_code(status: EpisodeStatus) -> int:
    return {
        EpisodeStatus.COMPLETED: EXIT_COMPLETED,
        EpisodeStatus.FELL: EXIT_FELL,
        EpisodeStatus.INFEASIBLE: EXIT_INFEASIBLE,
    }[status]


def _velocity_svg(log: EpisodeLog, path: Path) -> None:
    c = SvgCanvas(640, 360)
    ks = [r.step_index for r in log.records]
    cmd = [r.v_desired[0] for r in log.records]
    avg = [r.v_step_avg[0] for r in log.records]
    lo = min(min(cmd), min(avg), 0.0) - 0.05
    hi = max(max(cmd), max(avg)) + 0.05
    ax = Axes(c, (0, max(1, max(ks))), (lo, hi))
    ax.frame(xlabel="step index", ylabel="forward velocity [m/s]")
    ax.polyline(ks, cmd, stroke="#888", width=1.0)
    ax.polyline(ks, avg, stroke="#1f6fb2", width=1.5)
    c.text(ax.c.width - 180, 20, "command (grey) vs step average (blue)", size=10)
    path.write_text(c.render(), newline="\n")


def _pushmap_svg(grid, i_max: float, path: Path) -> None:
    c = SvgCanvas(480, 480)
    lim = i_max * 1.1
    ax = Axes(c, (-lim, lim), (-lim, lim), margin=35)
    ax.frame(xlabel="impulse x [N s]", ylabel="impulse y [N s]")
    for s in grid.samples:
        x = s.impulse * math.cos(s.angle)
        y = s.impulse * math.sin(s.angle)
        ax.circle(x, y, 3.0, fill="#2a9d4e" if s.recovered else "#d43a3a")
    c.text(ax.c.width - 200, 20, "green recovered, red fell", size=10)
    path.write_text(c.render(), newline="\n")


def _footfalls_svg(log: EpisodeLog, terrain: Terrain, path: Path) -> None:
    c = SvgCanvas(720, 300)
    xs = [r.executed_foot[0] for r in log.records] + [r.plan.target[0] for r in log.records]
    ax = Axes(c, (min(xs) - 0.1, max(xs) + 0.1), (-0.25, 0.25), margin=35)
    ax.frame(xlabel="x [m]", ylabel="y [m]")
    for a, b in terrain.gaps:
        x0, x1 = ax.sx(a), ax.sx(b)
        ax.c.rect(x0, 35, x1 - x0, c.height - 70, fill="#d8d8d8")
    for rec in log.records:
        # left feet land on even step indices of the default initial state
        color = "#2456c4" if rec.step_index % 2 == 0 else "#c43a3a"
        ax.circle(rec.plan.target[0], rec.plan.target[1], 4.0, fill="none", stroke=color)
        ax.circle(rec.executed_foot[0], rec.executed_foot[1], 2.4, fill=color)
    c.text(ax.c.width - 280, 20, "hollow planned, filled executed; blue left, red right", size=10)
    path.write_text(c.render(), newline="\n")


def _trapezoid_schedule(cfg: ScenarioConfig):
    """Per-step discretized 0 -> vx -> 0 trapezoid: ramp_time up, hold for
    hold_steps, ramp_time down."""
    T = cfg.step_duration
    ramp_steps = max(1, round(cfg.ramp_time / T))
    entries = []
    for i in range(ramp_steps):
        entries.append((i * T, GaitCommand(vx=cfg.vx * (i + 1) / ramp_steps,
                                           vy=cfg.vy, step_duration=T)))
    t_hold = ramp_steps * T
    entries.append((t_hold, GaitCommand(vx=cfg.vx, vy=cfg.vy, step_duration=T)))
    t_down = t_hold + cfg.hold_steps * T
    for i in range(ramp_steps):
        entries.append((t_down + i * T,
                        GaitCommand(vx=cfg.vx * (ramp_steps - 1 - i) / ramp_steps,
                                    vy=cfg.vy, step_duration=T)))
    n_total = 2 * ramp_steps + cfg.hold_steps
    hold_window = (ramp_steps, ramp_steps + cfg.hold_steps)
    return tuple(entries), n_total, hold_window


def _sim_config(cfg: ScenarioConfig, n_steps=None, vx=None) -> SimConfig:
    vx = cfg.vx if vx is None else vx
    return SimConfig(
        params=cfg.params(),
        planner_id=cfg.planner_id,
        schedule=((0.0, GaitCommand(vx=vx, vy=cfg.vy, step_duration=cfg.step_duration)),),
        n_steps=cfg.n_steps if n_steps is None else n_steps,
        foot_noise_sigma=cfg.foot_noise_sigma,
        vel_noise_sigma=cfg.vel_noise_sigma,
        rng_seed=cfg.seed,
        gap_margin=cfg.gap_margin,
        gap_window=cfg.gap_window,
    )


def plan_once_row(cfg: ScenarioConfig):
    """One StepPlan from rest, as a (header, row) pair."""
    params = cfg.params()
    state = HybridState(
        torso=TorsoState(0.0, 0.0, 0.0, 0.0),
        stance_foot=(0.0, -params.w_nom),
        swing_side=SwingSide.LEFT,
        phase_time=cfg.step_duration,
    )
    inp = PlannerInput(
        state=state,
        command=GaitCommand(vx=cfg.vx, vy=cfg.vy, step_duration=cfg.step_duration),
        step_avg_vel=(state.torso.vx, state.torso.vy),
    )
    plan = plan_step(inp, params, cfg.planner_id)
    header = "planner,x_step_m,y_step_m,raibert_dx_m,raibert_dy_m,target_x_m,target_y_m"
    row = (cfg.planner, plan.heuristic[0], plan.heuristic[1],
           plan.raibert_offset[0], plan.raibert_offset[1],
           plan.target[0], plan.target[1])
    return header, row


@dataclass(frozen=True)
class ScenarioResult:
    exit_code: int
    artifacts: tuple[Path, ...]
    summary: tuple[tuple[str, float | str, str], ...]   # (metric, value, units)


def run_scenario(cfg: ScenarioConfig, out_dir: str | Path | None = None) -> ScenarioResult:
    """Execute one scenario and emit its artifact set into out_dir."""
    validate_config(cfg)
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts: list[Path] = []
    summary: list[tuple[str, float | str, str]] = []
    exit_code = EXIT_COMPLETED
    steps_log: EpisodeLog | None = None
    svg_jobs = []

    kind = cfg.scenario
    if kind == "track":
        schedule, n_total, hold = _trapezoid_schedule(cfg)
        sim = replace(_sim_config(cfg), schedule=schedule, n_steps=n_total)
        log = simulate_episode(sim)
        steps_log = log
        exit_code = _exit_code(log.status)
        stats = velocity_tracking_stats(log, "x", hold)
        summary += [("velocity_mae_mps", stats.mae, "m/s"),
                    ("velocity_std_mps", stats.std, "m/s"),
                    ("hold_steps", stats.n_steps, "count")]
        svg_jobs.append(("velocity.svg", lambda p, log=log: _velocity_svg(log, p)))
    elif kind == "step-track":
        log = simulate_episode(_sim_config(cfg))
        steps_log = log
        exit_code = _exit_code(log.status)
        summary.append(("step_location_mae_m", step_location_mae(log), "m"))
        svg_jobs.append(("footfalls.svg", lambda p, log=log: _footfalls_svg(log, cfg_terrain(cfg), p)))
    elif kind == "cot":
        log = simulate_episode(_sim_config(cfg))
        steps_log = log
        exit_code = _exit_code(log.status)
        rep = cost_of_transport(log, cfg.params())
        summary += [("mechanical_cot", rep.mechanical_cot, "J/(kg*m)"),
                    ("distance_m", rep.distance, "m"),
                    ("positive_work_j", rep.positive_work, "J")]
        svg_jobs.append(("velocity.svg", lambda p, log=log: _velocity_svg(log, p)))
    elif kind == "push-grid":
        base = replace(_sim_config(cfg, vx=0.0), n_steps=1)
        grid = push_recovery_grid(base, cfg.i_max, cfg.n_samples)
        summary.append(("recovery_rate", grid.success_rate, "fraction"))
        steps_log = simulate_episode(replace(base, n_steps=24))
        if cfg.emit_csv:
            p = out / "samples.csv"
            _write_csv(p, "impulse_ns,angle_rad,recovered",
                       ((s.impulse, s.angle, s.recovered) for s in grid.samples))
            artifacts.append(p)
        svg_jobs.append(("pushmap.svg", lambda p, grid=grid: _pushmap_svg(grid, cfg.i_max, p)))
    elif kind == "rough":
        base = _sim_config(cfg)
        levels = terrain_success_rate(base, cfg.h_max_list, cfg.trials)
        for h, rate in levels:
            summary.append((f"rough_success_h{h:g}", rate, "fraction"))
        if cfg.emit_csv:
            p = out / "levels.csv"
            _write_csv(p, "h_max_m,success_rate", levels)
            artifacts.append(p)
        worst = cfg.h_max_list[-1]
        terrain = Terrain.rough(worst, seed=cfg.seed * 1_000_003) if worst > 0 else Terrain.flat()
        steps_log = simulate_episode(replace(
            base, terrain=terrain, rng_seed=cfg.seed * 1_000_003,
            n_steps=int(5.0 / cfg.step_duration)))
    elif kind == "gaps":
        terrain = cfg_terrain(cfg)
        sim = replace(_sim_config(cfg), terrain=terrain)
        log = simulate_episode(sim)
        steps_log = log
        exit_code = _exit_code(log.status)
        beyond = [r for r in log.records if r.executed_foot[0] >= cfg.gap_end + cfg.gap_margin]
        summary += [("status", log.status.value, ""),
                    ("crossed", 1.0 if beyond else 0.0, "bool"),
                    ("n_steps", len(log), "count")]
        svg_jobs.append(("footfalls.svg", lambda p, log=log: _footfalls_svg(log, terrain, p)))
    elif kind == "sweep-td":
        rows = []
        rep_log = None
        for td in cfg.sweep_durations:
            sub = replace(cfg, step_duration=td)
            log = simulate_episode(_sim_config(sub))
            try:
                mae = velocity_tracking_stats(log, "x", (20, cfg.n_steps)).mae
            except Exception:
                mae = float("nan")
            rows.append((td, log.status.value, len(log), mae))
            summary.append((f"track_mae_td{td:g}", mae, "m/s"))
            summary.append((f"status_td{td:g}", log.status.value, ""))
            if abs(td - 0.25) < 1e-12:
                rep_log = log
        steps_log = rep_log if rep_log is not None else simulate_episode(_sim_config(cfg))
        if cfg.emit_csv:
            p = out / "sweep.csv"
            _write_csv(p, "td_s,status,steps,velocity_mae_mps", rows)
            artifacts.append(p)
    elif kind == "plan-once":
        header, row = plan_once_row(cfg)
        if cfg.emit_csv:
            p = out / "plan.csv"
            _write_csv(p, header, [row])
            artifacts.append(p)
        summary.append(("target_x_m", row[5], "m"))
        summary.append(("target_y_m", row[6], "m"))
    else:  # unreachable after validation
        raise ValidationError("scenario", kind)

    if cfg.emit_csv and steps_log is not None:
        p = out / "steps.csv"
        _write_csv(p, STEPS_CSV_HEADER, _steps_rows(steps_log))
        artifacts.append(p)
    if cfg.emit_csv:
        p = out / "summary.csv"
        _write_csv(p, "metric,value,units", summary)
        artifacts.append(p)
    if cfg.emit_svg:
        for name, job in svg_jobs:
            p = out / name
            job(p)
            artifacts.append(p)
    return ScenarioResult(exit_code=exit_code, artifacts=tuple(artifacts), summary=tuple(summary))


def cfg_terrain(cfg: ScenarioConfig) -> Terrain:
    if cfg.scenario == "gaps":
        return Terrain.gapped([(cfg.gap_start, cfg.gap_end)])
    return Terrain.flat()
