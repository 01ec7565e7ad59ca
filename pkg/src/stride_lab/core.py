"""Core domain types for the reduced-order walking model.

Everything here is an immutable value type: physical/planner constants,
torso and hybrid (stance + phase) state, planned footsteps, 1D terrain,
and per-episode logs. Frames: world x is the direction of travel, y is
lateral. The stance dynamics are the 3D linear inverted pendulum,
r_ddot = omega^2 * r with r = com - stance_foot and omega = sqrt(g/z0).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

# feedback conventions for the heuristic planner's velocity regulator
FEEDBACK_PREDICTIVE = "predictive"  # solve the offset against the model-predicted step velocity
FEEDBACK_AVERAGE = "average"        # use the measured average of the completed step


class SwingSide(enum.Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def sign(self) -> int:
        """+1 for left, -1 for right (lateral offset of that foot from the torso)."""
        return 1 if self is SwingSide.LEFT else -1

    @property
    def other(self) -> "SwingSide":
        return SwingSide.RIGHT if self is SwingSide.LEFT else SwingSide.LEFT


class PlannerId(enum.Enum):
    LS = "ls"
    LIPM = "lipm"


@dataclass(frozen=True)
class BipedParams:
    """Physical and planner constants.

    Defaults are scaled to a kid-size (~70 cm, 4.8 kg) biped. omega is
    derived in __post_init__ and always equals sqrt(g/z0).
    """

    mass: float = 4.8            # [kg]
    z0: float = 0.34             # [m] CoM height
    g: float = 9.81              # [m/s^2]
    l_max: float = 0.30          # [m] max step length
    w_min: float = 0.03          # [m] min step width
    w_nom: float = 0.05          # [m] nominal lateral foot offset from torso centerline
    reach_max: float = 0.25      # [m] max horizontal CoM-to-stance-foot distance before a fall
    kp_raibert: tuple[float, float] = (0.3, 0.3)   # [m per m/s], (x, y)
    kd_raibert: tuple[float, float] = (0.1, 0.1)   # [m per m/s], (x, y)
    td_min: float = 0.20         # [s]
    td_max: float = 0.40         # [s]
    raibert_feedback: str = FEEDBACK_PREDICTIVE
    omega: float = field(init=False)   # [1/s] = sqrt(g/z0), do not set

    def __post_init__(self):
        if not (self.mass > 0 and self.z0 > 0 and self.g > 0):
            raise ValueError("mass, z0 and g must be positive")
        if not (0 < self.w_min <= self.w_nom < self.reach_max):
            raise ValueError("need 0 < w_min <= w_nom < reach_max")
        if not (0 < self.l_max <= 2 * self.reach_max):
            raise ValueError("need 0 < l_max <= 2*reach_max")
        if not (0 < self.td_min <= self.td_max):
            raise ValueError("need 0 < td_min <= td_max")
        if self.raibert_feedback not in (FEEDBACK_PREDICTIVE, FEEDBACK_AVERAGE):
            raise ValueError(f"unknown raibert_feedback {self.raibert_feedback!r}")
        object.__setattr__(self, "omega", math.sqrt(self.g / self.z0))

    def with_com_height(self, z0: float) -> "BipedParams":
        """Copy with a different pendulum height (omega recomputed)."""
        return replace(self, z0=z0)


def default_params(**overrides) -> BipedParams:
    """Default constants: 4.8 kg, z0 = 0.34 m, 30 cm max step, Raibert gains
    (0.3, 0.3)/(0.1, 0.1), admissible step durations [0.20, 0.40] s."""
    return BipedParams(**overrides)


@dataclass(frozen=True)
class GaitCommand:
    vx: float                # [m/s] commanded forward velocity
    vy: float = 0.0          # [m/s] commanded lateral velocity
    step_duration: float = 0.25   # [s]

    def __post_init__(self):
        if not (math.isfinite(self.vx) and math.isfinite(self.vy)):
            raise ValueError("commanded velocity must be finite")
        if not (self.step_duration > 0 and math.isfinite(self.step_duration)):
            raise ValueError("step_duration must be positive and finite")


@dataclass(frozen=True)
class TorsoState:
    x: float    # [m]
    y: float    # [m]
    vx: float   # [m/s]
    vy: float   # [m/s]

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def velocity(self) -> np.ndarray:
        return np.array([self.vx, self.vy])


@dataclass(frozen=True)
class HybridState:
    """Simulator state between touchdown events."""

    torso: TorsoState
    stance_foot: tuple[float, float]      # [m] world frame
    swing_side: SwingSide
    phase_time: float = 0.0               # [s] since last touchdown
    step_index: int = 0
    prev_step_avg_vel: tuple[float, float] = (0.0, 0.0)   # fed-back velocity of step k-1

    @property
    def offset(self) -> np.ndarray:
        """Stance-relative CoM offset r = com - stance_foot."""
        return self.torso.position - np.asarray(self.stance_foot)


@dataclass(frozen=True)
class StepPlan:
    """Planned swing-foot touchdown target and its composition.

    target = base + heuristic + raibert_offset (+ gap_shift on x), where the
    base is stance_foot.x on the forward axis and torso.y + side*w_nom on the
    lateral axis. The identity is exact arithmetic, see planners module.
    """

    target: tuple[float, float]           # [m] world frame
    heuristic: tuple[float, float]        # raw (x_step, y_step) planner output
    raibert_offset: tuple[float, float]   # [m]
    gap_shift: float = 0.0                # [m] signed terrain adjustment
    planner_id: PlannerId = PlannerId.LS


class TerrainKind(enum.Enum):
    FLAT = "flat"
    GAPPED = "gapped"
    ROUGH = "rough"


@dataclass(frozen=True)
class Terrain:
    """1D along-track ground model: flat, gap intervals [a, b) in x, or
    per-cell random height offsets bounded by h_max."""

    kind: TerrainKind = TerrainKind.FLAT
    gaps: tuple[tuple[float, float], ...] = ()   # [m] sorted, non-overlapping [a, b)
    h_max: float = 0.0                           # [m] rough-height bound
    seed: int = 0

    _CELL = 0.05  # [m] rough-terrain height cell size

    def __post_init__(self):
        if self.kind is TerrainKind.GAPPED:
            prev_b = -math.inf
            for a, b in self.gaps:
                if not a < b:
                    raise ValueError(f"empty gap interval [{a}, {b})")
                if a < prev_b:
                    raise ValueError("gap intervals must be sorted and non-overlapping")
                prev_b = b
        elif self.gaps:
            raise ValueError("gap intervals only valid on gapped terrain")
        if self.kind is TerrainKind.ROUGH and self.h_max < 0:
            raise ValueError("h_max must be non-negative")

    @classmethod
    def flat(cls) -> "Terrain":
        return cls()

    @classmethod
    def gapped(cls, gaps) -> "Terrain":
        return cls(kind=TerrainKind.GAPPED, gaps=tuple((float(a), float(b)) for a, b in gaps))

    @classmethod
    def rough(cls, h_max: float, seed: int = 0) -> "Terrain":
        return cls(kind=TerrainKind.ROUGH, h_max=float(h_max), seed=seed)

    def is_solid(self, x: float) -> bool:
        if self.kind is TerrainKind.GAPPED:
            return not any(a <= x < b for a, b in self.gaps)
        return True

    def height(self, x: float) -> float:
        """Ground height at x; 0 on flat/gapped, hashed per-cell uniform on rough."""
        if self.kind is not TerrainKind.ROUGH or self.h_max == 0.0:
            return 0.0
        cell = int(math.floor(x / self._CELL))
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, cell + 2**40]))
        return float(rng.uniform(-self.h_max, self.h_max))


class EpisodeStatus(enum.Enum):
    COMPLETED = "completed"
    FELL = "fell"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class StepRecord:
    step_index: int
    t_touchdown: float                    # [s]
    v_desired: tuple[float, float]        # [m/s]
    v_step_avg: tuple[float, float]       # [m/s] net displacement / step duration
    plan: StepPlan
    executed_foot: tuple[float, float]    # [m]
    positive_work: float                  # [J] over the completed stance
    fell: bool


@dataclass(frozen=True)
class EpisodeLog:
    records: tuple[StepRecord, ...]
    status: EpisodeStatus
    fail_step: int | None = None   # step index of the Fell/Infeasible terminal

    def __post_init__(self):
        for prev, rec in zip(self.records, self.records[1:]):
            if rec.step_index <= prev.step_index:
                raise ValueError("records must be strictly ordered by step_index")
        if self.status is not EpisodeStatus.COMPLETED and self.fail_step is None:
            raise ValueError("terminal status requires fail_step")

    def __len__(self) -> int:
        return len(self.records)


def orbital_energy(r: float, v: float, params: BipedParams) -> float:
    """Conserved quantity of the 1D LIP stance flow, E = (v^2 - omega^2 r^2)/2.

    Positive E means the CoM crosses over the stance foot; negative means it
    stalls and reverses. Units J/kg.
    """
    return 0.5 * (v * v - params.omega**2 * r * r)
