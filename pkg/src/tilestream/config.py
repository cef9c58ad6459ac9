"""Run configuration for the streaming controller and simulator."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

DEFAULT_SFOV_LADDER = (1.00, 0.95, 0.90, 0.85, 0.80, 0.75, 0.70)


class ValidationError(ValueError):
    """Raised for malformed inputs (metadata, traces, configuration)."""


@dataclass(frozen=True)
class Config:
    # packet queue
    cp_seconds: float = 4.0
    lambda_target: float = 0.5
    qp_init: float = 0.5
    # sickness queue
    cs: float = 1000.0
    omega: float = 0.05
    qs_init: float = 0.0
    # intervention knobs
    k_dof: float = 0.1
    sfov_ladder: tuple[float, ...] = DEFAULT_SFOV_LADDER
    dof_choices: tuple[int, ...] = (0, 1)
    # objective weights
    xi: float = 1.0
    rho: float = 2.5
    # viewport prediction
    epsilon: float = 0.05
    sigma_y_deg: float = 10.0
    sigma_p_deg: float = 10.0
    lattice_step_deg: float = 5.0
    viewport_w_deg: float = 100.0
    viewport_h_deg: float = 100.0
    # local search
    alpha: int = 10
    nsl_capacity: int = 20
    max_iterations: int = 200
    # bandwidth bookkeeping, megabits
    gamma_init: float = 0.0
    bw_unit: float = 0.01
    # brute-force guard
    enumeration_cap: int = 10**7

    def __post_init__(self):
        object.__setattr__(self, "sfov_ladder", tuple(float(s) for s in self.sfov_ladder))
        object.__setattr__(self, "dof_choices", tuple(int(y) for y in self.dof_choices))
        self.validate()

    def validate(self) -> None:
        if not 0.0 <= self.lambda_target < 1.0:
            raise ValidationError(f"lambda_target must be in [0, 1), got {self.lambda_target}")
        if not self.sfov_ladder:
            raise ValidationError("sfov_ladder is empty")
        for s in self.sfov_ladder:
            if not 0.7 <= s <= 1.0:
                raise ValidationError(f"s_fov ladder entry {s} outside [0.7, 1]")
        if list(self.sfov_ladder) != sorted(self.sfov_ladder, reverse=True):
            raise ValidationError("sfov_ladder must be descending")
        if not self.dof_choices or any(y not in (0, 1) for y in self.dof_choices):
            raise ValidationError(f"dof_choices must be a non-empty subset of {{0, 1}}, got {self.dof_choices}")
        if not 0.0 <= self.k_dof < 1.0:
            raise ValidationError(f"k_dof must be in [0, 1), got {self.k_dof}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValidationError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if self.bw_unit <= 0:
            raise ValidationError("bw_unit must be positive")
        if self.cp_seconds <= 0 or self.cs <= 0:
            raise ValidationError("queue capacities must be positive")
        if self.sigma_y_deg < 0 or self.sigma_p_deg < 0 or self.lattice_step_deg <= 0:
            raise ValidationError("sigmas must be nonnegative and the lattice step positive")
        if self.alpha < 1 or self.nsl_capacity < 1 or self.max_iterations < 1:
            raise ValidationError("alpha, nsl_capacity and max_iterations must be >= 1")
        if not (0.0 <= self.qp_init <= 1.0 and 0.0 <= self.qs_init <= 1.0):
            raise ValidationError("initial occupancies must be in [0, 1]")

    def replace(self, **changes) -> "Config":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["sfov_ladder"] = list(self.sfov_ladder)
        d["dof_choices"] = list(self.dof_choices)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Config":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)
