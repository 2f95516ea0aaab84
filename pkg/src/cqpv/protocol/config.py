"""Geometry, protocol parameters and the per-round timetable.

Positions are on a line in km and times are in units where classical
signals travel one unit of distance per unit of time.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Geometry:
    v0: float = 0.0
    p: float = 1.0
    v1: float = 2.0
    quantum_speed: float = 1.0  # fraction of the classical signal speed
    tolerance: float = 1e-9
    # attacker positions; default to the midpoints on either side of P
    alice: float | None = None
    bob: float | None = None

    def __post_init__(self):
        if not self.v0 < self.p < self.v1:
            raise ConfigError("need V0 < P < V1")
        if not 0 < self.quantum_speed <= 1:
            raise ConfigError("quantum speed fraction must lie in (0, 1]")
        if self.tolerance < 0:
            raise ConfigError("timing tolerance must be non-negative")
        if self.alice is None:
            object.__setattr__(self, "alice", 0.5 * (self.v0 + self.p))
        if self.bob is None:
            object.__setattr__(self, "bob", 0.5 * (self.p + self.v1))
        if not self.v0 <= self.alice <= self.p <= self.bob <= self.v1:
            raise ConfigError("attackers must sit between their verifier and P")

    @property
    def d0(self) -> float:
        return self.p - self.v0

    @property
    def d1(self) -> float:
        return self.v1 - self.p


@dataclass(frozen=True)
class ProtocolConfig:
    n: int = 8
    m: int = 2
    f_seed: int = 0
    delay: float = 0.1  # time between quantum and classical arrival at P
    geometry: Geometry = field(default_factory=Geometry)
    mode: str = "commit"
    r: int = 100  # committed-round target
    k: int | None = None
    max_rounds: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        if self.m < 2:
            raise ConfigError("m must be at least 2")
        if self.mode not in ("plain", "commit"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.mode == "commit" and not self.delay > 0:
            raise ConfigError("commit mode needs a positive delay")
        if self.delay < 0:
            raise ConfigError("delay must be non-negative")
        if self.r < 1:
            raise ConfigError("r must be at least 1")


@dataclass(frozen=True)
class Timetable:
    """Send and arrival times for one round starting at ``t0``.

    ``x`` leaves V0 at ``t0``; ``y`` leaves V1 so both arrive at P together at
    ``classical_arrival``; ``Q`` leaves V0 so it reaches P ``delay`` earlier.
    """

    t0: float
    x_send: float
    y_send: float
    q_send: float
    q_arrival: float
    classical_arrival: float
    commit_expected: tuple  # (at V0, at V1)
    answer_expected: tuple

    def arrival_at(self, source: str, position: float, geom: Geometry) -> float:
        """Arrival time of message ``x``, ``y`` or ``q`` at ``position``."""
        if source == "x":
            return self.x_send + (position - geom.v0)
        if source == "y":
            return self.y_send + (geom.v1 - position)
        if source == "q":
            return self.q_send + (position - geom.v0) / geom.quantum_speed
        raise ValueError(source)


def schedule_round(cfg: ProtocolConfig, t0: float = 0.0) -> Timetable:
    g = cfg.geometry
    t_x = t0 + g.d0
    t_q = t_x - cfg.delay
    return Timetable(
        t0=t0,
        x_send=t0,
        y_send=t_x - g.d1,
        q_send=t_q - g.d0 / g.quantum_speed,
        q_arrival=t_q,
        classical_arrival=t_x,
        commit_expected=(t_q + g.d0, t_q + g.d1),
        answer_expected=(t_x + g.d0, t_x + g.d1),
    )
