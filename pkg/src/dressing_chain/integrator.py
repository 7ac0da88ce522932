"""Fixed-step RK4 integration of the closed chain, used as the numerical oracle."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import (
    ChainParams,
    ChainState,
    QuarticCurve,
    _check_period,
    chain_rhs_array,
)
from .errors import ImmediateBlowup

BLOWUP_THRESHOLD = 1e8
POLE_MASK_HALFWIDTH = 1e-3


@dataclass
class Trajectory:
    grid: np.ndarray
    states: np.ndarray  # shape (len(grid), N)
    masked: np.ndarray = None
    blowup: bool = False
    blowup_at: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.masked is None:
            self.masked = np.zeros(len(self.grid), dtype=bool)
        if len(self.grid) != len(self.states) or len(self.masked) != len(self.grid):
            raise ValueError("grid, states and mask must have equal length")
        if len(self.grid) > 1 and not np.all(np.diff(self.grid) * np.sign(self.grid[-1] - self.grid[0]) > 0):
            raise ValueError("grid must be strictly monotone")

    def __len__(self):
        return len(self.grid)

    def state(self, i: int) -> ChainState:
        return ChainState(self.states[i])

    @property
    def unmasked(self) -> np.ndarray:
        return self.states[~self.masked]


def rk4_step(sigma: np.ndarray, mu: np.ndarray, h: float) -> np.ndarray:
    k1 = chain_rhs_array(sigma, mu)
    k2 = chain_rhs_array(sigma + 0.5 * h * k1, mu)
    k3 = chain_rhs_array(sigma + 0.5 * h * k2, mu)
    k4 = chain_rhs_array(sigma + h * k3, mu)
    return sigma + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_chain(
    params: ChainParams,
    initial: ChainState,
    x_end: float,
    step: float,
    x_start: float = 0.0,
    blowup_threshold: float = BLOWUP_THRESHOLD,
) -> Trajectory:
    """Classical RK4 on the uniform grid x_start, x_start +- step, ..., x_end.

    Integration runs backwards when x_end < x_start. If any component
    exceeds ``blowup_threshold`` the trajectory is truncated before the
    offending point and flagged.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    _check_period(params.n)
    mu = np.asarray(params.mu, dtype=float)
    y = np.asarray(initial.sigma, dtype=float)
    if len(y) != params.n:
        raise ValueError("initial state length differs from chain period")
    if np.max(np.abs(y)) > blowup_threshold:
        raise ImmediateBlowup(f"initial state {y} exceeds blow-up bound {blowup_threshold}")

    span = x_end - x_start
    n_steps = int(round(abs(span) / step))
    h = np.copysign(step, span) if span else step
    grid = x_start + h * np.arange(n_steps + 1)
    if n_steps:
        grid[-1] = x_end
    states = np.empty((n_steps + 1, params.n))
    states[0] = y
    blowup_at = None
    last = n_steps
    for i in range(n_steps):
        hi = grid[i + 1] - grid[i]
        y = rk4_step(y, mu, hi)
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > blowup_threshold:
            blowup_at = grid[i + 1]
            last = i
            break
        states[i + 1] = y
    return Trajectory(
        grid[: last + 1],
        states[: last + 1],
        blowup=blowup_at is not None,
        blowup_at=blowup_at,
    )


def conservation_report(traj: Trajectory, params: ChainParams) -> dict:
    """Max drift of C and A over the unmasked points."""
    s = traj.unmasked
    if len(s) == 0:
        return {"C": 0.0, "A": 0.0}
    c = s.sum(axis=1)
    g = s + np.roll(s, -1, axis=1)
    m1, m2, m3 = params.mu
    a = g[:, 0] * g[:, 1] * g[:, 2] + m2 * g[:, 2] + m1 * g[:, 1] + m3 * g[:, 0]
    return {"C": float(np.max(np.abs(c - c[0]))), "A": float(np.max(np.abs(a - a[0])))}


def quartic_residual_report(traj: Trajectory, q: QuarticCurve, params: ChainParams) -> float:
    """Max of |(s1')^2 - quartic(s1)| with s1' taken from the chain equations."""
    s = traj.unmasked
    if len(s) == 0:
        return 0.0
    d1 = chain_rhs_array(s, np.asarray(params.mu, dtype=float))[:, 0]
    return float(np.max(np.abs(d1 * d1 - q(s[:, 0]))))
