"""One-gap Lame potential and its link to the closed-form chain solution.

For the potential 2 wp(x) the Bloch solution

    Psi(x) = sigma(alpha - x) / (sigma(alpha) sigma(x)) * exp(zeta(alpha) x)

satisfies Psi'' - 2 wp(x) Psi = wp(alpha) Psi. Its logarithmic derivative is
zeta(alpha) - zeta(alpha - x) - zeta(x); with alpha = -2 nu and the argument
shifted by x0 - nu this is exactly s1(x).
"""

from __future__ import annotations

import cmath
import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .chain import ChainParams, chain_rhs
from .closed_form import ClosedFormSolution, reconstruct_full_state
from .elliptic import (
    POLE_RADIUS,
    EllipticInvariants,
    lattice_from_invariants,
    reduce_to_cell,
    weierstrass_p,
    weierstrass_sigma,
    weierstrass_zeta,
)
from .errors import PoleProximity

FD_STEP = 1e-4


@dataclass(frozen=True)
class LameProblem:
    alpha: complex
    inv: EllipticInvariants

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        r, _, _ = reduce_to_cell(self.alpha, lattice_from_invariants(self.inv))
        if abs(r) < POLE_RADIUS:
            raise PoleProximity("spectral point alpha lies on the period lattice")

    @property
    def eigenvalue(self) -> complex:
        return weierstrass_p(self.alpha, self.inv)


def lame_psi(x: complex, prob: LameProblem) -> complex:
    alpha, inv = prob.alpha, prob.inv
    lat = lattice_from_invariants(inv)
    for z in (x, alpha - x):
        if abs(reduce_to_cell(z, lat)[0]) < POLE_RADIUS:
            raise PoleProximity(f"Psi is singular or zero at x={x}")
    num = weierstrass_sigma(alpha - x, inv)
    den = weierstrass_sigma(alpha, inv) * weierstrass_sigma(x, inv)
    return num / den * cmath.exp(weierstrass_zeta(alpha, inv) * x)


def lame_log_derivative(x: complex, prob: LameProblem) -> complex:
    """Psi'/Psi = zeta(alpha) - zeta(alpha - x) - zeta(x)."""
    alpha, inv = prob.alpha, prob.inv
    return weierstrass_zeta(alpha, inv) - weierstrass_zeta(alpha - x, inv) - weierstrass_zeta(x, inv)


def printed_log_derivative(x: complex, prob: LameProblem) -> complex:
    """zeta(alpha - x) - zeta(alpha) - zeta(x), the form usually quoted.

    It differs from the true Psi'/Psi in the sign of the alpha-dependent
    terms; kept for side-by-side reporting only.
    """
    alpha, inv = prob.alpha, prob.inv
    return weierstrass_zeta(alpha - x, inv) - weierstrass_zeta(alpha, inv) - weierstrass_zeta(x, inv)


def lame_residual(x: float, prob: LameProblem, h: float = FD_STEP) -> complex:
    """Psi'' - 2 wp(x) Psi - wp(alpha) Psi with a 5-point second difference."""
    f = [lame_psi(x + k * h, prob) for k in (-2, -1, 0, 1, 2)]
    d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
    return d2 - (2 * weierstrass_p(x, prob.inv) + prob.eigenvalue) * f[2]


def lame_problem_for(sol: ClosedFormSolution) -> tuple[LameProblem, complex]:
    """Lame problem whose Psi'/Psi, evaluated at x + shift, reproduces s1(x)."""
    return LameProblem(-2 * sol.nu, sol.inv), sol.x0 - sol.nu


def potential_from_sigma(sol: ClosedFormSolution, index: int, x: float) -> float:
    """q_i = s_i' + s_i^2 + mu_i along the closed-form solution (index 1..3)."""
    if index not in (1, 2, 3):
        raise ValueError("index must be 1, 2 or 3")
    state = reconstruct_full_state(x, sol)
    ds = chain_rhs(state, ChainParams(sol.mu))
    i = index - 1
    return ds[i] + state[i] ** 2 + sol.mu[i]


@dataclass(frozen=True)
class LameFit:
    shift: complex
    const: float
    scatter: float  # standard deviation of q - 2 wp(x - shift)
    max_residual: float


def fit_lame_potential(xs, q, inv: EllipticInvariants) -> LameFit:
    """Fit q(x) = 2 wp(x - shift) + const over the sample points.

    The shift is seeded from a scan of the period cell (no knowledge of
    the closed-form parameters) and refined by least squares.
    """
    xs = np.asarray(xs, dtype=float)
    q = np.asarray(q, dtype=float)
    lat = lattice_from_invariants(inv)
    w1, w3 = 2 * lat.omega1, 2 * lat.omega3

    def offsets(shift, pts=xs, vals=q):
        return np.array([vals[k] - 2 * weierstrass_p(x - shift, inv) for k, x in enumerate(pts)])

    # coarse scan of the cell on a subset of the samples, then polish the
    # few best seeds; near real poles the landscape has spurious minima
    sub = np.linspace(0, len(xs) - 1, min(len(xs), 8)).astype(int)

    def spread(shift):
        try:
            r = offsets(shift, xs[sub], q[sub])
        except PoleProximity:
            return np.inf
        return float(np.sqrt(np.mean(np.abs(r - r.mean()) ** 2)))

    grid = (np.arange(24) + 0.5) / 24 - 0.5
    cands = sorted((s * w1 + t * w3 for s, t in itertools.product(grid, grid)), key=spread)[:5]

    def resid(p):
        shift = complex(p[0], p[1])
        try:
            r = offsets(shift) - p[2]
        except PoleProximity:
            return np.full(2 * len(xs), 1e6)
        return np.concatenate([r.real, r.imag])

    best = None
    for seed in cands:
        r0 = offsets(seed)
        fit = least_squares(
            resid, [seed.real, seed.imag, float(np.mean(r0.real))], xtol=1e-15, ftol=1e-15, gtol=1e-15
        )
        if best is None or fit.cost < best.cost:
            best = fit
    shift = complex(best.x[0], best.x[1])
    shift, _, _ = reduce_to_cell(shift, lat)
    r = offsets(shift)
    const = float(np.mean(r.real))
    return LameFit(
        shift=shift,
        const=const,
        scatter=float(np.std(r.real) + np.max(np.abs(r.imag))),
        max_residual=float(np.max(np.abs(r - const))),
    )
