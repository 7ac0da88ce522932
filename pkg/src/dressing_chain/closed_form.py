"""Closed-form solution of the N = 3 chain in Weierstrass zeta functions.

    s1(x) = zeta(x + nu + x0) - zeta(x - nu + x0) - zeta(2 nu)

on the lattice with invariants (g2, g3) built from the quartic for s1.
The remaining components follow algebraically from C and the first chain
equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .chain import (
    ChainParams,
    ChainState,
    QuarticCurve,
    chain_rhs,
    curve_invariants,
    integral_A,
    integral_C,
    quartic_coefficients,
    uniformization_parameter,
)
from .elliptic import (
    EllipticInvariants,
    invert_p,
    lattice_from_invariants,
    reduce_to_cell,
    weierstrass_p,
    weierstrass_p_and_prime,
    weierstrass_zeta,
)
from .errors import (
    ConvergenceFailure,
    DressingChainError,
    OffCurveInitialData,
    PoleProximity,
    SingularReconstruction,
)
from .integrator import POLE_MASK_HALFWIDTH, Trajectory

REALNESS_TOL = 1e-8
SINGULAR_TOL = 1e-10
NEAR_ZERO_GAP = 1e-2


class RealnessViolation(DressingChainError, ValueError):
    """A value that must be real came out with a significant imaginary part."""


@dataclass(frozen=True)
class ClosedFormSolution:
    nu: complex
    x0: complex
    inv: EllipticInvariants
    c: float
    mu: tuple[float, float, float]
    a_int: float

    def __post_init__(self):
        a = (self.mu[2] + self.mu[1] - 2 * self.mu[0] + self.c**2) / 3
        p = weierstrass_p(2 * self.nu, self.inv)
        if abs(p - a) > 1e-9 * (1 + abs(a)):
            raise ValueError(f"wp(2 nu) = {p} does not match a = {a}")

    @property
    def params(self) -> ChainParams:
        return ChainParams(self.mu)

    @property
    def quartic(self) -> QuarticCurve:
        return quartic_coefficients(self.c, self.a_int, self.params)

    @property
    def lattice(self):
        return lattice_from_invariants(self.inv)

    @property
    def real_period(self) -> float:
        return self.lattice.real_period.real

    def with_shift(self, x0: complex) -> "ClosedFormSolution":
        return ClosedFormSolution(self.nu, x0, self.inv, self.c, self.mu, self.a_int)


def _real(value: complex, what: str) -> float:
    if abs(value.imag) > REALNESS_TOL * (1 + abs(value.real)):
        raise RealnessViolation(f"{what} has imaginary part {value.imag:.3g}")
    return value.real


def sigma1_complex(x: complex, sol: ClosedFormSolution) -> complex:
    nu, x0, inv = sol.nu, sol.x0, sol.inv
    return (
        weierstrass_zeta(x + nu + x0, inv)
        - weierstrass_zeta(x - nu + x0, inv)
        - weierstrass_zeta(2 * nu, inv)
    )


def sigma1_prime_complex(x: complex, sol: ClosedFormSolution) -> complex:
    nu, x0, inv = sol.nu, sol.x0, sol.inv
    return -weierstrass_p(x + nu + x0, inv) + weierstrass_p(x - nu + x0, inv)


def sigma1_at(x: float, sol: ClosedFormSolution) -> float:
    return _real(sigma1_complex(x, sol), f"sigma1({x})")


def sigma1_prime_at(x: float, sol: ClosedFormSolution) -> float:
    return _real(sigma1_prime_complex(x, sol), f"sigma1'({x})")


def reconstruct_full_state(x: float, sol: ClosedFormSolution) -> ChainState:
    """(s1, s2, s3) at x from s1, s1' and the integral C.

    s2 + s3 = C - s1 and (s3 - s2)(s3 + s2) = s1' - mu3 + mu2.

    Near zeros of C - s1 the quotient is a 0/0; there the difference
    m = s3 - s2 is taken from the integral A instead, which is quadratic in
    m with a root that stays regular.
    """
    s1 = sigma1_at(x, sol)
    ds1 = sigma1_prime_at(x, sol)
    p = sol.c - s1
    if abs(p) < SINGULAR_TOL:
        raise SingularReconstruction(f"C - sigma1 = {p:.3g} at x={x}")
    m1, m2, m3 = sol.mu
    m = (ds1 - m3 + m2) / p
    # A = p((s1 + C)^2 - m^2)/4 + (mu2 + mu3) s1 + (mu2 + mu3 + 2 mu1) p / 2 + (mu2 - mu3) m / 2
    qa = p / 4
    qb = (m3 - m2) / 2
    qc = sol.a_int - p * (s1 + sol.c) ** 2 / 4 - (m2 + m3) * s1 - (m2 + m3 + 2 * m1) * p / 2
    disc = qb * qb - 4 * qa * qc
    # the two roots merge where s1' = 0, so the quadratic is only used close
    # to the 0/0 where the quotient loses digits
    if abs(p) < NEAR_ZERO_GAP * (1 + abs(s1)) and disc >= 0 and (qb or disc):
        qq = -0.5 * (qb + math.copysign(math.sqrt(disc), qb))
        roots = [qc / qq] + ([qq / qa] if qa else [])
        best = min(roots, key=lambda r: abs(r - m))
        if abs(best - m) <= 1e-4 * (1 + abs(m)):
            m = best
    return ChainState((s1, (p - m) / 2, (p + m) / 2))


def fit_shift(
    sigma1_initial: float,
    sigma1_prime_initial: float,
    nu: complex,
    inv: EllipticInvariants,
    max_iter: int = 30,
) -> complex:
    """Phase x0 matching s1(0) and s1'(0).

    Writing P = wp(x0 + nu) and Q = wp(x0 - nu), the solution obeys
    s1^2 = P + Q + wp(2 nu) and s1' = Q - P, so P is known from the initial
    data. Inverting wp gives x0 + nu up to sign; the sign that also
    reproduces Q (equivalently s1 itself) is kept and Newton-polished.
    """
    a, b = weierstrass_p_and_prime(2 * nu, inv)
    d = inv.g2 - 3 * a * a
    s0, y0 = complex(sigma1_initial), complex(sigma1_prime_initial)
    curve = QuarticCurve(a, b, d)
    scale = 1 + abs(s0) ** 4 + abs(a * s0 * s0) + abs(b * s0) + abs(d)
    off = abs(y0 * y0 - curve(s0))
    if off > 1e-8 * scale:
        raise OffCurveInitialData(f"initial data off the quartic by {off:.3g}")

    lat = lattice_from_invariants(inv)
    P = (s0 * s0 - a - y0) / 2
    u = invert_p(P, inv)

    def value(x0):
        return (
            weierstrass_zeta(x0 + nu, inv) - weierstrass_zeta(x0 - nu, inv) - weierstrass_zeta(2 * nu, inv)
        )

    def deriv(x0):
        return weierstrass_p(x0 - nu, inv) - weierstrass_p(x0 + nu, inv)

    best = None
    for x0 in (u - nu, -u - nu):
        try:
            err = abs(value(x0) - s0) + abs(deriv(x0) - y0)
        except PoleProximity:
            continue
        if best is None or err < best[1]:
            best = (x0, err)
    if best is None:
        raise ConvergenceFailure("no admissible shift candidate")
    x0 = best[0]

    tol = 1e-13 * (1 + abs(s0))
    for _ in range(max_iter):
        r = value(x0) - s0
        if abs(r) <= tol:
            break
        dv = deriv(x0)
        if abs(dv) < 1e-6 * (1 + abs(s0)) ** 2:
            break  # branch point: value is stationary, the inversion is already exact
        x0 = x0 - r / dv
    x0, _, _ = reduce_to_cell(x0, lat)
    vs, vd = value(x0), deriv(x0)
    if abs(vs - s0) > 1e-8 * (1 + abs(s0)) or abs(vd - y0) > 1e-8 * (1 + abs(y0) + abs(s0) ** 2):
        raise ConvergenceFailure(
            f"shift fit failed: s1 mismatch {abs(vs - s0):.3g}, s1' mismatch {abs(vd - y0):.3g}"
        )
    return x0


def solve(params: ChainParams, initial: ChainState, x0_perturbation: complex = 0.0) -> ClosedFormSolution:
    """Full reduction: C, A -> (a, b, d) -> (g2, g3) -> nu -> x0.

    ``x0_perturbation`` is added to the fitted shift; it exists to exercise
    residual checks and should be zero otherwise.
    """
    c = integral_C(initial)
    a_int = integral_A(initial, params)
    q = quartic_coefficients(c, a_int, params)
    inv = curve_invariants(q)
    nu = uniformization_parameter(params, c, a_int)
    y0 = float(chain_rhs(initial, params)[0])
    x0 = fit_shift(initial[0], y0, nu, inv)
    return ClosedFormSolution(nu, x0 + x0_perturbation, inv, c, tuple(params.mu), a_int)


def real_poles(sol: ClosedFormSolution, x_min: float, x_max: float) -> list[tuple[float, int]]:
    """Real poles of s1 in [x_min, x_max] as (position, residue) pairs."""
    lat = sol.lattice
    period = lat.real_period
    if abs(period.imag) > 1e-12 * abs(period):
        return []
    period = period.real
    out = []
    for base, residue in ((-sol.nu - sol.x0, 1), (sol.nu - sol.x0, -1)):
        s, t = lat.coordinates(base)
        if abs(t - round(t)) > 1e-9:
            continue
        x = s * period
        k_lo = math.ceil((x_min - x) / period)
        k_hi = math.floor((x_max - x) / period)
        out.extend((x + k * period, residue) for k in range(k_lo, k_hi + 1))
    return sorted(out)


def singular_points(sol: ClosedFormSolution, grid: np.ndarray) -> list[float]:
    """Real x in the grid span where some component of the state is singular.

    Poles of s1 are located analytically. s2 and s3 additionally blow up at
    zeros of C - s1 where s1' differs from mu3 - mu2; those zeros are
    bracketed on the grid and refined.
    """
    lo, hi = float(np.min(grid)), float(np.max(grid))
    poles = [x for x, _ in real_poles(sol, lo, hi)]
    pts = list(poles)

    def f(x):
        return sol.c - sigma1_at(x, sol)

    prev_x, prev_v = None, None
    for x in np.sort(grid):
        try:
            v = f(x)
        except PoleProximity:
            prev_x = None
            continue
        if prev_x is not None and np.sign(v) != np.sign(prev_v):
            if not any(prev_x <= p <= x for p in poles):
                root = brentq(f, prev_x, x, xtol=1e-14)
                if _is_pole_of_partners(root, sol):
                    pts.append(root)
        elif v == 0 and _is_pole_of_partners(float(x), sol):
            pts.append(float(x))
        prev_x, prev_v = x, v
    return sorted(pts)


def _is_pole_of_partners(x: float, sol: ClosedFormSolution) -> bool:
    # where C = s1 the first chain equation forces s1' = mu3 - mu2 unless
    # s2, s3 are infinite; otherwise the zero is a removable 0/0
    gap = abs(sigma1_prime_at(x, sol) - (sol.mu[2] - sol.mu[1]))
    return gap > 1e-6 * (1 + abs(sol.mu[2] - sol.mu[1]))


def closed_form_trajectory(
    sol: ClosedFormSolution,
    grid,
    mask_halfwidth: float = POLE_MASK_HALFWIDTH,
    singular=None,
) -> Trajectory:
    """Evaluate the full state on ``grid``; rows near singularities are masked (NaN).

    ``singular`` overrides the singular points searched for on ``grid``,
    e.g. when the grid is a truncated prefix of a longer span.
    """
    grid = np.asarray(grid, dtype=float)
    singular = np.array(singular_points(sol, grid) if singular is None else singular)
    states = np.full((len(grid), 3), np.nan)
    masked = np.zeros(len(grid), dtype=bool)
    for i, x in enumerate(grid):
        if len(singular) and np.min(np.abs(singular - x)) <= mask_halfwidth:
            masked[i] = True
            continue
        try:
            states[i] = reconstruct_full_state(x, sol).sigma
        except (PoleProximity, SingularReconstruction):
            masked[i] = True
    return Trajectory(grid, states, masked=masked)
