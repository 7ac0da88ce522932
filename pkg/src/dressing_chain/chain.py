"""The periodically closed dressing chain as a dynamical system.

The closed chain of period N reads

    (s_i + s_{i+1})' = s_i^2 - s_{i+1}^2 + mu_i - mu_{i+1},   i = 1..N (cyclic).

For N = 3 it has the first integrals C = s1 + s2 + s3 and
A = g1 g2 g3 + mu2 g3 + mu1 g2 + mu3 g1 with g_i = s_i + s_{i+1}, and
eliminating s2, s3 leaves (s1')^2 = s1^4 - 6a s1^2 + 4b s1 + d.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elliptic import (
    EllipticInvariants,
    invert_p,
    lattice_from_invariants,
    weierstrass_p_and_prime,
)
from .errors import ConvergenceFailure, EvenPeriod


@dataclass(frozen=True)
class ChainParams:
    mu: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(float(m) for m in self.mu))
        if len(self.mu) < 1:
            raise ValueError("chain period must be positive")
        # alpha_i = mu_i - mu_{i+1} telescopes under cyclic indexing
        assert abs(sum(self.alpha)) <= 1e-12 * (1 + sum(abs(m) for m in self.mu))

    @property
    def n(self) -> int:
        return len(self.mu)

    @property
    def alpha(self) -> tuple[float, ...]:
        mu = self.mu
        return tuple(mu[i] - mu[(i + 1) % len(mu)] for i in range(len(mu)))


@dataclass(frozen=True)
class ChainState:
    sigma: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "sigma", tuple(float(s) for s in self.sigma))

    def __len__(self):
        return len(self.sigma)

    def __getitem__(self, i):
        return self.sigma[i]


@dataclass(frozen=True)
class QuarticCurve:
    """(s')^2 = s^4 - 6a s^2 + 4b s + d."""

    a: float
    b: float
    d: float

    def __call__(self, s):
        return s**4 - 6 * self.a * s**2 + 4 * self.b * s + self.d

    @property
    def coefficients(self) -> np.ndarray:
        """Descending-degree coefficients, suitable for ``np.roots``."""
        return np.array([1.0, 0.0, -6 * self.a, 4 * self.b, self.d])

    @property
    def degenerate(self) -> bool:
        """True when the quartic has a repeated root."""
        return curve_invariants(self).degenerate


def _check_period(n: int):
    if n % 2 == 0:
        raise EvenPeriod(f"closed chain of even period N={n} has a singular linear system")


def chain_rhs_array(sigma: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Right-hand side for array inputs; hot loop of the integrator.

    The right-hand side of the i-th chain equation, r_i, is the derivative of
    g_i = s_i + s_{i+1}; for odd N the cyclic system inverts as
    s_i' = (r_i - r_{i+1} + r_{i+2} - ... + r_{i-1}) / 2.
    """
    n = sigma.shape[-1]
    if n == 3:
        s1, s2, s3 = sigma[..., 0], sigma[..., 1], sigma[..., 2]
        m1, m2, m3 = mu
        return np.stack(
            [
                s3 * s3 - s2 * s2 + m3 - m2,
                s1 * s1 - s3 * s3 + m1 - m3,
                s2 * s2 - s1 * s1 + m2 - m1,
            ],
            axis=-1,
        )
    sq = sigma * sigma + mu
    r = sq - np.roll(sq, -1, axis=-1)
    signs = np.array([(-1) ** k for k in range(n)], dtype=float)
    out = np.empty_like(sigma)
    for i in range(n):
        out[..., i] = np.roll(r, -i, axis=-1) @ signs / 2
    return out


def chain_rhs(state: ChainState, params: ChainParams) -> np.ndarray:
    """Derivatives (s_1', ..., s_N') of the closed chain.

    Raises:
        EvenPeriod: N even, where the derivatives are not determined.
    """
    n = params.n
    if len(state) != n:
        raise ValueError(f"state has {len(state)} components, chain period is {n}")
    _check_period(n)
    return chain_rhs_array(np.asarray(state.sigma, dtype=float), np.asarray(params.mu, dtype=float))


def _require_three(n):
    if n != 3:
        raise ValueError(f"operation defined for N=3 only (got N={n})")


def integral_C(state: ChainState) -> float:
    _require_three(len(state))
    s1, s2, s3 = state.sigma
    return s1 + s2 + s3


def g_coordinates(state: ChainState) -> np.ndarray:
    s = np.asarray(state.sigma, dtype=float)
    return s + np.roll(s, -1)


def integral_A(state: ChainState, params: ChainParams) -> float:
    _require_three(len(state))
    g1, g2, g3 = g_coordinates(state)
    m1, m2, m3 = params.mu
    return g1 * g2 * g3 + m2 * g3 + m1 * g2 + m3 * g1


def quartic_coefficients(c: float, a_int: float, params: ChainParams) -> QuarticCurve:
    """Coefficients of the quartic satisfied by s1 given the integrals C, A.

    Eliminating s2, s3 with C and A gives

        (s1')^2 = s1^4 - 2(C^2 + mu2 + mu3 - 2 mu1) s1^2 + 4(A - 2 mu1 C) s1
                  + C^4 + 2(mu2 + mu3 + 2 mu1) C^2 - 4 A C + (mu3 - mu2)^2.
    """
    _require_three(params.n)
    m1, m2, m3 = params.mu
    a = (c * c + m2 + m3 - 2 * m1) / 3
    b = a_int - 2 * m1 * c
    d = c**4 + 2 * (m2 + m3 + 2 * m1) * c**2 - 4 * a_int * c + (m3 - m2) ** 2
    return QuarticCurve(a, b, d)


def quartic_for_state(state: ChainState, params: ChainParams) -> QuarticCurve:
    return quartic_coefficients(integral_C(state), integral_A(state, params), params)


def curve_invariants(q: QuarticCurve) -> EllipticInvariants:
    """Weierstrass invariants uniformizing the quartic.

    With wp(2 nu) = a and wp'(2 nu) = b the point (b, a) lies on
    b^2 = 4a^3 - g2 a - g3, which fixes g2 = d + 3a^2, g3 = a^3 - a d - b^2.
    """
    a, b, d = q.a, q.b, q.d
    return EllipticInvariants(d + 3 * a * a, a**3 - b * b - a * d)


def uniformization_parameter(params: ChainParams, c: float, a_int: float) -> complex:
    """nu with wp(2 nu) = a and wp'(2 nu) = b on the curve's lattice.

    The inverse of wp fixes 2 nu up to sign; the sign is chosen so that
    wp'(2 nu) = +b, the orientation under which the closed-form solution
    satisfies the quartic with a +4b linear term.
    """
    q = quartic_coefficients(c, a_int, params)
    inv = curve_invariants(q)
    lattice_from_invariants(inv)
    two_nu = invert_p(q.a, inv)
    p, dp = weierstrass_p_and_prime(two_nu, inv)
    if abs(dp + q.b) < abs(dp - q.b):
        two_nu = -two_nu
        dp = -dp
    scale = 1 + abs(q.a)
    if abs(p - q.a) > 1e-9 * scale or abs(dp - q.b) > 1e-9 * (1 + abs(q.b)) ** 1.5 * scale:
        raise ConvergenceFailure(f"nu failed its postcondition: wp(2nu)={p}, wp'(2nu)={dp}")
    return two_nu / 2
