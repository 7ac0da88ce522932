"""Generating function of the commuting Hamiltonians of the closed chain.

    tau_N = prod_j (1 + z_{j+1} d^2 / dg_j dg_{j+1}) prod_k g_k,   z_i = beta_i - lambda

is multilinear in g_1..g_N. Monomials are stored as bitmasks over the index
set and their coefficients as polynomials in lambda (ascending degree). With
the sign convention used here, tau_N = (-1)^N (h_0 lambda^n + ... + h_n),
n = (N - 1) / 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .chain import _check_period
from .integrator import Trajectory


def _poly_add(p, q):
    n = max(len(p), len(q))
    out = [0] * n
    for i, c in enumerate(p):
        out[i] += c
    for i, c in enumerate(q):
        out[i] += c
    return _trim(out)


def _poly_mul(p, q):
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return _trim(out)


def _trim(p):
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return tuple(p)


@dataclass(frozen=True)
class TauPolynomial:
    """Multilinear polynomial in g_1..g_N with lambda-polynomial coefficients."""

    n_period: int
    terms: dict  # bitmask -> tuple of lambda coefficients, ascending

    def monomials(self):
        """(indices, coefficients) pairs, 1-based indices, in a fixed order.

        Higher g-degree first, then lexicographic in the indices.
        """
        items = []
        for mask, coef in self.terms.items():
            idx = tuple(i + 1 for i in range(self.n_period) if mask >> i & 1)
            items.append((idx, coef))
        items.sort(key=lambda t: (-len(t[0]), t[0]))
        return items

    @property
    def lambda_degree(self) -> int:
        return max((len(c) - 1 for c in self.terms.values() if any(c)), default=0)

    def evaluate(self, g: Sequence[float]) -> np.ndarray:
        """Collect the lambda polynomial at numeric g (ascending coefficients)."""
        out = np.zeros(self.lambda_degree + 1)
        for mask, coef in self.terms.items():
            w = 1.0
            for i in range(self.n_period):
                if mask >> i & 1:
                    w *= g[i]
            out[: len(coef)] += w * np.asarray(coef, dtype=float)
        return out

    def to_sympy(self, g_symbols, lam):
        import sympy as sp

        expr = 0
        for mask, coef in self.terms.items():
            mono = sp.Mul(*[g_symbols[i] for i in range(self.n_period) if mask >> i & 1])
            expr += mono * sum(sp.nsimplify(c) * lam**k for k, c in enumerate(coef))
        return sp.expand(expr)

    def format(self) -> list[str]:
        lines = []
        for idx, coef in self.monomials():
            mono = "*".join(f"g{i}" for i in idx) or "1"
            lines.append(f"{mono}: " + " ".join(repr(float(c)) for c in coef))
        return lines


def apply_pair_operator(tau: TauPolynomial, j: int, beta_next) -> TauPolynomial:
    """Apply (1 + (beta_next - lambda) d^2/dg_j dg_{j+1}), 0-based cyclic j."""
    n = tau.n_period
    i1, i2 = j % n, (j + 1) % n
    both = (1 << i1) | (1 << i2)
    z = (beta_next, -1)
    out = dict(tau.terms)
    for mask, coef in tau.terms.items():
        if mask & both == both:
            new = mask & ~both
            out[new] = _poly_add(out.get(new, (0,)), _poly_mul(coef, z))
    return TauPolynomial(n, {m: c for m, c in out.items() if any(c)})


def tau_generating(n_period: int, beta: Sequence, order: Sequence[int] | None = None) -> TauPolynomial:
    """Expand tau_N exactly.

    Factors are applied right to left (j = N first) unless ``order`` gives
    another sequence of 1-based j. Coefficients keep the numeric type of
    ``beta`` (pass Fractions for exact arithmetic).
    """
    _check_period(n_period)
    if n_period < 3:
        raise ValueError("tau_N needs N >= 3")
    if len(beta) != n_period:
        raise ValueError("beta must have N entries")
    one = Fraction(1) if all(isinstance(b, (int, Fraction)) for b in beta) else 1.0
    tau = TauPolynomial(n_period, {(1 << n_period) - 1: (one,)})
    if order is None:
        order = range(n_period, 0, -1)
    for j in order:
        # factor j pairs g_j, g_{j+1} with z_{j+1}
        tau = apply_pair_operator(tau, j - 1, beta[j % n_period])
    return tau


def extract_h(tau: TauPolynomial, state_g: Sequence[float]) -> np.ndarray:
    """h_0..h_n at the given g, h_0 multiplying lambda^n."""
    n = (tau.n_period - 1) // 2
    coef = np.zeros(n + 1)
    ev = tau.evaluate(state_g)
    coef[: len(ev)] = ev
    sign = -1.0 if tau.n_period % 2 else 1.0
    return sign * coef[::-1]


def conservation_check(traj: Trajectory, beta: Sequence[float]) -> np.ndarray:
    """Max drift of each h_i over the unmasked points of the trajectory."""
    s = traj.unmasked
    n_period = s.shape[1]
    tau = tau_generating(n_period, [float(b) for b in beta])
    g = s + np.roll(s, -1, axis=1)
    hs = np.array([extract_h(tau, gi) for gi in g])
    if len(hs) == 0:
        return np.zeros((n_period - 1) // 2 + 1)
    return np.max(np.abs(hs - hs[0]), axis=0)
