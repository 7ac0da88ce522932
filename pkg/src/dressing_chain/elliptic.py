"""Weierstrass elliptic functions parameterized by the invariants (g2, g3).

Arguments are reduced to the Voronoi cell of the period lattice around the
origin, halved until they sit well inside the disc of convergence of the
Laurent expansion, and then doubled back with the duplication formulas.
Half-periods come from the arithmetic-geometric mean of the cubic's roots.

All functions take and return Python complex numbers.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

from scipy.special import elliprf

from .errors import ConvergenceFailure, DegenerateLattice, PoleProximity, RangeOverflow

N_LAURENT = 24
POLE_RADIUS = 1e-8
DEGENERACY_TOL = 1e-14
# |z| / |shortest period| below which the truncated series is used directly
SERIES_RADIUS = 0.4


@dataclass(frozen=True)
class EllipticInvariants:
    g2: complex
    g3: complex
    discriminant: complex = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "g2", complex(self.g2))
        object.__setattr__(self, "g3", complex(self.g3))
        object.__setattr__(self, "discriminant", self.g2**3 - 27 * self.g3**2)

    @property
    def degenerate(self) -> bool:
        scale = max(abs(self.g2) ** 3, abs(self.g3) ** 2)
        return abs(self.discriminant) <= DEGENERACY_TOL * scale

    @property
    def is_real(self) -> bool:
        return self.g2.imag == 0 and self.g3.imag == 0


@dataclass(frozen=True)
class LatticeData:
    e1: complex
    e2: complex
    e3: complex
    omega1: complex
    omega3: complex
    eta1: complex
    eta3: complex

    @property
    def roots(self):
        return (self.e1, self.e2, self.e3)

    @property
    def real_period(self):
        """Twice omega1; real whenever the invariants are real."""
        return 2 * self.omega1

    def coordinates(self, z: complex) -> tuple[float, float]:
        """Real coordinates (s, t) with z = 2*s*omega1 + 2*t*omega3."""
        w1, w3 = 2 * self.omega1, 2 * self.omega3
        det = (w1.conjugate() * w3).imag
        s = (z.conjugate() * w3).imag / det
        t = (w1.conjugate() * z).imag / det
        return s, t


# --------------------------------------------------------------------------
# cubic roots and lattice


def _cubic_roots(g2: complex, g3: complex, real: bool):
    """Roots of 4t^3 - g2 t - g3, sorted by descending real then imaginary part."""
    p = -g2 / 4
    q = -g3 / 4
    disc = (q / 2) ** 2 + (p / 3) ** 3
    sq = cmath.sqrt(disc)
    # larger of the two candidates avoids cancellation
    w = -q / 2 + sq if abs(-q / 2 + sq) >= abs(-q / 2 - sq) else -q / 2 - sq
    if w == 0:
        return (0j, 0j, 0j)
    u = w ** (1 / 3)
    rot = cmath.exp(2j * math.pi / 3)
    roots = []
    for k in range(3):
        uk = u * rot**k
        roots.append(uk - p / (3 * uk))
    polished = []
    for t in roots:
        for _ in range(3):
            f = 4 * t**3 - g2 * t - g3
            df = 12 * t**2 - g2
            if df == 0:
                break
            t = t - f / df
        polished.append(t)
    if real:
        polished = _snap_conjugates(polished)
    scale = max(abs(t) for t in polished)
    key_tol = 1e-12 * scale

    def key(t):
        return (-round(t.real / key_tol) if key_tol else 0, -t.imag)

    return tuple(sorted(polished, key=key))


def _snap_conjugates(roots):
    scale = max(abs(t) for t in roots)
    real = [t for t in roots if abs(t.imag) <= 1e-12 * scale]
    if len(real) == 3:
        return [complex(t.real, 0.0) for t in roots]
    # one real root and a conjugate pair
    r = min(roots, key=lambda t: abs(t.imag))
    pair = [t for t in roots if t is not r]
    c = (pair[0] + pair[1].conjugate()) / 2
    c = complex(c.real, abs(c.imag))
    return [complex(r.real, 0.0), c, c.conjugate()]


def _agm(a: complex, b: complex) -> complex:
    """Arithmetic-geometric mean with the optimal choice of square roots."""
    for _ in range(64):
        am = (a + b) / 2
        gm = cmath.sqrt(a * b)
        if abs(am - gm) > abs(am + gm):
            gm = -gm
        done = abs(a - b) <= 1e-14 * abs(a)
        a, b = am, gm
        if done:
            return a
    raise ConvergenceFailure("AGM iteration did not converge")


def _gauss_reduce(w1: complex, w2: complex):
    """Lagrange-Gauss reduction of a lattice basis."""
    for _ in range(200):
        if abs(w2) < abs(w1):
            w1, w2 = w2, w1
        mu = (w2 * w1.conjugate()).real / abs(w1) ** 2
        m = round(mu)
        if m == 0:
            break
        w2 = w2 - m * w1
    return w1, w2


def _period_candidates(roots):
    out = []
    for i, j, k in itertools.permutations(range(3)):
        a = cmath.sqrt(roots[i] - roots[k])
        b = cmath.sqrt(roots[i] - roots[j])
        if a == 0 or b == 0:
            continue
        out.append(math.pi / _agm(a, b))
    return out


def _basis(roots, real: bool):
    cands = sorted(_period_candidates(roots), key=abs)
    w1 = cands[0]
    for w in cands[1:]:
        if abs((w / w1).imag) > 1e-8:
            w2 = w
            break
    else:
        raise DegenerateLattice("period candidates are collinear")
    w1, w2 = _gauss_reduce(w1, w2)
    if real:
        w1, w2 = _real_basis(w1, w2)
    if (w2 / w1).imag < 0:
        w2 = -w2
    return w1 / 2, w2 / 2


def _real_basis(w1: complex, w2: complex):
    """Rebase so that the first vector is the primitive positive real period."""
    best = None
    for m, n in itertools.product(range(-2, 3), repeat=2):
        if (m, n) == (0, 0) or math.gcd(m, n) != 1:
            continue
        v = m * w1 + n * w2
        if abs(v.imag) <= 1e-10 * abs(v) and v.real > 0:
            if best is None or v.real < best[0].real:
                best = (complex(v.real, 0.0), m, n)
    if best is None:
        return w1, w2
    r, m, n = best
    # complete (m, n) to a unimodular matrix
    for p, q in itertools.product(range(-2, 3), repeat=2):
        if m * q - n * p == 1:
            break
    v = p * w1 + q * w2
    v = v - round((v * r.conjugate()).real / abs(r) ** 2) * r
    # the imaginary half-period of a real lattice is either purely imaginary
    # or has real part half the real period
    re = v.real / r.real
    re = round(re * 2) / 2
    v = complex(re * r.real, v.imag)
    return r, v


@lru_cache(maxsize=256)
def lattice_from_invariants(inv: EllipticInvariants) -> LatticeData:
    """Roots, half-periods and quasi-period increments of the lattice.

    Raises:
        DegenerateLattice: if the discriminant vanishes relative to the
            scale of the invariants.
    """
    if inv.degenerate:
        raise DegenerateLattice(
            f"degenerate lattice: discriminant {inv.discriminant:.6g}",
            discriminant=inv.discriminant,
        )
    real = inv.is_real
    roots = _cubic_roots(inv.g2, inv.g3, real)
    omega1, omega3 = _basis(roots, real)
    k = _Kernel(inv, omega1, omega3)
    eta1 = k.zeta_small(omega1)
    eta3 = k.zeta_small(omega3)
    legendre = eta1 * omega3 - eta3 * omega1
    if abs(legendre - 0.5j * math.pi) > 1e-8:
        raise ConvergenceFailure(f"lattice basis failed the Legendre relation: {legendre}")
    return LatticeData(*roots, omega1=omega1, omega3=omega3, eta1=eta1, eta3=eta3)


# --------------------------------------------------------------------------
# evaluation kernel


def laurent_coefficients(g2: complex, g3: complex, n: int = N_LAURENT):
    """Coefficients c_k, k = 2..n+1, of wp(z) = 1/z^2 + sum c_k z^(2k-2)."""
    c = {2: g2 / 20, 3: g3 / 28}
    for k in range(4, n + 2):
        s = sum(c[m] * c[k - m] for m in range(2, k - 1))
        c[k] = 3 * s / ((2 * k + 1) * (k - 3))
    return [c[k] for k in range(2, n + 2)]


class _Kernel:
    def __init__(self, inv: EllipticInvariants, omega1: complex, omega3: complex):
        self.g2 = inv.g2
        self.g3 = inv.g3
        self.coef = laurent_coefficients(inv.g2, inv.g3)
        self.omega1 = omega1
        self.omega3 = omega3
        # the real-normalized basis need not be reduced, so reduce it here
        w1, w3 = _gauss_reduce(2 * omega1, 2 * omega3)
        shortest = min(abs(w1), abs(w3), abs(w1 + w3), abs(w1 - w3))
        self.radius = SERIES_RADIUS * shortest

    def _series(self, z):
        """(wp, wp', zeta, log(sigma/z)) by the truncated Laurent series."""
        z2 = z * z
        p = 1 / z2
        dp = -2 / (z2 * z)
        zeta = 1 / z
        lsig = 0j
        zp = 1 + 0j  # z^(2k-4)
        for i, c in enumerate(self.coef):
            k = i + 2
            zp_next = zp * z2  # z^(2k-2)
            p += c * zp_next
            dp += (2 * k - 2) * c * zp * z
            zeta -= c * zp_next * z / (2 * k - 1)
            lsig -= c * zp_next * z2 / (2 * k * (2 * k - 1))
            zp = zp_next
        return p, dp, zeta, lsig

    def _evaluate(self, z):
        """(wp, wp', zeta, log sigma) at z without lattice reduction."""
        n = 0
        w = z
        while abs(w) > self.radius:
            w /= 2
            n += 1
        p, dp, zeta, lsig = self._series(w)
        lsig += cmath.log(w)
        g2 = self.g2
        for _ in range(n):
            ddp = 6 * p * p - g2 / 2
            slope = ddp / dp
            p2 = -2 * p + slope * slope / 4
            dp2 = -dp - slope * (p2 - p)
            zeta = 2 * zeta + slope / 2
            lsig = cmath.log(-dp) + 4 * lsig
            p, dp = p2, dp2
        return p, dp, zeta, lsig

    def zeta_small(self, z):
        return self._evaluate(z)[2]


@lru_cache(maxsize=256)
def _kernel(inv: EllipticInvariants) -> tuple[_Kernel, LatticeData]:
    lat = lattice_from_invariants(inv)
    return _Kernel(inv, lat.omega1, lat.omega3), lat


def reduce_to_cell(z: complex, lat: LatticeData) -> tuple[complex, int, int]:
    """Write z = r + 2m*omega1 + 2n*omega3 with r in the cell nearest 0."""
    s, t = lat.coordinates(z)
    m, n = round(s), round(t)
    w1, w3 = 2 * lat.omega1, 2 * lat.omega3
    best = None
    for dm, dn in itertools.product((-1, 0, 1), repeat=2):
        mm, nn = m + dm, n + dn
        r = z - mm * w1 - nn * w3
        if best is None or abs(r) < abs(best[0]):
            best = (r, mm, nn)
    return best


def _reduced(z, inv, allow_pole=False):
    kern, lat = _kernel(inv)
    z = complex(z)
    r, m, n = reduce_to_cell(z, lat)
    if abs(r) < POLE_RADIUS and not allow_pole:
        raise PoleProximity(f"argument {z} lies within {POLE_RADIUS} of a lattice point")
    return kern, lat, r, m, n


def weierstrass_p(z: complex, inv: EllipticInvariants) -> complex:
    kern, _, r, _, _ = _reduced(z, inv)
    return kern._evaluate(r)[0]


def weierstrass_p_prime(z: complex, inv: EllipticInvariants) -> complex:
    kern, _, r, _, _ = _reduced(z, inv)
    return kern._evaluate(r)[1]


def weierstrass_p_and_prime(z: complex, inv: EllipticInvariants) -> tuple[complex, complex]:
    kern, _, r, _, _ = _reduced(z, inv)
    p, dp, _, _ = kern._evaluate(r)
    return p, dp


def weierstrass_zeta(z: complex, inv: EllipticInvariants) -> complex:
    """zeta(z) with quasi-periodic bookkeeping for the lattice shift."""
    kern, lat, r, m, n = _reduced(z, inv)
    return kern._evaluate(r)[2] + 2 * m * lat.eta1 + 2 * n * lat.eta3


def weierstrass_sigma(z: complex, inv: EllipticInvariants) -> complex:
    """Weierstrass sigma; entire, so no pole check.

    Raises:
        RangeOverflow: when the result does not fit in a double.
    """
    kern, lat, r, m, n = _reduced(z, inv, allow_pole=True)
    if r == 0:
        return 0j
    lsig = kern._evaluate(r)[3]
    shift = 2 * m * lat.omega1 + 2 * n * lat.omega3
    eta = 2 * m * lat.eta1 + 2 * n * lat.eta3
    lsig += eta * (r + shift / 2)
    if (m + n + m * n) % 2:
        lsig += 1j * math.pi
    if lsig.real > 709:
        raise RangeOverflow(f"sigma({z}) overflows double precision")
    return cmath.exp(lsig)


# --------------------------------------------------------------------------
# inversion


def _canonical_branch(z: complex, lat: LatticeData) -> complex:
    z, _, _ = reduce_to_cell(z, lat)
    if z.real < 0 or (z.real == 0 and z.imag < 0):
        z = -z
    return z


def invert_p(w: complex, inv: EllipticInvariants, max_iter: int = 50) -> complex:
    """Solve wp(z) = w for z, an incomplete elliptic integral of the first kind.

    The seed is Carlson's R_F(w - e1, w - e2, w - e3), which equals the
    integral from w to infinity of dt / sqrt(4t^3 - g2 t - g3). Newton steps
    polish it. Of the two solutions +-z in the cell, the one with
    Re(z) >= 0 (Im(z) >= 0 on the imaginary axis) is returned.
    """
    kern, lat = _kernel(inv)
    w = complex(w)
    e = lat.roots
    scale = 1 + abs(w)
    tol = 1e-13 * scale

    seeds = []
    try:
        seed = complex(elliprf(w - e[0], w - e[1], w - e[2]))
        if cmath.isfinite(seed):
            seeds.append(seed)
    except (ValueError, ZeroDivisionError):
        pass
    # fallback seeds spread over the cell
    for s, t in itertools.product((0.1, 0.3, 0.5), (0.0, 0.25, 0.5)):
        seeds.append(2 * s * lat.omega1 + 2 * t * lat.omega3)

    for z in seeds:
        for _ in range(max_iter):
            try:
                p, dp = weierstrass_p_and_prime(z, inv)
            except PoleProximity:
                break
            err = p - w
            if abs(err) <= tol:
                return _canonical_branch(z, lat)
            # quadratic model wp(z+h) ~ p + dp h + ddp h^2 / 2 stays usable
            # near half-periods where wp' vanishes
            ddp = 6 * p * p - inv.g2 / 2
            disc = cmath.sqrt(dp * dp - 2 * ddp * err)
            den = -dp - disc if abs(-dp - disc) >= abs(-dp + disc) else -dp + disc
            if den != 0:
                h = 2 * err / den
            elif dp != 0:
                h = -err / dp
            else:
                break
            z = z + h
    raise ConvergenceFailure(f"invert_p did not converge for w={w}")

