"""Explicit integration of the closed N=3 KdV dressing chain."""

from .chain import (
    ChainParams,
    ChainState,
    QuarticCurve,
    chain_rhs,
    curve_invariants,
    g_coordinates,
    integral_A,
    integral_C,
    quartic_coefficients,
    uniformization_parameter,
)
from .closed_form import (
    ClosedFormSolution,
    fit_shift,
    reconstruct_full_state,
    sigma1_at,
    sigma1_prime_at,
    solve,
)
from .elliptic import (
    EllipticInvariants,
    LatticeData,
    invert_p,
    lattice_from_invariants,
    weierstrass_p,
    weierstrass_p_prime,
    weierstrass_sigma,
    weierstrass_zeta,
)
from .hamiltonian import TauPolynomial, conservation_check, extract_h, tau_generating
from .integrator import Trajectory, conservation_report, integrate_chain, quartic_residual_report

__version__ = "0.1.0"
