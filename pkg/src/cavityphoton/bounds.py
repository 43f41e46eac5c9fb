"""Closed-form cooperativities and efficiency bounds.

All formulas use the rate convention of :mod:`cavityphoton.model`
(C = g^2 / (2 kappa gamma)).  Lossless limits (kappa_in = 0 or
alpha_loss = 0) give ``C_in = inf`` and a failure bound of exactly 0
instead of raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .model import PhysicalCavity, RateSet, validate

# CODATA 2018 exact / recommended values
EPSILON_0 = 8.8541878128e-12       # F/m
HBAR = 1.054571817e-34             # J s
SPEED_OF_LIGHT = 299792458.0       # m/s


@dataclass(frozen=True)
class BoundReport:
    C: float
    C_in: float
    eta_esc: float
    ps_upper: float
    pf_lower: float
    kappa_ex_opt: float
    prep_upper: float
    pf_lower_approx: float


def cooperativities(rates: RateSet) -> tuple[float, float]:
    rates = validate(rates)
    g2 = rates.g ** 2
    C = g2 / (2 * rates.kappa) / rates.gamma
    C_in = g2 / (2 * rates.kappa_in) / rates.gamma if rates.kappa_in > 0 else math.inf
    return C, C_in


def ps_upper(rates: RateSet) -> float:
    """Ceiling on the success probability, repumped photons included.

    eta_esc * 2C / (1 + 2C - r_u), the summed geometric series over repump
    counts, evaluated in the slow-variation limit.
    """
    rates = validate(rates)
    C, _ = cooperativities(rates)
    return rates.kappa_ex / rates.kappa * 2 * C / (1 + 2 * C - rates.r_u)


def ps_upper_norep(rates: RateSet) -> float:
    """Ceiling on photons emitted before any repump, eta_esc * 2C / (1 + 2C)."""
    rates = validate(rates)
    C, _ = cooperativities(rates)
    return rates.kappa_ex / rates.kappa * 2 * C / (1 + 2 * C)


def _check_ru(r_u):
    if not 0.0 <= r_u <= 1.0:
        raise DomainError(f"r_u must lie in [0, 1], got {r_u}")


def pf_lower(C_in: float, r_u: float = 0.0) -> float:
    """Smallest achievable failure probability, 2 / (1 + sqrt(1 + 2 C_in / (1 - r_u)))."""
    _check_ru(r_u)
    if C_in < 0:
        raise DomainError(f"C_in must be >= 0, got {C_in}")
    if r_u == 1.0 or math.isinf(C_in):
        return 0.0
    return 2.0 / (1.0 + math.sqrt(1.0 + 2.0 * C_in / (1.0 - r_u)))


def pf_lower_approx(C_in: float) -> float:
    """Large-C_in asymptote sqrt(2 / C_in)."""
    if C_in <= 0:
        return math.inf
    return math.sqrt(2.0 / C_in)


def kappa_ex_opt(kappa_in: float, C_in: float, r_u: float = 0.0) -> float:
    """Output-coupling rate that minimizes the failure bound."""
    _check_ru(r_u)
    if not kappa_in > 0:
        raise DomainError("kappa_in must be > 0")
    if r_u == 1.0:
        raise DomainError("r_u = 1: no finite optimum")
    return kappa_in * math.sqrt(1.0 + 2.0 * C_in / (1.0 - r_u))


def prep_upper(rates: RateSet) -> float:
    """Slow-variation estimate of the repumped share of P_S.

    eta_esc * 2C/(1+2C) * r_u / (1 + 2C - r_u).  It bounds P_rep only when
    I_g'/(kappa C) is negligible; fast pulses can exceed it.
    """
    rates = validate(rates)
    C, _ = cooperativities(rates)
    eta = rates.kappa_ex / rates.kappa
    return eta * (2 * C / (1 + 2 * C)) * rates.r_u / (1 + 2 * C - rates.r_u)


def bound_report(rates: RateSet) -> BoundReport:
    rates = validate(rates)
    C, C_in = cooperativities(rates)
    pf = pf_lower(C_in, rates.r_u)
    if rates.kappa_in > 0 and rates.r_u < 1:
        k_opt = kappa_ex_opt(rates.kappa_in, C_in, rates.r_u)
    else:
        k_opt = math.inf
    return BoundReport(
        C=C,
        C_in=C_in,
        eta_esc=rates.kappa_ex / rates.kappa,
        ps_upper=ps_upper(rates),
        pf_lower=pf,
        kappa_ex_opt=k_opt,
        prep_upper=prep_upper(rates),
        pf_lower_approx=pf_lower_approx(C_in),
    )


# ---------------------------------------------------------------------------
# physical cavity

@dataclass(frozen=True)
class PhysicalRates:
    g: float
    kappa_in: float
    gamma: float
    r_A: float
    C_in: float


def absorption_cross_section(omega_ge: float) -> float:
    wavelength = 2 * math.pi * SPEED_OF_LIGHT / omega_ge
    return 3 * wavelength ** 2 / (2 * math.pi)


def rates_from_physical(p: PhysicalCavity) -> PhysicalRates:
    """SI rates (rad/s) of a Fabry-Perot cavity holding one emitter.

    gamma is the total amplitude decay rate, i.e. the |g>-|e> partial rate
    divided by r_g.
    """
    mu2 = p.mu_ge ** 2
    g = math.sqrt(mu2 * p.omega_ge / (2 * EPSILON_0 * HBAR * p.A_eff * p.L))
    kappa_in = SPEED_OF_LIGHT * p.alpha_loss / (2 * p.L)
    rg_gamma = mu2 * p.omega_ge ** 3 / (6 * math.pi * EPSILON_0 * HBAR * SPEED_OF_LIGHT ** 3)
    gamma = rg_gamma / p.r_g
    r_A = p.A_eff / absorption_cross_section(p.omega_ge)
    C_in = g ** 2 / (2 * kappa_in * gamma) if kappa_in > 0 else math.inf
    return PhysicalRates(g=g, kappa_in=kappa_in, gamma=gamma, r_A=r_A, C_in=C_in)


def cin_from_roundtrip(alpha_loss: float, r_A: float, r_g: float, r_u: float = 0.0) -> float:
    """Internal cooperativity from round-trip loss and mode-area ratio: r_g / (2 alpha_loss r_A).

    Use :func:`effective_cin` for the repump-corrected 2 C_in / (1 - r_u).
    """
    if not alpha_loss > 0:
        raise DomainError("alpha_loss must be > 0")
    if not r_A > 0:
        raise DomainError("r_A must be > 0")
    if not 0 < r_g <= 1:
        raise DomainError("r_g must lie in (0, 1]")
    if not 0 <= r_u < 1:
        raise DomainError("r_u must lie in [0, 1)")
    return r_g / (2 * alpha_loss * r_A)


def effective_cin(alpha_loss: float, r_A: float, r_g: float, r_u: float = 0.0) -> float:
    """2 C_in / (1 - r_u); never exceeds 1 / (alpha_loss r_A)."""
    return 2 * cin_from_roundtrip(alpha_loss, r_A, r_g, r_u) / (1 - r_u)
