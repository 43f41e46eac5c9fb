"""Conditioned (no-jump) evolution of the single-excitation amplitudes.

The state |psi> = a_u |u,0> + a_e |e,0> + a_g |g,1> evolves under H_eff from
:func:`cavityphoton.model.effective_hamiltonian`.  Three quadratures ride
along as extra ODE components so they inherit the integrator's accuracy:

    I_g  = int |a_g|^2 dt
    I_e  = int |a_e|^2 dt
    I_g' = int |da_g/dt|^2 dt,   da_g/dt = -kappa a_g - g a_e

The probability of emitting into the output mode without any repumping is
2 kappa_ex I_g.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._ode import integrate
from .model import (DrivePulse, RateSet, StopRule, ToleranceSpec, effective_hamiltonian,
                    fingerprint, resolve_t_max, validate)

IDX_IG, IDX_IE, IDX_IGP = 6, 7, 8


@dataclass(frozen=True)
class AmplitudeResult:
    t: np.ndarray
    alpha: np.ndarray              # (n, 3) complex samples of (a_u, a_e, a_g)
    I_g: float
    I_e: float
    I_g_prime: float
    ps_norep: float
    final_norm: float
    emission_profile: np.ndarray   # 2 kappa_ex |a_g(t)|^2
    t_end: float
    converged: bool
    n_steps: int
    fingerprint: tuple = field(repr=False, compare=False)

    @property
    def norm_residual(self) -> float:
        """final_norm + 2 gamma I_e + 2 kappa I_g - 1 (zero up to integrator error)."""
        rates = self.fingerprint[0]
        return self.final_norm + 2 * rates.gamma * self.I_e + 2 * rates.kappa * self.I_g - 1.0


def amplitude_rhs(rates: RateSet, pulse: DrivePulse):
    """Right-hand side on the packed real state (Re/Im of a, then I_g, I_e, I_g')."""
    h_static = effective_hamiltonian(rates, 0.0, 0.0)
    h_drive = effective_hamiltonian(rates, 1.0, 0.0) - h_static
    g, kappa = rates.g, rates.kappa
    du0 = rates.delta_u
    chirped = bool(pulse.delta_u_chirp)
    omega = pulse.omega
    out = np.empty(9)

    def rhs(t, y):
        a = y[0:6:2] + 1j * y[1:6:2]
        du = pulse.delta_u(t, du0) if chirped else du0
        h = h_static + omega(t) * h_drive
        da = -1j * (h @ a)
        da[0] -= 1j * du * a[0]
        out[0:6:2] = da.real
        out[1:6:2] = da.imag
        ag_dot = -kappa * a[2] - g * a[1]
        out[IDX_IG] = abs(a[2]) ** 2
        out[IDX_IE] = abs(a[1]) ** 2
        out[IDX_IGP] = abs(ag_dot) ** 2
        return out.copy()

    return rhs


def excitation_residual(pulse: DrivePulse):
    """Stop-rule residual: remaining |e,0> and |g,1> population, plus |u,0>
    while the drive is still on."""
    def residual(t, y):
        r = y[2] ** 2 + y[3] ** 2 + y[4] ** 2 + y[5] ** 2
        if pulse.omega(t) > 0:
            r += y[0] ** 2 + y[1] ** 2
        return r
    return residual


def solve_amplitudes(rates, pulse, t0, t_max, stop, tol, require_convergence=True):
    """Integrate from |u,0> at time ``t0``; returns the raw :class:`Integration`."""
    y0 = np.zeros(9)
    y0[0] = 1.0
    return integrate(amplitude_rhs(rates, pulse), y0, t0, pulse.duration, pulse.breakpoints(),
                     t_max, excitation_residual(pulse), stop.eps_stop, tol,
                     require_convergence=require_convergence)


def evolve_amplitudes(rates: RateSet, pulse: DrivePulse, stop: StopRule = StopRule(),
                      tol: ToleranceSpec = ToleranceSpec()) -> AmplitudeResult:
    """Integrate the conditioned amplitudes from |u,0> at t = 0.

    Raises ToleranceNotMet when step control underflows and NotConverged when
    ``t_max`` arrives with excitation left above ``stop.eps_stop``.
    """
    rates = validate(rates)
    t_max = resolve_t_max(rates, pulse, stop)
    run = solve_amplitudes(rates, pulse, 0.0, t_max, stop, tol)
    t, y = run.sample()
    alpha = (y[0:6:2] + 1j * y[1:6:2]).T
    y_end = run.y_end
    I_g, I_e, I_gp = (float(y_end[k]) for k in (IDX_IG, IDX_IE, IDX_IGP))
    return AmplitudeResult(
        t=t,
        alpha=alpha,
        I_g=I_g,
        I_e=I_e,
        I_g_prime=I_gp,
        ps_norep=min(max(2 * rates.kappa_ex * I_g, 0.0), 1.0),
        final_norm=float(np.sum(y_end[:6] ** 2)),
        emission_profile=2 * rates.kappa_ex * np.abs(alpha[:, 2]) ** 2,
        t_end=run.t_end,
        converged=run.converged,
        n_steps=run.n_steps,
        fingerprint=fingerprint(rates, pulse, stop, tol),
    )


def adiabaticity(result: AmplitudeResult, rates: RateSet) -> float:
    """Slow-variation figure of merit I_g' / (kappa C).

    The closed-form success bound is reached as this ratio goes to zero.
    """
    rates = validate(rates)
    C = rates.g ** 2 / (2 * rates.kappa * rates.gamma)
    return result.I_g_prime / (rates.kappa * C)
