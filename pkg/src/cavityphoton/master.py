"""Master-equation integration on the reachable subspace with a flux ledger.

Starting from |u,0><u,0| only five states are ever populated: the coherent
block (|u,0>, |e,0>, |g,1>) and the absorbing states |g,0> and |o,0>.  Jumps
never create coherence between the block and the absorbing states, so the
state is a 3x3 Hermitian block plus two populations.  Packed layout (16 reals):

    0-2   rho_uu, rho_ee, rho_gg          (diagonal of the block)
    3-8   Re/Im of rho_ue, rho_ug, rho_eg
    9-10  p_g0, p_o0
    11-15 F_ex, F_in, F_g, F_o, F_u       (cumulative jump probabilities)

Repumping (|e> -> |u>, rate 2 gamma r_u) feeds back into rho_uu; F_u counts
how often that happened but is not an absorbing channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._ode import integrate
from .amplitudes import AmplitudeResult
from .errors import MismatchedInputs
from .model import (DrivePulse, RateSet, StopRule, ToleranceSpec, effective_hamiltonian,
                    fingerprint, resolve_t_max, validate)

FLUX_NAMES = ("F_ex", "F_in", "F_g", "F_o", "F_u")
_OFFDIAG = ((0, 1), (0, 2), (1, 2))


def pack_block(rho: np.ndarray) -> np.ndarray:
    out = np.empty(9)
    out[0:3] = np.diag(rho).real
    for k, (i, j) in enumerate(_OFFDIAG):
        out[3 + 2 * k] = rho[i, j].real
        out[4 + 2 * k] = rho[i, j].imag
    return out


def unpack_block(y) -> np.ndarray:
    rho = np.diag(np.asarray(y[0:3], dtype=complex))
    for k, (i, j) in enumerate(_OFFDIAG):
        rho[i, j] = y[3 + 2 * k] + 1j * y[4 + 2 * k]
        rho[j, i] = np.conj(rho[i, j])
    return rho


@dataclass(frozen=True)
class MasterResult:
    rho_block: np.ndarray
    p_g0: float
    p_o0: float
    F_ex: float
    F_in: float
    F_g: float
    F_o: float
    F_u: float
    ps_total: float
    t_end: float
    converged: bool
    samples: dict = field(repr=False)   # per accepted integrator step: t, populations, fluxes, min eigenvalue
    fingerprint: tuple = field(repr=False, compare=False)

    @property
    def trace_error(self) -> float:
        """max_t |Tr(rho_block) + p_g0 + p_o0 - 1| over the sampled steps."""
        return float(np.max(np.abs(self.samples["trace"] + self.samples["p_g0"]
                                   + self.samples["p_o0"] - 1.0)))

    @property
    def channel_residual(self) -> float:
        return (self.F_ex + self.F_in + self.F_g + self.F_o
                + float(np.trace(self.rho_block).real) - 1.0)

    @property
    def min_eigenvalue(self) -> float:
        return float(np.min(self.samples["min_eig"]))


def master_rhs(rates: RateSet, pulse: DrivePulse):
    h_static = effective_hamiltonian(rates, 0.0, 0.0)
    h_drive = effective_hamiltonian(rates, 1.0, 0.0) - h_static
    du0 = rates.delta_u
    chirped = bool(pulse.delta_u_chirp)
    omega = pulse.omega
    two_gamma = 2 * rates.gamma
    ru, rg, ro = rates.r_u, rates.r_g, rates.r_o
    k_ex2, k_in2 = 2 * rates.kappa_ex, 2 * rates.kappa_in
    out = np.empty(16)

    def rhs(t, y):
        rho = unpack_block(y)
        h = h_static + omega(t) * h_drive
        h[0, 0] = pulse.delta_u(t, du0) if chirped else du0
        hr = h @ rho
        drho = -1j * (hr - hr.conj().T)          # rho H^dag = (H rho)^dag
        p_e, p_c = y[1], y[2]
        drho[0, 0] += two_gamma * ru * p_e
        out[0:9] = pack_block(drho)
        f_ex, f_in = k_ex2 * p_c, k_in2 * p_c
        f_g, f_o, f_u = two_gamma * rg * p_e, two_gamma * ro * p_e, two_gamma * ru * p_e
        out[9] = f_ex + f_in + f_g
        out[10] = f_o
        out[11:16] = (f_ex, f_in, f_g, f_o, f_u)
        return out.copy()

    return rhs


def block_residual(pulse: DrivePulse):
    def residual(t, y):
        r = y[1] + y[2]
        if pulse.omega(t) > 0:
            r += y[0]
        return r
    return residual


def evolve_master(rates: RateSet, pulse: DrivePulse, stop: StopRule = StopRule(),
                  tol: ToleranceSpec = ToleranceSpec()) -> MasterResult:
    """Integrate the full master equation from |u,0><u,0|; ps_total = F_ex."""
    rates = validate(rates)
    t_max = resolve_t_max(rates, pulse, stop)
    y0 = np.zeros(16)
    y0[0] = 1.0
    run = integrate(master_rhs(rates, pulse), y0, 0.0, pulse.duration, pulse.breakpoints(),
                    t_max, block_residual(pulse), stop.eps_stop, tol)
    t, y = run.t_steps, run.y_steps
    blocks = [unpack_block(col) for col in y[:9].T]
    samples = {
        "t": t,
        "trace": y[0] + y[1] + y[2],
        "rho_uu": y[0], "rho_ee": y[1], "rho_gg": y[2],
        "p_g0": y[9], "p_o0": y[10],
        "min_eig": np.array([np.linalg.eigvalsh(b)[0] for b in blocks]),
    }
    for k, name in enumerate(FLUX_NAMES):
        samples[name] = y[11 + k]
    ye = run.y_end
    fluxes = dict(zip(FLUX_NAMES, (float(v) for v in ye[11:16])))
    return MasterResult(
        rho_block=unpack_block(ye),
        p_g0=float(ye[9]),
        p_o0=float(ye[10]),
        ps_total=fluxes["F_ex"],
        t_end=run.t_end,
        converged=run.converged,
        samples=samples,
        fingerprint=fingerprint(rates, pulse, stop, tol),
        **fluxes,
    )


def repump_contribution(m: MasterResult, a: AmplitudeResult) -> float:
    """Success probability contributed by photons emitted after >= 1 repump."""
    if m.fingerprint != a.fingerprint:
        raise MismatchedInputs("master and amplitude runs used different inputs")
    p_rep = m.ps_total - a.ps_norep
    if -1e-9 <= p_rep < 0:
        return 0.0
    return p_rep
