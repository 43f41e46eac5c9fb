"""Piecewise adaptive integration shared by the amplitude and master solvers.

The time axis is split at the pulse breakpoints so the embedded RK pair never
steps across a kink in Omega(t).  After the pulse ends a terminal event
watches the residual excitation and stops the run once it drops below
``eps_stop``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NotConverged, ToleranceNotMet
from .model import ToleranceSpec

N_SAMPLES = 2048


class DenseSolution:
    """Concatenation of per-segment scipy dense outputs."""

    def __init__(self, pieces, edges, y_end):
        self.pieces = pieces
        self.edges = np.asarray(edges, dtype=float)  # len(pieces) + 1
        self.y_end = y_end

    @property
    def t_start(self):
        return float(self.edges[0])

    @property
    def t_end(self):
        return float(self.edges[-1])

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if not self.pieces:
            return np.repeat(self.y_end[:, None], t.size, axis=1)
        idx = np.clip(np.searchsorted(self.edges, t, side="right") - 1, 0, len(self.pieces) - 1)
        out = np.empty((self.y_end.size, t.size))
        for k in np.unique(idx):
            mask = idx == k
            out[:, mask] = self.pieces[k](np.clip(t[mask], self.edges[k], self.edges[k + 1]))
        return out


@dataclass
class Integration:
    dense: DenseSolution
    t_end: float
    y_end: np.ndarray
    converged: bool
    n_steps: int
    t_steps: np.ndarray      # accepted step points (exact solver states, no interpolation)
    y_steps: np.ndarray

    def sample(self, n=N_SAMPLES):
        t = np.linspace(self.dense.t_start, self.t_end, n)
        return t, self.dense(t)


def integrate(rhs, y0, t0, pulse_end, breakpoints, t_max, residual, eps_stop,
              tol: ToleranceSpec, require_convergence=True) -> Integration:
    """Integrate ``rhs`` from ``t0`` until the stop rule fires or ``t_max``.

    ``residual(t, y)`` is only consulted for t >= ``pulse_end``.
    """
    y = np.asarray(y0, dtype=float)
    edges = [t0] + [b for b in breakpoints if t0 < b < t_max] + [t_max]
    if pulse_end > t0 and pulse_end < t_max and pulse_end not in edges:
        edges = sorted(set(edges) | {pulse_end})
    pieces, piece_edges = [], [float(t0)]
    t = float(t0)
    converged = False
    n_steps = 0
    t_steps, y_steps = [np.array([float(t0)])], [y[:, None]]

    def stop_event(t, y):
        return residual(t, y) - eps_stop
    stop_event.terminal = True
    stop_event.direction = -1

    for a, b in zip(edges, edges[1:]):
        tail = a >= pulse_end
        if tail and residual(a, y) < eps_stop:
            converged = True
            break
        sol = solve_ivp(rhs, (a, b), y, method=tol.method, rtol=tol.rtol, atol=tol.atol,
                        dense_output=True, events=stop_event if tail else None)
        if sol.status == -1:
            raise ToleranceNotMet(f"integration failed at t={sol.t[-1]:.6g}: {sol.message}")
        n_steps += sol.t.size - 1
        t_steps.append(sol.t[1:])
        y_steps.append(sol.y[:, 1:])
        pieces.append(sol.sol)
        t = float(sol.t[-1])
        piece_edges.append(t)
        y = sol.y[:, -1].copy()
        if sol.status == 1:
            converged = True
            break
    else:
        converged = residual(t, y) < eps_stop and t >= pulse_end

    if not converged and require_convergence:
        raise NotConverged(
            f"t_max={t_max:.6g} reached with residual excitation {residual(t, y):.3e} >= {eps_stop:.1e}")
    return Integration(DenseSolution(pieces, piece_edges, y), t, y, converged, n_steps,
                       np.concatenate(t_steps), np.concatenate(y_steps, axis=1))
