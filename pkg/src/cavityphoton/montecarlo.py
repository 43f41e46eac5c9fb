"""Quantum-trajectory unraveling of the master equation.

Each trajectory follows the no-jump evolution under H_eff until its squared
norm falls to a uniform variate, then jumps.  The jump channel is drawn in
proportion to the instantaneous rates

    2 gamma r_u |a_e|^2, 2 gamma r_g |a_e|^2, 2 gamma r_o |a_e|^2,
    2 kappa_ex |a_g|^2, 2 kappa_in |a_g|^2

A repump jump restarts the trajectory in |u,0> at the jump time; every other
channel ends it.  Trajectories that never jump finish "unterminated" (left in
|u,0> once the drive is gone).

The no-jump evolution from |u,0> depends only on the start time, so it is
solved once per distinct start time and shared.  All trajectories start at
t = 0, which makes the repump-free case a single ODE solve.

Randomness: trajectory ``i`` draws from its own Philox (counter-based) stream
keyed by ``(seed, i)``, so results do not depend on processing order.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .amplitudes import solve_amplitudes
from .errors import InvalidParameter, NotConverged
from .model import DrivePulse, RateSet, StopRule, ToleranceSpec, resolve_t_max, validate

OUTCOMES = ("external", "internal", "spont_g", "spont_o", "unterminated")
# channel index -> outcome; 0 is the repump
_CHANNEL_OUTCOME = (None, "spont_g", "spont_o", "external", "internal")
UNCONVERGED_LIMIT = 1e-3
BISECT_RTOL = 1e-10


@dataclass(frozen=True)
class TrajectoryStats:
    n_samples: int
    p_success_hat: float
    stderr: float
    outcome_counts: dict
    repump_histogram: dict
    n_unconverged: int = 0
    jump_times: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def mean_repumps(self) -> float:
        return sum(k * c for k, c in self.repump_histogram.items()) / self.n_samples

    @property
    def repump_stderr(self) -> float:
        m = self.mean_repumps
        second = sum(k * k * c for k, c in self.repump_histogram.items()) / self.n_samples
        return float(np.sqrt(max(second - m * m, 0.0) / self.n_samples))


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    if not 0 <= seed < 2 ** 64:
        raise InvalidParameter("seed", "seed must be a non-negative 64-bit integer")
    return np.random.Generator(np.random.Philox(key=(seed << 64) | index))


class _Segment:
    """No-jump evolution from |u,0> starting at ``t0``."""

    def __init__(self, rates, pulse, t0, t_max, stop, tol):
        self.run = solve_amplitudes(rates, pulse, t0, t_max, stop, tol, require_convergence=False)
        self.step_t = self.run.t_steps
        # running minimum guards the bracket search against round-off wiggles
        self.step_norm = np.minimum.accumulate(np.sum(self.run.y_steps[:6] ** 2, axis=0))
        self.end_norm = float(self.step_norm[-1])

    def norm(self, t):
        return np.sum(self.run.dense(t)[:6] ** 2, axis=0)

    def alpha(self, t):
        y = self.run.dense(t)
        return y[0:6:2] + 1j * y[1:6:2]

    def jump_times(self, thresholds):
        """Times where the squared norm first falls to each threshold.

        Thresholds must lie above ``end_norm``.  The crossing is bracketed
        between accepted solver steps and refined by bisection on the
        interpolant.
        """
        # step_norm is non-increasing; index of the first step at or below threshold
        rev = self.step_norm[::-1]
        k = self.step_norm.size - np.searchsorted(rev, thresholds, side="right")
        k = np.clip(k, 1, self.step_norm.size - 1)
        lo = self.step_t[k - 1].copy()
        hi = self.step_t[k].copy()
        for _ in range(200):
            width = hi - lo
            active = width > BISECT_RTOL * np.maximum(np.abs(hi), 1.0)
            if not active.any():
                break
            mid = 0.5 * (lo + hi)
            above = self.norm(mid) > thresholds
            lo = np.where(active & above, mid, lo)
            hi = np.where(active & ~above, mid, hi)
        return 0.5 * (lo + hi)


def run_trajectories(rates: RateSet, pulse: DrivePulse, stop: StopRule = StopRule(),
                     n_samples: int = 1000, seed: int = 0,
                     tol: ToleranceSpec = ToleranceSpec()) -> TrajectoryStats:
    """Sample ``n_samples`` trajectories and tally terminal channels.

    Raises NotConverged when at least 0.1% of trajectories reach ``t_max``
    with excitation still above ``stop.eps_stop`` and no jump.
    """
    if n_samples < 1:
        raise InvalidParameter("n_samples", "n_samples must be >= 1")
    rates = validate(rates)
    t_max = resolve_t_max(rates, pulse, stop)
    tg2, kex2, kin2 = 2 * rates.gamma, 2 * rates.kappa_ex, 2 * rates.kappa_in
    ru, rg, ro = rates.r_u, rates.r_g, rates.r_o

    rngs = [trajectory_rng(seed, i) for i in range(n_samples)]
    outcome = np.empty(n_samples, dtype=object)
    repumps = np.zeros(n_samples, dtype=int)
    final_time = np.full(n_samples, np.nan)
    unconverged = np.zeros(n_samples, dtype=bool)

    segments: dict[float, _Segment] = {}
    # start time -> indices of trajectories (re)starting there
    pending: dict[float, list[int]] = {0.0: list(range(n_samples))}
    while pending:
        t0 = min(pending)
        idx = np.array(pending.pop(t0), dtype=int)
        seg = segments.get(t0)
        if seg is None:
            seg = segments[t0] = _Segment(rates, pulse, t0, t_max, stop, tol)
        thresholds = np.array([rngs[i].random() for i in idx])
        jumps = thresholds > seg.end_norm
        stay = idx[~jumps]
        outcome[stay] = "unterminated"
        if not seg.run.converged:
            unconverged[stay] = True
        if not jumps.any():
            continue
        idx, thresholds = idx[jumps], thresholds[jumps]
        times = seg.jump_times(thresholds)
        alpha = seg.alpha(times)
        pe, pg = np.abs(alpha[1]) ** 2, np.abs(alpha[2]) ** 2
        weights = np.stack([tg2 * ru * pe, tg2 * rg * pe, tg2 * ro * pe, kex2 * pg, kin2 * pg])
        cum = np.cumsum(weights, axis=0)
        for j, i in enumerate(idx):
            v = rngs[i].random() * cum[-1, j]
            channel = int(np.searchsorted(cum[:, j], v, side="right"))
            channel = min(channel, 4)
            if channel == 0:
                repumps[i] += 1
                pending.setdefault(float(times[j]), []).append(int(i))
            else:
                outcome[i] = _CHANNEL_OUTCOME[channel]
                final_time[i] = times[j]

    n_bad = int(unconverged.sum())
    if n_bad >= UNCONVERGED_LIMIT * n_samples:
        raise NotConverged(f"{n_bad}/{n_samples} trajectories reached t_max={t_max:.6g} "
                           "with residual excitation and no jump")
    counts = Counter(outcome.tolist())
    outcome_counts = {name: int(counts.get(name, 0)) for name in OUTCOMES}
    p_hat = outcome_counts["external"] / n_samples
    hist = Counter(repumps.tolist())
    return TrajectoryStats(
        n_samples=n_samples,
        p_success_hat=p_hat,
        stderr=float(np.sqrt(p_hat * (1 - p_hat) / n_samples)),
        outcome_counts=outcome_counts,
        repump_histogram={int(k): int(hist[k]) for k in sorted(hist)},
        n_unconverged=n_bad,
        jump_times=final_time,
    )
