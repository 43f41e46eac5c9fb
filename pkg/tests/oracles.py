"""Independent reference computations used by the tests.

Nothing here imports the solver internals: the amplitude equations are
transcribed by hand and integrated with a fixed-step classical RK4.
"""

import math


def amplitude_derivatives(a_u, a_e, a_g, omega, g, gamma, kappa, delta_e, delta_u):
    """The three conditioned amplitude equations, written out term by term."""
    da_u = -1j * delta_u * a_u - omega * a_e
    da_e = -(gamma + 1j * delta_e) * a_e + omega * a_u + g * a_g
    da_g = -kappa * a_g - g * a_e
    return da_u, da_e, da_g


def rk4_amplitudes(pieces, g, gamma, kappa_in, kappa_ex, h, delta_e=0.0, delta_u=0.0):
    """Fixed-step RK4 from |u,0>; I_g and I_e are carried as extra components.

    ``pieces`` is a list of (length, omega) with a constant drive on each
    piece, so no step straddles a switch.  Returns (I_g, I_e, final_norm).
    """
    kappa = kappa_in + kappa_ex
    s = (1 + 0j, 0j, 0j, 0.0, 0.0)
    for length, omega in pieces:
        def f(s):
            a_u, a_e, a_g, _, _ = s
            du, de, dg = amplitude_derivatives(a_u, a_e, a_g, omega, g, gamma, kappa,
                                               delta_e, delta_u)
            return (du, de, dg, abs(a_g) ** 2, abs(a_e) ** 2)

        for _ in range(int(round(length / h))):
            k1 = f(s)
            k2 = f(tuple(x + h / 2 * k for x, k in zip(s, k1)))
            k3 = f(tuple(x + h / 2 * k for x, k in zip(s, k2)))
            k4 = f(tuple(x + h * k for x, k in zip(s, k3)))
            s = tuple(x + h / 6 * (p + 2 * q + 2 * r + w)
                      for x, p, q, r, w in zip(s, k1, k2, k3, k4))
    a_u, a_e, a_g, I_g, I_e = s
    return I_g.real, I_e.real, abs(a_u) ** 2 + abs(a_e) ** 2 + abs(a_g) ** 2


def _generator(omega, g, gamma, kappa, delta_e=0.0, delta_u=0.0):
    """Matrix A with d(a_u, a_e, a_g)/dt = A (a_u, a_e, a_g), from the equations above."""
    import numpy as np
    return np.array([[-1j * delta_u, -omega, 0],
                     [omega, -(gamma + 1j * delta_e), g],
                     [0, -g, -kappa]], dtype=complex)


def _gram(A, x0, L=None):
    """int_0^L e^{A t} x0 x0^H e^{A^H t} dt (L=None: to infinity) for stable A."""
    import numpy as np
    from scipy.linalg import expm, solve_continuous_lyapunov
    X = solve_continuous_lyapunov(A, -np.outer(x0, x0.conj()))
    if L is None:
        return X
    E = expm(A * L)
    return X - E @ X @ E.conj().T


def renewal_success(omega, duration, g, gamma, kappa_in, kappa_ex, r_u, h=0.01):
    """Success probability with repumping for a constant drive switched off at ``duration``.

    P(s), the success probability of a trajectory restarted in |u,0> at time
    s, obeys  P(s) = S(D - s) + int_s^D q(t - s) P(t) dt, where S(L) is the
    repump-free success probability with L of drive left and q(tau) =
    2 gamma r_u |a_e(tau)|^2 is the repump flux tau after a restart.
    Restarts after the drive ends never succeed.  S uses exact matrix
    exponentials and Lyapunov integrals; the renewal integral uses the
    trapezoid rule on a grid of step ``h``.

    Returns (P(0), S(D)).
    """
    import numpy as np
    from scipy.linalg import expm
    kappa = kappa_in + kappa_ex
    A_on = _generator(omega, g, gamma, kappa)
    A_off = _generator(0.0, g, gamma, kappa)[1:, 1:]     # a_u is frozen once the drive is off
    e_u = np.array([1, 0, 0], dtype=complex)

    n = int(round(duration / h))
    taus = np.arange(n + 1) * h
    step = expm(A_on * h)
    states = np.empty((n + 1, 3), dtype=complex)
    states[0] = e_u
    for k in range(n):
        states[k + 1] = step @ states[k]
    q = 2 * gamma * r_u * np.abs(states[:, 1]) ** 2

    X_on = _gram(A_on, e_u)
    S = np.empty(n + 1)
    for k, L in enumerate(taus):
        E = expm(A_on * L)
        on = (X_on - E @ X_on @ E.conj().T)[2, 2].real
        off = _gram(A_off, states[k, 1:])[1, 1].real
        S[k] = 2 * kappa_ex * (on + off)

    # P at absolute grid times s_k = k h; remaining drive L = (n - k) h
    P = np.zeros(n + 1)
    for k in range(n - 1, -1, -1):
        lag = q[: n - k + 1]                  # q(t_j - s_k) for j = k..n
        w = np.full(n - k + 1, h)
        w[0] = w[-1] = h / 2
        P[k] = S[n - k] + np.dot(w * lag, P[k:])
    return P[0], S[n]
