"""Independent reference implementations used to check the solver.

Everything here is written from first principles against the governing
equations, deliberately sharing no code with the package: an exact Riemann
solver for the 1D Euler equations, naive two-pass statistics, a digit-reversal
sequence, and a brute-force partitioner.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


# ---------------------------------------------------------------------------
# Exact Riemann solver (ideal gas), Newton iteration on the star pressure
# ---------------------------------------------------------------------------


def _pressure_function(p, rho_k, p_k, a_k, gamma):
    """f_K(p) and its derivative for one side of the star region."""
    if p > p_k:  # shock
        A = 2.0 / ((gamma + 1.0) * rho_k)
        B = (gamma - 1.0) / (gamma + 1.0) * p_k
        root = math.sqrt(A / (p + B))
        f = (p - p_k) * root
        df = root * (1.0 - 0.5 * (p - p_k) / (B + p))
    else:  # rarefaction
        f = 2.0 * a_k / (gamma - 1.0) * ((p / p_k) ** ((gamma - 1.0) / (2.0 * gamma)) - 1.0)
        df = (p / p_k) ** (-(gamma + 1.0) / (2.0 * gamma)) / (rho_k * a_k)
    return f, df


def solve_star_state(left, right, gamma=1.4, tol=1e-12, max_iter=100):
    """Star-region pressure and velocity for primitive states (rho, u, p)."""
    rho_l, u_l, p_l = left
    rho_r, u_r, p_r = right
    a_l = math.sqrt(gamma * p_l / rho_l)
    a_r = math.sqrt(gamma * p_r / rho_r)
    du = u_r - u_l
    if 2.0 * (a_l + a_r) / (gamma - 1.0) <= du:
        raise ValueError("states produce vacuum")

    # two-rarefaction initial guess, clipped away from zero
    z = (gamma - 1.0) / (2.0 * gamma)
    p = ((a_l + a_r - 0.5 * (gamma - 1.0) * du) /
         (a_l / p_l ** z + a_r / p_r ** z)) ** (1.0 / z)
    p = max(p, 1e-14)
    for _ in range(max_iter):
        f_l, df_l = _pressure_function(p, rho_l, p_l, a_l, gamma)
        f_r, df_r = _pressure_function(p, rho_r, p_r, a_r, gamma)
        g = f_l + f_r + du
        step = g / (df_l + df_r)
        p_new = max(p - step, 1e-14)
        if abs(p_new - p) <= tol * (0.5 * (p_new + p)):
            p = p_new
            break
        p = p_new
    f_l, _ = _pressure_function(p, rho_l, p_l, a_l, gamma)
    f_r, _ = _pressure_function(p, rho_r, p_r, a_r, gamma)
    u = 0.5 * (u_l + u_r) + 0.5 * (f_r - f_l)
    return p, u


def sample_riemann(left, right, xi, gamma=1.4):
    """Self-similar solution (rho, u, p) at speed xi = x / t."""
    rho_l, u_l, p_l = left
    rho_r, u_r, p_r = right
    a_l = math.sqrt(gamma * p_l / rho_l)
    a_r = math.sqrt(gamma * p_r / rho_r)
    p_s, u_s = solve_star_state(left, right, gamma)
    gp = gamma + 1.0
    gm = gamma - 1.0

    if xi <= u_s:  # left of the contact
        if p_s > p_l:  # left shock
            s_l = u_l - a_l * math.sqrt(gp / (2 * gamma) * p_s / p_l + gm / (2 * gamma))
            if xi <= s_l:
                return rho_l, u_l, p_l
            rho = rho_l * ((p_s / p_l + gm / gp) / (gm / gp * p_s / p_l + 1.0))
            return rho, u_s, p_s
        # left rarefaction
        head = u_l - a_l
        a_sl = a_l * (p_s / p_l) ** (gm / (2 * gamma))
        tail = u_s - a_sl
        if xi <= head:
            return rho_l, u_l, p_l
        if xi >= tail:
            return rho_l * (p_s / p_l) ** (1.0 / gamma), u_s, p_s
        u = 2.0 / gp * (a_l + 0.5 * gm * u_l + xi)
        a = 2.0 / gp * (a_l + 0.5 * gm * (u_l - xi))
        rho = rho_l * (a / a_l) ** (2.0 / gm)
        return rho, u, rho * a * a / gamma

    if p_s > p_r:  # right shock
        s_r = u_r + a_r * math.sqrt(gp / (2 * gamma) * p_s / p_r + gm / (2 * gamma))
        if xi >= s_r:
            return rho_r, u_r, p_r
        rho = rho_r * ((p_s / p_r + gm / gp) / (gm / gp * p_s / p_r + 1.0))
        return rho, u_s, p_s
    # right rarefaction
    head = u_r + a_r
    a_sr = a_r * (p_s / p_r) ** (gm / (2 * gamma))
    tail = u_s + a_sr
    if xi >= head:
        return rho_r, u_r, p_r
    if xi <= tail:
        return rho_r * (p_s / p_r) ** (1.0 / gamma), u_s, p_s
    u = 2.0 / gp * (-a_r + 0.5 * gm * u_r + xi)
    a = 2.0 / gp * (a_r - 0.5 * gm * (u_r - xi))
    rho = rho_r * (a / a_r) ** (2.0 / gm)
    return rho, u, rho * a * a / gamma


def riemann_density_profile(left, right, x, t, x0=0.5, gamma=1.4):
    """Density at positions x and time t for a jump initially at x0."""
    if t <= 0:
        return np.where(np.asarray(x) < x0, left[0], right[0])
    return np.array(
        [sample_riemann(left, right, (xi - x0) / t, gamma)[0] for xi in np.asarray(x)]
    )


# ---------------------------------------------------------------------------
# Small oracles
# ---------------------------------------------------------------------------


def two_pass_moments(samples):
    """Mean and unbiased variance the slow, obvious way."""
    arr = np.asarray(samples, dtype=float)
    mean = arr.mean(axis=0)
    if arr.shape[0] < 2:
        return mean, np.zeros_like(mean)
    var = ((arr - mean) ** 2).sum(axis=0) / (arr.shape[0] - 1)
    return mean, var


def digit_reversal(index: int, base: int) -> float:
    """Reverse the base-b digits of ``index`` across the radix point."""
    digits = []
    n = index
    while n > 0:
        digits.append(n % base)
        n //= base
    value = 0.0
    for d in reversed(digits):
        value = value / base + d
    return value / base


def brute_force_makespan(costs, workers: int) -> float:
    """Minimum makespan over every assignment (exponential; keep inputs tiny)."""
    best = math.inf
    for assignment in itertools.product(range(workers), repeat=len(costs)):
        loads = [0.0] * workers
        for cost, w in zip(costs, assignment):
            loads[w] += cost
        best = min(best, max(loads))
    return best


def scalar_rusanov(f, speed, u_l, u_r):
    """Local Lax-Friedrichs flux for a scalar law with flux f and |f'| bound."""
    s = max(speed(u_l), speed(u_r))
    return 0.5 * (f(u_l) + f(u_r)) - 0.5 * s * (u_r - u_l)
