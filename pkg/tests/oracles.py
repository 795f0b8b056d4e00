"""Independent reference computations used to cross-check the library.

Each routine takes a different route from the code under test: scalar loops
instead of vectorised closed forms, the opposite time-harmonic sign
convention, fine explicit time stepping instead of exact segment solutions.
"""

import cmath
import math

EPS0 = 8.8541878128e-12
MU0 = 4e-7 * math.pi * 1.00000000055

# 4-pole Cole-Cole parameters (eps_inf, [(delta, tau, alpha)], sigma) as published
GABRIEL = {
    "skin": (4.0, [(32.0, 7.234e-12, 0.0), (1100.0, 32.481e-9, 0.20),
                   (0.0, 159.155e-6, 0.20), (0.0, 15.915e-3, 0.20)], 0.0002),
    "fat": (2.5, [(3.0, 7.958e-12, 0.20), (15.0, 15.915e-9, 0.10),
                  (3.3e4, 159.155e-6, 0.05), (1.0e7, 7.958e-3, 0.01)], 0.01),
    "muscle": (4.0, [(50.0, 7.234e-12, 0.10), (7000.0, 353.678e-9, 0.10),
                     (1.2e6, 318.310e-6, 0.10), (2.5e7, 2.274e-3, 0.0)], 0.2),
}


def cole_cole(name, f):
    """(eps_r', sigma_eff) from the Cole-Cole sum in the exp(-i w t) convention."""
    eps_inf, poles, sigma = GABRIEL[name]
    w = 2 * math.pi * f
    eps = complex(eps_inf)
    for d, tau, a in poles:
        eps += d / (1 + (-1j * w * tau) ** (1 - a))
    eps += 1j * sigma / (w * EPS0)
    return eps.real, eps.imag * w * EPS0


def alpha_textbook(eps_r, sigma, f):
    """Attenuation constant of a lossy dielectric, Np/m."""
    w = 2 * math.pi * f
    eps = eps_r * EPS0
    loss_tan = sigma / (w * eps)
    return w * math.sqrt(MU0 * eps / 2) * math.sqrt(math.sqrt(1 + loss_tan**2) - 1)


def euler_time_to_voltage(c, v_target, p_net, dt=1e-9, v0=0.0, t_max=1.0):
    """Explicit stepping of dE/dt = p_net until the cap voltage crosses ``v_target``."""
    e = 0.5 * c * v0 * v0
    e_target = 0.5 * c * v_target**2
    t = 0.0
    rising = p_net > 0
    while t < t_max:
        if (rising and e >= e_target) or (not rising and e <= e_target):
            return t
        e += p_net * dt
        t += dt
    return math.inf


def brute_pulse_count(c, v0, v_floor, pulse_energy, limit=10_000):
    """Pulses emitted before the next one would drop the cap below ``v_floor``."""
    v = v0
    n = 0
    while n < limit:
        v2 = v * v - 2 * pulse_energy / c
        if v2 < v_floor * v_floor:
            break
        v = math.sqrt(v2)
        n += 1
    return n


def slab_dissipation(e_abs2_fn, sigma_eff, z0_m, z1_m, n=4000):
    """Composite Simpson integral of 0.5*sigma*|E|^2 over [z0, z1] (W/m^2)."""
    if n % 2:
        n += 1
    h = (z1_m - z0_m) / n
    acc = e_abs2_fn(z0_m) + e_abs2_fn(z1_m)
    for k in range(1, n):
        acc += (4 if k % 2 else 2) * e_abs2_fn(z0_m + k * h)
    return 0.5 * sigma_eff * acc * h / 3


def wave_impedance(eps_r, sigma, f):
    w = 2 * math.pi * f
    return cmath.sqrt(1j * w * MU0 / (sigma + 1j * w * eps_r * EPS0))
