"""Normal-incidence transfer-matrix solution for layered tissue.

The stack is driven by a prescribed tangential field at its surface (depth 0)
and terminated by a semi-infinite medium carrying only an outgoing wave.  This
is the same boundary value problem the FDTD solver sets up with a hard source,
so the two are directly comparable.
"""

from __future__ import annotations

import numpy as np

from ..errors import RangeError
from .dielectric import EPS0, complex_permittivity, intrinsic_impedance, propagation_constant
from .layers import LayerStack, PropagationResult


def _media(stack: LayerStack, f: float):
    """Per-layer (gamma [1/m], eta [ohm], thickness [m]) plus the terminal medium."""
    out = []
    for layer in stack.layers:
        eps = complex_permittivity(layer.dielectric, f)
        a, b = propagation_constant(eps, f)
        out.append((complex(a, b), complex(intrinsic_impedance(eps)), layer.thickness * 1e-3))
    eps_t = complex_permittivity(stack.terminal_medium, f)
    a, b = propagation_constant(eps_t, f)
    return out, (complex(a, b), complex(intrinsic_impedance(eps_t)))


def layer_matrix(gamma: complex, eta: complex, thickness_m: float) -> np.ndarray:
    """ABCD matrix mapping ``(E, H)`` at the far side of a layer to the near side.

    Its determinant is exactly 1 (reciprocal, source-free slab).
    """
    ch, sh = np.cosh(gamma * thickness_m), np.sinh(gamma * thickness_m)
    return np.array([[ch, eta * sh], [sh / eta, ch]], dtype=complex)


def interface_matrix(eta1: complex, eta2: complex) -> np.ndarray:
    """Wave-amplitude matrix across an interface from medium 1 into medium 2.

    Maps ``(forward, backward)`` amplitudes on side 2 to side 1; the
    determinant equals ``eta1 / eta2``.
    """
    t = 2 * eta2 / (eta1 + eta2)
    r = (eta2 - eta1) / (eta2 + eta1)
    return np.array([[1, r], [r, 1]], dtype=complex) / t


def _surface_state(stack: LayerStack, f: float):
    """Unnormalised (E, H) at the top of every layer, solving from the terminal up."""
    media, (g_t, eta_t) = _media(stack, f)
    e, h = 1.0 + 0j, 1.0 / eta_t
    bottoms = [(e, h)]
    for gamma, eta, d in reversed(media):
        e, h = layer_matrix(gamma, eta, d) @ np.array([e, h])
        bottoms.append((e, h))
    tops = list(reversed(bottoms))  # tops[i] = state at top of layer i; tops[-1] = terminal interface
    return media, (g_t, eta_t), tops


def field_at(stack: LayerStack, f: float, depths_mm) -> np.ndarray:
    """Complex field at ``depths_mm`` normalised to the surface field."""
    z = np.atleast_1d(np.asarray(depths_mm, dtype=float))
    if np.any(z < 0) or np.any(z > stack.depth_limit_mm):
        raise RangeError(f"depth outside [0, {stack.depth_limit_mm}] mm")
    media, (g_t, _), tops = _surface_state(stack, f)
    e0 = tops[0][0]
    out = np.empty(z.shape, dtype=complex)
    bounds = stack.interfaces_mm
    for i, (gamma, eta, d) in enumerate(media):
        sel = (z >= bounds[i]) & (z < bounds[i + 1])
        if np.any(sel):
            e_b, h_b = tops[i + 1]
            s = (bounds[i + 1] - z[sel]) * 1e-3
            out[sel] = e_b * np.cosh(gamma * s) + eta * h_b * np.sinh(gamma * s)
    sel = z >= bounds[-1]
    out[sel] = tops[-1][0] * np.exp(-g_t * (z[sel] - bounds[-1]) * 1e-3)
    return out / e0


def transfer_matrix_field(stack: LayerStack, f: float, depths_mm=None, step_mm: float = 1.0,
                          max_depth_mm: float = 100.0) -> PropagationResult:
    """Steady-state field through ``stack`` on a uniform depth grid."""
    if depths_mm is None:
        n = int(round(max_depth_mm / step_mm))
        depths_mm = np.arange(n + 1) * step_mm
    depths = np.asarray(depths_mm, dtype=float)
    fld = field_at(stack, f, depths)
    a, b = propagation_constant(complex_permittivity(stack.terminal_medium, f), f)
    return PropagationResult(f, a, b, depths, fld, {"method": "transfer-matrix"})


def loss_at_depth(stack: LayerStack, f: float, d_mm: float) -> float:
    """One-way field loss in dB at depth ``d_mm`` relative to the surface."""
    return float(-20 * np.log10(np.abs(field_at(stack, f, [d_mm])[0])))


def power_flux(stack: LayerStack, f: float, depths_mm) -> np.ndarray:
    """Time-averaged Poynting flux ``0.5*Re(E H*)`` (W/m^2) for unit surface field."""
    z = np.atleast_1d(np.asarray(depths_mm, dtype=float))
    media, (g_t, eta_t), tops = _surface_state(stack, f)
    e0 = tops[0][0]
    bounds = stack.interfaces_mm
    e = np.empty(z.shape, complex)
    h = np.empty(z.shape, complex)
    for i, (gamma, eta, d) in enumerate(media):
        sel = (z >= bounds[i]) & (z < bounds[i + 1])
        e_b, h_b = tops[i + 1]
        s = (bounds[i + 1] - z[sel]) * 1e-3
        e[sel] = e_b * np.cosh(gamma * s) + eta * h_b * np.sinh(gamma * s)
        h[sel] = h_b * np.cosh(gamma * s) + e_b / eta * np.sinh(gamma * s)
    sel = z >= bounds[-1]
    prop = np.exp(-g_t * (z[sel] - bounds[-1]) * 1e-3)
    e[sel] = tops[-1][0] * prop
    h[sel] = tops[-1][1] * prop
    return 0.5 * np.real(e * np.conj(h)) / abs(e0) ** 2


def reflection_transmission(stack: LayerStack, f: float, incident=None):
    """Plane-wave ``(r, t)`` for unit incidence from a semi-infinite medium.

    ``incident`` defaults to the outermost layer's dielectric.  ``t`` is the
    forward amplitude entering the terminal medium.  For lossless media
    ``|r|^2 + |t|^2 * Re(1/eta_t)/Re(1/eta_i) == 1``.
    """
    inc = stack.layers[0].dielectric if incident is None else incident
    eta_i = complex(intrinsic_impedance(complex_permittivity(inc, f)))
    _, (_, eta_t), tops = _surface_state(stack, f)
    e0, h0 = tops[0]
    z_in = e0 / h0
    r = (z_in - eta_i) / (z_in + eta_i)
    t = (1 + r) / e0
    return complex(r), complex(t), eta_i, eta_t


def dissipated_power_density(model, f, e_abs2):
    """Volume loss ``0.5*omega*eps0*eps''*|E|^2`` in W/m^3."""
    eps = complex_permittivity(model, f)
    return 0.5 * 2 * np.pi * f * EPS0 * (-np.imag(eps)) * e_abs2


__all__ = [
    "field_at", "interface_matrix", "layer_matrix", "loss_at_depth", "power_flux",
    "reflection_transmission", "transfer_matrix_field", "dissipated_power_density",
]
