"""Dispersive dielectric models for biological tissue.

Permittivities follow the ``exp(+j*omega*t)`` convention, so a lossy medium
has ``eps = eps' - j*eps''`` with ``eps'' >= 0``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from ..errors import RangeError

C0 = 299792458.0
MU0 = 1.25663706212e-6
EPS0 = 1.0 / (MU0 * C0**2)

F_MIN = 1e6
F_MAX = 10e9

BAND_LO = 100e6
BAND_HI = 700e6


@dataclass(frozen=True)
class DebyeFit:
    """Multi-pole Debye + static conductivity approximation used in time domain.

    ``poles`` holds ``(delta_eps, tau)`` pairs.  ``max_rel_error`` is the worst
    ``|eps_fit - eps_ref| / |eps_ref|`` over ``band``.
    """

    eps_inf: float
    poles: Tuple[Tuple[float, float], ...]
    sigma: float
    band: Tuple[float, float] = (BAND_LO, BAND_HI)
    max_rel_error: float = 0.0

    def permittivity(self, f):
        w = 2 * np.pi * np.asarray(f, dtype=float)
        eps = self.eps_inf + 0j
        for d, tau in self.poles:
            eps = eps + d / (1 + 1j * w * tau)
        return eps + self.sigma / (1j * w * EPS0)

    def as_model(self, name: str = "") -> "DielectricModel":
        return DielectricModel(
            eps_inf=self.eps_inf,
            poles=tuple((d, tau, 0.0) for d, tau in self.poles),
            sigma_ionic=self.sigma,
            name=name,
        )


@dataclass(frozen=True)
class DielectricModel:
    """Multi-pole Cole-Cole dielectric with ionic conductivity.

    Parameters
    ----------
    eps_inf : float
        High-frequency relative permittivity, >= 1.
    poles : tuple of (delta_eps, tau, alpha)
        Relaxation strengths, time constants (s) and broadening in [0, 1).
    sigma_ionic : float
        Static ionic conductivity (S/m).
    """

    eps_inf: float = 1.0
    poles: Tuple[Tuple[float, float, float], ...] = ()
    sigma_ionic: float = 0.0
    name: str = ""
    time_domain: Optional[DebyeFit] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "poles", tuple(tuple(float(v) for v in p) for p in self.poles))
        if self.eps_inf < 1:
            raise ValueError(f"eps_inf must be >= 1, got {self.eps_inf}")
        for d, tau, a in self.poles:
            if d < 0 or tau <= 0 or not (0 <= a < 1):
                raise ValueError(f"invalid pole (delta={d}, tau={tau}, alpha={a})")
        if self.sigma_ionic < 0:
            raise ValueError("sigma_ionic must be >= 0")

    @property
    def is_debye(self) -> bool:
        return all(a == 0 for _, _, a in self.poles)


def _check_band(f):
    fa = np.asarray(f, dtype=float)
    if np.any(fa < F_MIN) or np.any(fa > F_MAX):
        raise RangeError(f"frequency outside supported band [{F_MIN:g}, {F_MAX:g}] Hz")
    return fa


def complex_permittivity(model: DielectricModel, f):
    """Relative complex permittivity ``eps' - j*eps''`` of ``model`` at ``f`` (Hz).

    The imaginary part includes the ionic conduction term ``sigma/(omega*eps0)``.
    Accepts scalars or arrays.
    """
    fa = _check_band(f)
    w = 2 * np.pi * fa
    eps = model.eps_inf + 0j * w
    for d, tau, a in model.poles:
        if d == 0:
            continue
        eps = eps + d / (1 + (1j * w * tau) ** (1 - a))
    if model.sigma_ionic:
        eps = eps + model.sigma_ionic / (1j * w * EPS0)
    if np.ndim(eps) == 0:
        return complex(eps)
    return eps


def conductivity(model: DielectricModel, f):
    """Effective conductivity ``omega*eps0*eps''`` in S/m."""
    eps = complex_permittivity(model, f)
    return -np.imag(eps) * 2 * np.pi * np.asarray(f, dtype=float) * EPS0


def propagation_constant(eps_complex, f):
    """Plane-wave attenuation and phase constants of a lossy medium.

    Returns ``(alpha, beta)`` in Np/m and rad/m with
    ``gamma = alpha + j*beta = j*omega/c*sqrt(eps)``.
    """
    eps = np.asarray(eps_complex, dtype=complex)
    if np.any(eps.real <= 0):
        raise ValueError("real permittivity must be positive")
    k0 = 2 * np.pi * np.asarray(f, dtype=float) / C0
    # principal root has Re >= 0 and, for eps'' >= 0, Im <= 0 -> alpha >= 0
    n = np.sqrt(eps)
    gamma = 1j * k0 * n
    alpha, beta = np.real(gamma), np.imag(gamma)
    if np.ndim(alpha) == 0:
        return float(alpha), float(beta)
    return alpha, beta


def intrinsic_impedance(eps_complex):
    """Wave impedance ``eta0 / sqrt(eps)`` of a non-magnetic medium (ohm)."""
    return np.sqrt(MU0 / EPS0) / np.sqrt(np.asarray(eps_complex, dtype=complex))


def fit_debye(
    model: DielectricModel,
    band: Tuple[float, float] = (BAND_LO, BAND_HI),
    n_points: int = 121,
) -> DebyeFit:
    """Fit a 2-pole Debye + conductivity model to ``model`` over ``band``.

    The residual weights the relative errors of the attenuation and phase
    constants, which is what a layered-propagation run is sensitive to, plus a
    smaller term on the permittivity itself.
    """
    f = np.linspace(band[0], band[1], n_points)
    w = 2 * np.pi * f
    target = complex_permittivity(model, f)
    a_t, b_t = propagation_constant(target, f)

    def unpack(y):
        return y[0], np.exp(y[1]), np.exp(y[2]), np.exp(y[3]), np.exp(y[4]), np.exp(y[5])

    def evaluate(y):
        einf, d1, t1, d2, t2, s = unpack(y)
        return einf + d1 / (1 + 1j * w * t1) + d2 / (1 + 1j * w * t2) + s / (1j * w * EPS0)

    def residual(y):
        eps = evaluate(y)
        if np.any(eps.real <= 0):
            return np.full(3 * f.size, 1e3)
        a, b = propagation_constant(eps, f)
        return np.concatenate([(a - a_t) / np.maximum(a_t, 1e-9),
                               (b - b_t) / b_t,
                               0.3 * np.abs(eps - target) / np.abs(target)])

    sigma0 = max(float(conductivity(model, band[0])), 1e-4)
    best = None
    for t1 in (3e-11, 1e-10, 3e-10):
        for t2 in (5e-10, 1e-9, 3e-9):
            y0 = [max(model.eps_inf, 1.0), np.log(5.0), np.log(t1), np.log(10.0), np.log(t2), np.log(sigma0)]
            r = least_squares(residual, y0, method="trf", xtol=1e-15, ftol=1e-15, max_nfev=20000)
            if best is None or r.cost < best.cost:
                best = r
    einf, d1, t1, d2, t2, s = unpack(best.x)
    poles = tuple(sorted(((float(d1), float(t1)), (float(d2), float(t2))), key=lambda p: p[1]))
    fit = DebyeFit(eps_inf=max(float(einf), 1.0), poles=poles, sigma=float(s), band=tuple(band))
    err = float(np.max(np.abs(fit.permittivity(f) - target) / np.abs(target)))
    return DebyeFit(fit.eps_inf, fit.poles, fit.sigma, tuple(band), err)


# --- presets -----------------------------------------------------------------

def _model_from_dict(name: str, d: dict) -> DielectricModel:
    td = d.get("debye_fit")
    fit = None
    if td is not None:
        fit = DebyeFit(
            eps_inf=td["eps_inf"],
            poles=tuple((p[0], p[1]) for p in td["poles"]),
            sigma=td["sigma"],
            band=tuple(td["band_hz"]),
            max_rel_error=td["max_rel_error"],
        )
    return DielectricModel(
        eps_inf=d["eps_inf"],
        poles=tuple(tuple(p) for p in d["poles"]),
        sigma_ionic=d["sigma_ionic"],
        name=name,
        time_domain=fit,
    )


def model_to_dict(model: DielectricModel) -> dict:
    out = {
        "eps_inf": model.eps_inf,
        "poles": [list(p) for p in model.poles],
        "sigma_ionic": model.sigma_ionic,
    }
    if model.time_domain is not None:
        td = model.time_domain
        out["debye_fit"] = {
            "band_hz": list(td.band),
            "eps_inf": td.eps_inf,
            "poles": [list(p) for p in td.poles],
            "sigma": td.sigma,
            "max_rel_error": td.max_rel_error,
        }
    return out


def load_tissue_presets(path=None) -> dict:
    """Read tissue presets from a JSON data file (defaults to the bundled one)."""
    if path is None:
        text = resources.files("implantsim.data").joinpath("tissues.json").read_text()
    else:
        text = Path(path).read_text()
    raw = json.loads(text)
    return {name: _model_from_dict(name, d) for name, d in raw["tissues"].items()}


def save_tissue_presets(models: Sequence[DielectricModel], path, meta: Optional[dict] = None):
    data = {"format": "implantsim-tissues", "version": 1}
    if meta:
        data.update(meta)
    data["tissues"] = {m.name: model_to_dict(m) for m in models}
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


@lru_cache(maxsize=None)
def _bundled():
    return load_tissue_presets()


def tissue(name: str) -> DielectricModel:
    """Bundled tissue preset: ``"skin"``, ``"fat"`` or ``"muscle"``."""
    try:
        return _bundled()[name]
    except KeyError:
        raise KeyError(f"unknown tissue preset {name!r}; have {sorted(_bundled())}") from None


VACUUM = DielectricModel(name="vacuum")
