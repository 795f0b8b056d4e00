"""Layered tissue geometry and propagation results."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from ..errors import RangeError
from .dielectric import DielectricModel, tissue

MAX_TOTAL_THICKNESS_MM = 500.0


@dataclass(frozen=True)
class TissueLayer:
    tissue_id: str
    thickness: float  # mm
    dielectric: DielectricModel

    def __post_init__(self):
        if not self.thickness > 0:
            raise ValueError(f"layer {self.tissue_id!r}: thickness must be > 0 mm")


@dataclass(frozen=True)
class LayerStack:
    """Ordered tissue layers (outermost first) over a semi-infinite terminal medium.

    ``depth_limit_mm`` bounds the depths that may be queried; it defaults to the
    500 mm sanity bound.
    """

    layers: Tuple[TissueLayer, ...]
    terminal_medium: DielectricModel
    depth_limit_mm: float = MAX_TOTAL_THICKNESS_MM

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError("a LayerStack needs at least one layer")
        if self.total_thickness > MAX_TOTAL_THICKNESS_MM:
            raise ValueError(f"total thickness {self.total_thickness} mm exceeds {MAX_TOTAL_THICKNESS_MM} mm")
        if self.depth_limit_mm < self.total_thickness:
            raise ValueError("depth_limit_mm must cover all finite layers")

    @property
    def total_thickness(self) -> float:
        return float(sum(l.thickness for l in self.layers))

    @property
    def interfaces_mm(self) -> np.ndarray:
        """Depths of the layer boundaries, including 0 and the terminal interface."""
        return np.concatenate([[0.0], np.cumsum([l.thickness for l in self.layers])])

    def medium_at(self, depth_mm: float) -> DielectricModel:
        z = 0.0
        for layer in self.layers:
            z += layer.thickness
            if depth_mm < z:
                return layer.dielectric
        return self.terminal_medium


def homogeneous_stack(model: DielectricModel, name: str = "custom") -> LayerStack:
    """Half-space of a single medium (one 10 mm layer of the same medium on top)."""
    return LayerStack((TissueLayer(name, 10.0, model),), model)


def muscle_stack() -> LayerStack:
    """Muscle-only half-space; the default medium for link calibration."""
    m = tissue("muscle")
    return LayerStack((TissueLayer("muscle", 10.0, m),), m)


def skin_fat_muscle_stack(skin_mm: float = 2.0, fat_mm: float = 10.0) -> LayerStack:
    """Skin / fat layers over semi-infinite muscle."""
    return LayerStack(
        (TissueLayer("skin", skin_mm, tissue("skin")), TissueLayer("fat", fat_mm, tissue("fat"))),
        tissue("muscle"),
    )


@dataclass(frozen=True)
class PropagationResult:
    """Steady-state field versus depth at one frequency.

    ``field`` is the complex field amplitude on ``depths_mm`` normalised to the
    surface drive (``field[0] == 1`` when 0 is sampled).  ``alpha``/``beta`` are
    the plane-wave constants of the terminal medium.
    """

    frequency: float
    alpha: float
    beta: float
    depths_mm: np.ndarray
    field: np.ndarray
    info: dict = field(default_factory=dict, compare=False)

    @property
    def field_db(self) -> np.ndarray:
        return 20 * np.log10(np.abs(self.field))

    @property
    def phase_rad(self) -> np.ndarray:
        return np.angle(self.field)

    def one_way_loss_db(self, d_mm) -> float:
        """Loss in dB at ``d_mm``, interpolated linearly in dB between samples."""
        d = np.asarray(d_mm, dtype=float)
        if np.any(d < self.depths_mm[0]) or np.any(d > self.depths_mm[-1]):
            raise RangeError("depth outside the sampled range")
        out = np.interp(d, self.depths_mm, -self.field_db)
        return float(out) if out.ndim == 0 else out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["depth_mm", "field_db", "phase_rad"])
            for d, fdb, ph in zip(self.depths_mm, self.field_db, self.phase_rad):
                w.writerow([f"{d:.6g}", f"{fdb:.6g}", f"{ph:.6g}"])
