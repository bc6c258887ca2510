"""
Published lid-driven cavity centerline velocities (Ghia, Ghia and Shin, 1982).

Tabulated for a unit lid speed on the unit square: u(0.5, y) along the vertical centerline and
v(x, 0.5) along the horizontal one.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .cavity import CavityModel

# fmt: off
U_STATIONS = np.array(
    [0.0, 0.0547, 0.0625, 0.0703, 0.1016, 0.1719, 0.2813, 0.4531, 0.5,
     0.6172, 0.7344, 0.8516, 0.9531, 0.9609, 0.9688, 0.9766, 1.0]
)
V_STATIONS = np.array(
    [0.0, 0.0625, 0.0703, 0.0781, 0.0938, 0.1563, 0.2266, 0.2344, 0.5,
     0.8047, 0.8594, 0.9063, 0.9453, 0.9531, 0.9609, 0.9688, 1.0]
)

U_PROFILES: Dict[float, np.ndarray] = {
    100.0: np.array(
        [0.0, -0.03717, -0.04192, -0.04775, -0.06434, -0.10150, -0.15662, -0.21090, -0.20581,
         -0.13641, 0.00332, 0.23151, 0.68717, 0.73722, 0.78871, 0.84123, 1.0]
    ),
    400.0: np.array(
        [0.0, -0.08186, -0.09266, -0.10338, -0.14612, -0.24299, -0.32726, -0.17119, -0.11477,
         0.02135, 0.16256, 0.29093, 0.55892, 0.61756, 0.68439, 0.75837, 1.0]
    ),
    1000.0: np.array(
        [0.0, -0.18109, -0.20196, -0.22220, -0.29730, -0.38289, -0.27805, -0.10648, -0.06080,
         0.05702, 0.18719, 0.33304, 0.46604, 0.51117, 0.57492, 0.65928, 1.0]
    ),
}
V_PROFILES: Dict[float, np.ndarray] = {
    100.0: np.array(
        [0.0, 0.09233, 0.10091, 0.10890, 0.12317, 0.16077, 0.17507, 0.17527, 0.05454,
         -0.24533, -0.22445, -0.16914, -0.10313, -0.08864, -0.07391, -0.05906, 0.0]
    ),
    400.0: np.array(
        [0.0, 0.18360, 0.19713, 0.20920, 0.22965, 0.28124, 0.30203, 0.30174, 0.05186,
         -0.38598, -0.44993, -0.23827, -0.22847, -0.19254, -0.15663, -0.12146, 0.0]
    ),
    1000.0: np.array(
        [0.0, 0.27485, 0.29012, 0.30353, 0.32627, 0.37095, 0.33075, 0.32235, 0.02526,
         -0.31966, -0.42665, -0.51550, -0.39188, -0.33714, -0.27669, -0.21388, 0.0]
    ),
}

# Streamline levels of the published Re = 1000 contour plot; -0.1175 marks the vortex core.
PSI_CONTOUR_LEVELS = (
    -1e-10, -1e-7, -1e-5, -1e-4, -0.01, -0.03, -0.05, -0.07, -0.09, -0.1, -0.11, -0.115,
    -0.1175, 1e-8, 1e-7, 1e-6, 1e-5, 5e-5, 1e-4, 2.5e-4, 1e-3, 1.3e-3, 3e-3,
)
# fmt: on


@dataclass(frozen=True)
class CenterlineComparison:
    """Reference and model velocities at the tabulated stations."""

    reynolds: float
    y: np.ndarray
    u_reference: np.ndarray
    u_model: np.ndarray
    x: np.ndarray
    v_reference: np.ndarray
    v_model: np.ndarray

    @property
    def max_deviation(self) -> Tuple[float, float]:
        """Largest absolute u and v deviations."""
        return (
            float(np.max(np.abs(self.u_model - self.u_reference))),
            float(np.max(np.abs(self.v_model - self.v_reference))),
        )


def compare_centerlines(model: CavityModel, x: np.ndarray) -> Optional[CenterlineComparison]:
    """
    Compare the centerline velocities of a cavity state with the published profiles.

    Model profiles are interpolated linearly to the tabulated stations.

    Returns:
        CenterlineComparison, or None when no table exists for the Reynolds number or the lid
        speed is not 1
    """
    reynolds = float(model.spec.reynolds)
    if reynolds not in U_PROFILES or model.spec.lid_speed != 1.0:
        return None
    y_nodes, u, x_nodes, v = model.centerline_velocities(x)
    return CenterlineComparison(
        reynolds=reynolds,
        y=U_STATIONS,
        u_reference=U_PROFILES[reynolds],
        u_model=np.interp(U_STATIONS, y_nodes, u),
        x=V_STATIONS,
        v_reference=V_PROFILES[reynolds],
        v_model=np.interp(V_STATIONS, x_nodes, v),
    )


def missing_contour_levels(model: CavityModel, x: np.ndarray) -> List[float]:
    """
    Published streamline levels that the stream function of a state never reaches.

    Returns:
        Levels outside [min psi, max psi], empty unless Re = 1000 and the lid speed is 1
    """
    if float(model.spec.reynolds) != 1000.0 or model.spec.lid_speed != 1.0:
        return []
    psi = model.stream_function(x)
    low, high = float(np.min(psi)), float(np.max(psi))
    return [level for level in PSI_CONTOUR_LEVELS if not low <= level <= high]
