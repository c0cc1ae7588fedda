"""
Closed-form entrance profile families.
"""
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..core.gas_state import BackgroundState
from .base import ENTRANCE_RADIUS, EntranceProfile


class BumpProfile(EntranceProfile):
    """
    Single-mode bump family.

    S_en - S0 = a_S S0 cos(2 pi r)
    nu_en     = a_nu u0 sin^2(pi r)
    ur_en     = a_ur u0 sin^3(pi r / (1/2 - eps)) for r < 1/2 - eps, else 0
    """

    family = "bump"

    def __init__(self, background: BackgroundState, *, amp_S: float = 1.0,
                 amp_nu: float = 1.0, amp_ur: float = 1.0, **kwargs: Any):
        super().__init__(background, **kwargs)
        self.amp_S = float(amp_S)
        self.amp_nu = float(amp_nu)
        self.amp_ur = float(amp_ur)

    def _entropy_perturbation(self, r: np.ndarray) -> np.ndarray:
        return self.amp_S * self.background.S0_minus * np.cos(2.0 * np.pi * r)

    def _swirl_speed(self, r: np.ndarray) -> np.ndarray:
        return self.amp_nu * self.background.u0 * np.sin(np.pi * r) ** 2

    def _radial_speed(self, r: np.ndarray) -> np.ndarray:
        s = r / (ENTRANCE_RADIUS - self.epsilon)
        bump = np.where(s < 1.0, np.sin(np.pi * np.minimum(s, 1.0)) ** 3, 0.0)
        return self.amp_ur * self.background.u0 * bump

    def _axis_slopes(self) -> Tuple[float, float]:
        return 0.0, 0.0

    def describe(self) -> Dict[str, Any]:
        info = super().describe()
        info.update({"amp_S": self.amp_S, "amp_nu": self.amp_nu, "amp_ur": self.amp_ur})
        return info


class RandomBumpProfile(EntranceProfile):
    """Seeded superposition of admissible modes with 1/k^2 weights."""

    family = "random"

    def __init__(self, background: BackgroundState, *, seed: Optional[int] = 0,
                 modes: int = 3, **kwargs: Any):
        super().__init__(background, **kwargs)
        self.seed = 0 if seed is None else int(seed)
        self.modes = int(modes)
        rng = np.random.default_rng(self.seed)
        self._coeffs = rng.uniform(-1.0, 1.0, size=(3, self.modes))
        self._k = np.arange(1, self.modes + 1, dtype=float)

    def _series(self, row: int, basis: np.ndarray) -> np.ndarray:
        # basis: (n, modes)
        return basis @ (self._coeffs[row] / self._k**2)

    def _entropy_perturbation(self, r: np.ndarray) -> np.ndarray:
        rr = np.atleast_1d(r)
        out = self._series(0, np.cos(2.0 * np.pi * np.outer(rr, self._k)))
        return (self.background.S0_minus * out).reshape(np.shape(r))

    def _swirl_speed(self, r: np.ndarray) -> np.ndarray:
        rr = np.atleast_1d(r)
        out = self._series(1, np.sin(np.pi * np.outer(rr, self._k)) ** 2)
        return (self.background.u0 * out).reshape(np.shape(r))

    def _radial_speed(self, r: np.ndarray) -> np.ndarray:
        rr = np.atleast_1d(r)
        s = np.minimum(rr / (ENTRANCE_RADIUS - self.epsilon), 1.0)
        out = self._series(2, np.sin(np.pi * np.outer(s, self._k)) ** 3)
        out = np.where(s < 1.0, out, 0.0)
        return (self.background.u0 * out).reshape(np.shape(r))

    def _axis_slopes(self) -> Tuple[float, float]:
        return 0.0, 0.0

    def describe(self) -> Dict[str, Any]:
        info = super().describe()
        info.update({"seed": self.seed, "modes": self.modes})
        return info
