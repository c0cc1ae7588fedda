"""
Entrance profile base class.

An entrance profile supplies the radial data (S_en, nu_en, ur_en) on the
entrance disk 0 <= r <= 1/2. Every family describes a perturbation about the
background (S0-, 0, 0) that is multiplied by the sigma scale factor.
"""
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.integrate import quad

from ..core.gas_state import BackgroundState
from ..errors import ConfigError, SupportConditionError

ENTRANCE_RADIUS = 0.5
SUPPORT_TOLERANCE = 1e-14
AXIS_SLOPE_TOLERANCE = 1e-10


class EntranceProfile(ABC):
    """入口プロファイルのベースクラス"""

    family = "base"

    def __init__(self, background: BackgroundState, *, epsilon: float = 0.05,
                 scale: float = 1.0, n_samples: int = 401):
        if not 0.0 < epsilon < 0.1:
            raise ConfigError(f"profile.epsilon must lie in (0, 1/10), got {epsilon}")
        if n_samples < 16:
            raise ConfigError(f"profile sample count too small: {n_samples}")
        self.background = background
        self.epsilon = float(epsilon)
        self.scale = float(scale)
        self.n_samples = int(n_samples)
        self._sigma: Optional[float] = None

    # Family-specific unscaled perturbations -------------------------------

    @abstractmethod
    def _entropy_perturbation(self, r: np.ndarray) -> np.ndarray:
        """S_en - S0 before scaling."""

    @abstractmethod
    def _swirl_speed(self, r: np.ndarray) -> np.ndarray:
        """nu_en before scaling."""

    @abstractmethod
    def _radial_speed(self, r: np.ndarray) -> np.ndarray:
        """ur_en before scaling."""

    @abstractmethod
    def _axis_slopes(self) -> Tuple[float, float]:
        """Radial derivatives of the unscaled (S_en - S0, nu_en) at r = 0."""

    # Public sampling -------------------------------------------------------

    @staticmethod
    def _radii(r: Any) -> np.ndarray:
        return np.clip(np.asarray(r, dtype=float), 0.0, ENTRANCE_RADIUS)

    def S_en(self, r: Any) -> np.ndarray:
        rr = self._radii(r)
        return self.background.S0_minus + self.scale * self._entropy_perturbation(rr)

    def nu_en(self, r: Any) -> np.ndarray:
        return self.scale * self._swirl_speed(self._radii(r))

    def ur_en(self, r: Any) -> np.ndarray:
        return self.scale * self._radial_speed(self._radii(r))

    def Lambda_en(self, r: Any) -> np.ndarray:
        rr = self._radii(r)
        return rr * self.nu_en(rr)

    def phi_en(self, r: Any) -> np.ndarray:
        """Entrance potential: integral of ur_en from 1/2 to r."""
        rr = np.atleast_1d(self._radii(r))
        if self.scale == 0.0:
            return np.zeros_like(rr)
        cutoff = ENTRANCE_RADIUS - self.epsilon
        out = np.empty_like(rr)
        for k, radius in enumerate(rr):
            if radius >= cutoff:
                out[k] = 0.0
                continue
            value, _ = quad(lambda t: float(self.ur_en(t)), radius, cutoff,
                            epsabs=1e-14, epsrel=1e-12, limit=200)
            out[k] = -value
        return out

    def interface_values(self) -> Tuple[float, float]:
        """(S, Lambda) carried by the boundary streamline: S_en(1/2), nu_en(1/2)/2."""
        return (float(self.S_en(ENTRANCE_RADIUS)),
                float(ENTRANCE_RADIUS * self.nu_en(ENTRANCE_RADIUS)))

    @property
    def is_background(self) -> bool:
        return self.sigma == 0.0

    @property
    def sigma(self) -> float:
        """Discrete smallness measure of the entrance data."""
        if self._sigma is None:
            self._sigma = self._surrogate_norm()
        return self._sigma

    def _surrogate_norm(self) -> float:
        r = np.linspace(0.0, ENTRANCE_RADIUS, self.n_samples)
        h = r[1] - r[0]

        def c_norm(values: np.ndarray, order: int) -> float:
            total = float(np.max(np.abs(values)))
            d = values
            for _ in range(order):
                d = np.diff(d) / h
                total += float(np.max(np.abs(d)))
            return total

        return (c_norm(self.S_en(r) - self.background.S0_minus, 2)
                + c_norm(self.nu_en(r), 2)
                + c_norm(self.ur_en(r), 1))

    def validate(self) -> None:
        """Support and axis-compatibility gates of the entrance data."""
        cutoff = ENTRANCE_RADIUS - self.epsilon
        band = np.linspace(cutoff, ENTRANCE_RADIUS, 64)
        leak = np.abs(self.ur_en(band))
        if np.max(leak) > SUPPORT_TOLERANCE:
            k = int(np.argmax(leak))
            raise SupportConditionError(
                "entrance radial velocity must vanish for r >= 1/2 - epsilon "
                f"(entrance support assumption); ur_en({band[k]:.6g}) = {leak[k]:.3e}",
                value=float(leak[k]),
            )
        if abs(float(self.ur_en(0.0))) > SUPPORT_TOLERANCE:
            raise SupportConditionError("ur_en must vanish on the axis")
        if abs(float(self.nu_en(0.0))) > SUPPORT_TOLERANCE:
            raise SupportConditionError("nu_en must vanish on the axis")
        dS, dnu = self._axis_slopes()
        if self.scale * max(abs(dS), abs(dnu)) > AXIS_SLOPE_TOLERANCE:
            raise SupportConditionError(
                "axis compatibility: radial derivatives of S_en and nu_en must "
                f"vanish at r = 0 (got {self.scale * dS:.3e}, {self.scale * dnu:.3e})"
            )

    def describe(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "epsilon": self.epsilon,
            "scale": self.scale,
            "sigma": self.sigma,
        }

    def name(self) -> str:
        return self.family
