"""Line-search instantiation: steepest-descent step with an eps_rej gate on step growth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LsState:
    x_k: np.ndarray
    g_k: np.ndarray
    alpha_k: float

    @property
    def direction(self) -> np.ndarray:
        return -self.g_k

    @property
    def trial(self) -> np.ndarray:
        return self.x_k + self.alpha_k * self.direction


def accept_ls(f_k: float, f_k_plus: float, alpha_k: float, g_k: np.ndarray,
              theta: float, eps_rej: float, eps_f: float):
    """Sufficient-decrease test with +2 eps_f slack.

    Returns ``(sufficient_decrease, increase)``; the step size grows only when
    the decrease test passes and ``||g_k|| >= eps_rej``.
    """
    gn = float(np.linalg.norm(g_k))
    ok = f_k_plus <= f_k - alpha_k * theta * gn * gn + 2.0 * eps_f
    return ok, ok and gn >= eps_rej
