"""Trust-region instantiation: Cauchy-point steps and the noise-relaxed ratio test."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class CauchyDecreaseError(AssertionError):
    """The computed step failed the fraction-of-Cauchy-decrease inequality."""


@dataclass(frozen=True)
class TrModel:
    f_k: float
    g_k: np.ndarray
    H_k: np.ndarray
    kappa_H: float = np.inf

    def __post_init__(self):
        if self.H_k.shape != (self.g_k.size, self.g_k.size):
            raise ValueError("H_k shape does not match g_k")
        if self.h_norm > self.kappa_H * (1 + 1e-12):
            raise ValueError(f"||H_k|| = {self.h_norm} exceeds kappa_H = {self.kappa_H}")

    @property
    def h_norm(self) -> float:
        return float(np.linalg.norm(self.H_k, 2)) if self.H_k.size else 0.0

    def decrease(self, s: np.ndarray) -> float:
        """m(x_k) - m(x_k + s)."""
        return float(-(self.g_k @ s) - 0.5 * (s @ self.H_k @ s))


def cauchy_bound(model: TrModel, alpha: float, kappa_fcd: float = 1.0) -> float:
    """Right-hand side of the fraction-of-Cauchy-decrease inequality."""
    gn = float(np.linalg.norm(model.g_k))
    hn = model.h_norm
    ratio = np.inf if hn == 0.0 else gn / hn
    return 0.5 * kappa_fcd * gn * min(ratio, alpha)


def solve_subproblem(model: TrModel, alpha: float, kappa_fcd: float = 1.0) -> np.ndarray:
    """Exact Cauchy point: minimise the model along -g inside the ball of radius alpha.

    The Cauchy point satisfies the decrease inequality with kappa_fcd = 1,
    so any configured kappa_fcd <= 1 is met; the inequality is re-checked
    on every call.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    g = model.g_k
    gn = float(np.linalg.norm(g))
    if gn == 0.0:
        return np.zeros_like(g)
    t_max = alpha / gn
    curv = float(g @ model.H_k @ g)
    t = t_max if curv <= 0.0 else min(gn * gn / curv, t_max)
    s = -t * g
    if np.linalg.norm(s) > alpha:
        s *= alpha / np.linalg.norm(s)
    dec = model.decrease(s)
    need = cauchy_bound(model, alpha, kappa_fcd)
    if dec < need * (1.0 - 1e-12):
        raise CauchyDecreaseError(f"model decrease {dec} < required {need}")
    return s


def accept_tr(f_k: float, f_k_plus: float, model_decrease: float, g_norm: float,
              alpha_k: float, eta_1: float, eta_2: float, eps_f: float):
    """Ratio test with the +2 eps_f slack.

    Returns ``(rho, success, increase_radius)``. ``rho`` is None when the
    model decrease is not positive, in which case the step is unsuccessful.
    """
    if model_decrease <= 0.0:
        return None, False, False
    rho = (f_k - f_k_plus + 2.0 * eps_f) / model_decrease
    success = rho >= eta_1
    return rho, success, success and g_norm >= eta_2 * alpha_k


def fd_diagonal_hessian(grad_estimate, x: np.ndarray, g_k: np.ndarray, kappa_H: float,
                        h: float = 1e-6) -> np.ndarray:
    """Forward-difference diagonal Hessian from gradient estimates, clipped to [-kappa_H, kappa_H]."""
    n = x.size
    d = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        d[i] = (grad_estimate(x + e)[i] - g_k[i]) / h
    return np.diag(np.clip(d, -kappa_H, kappa_H))
