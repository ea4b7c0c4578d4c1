"""Benchmark objectives with exact values, gradients and smoothness constants.

Every problem carries the ground truth the analysis is stated against: the
objective, its gradient, a Lipschitz constant for the gradient on a stated
box, and a lower bound on the objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.typing import NDArray

Vector = NDArray[np.float64]

REGISTERED = ("quadratic", "rosenbrock", "nonconvex-trig", "logistic-erm")


@dataclass(frozen=True)
class ProblemInstance:
    name: str
    dim: int
    value_at: Callable[[Vector], float] = field(repr=False)
    gradient_at: Callable[[Vector], Vector] = field(repr=False)
    lipschitz_L: float
    lower_bound: float
    default_start: Vector = field(repr=False)
    # Box on which lipschitz_L is certified; None means global.
    box: tuple[float, float] | None = None

    def in_box(self, x: Vector) -> bool:
        if self.box is None:
            return True
        lo, hi = self.box
        return bool(np.all(x >= lo) and np.all(x <= hi))


def _check_point(problem: ProblemInstance, x) -> Vector:
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.dim,):
        raise ValueError(
            f"point has shape {x.shape}, expected ({problem.dim},) for {problem.name}"
        )
    return x


def grad_norm(problem: ProblemInstance, x) -> float:
    """Euclidean norm of the true gradient at ``x``."""
    x = _check_point(problem, x)
    return float(np.linalg.norm(problem.gradient_at(x)))


# --------------------------------------------------------------------------
# quadratic
# --------------------------------------------------------------------------

def _quadratic(dim: int) -> ProblemInstance:
    if dim < 2:
        raise ValueError("quadratic needs dim >= 2 to have condition number 10")
    eig = np.logspace(-1.0, 0.0, dim)
    rng = np.random.default_rng(20240613)
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    A = (q * eig) @ q.T
    A = 0.5 * (A + A.T)

    def value(x):
        return float(0.5 * x @ A @ x)

    def gradient(x):
        return A @ x

    return ProblemInstance(
        name="quadratic",
        dim=dim,
        value_at=value,
        gradient_at=gradient,
        lipschitz_L=float(eig[-1]),
        lower_bound=0.0,
        default_start=np.ones(dim),
    )


# --------------------------------------------------------------------------
# rosenbrock
# --------------------------------------------------------------------------

def _rosenbrock(dim: int) -> ProblemInstance:
    if dim < 2:
        raise ValueError("rosenbrock needs dim >= 2")

    def value(x):
        return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))

    def gradient(x):
        g = np.zeros_like(x)
        r = x[1:] - x[:-1] ** 2
        g[:-1] = -400.0 * x[:-1] * r - 2.0 * (1.0 - x[:-1])
        g[1:] += 200.0 * r
        return g

    # Gershgorin bound on the Hessian over [-2, 2]^n:
    # diag |1200 x_i^2 - 400 x_{i+1} + 2| + 200 <= 5802, off-diagonals |400 x| <= 800 each.
    L = 6402.0 if dim == 2 else 7402.0
    x0 = np.ones(dim)
    x0[::2] = -1.2
    return ProblemInstance(
        name="rosenbrock",
        dim=dim,
        value_at=value,
        gradient_at=gradient,
        lipschitz_L=L,
        lower_bound=0.0,
        default_start=x0,
        box=(-2.0, 2.0),
    )


# --------------------------------------------------------------------------
# nonconvex-trig
# --------------------------------------------------------------------------

def _trig(dim: int) -> ProblemInstance:
    if dim < 1:
        raise ValueError("nonconvex-trig needs dim >= 1")

    def value(x):
        x2 = x * x
        return float(np.sum(x2 / (1.0 + x2) + 0.1 * np.sin(5.0 * x)))

    def gradient(x):
        return 2.0 * x / (1.0 + x * x) ** 2 + 0.5 * np.cos(5.0 * x)

    # Hessian is diagonal with entries (2 - 6x^2)/(1+x^2)^3 - 2.5 sin(5x),
    # the first term lies in [-0.5, 2].
    return ProblemInstance(
        name="nonconvex-trig",
        dim=dim,
        value_at=value,
        gradient_at=gradient,
        lipschitz_L=4.5,
        lower_bound=-0.1 * dim,
        default_start=np.full(dim, 2.0),
    )


# --------------------------------------------------------------------------
# logistic-erm
# --------------------------------------------------------------------------

def _logistic(dim: int, n_samples: int = 1_000_000) -> ProblemInstance:
    """True logistic risk, approximated by a frozen large sample.

    Features are standard normal, labels follow a logistic model with a
    fixed ground-truth weight. The frozen sample defines phi for every
    downstream measurement.
    """
    if dim < 1:
        raise ValueError("logistic-erm needs dim >= 1")
    rng = np.random.default_rng(7)
    a = rng.standard_normal((n_samples, dim))
    w_star = np.full(dim, 2.0 / np.sqrt(dim))
    prob = 1.0 / (1.0 + np.exp(-(a @ w_star)))
    y = np.where(rng.random(n_samples) < prob, 1.0, -1.0)
    ya = a * y[:, None]
    # Hessian of the mean log-loss is at most (1/4) A^T A / N.
    L = 0.25 * float(np.linalg.eigvalsh(a.T @ a / n_samples)[-1])

    def value(x):
        return float(np.mean(np.logaddexp(0.0, -(ya @ x))))

    def gradient(x):
        z = ya @ x
        # derivative of log(1 + exp(-z)) is -sigmoid(-z)
        w = -0.5 * (1.0 - np.tanh(0.5 * z))
        return ya.T @ w / n_samples

    return ProblemInstance(
        name="logistic-erm",
        dim=dim,
        value_at=value,
        gradient_at=gradient,
        lipschitz_L=L,
        lower_bound=0.0,
        default_start=np.zeros(dim),
    )


_FACTORIES = {
    "quadratic": _quadratic,
    "rosenbrock": _rosenbrock,
    "nonconvex-trig": _trig,
    "logistic-erm": _logistic,
}


def make_problem(name: str, dim: int, **options) -> ProblemInstance:
    """Build a registered problem.

    ``options`` are forwarded to the factory (only ``logistic-erm`` takes one,
    ``n_samples``).
    """
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {REGISTERED}") from None
    if not isinstance(dim, (int, np.integer)) or dim < 1:
        raise ValueError(f"dim must be a positive integer, got {dim!r}")
    return factory(int(dim), **options)


def sampling_box(problem: ProblemInstance) -> tuple[float, float]:
    """Box used to sample points for invariant checks."""
    return problem.box if problem.box is not None else (-5.0, 5.0)


def lipschitz_ratio_max(problem: ProblemInstance, pairs: int, rng) -> float:
    """Largest observed ||grad(x) - grad(y)|| / ||x - y|| over random pairs in the box."""
    lo, hi = sampling_box(problem)
    worst = 0.0
    for _ in range(pairs):
        x = rng.uniform(lo, hi, problem.dim)
        y = rng.uniform(lo, hi, problem.dim)
        dx = np.linalg.norm(x - y)
        if dx == 0.0:
            continue
        ratio = np.linalg.norm(problem.gradient_at(x) - problem.gradient_at(y)) / dx
        worst = max(worst, float(ratio))
    return worst
