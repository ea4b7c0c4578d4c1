"""Simulated zeroth- and first-order oracles.

Oracles return :class:`OracleSample` objects. Algorithms only ever read
``sample.value``; the ground-truth error and corruption flag are reachable
through :func:`ground_truth`, which only the engine's instrumentation calls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate

from .problems import ProblemInstance

NOISE_FAMILIES = ("gaussian-folded", "pareto-mixture", "subexponential")
CORRUPTION_STRATEGIES = ("huge-random", "negated-scaled", "zero-vector", "anti-descent")
ACCURACY_FORMS = ("trust-region", "line-search")


@dataclass(frozen=True)
class GroundTruth:
    true_error: float | np.ndarray
    was_corrupted: bool


class OracleSample:
    """Oracle output. Only ``value`` is meant for the algorithm."""

    __slots__ = ("value", "_truth")

    def __init__(self, value, truth: GroundTruth):
        self.value = value
        self._truth = truth

    def __repr__(self):
        return f"OracleSample(value={self.value!r})"


def ground_truth(sample: OracleSample) -> GroundTruth:
    """Instrumentation accessor for the harness."""
    return sample._truth


# --------------------------------------------------------------------------
# moment helpers
# --------------------------------------------------------------------------

def _abs_centered_moment(pdf, support, mean, q):
    lo, hi = support
    f = lambda x: abs(x - mean) ** q * pdf(x)
    if math.isinf(hi):
        a = integrate.quad(f, lo, mean, limit=200)[0] if mean > lo else 0.0
        b = integrate.quad(f, mean, mean + 50.0, limit=400)[0]
        c = integrate.quad(f, mean + 50.0, np.inf, limit=400)[0]
        return a + b + c
    return integrate.quad(f, lo, hi, points=[mean], limit=400)[0]


def _lomax_pdf(a):
    return lambda x: a * (1.0 + x) ** (-(a + 1.0)) if x >= 0 else 0.0


# --------------------------------------------------------------------------
# zeroth-order specs
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SzoSpec:
    """Stochastic zeroth-order oracle with bounded mean and q-th centered moment of |e|.

    The "q-th centered moment" is taken in absolute value,
    E| |e| - E|e| |^q, which is what the heavy-tail concentration bound needs.
    """

    eps_f: float
    q: float = 2.0
    zeta_q: float = 1.0
    zeta_2: float = 1.0
    noise_family: str = "gaussian-folded"
    subexp_nu: float | None = None
    subexp_b: float | None = None

    kind = "szo"

    def __post_init__(self):
        if self.eps_f < 0:
            raise ValueError("eps_f must be nonnegative")
        if self.q < 2:
            raise ValueError("q must be >= 2")
        if self.zeta_q <= 0 or self.zeta_2 <= 0:
            raise ValueError("zeta_q and zeta_2 must be positive")
        if self.noise_family not in NOISE_FAMILIES:
            raise ValueError(f"unknown noise_family {self.noise_family!r}")
        if self.noise_family == "subexponential":
            if not self.subexp_nu or not self.subexp_b or self.subexp_nu <= 0 or self.subexp_b <= 0:
                raise ValueError("subexponential noise needs positive subexp_nu and subexp_b")
        if self.eps_f > 0:
            _ = self.calibration  # fail early on infeasible moment bounds

    @cached_property
    def calibration(self) -> dict:
        """Scale parameters chosen so the mean and moment bounds hold.

        gaussian-folded: |e| = sigma |N(0,1)|.
        pareto-mixture: |e| = B + scale * Lomax(q + 0.5), B ~ U[0, eps_f/2].
        subexponential: |e| = c * Gamma(k, b/2), which is (nu, b)-subexponential
        once 2 k (b/2)^2 <= nu^2.
        """
        q, ef = self.q, self.eps_f
        if ef == 0:
            return {"scale": 0.0}
        if self.noise_family == "gaussian-folded":
            m1 = math.sqrt(2.0 / math.pi)
            var1 = 1.0 - 2.0 / math.pi
            pdf = lambda x: 2.0 * math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
            mq1 = _abs_centered_moment(pdf, (0.0, np.inf), m1, q)
            sigma = min(ef / m1, math.sqrt(self.zeta_2 / var1), (self.zeta_q / mq1) ** (1.0 / q))
            return {"scale": sigma, "mean": sigma * m1, "var": sigma**2 * var1, "moment_q": sigma**q * mq1}
        if self.noise_family == "pareto-mixture":
            a = q + 0.5
            half = 0.5 * ef
            # B ~ U[0, half]: mean half/2, variance half^2/12, |B - mean|^q moment closed form.
            b_mean, b_var = 0.5 * half, half * half / 12.0
            b_mq = (0.5 * half) ** q / (q + 1.0)
            p_mean = 1.0 / (a - 1.0)
            p_var = a / ((a - 1.0) ** 2 * (a - 2.0))
            p_mq = _abs_centered_moment(_lomax_pdf(a), (0.0, np.inf), p_mean, q)
            if b_mq > self.zeta_q or b_var > self.zeta_2:
                raise ValueError("pareto-mixture: uniform part alone violates the moment bounds")
            # Minkowski: ||X - EX||_q <= ||B - EB||_q + scale ||P - EP||_q.
            cands = [
                0.75 * ef / p_mean,
                (self.zeta_q ** (1.0 / q) - b_mq ** (1.0 / q)) / p_mq ** (1.0 / q),
                (math.sqrt(self.zeta_2) - math.sqrt(b_var)) / math.sqrt(p_var),
            ]
            scale = min(cands)
            if scale <= 0:
                raise ValueError("pareto-mixture: no positive scale satisfies the moment bounds")
            return {
                "scale": scale,
                "tail_index": a,
                "mean": b_mean + scale * p_mean,
                "var": b_var + scale**2 * p_var,
                "moment_q_bound": (b_mq ** (1.0 / q) + scale * p_mq ** (1.0 / q)) ** q,
            }
        # subexponential
        theta = 0.5 * self.subexp_b
        k = min(ef / theta, self.subexp_nu**2 / (2.0 * theta**2))
        from scipy.stats import gamma as gamma_dist

        g = gamma_dist(k, scale=theta)
        mean, var = float(g.mean()), float(g.var())
        mq = _abs_centered_moment(g.pdf, (0.0, np.inf), mean, q)
        c = min(1.0, math.sqrt(self.zeta_2 / var), (self.zeta_q / mq) ** (1.0 / q))
        return {"scale": c, "shape": k, "theta": theta, "mean": c * mean, "var": c * c * var, "moment_q": c**q * mq}

    def draw_abs(self, rng, size=None):
        """Draw |e| values."""
        if self.eps_f == 0:
            return np.zeros(size) if size is not None else 0.0
        cal = self.calibration
        if self.noise_family == "gaussian-folded":
            return np.abs(cal["scale"] * rng.standard_normal(size))
        if self.noise_family == "pareto-mixture":
            b = rng.uniform(0.0, 0.5 * self.eps_f, size)
            return b + cal["scale"] * rng.pareto(cal["tail_index"], size)
        return cal["scale"] * rng.gamma(cal["shape"], cal["theta"], size)


@dataclass(frozen=True)
class CzoSpec:
    """Corrupted zeroth-order oracle: |e| <= eps_f w.p. 1 - delta_0, |e| <= eps_f + eps_c always."""

    eps_f: float
    eps_c: float = 0.0
    delta_0: float = 0.0

    kind = "czo"

    def __post_init__(self):
        if self.eps_f < 0 or self.eps_c < 0:
            raise ValueError("eps_f and eps_c must be nonnegative")
        if not 0.0 <= self.delta_0 < 1.0:
            raise ValueError("delta_0 must lie in [0, 1)")

    def draw_abs(self, rng, size=None):
        """Draw |e| values with the same law as :func:`czo_sample`."""
        u = rng.random(size)
        v = rng.random(size)
        return np.where(u < self.delta_0, self.eps_f + v * self.eps_c, v * self.eps_f)


ZeroOrderSpec = SzoSpec | CzoSpec


def szo_sample(spec: SzoSpec, problem: ProblemInstance, x, rng) -> OracleSample:
    phi = problem.value_at(x)
    mag = float(spec.draw_abs(rng))
    sign = 1.0 if rng.random() < 0.5 else -1.0
    e = sign * mag
    return OracleSample(phi + e, GroundTruth(e, False))


def czo_sample(spec: CzoSpec, problem: ProblemInstance, x, rng) -> OracleSample:
    phi = problem.value_at(x)
    u = rng.random()
    v = rng.uniform(-1.0, 1.0)
    if u < spec.delta_0:
        e = math.copysign(spec.eps_f + abs(v) * spec.eps_c, v)
        corrupted = True
    else:
        e = v * spec.eps_f
        corrupted = False
    return OracleSample(phi + e, GroundTruth(e, corrupted))


def zero_order_sample(spec: ZeroOrderSpec, problem: ProblemInstance, x, rng) -> OracleSample:
    if isinstance(spec, SzoSpec):
        return szo_sample(spec, problem, x, rng)
    return czo_sample(spec, problem, x, rng)


# --------------------------------------------------------------------------
# first-order oracle
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SfoSpec:
    eps_g: float = 0.0
    kappa: float = 0.0
    tau: float = 0.0
    delta_1: float = 0.0
    accuracy_form: str = "trust-region"
    corruption_strategy: str = "huge-random"
    corruption_magnitude: float = 1e3

    def __post_init__(self):
        if min(self.eps_g, self.kappa, self.tau) < 0:
            raise ValueError("eps_g, kappa, tau must be nonnegative")
        if not 0.0 <= self.delta_1 < 1.0:
            raise ValueError("delta_1 must lie in [0, 1)")
        if self.accuracy_form not in ACCURACY_FORMS:
            raise ValueError(f"unknown accuracy_form {self.accuracy_form!r}")
        if self.corruption_strategy not in CORRUPTION_STRATEGIES:
            raise ValueError(f"unknown corruption_strategy {self.corruption_strategy!r}")
        if self.corruption_magnitude <= 0:
            raise ValueError("corruption_magnitude must be positive")

    def tolerance(self, alpha: float, g_norm: float) -> float:
        """Accuracy radius r(alpha); the line-search form depends on ||g||."""
        if self.accuracy_form == "trust-region":
            return self.eps_g + self.kappa * alpha
        return max(self.eps_g, min(self.tau, self.kappa * alpha) * g_norm)

    def is_accurate(self, err_norm: float, alpha: float, g_norm: float) -> bool:
        return err_norm <= self.tolerance(alpha, g_norm)


def _unit_vector(rng, n):
    while True:
        u = rng.standard_normal(n)
        nu = np.linalg.norm(u)
        if nu > 0:
            return u / nu


def _ball(rng, n, radius):
    return _unit_vector(rng, n) * (radius * rng.random() ** (1.0 / n))


def sfo_sample(spec: SfoSpec, problem: ProblemInstance, x, alpha: float, rng) -> OracleSample:
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    grad = problem.gradient_at(x)
    n = grad.shape[0]
    corrupt = rng.random() < spec.delta_1
    # always consume the same draws so the stream layout is branch independent
    direction = _unit_vector(rng, n)
    radial = rng.random()
    if not corrupt:
        if spec.accuracy_form == "trust-region":
            radius = spec.eps_g + spec.kappa * alpha
        else:
            radius = max(spec.eps_g, min(spec.tau, spec.kappa * alpha) * float(np.linalg.norm(grad)))
        w = direction * (radius * radial ** (1.0 / n))
        g = grad + w
        for _ in range(2000):
            if spec.is_accurate(float(np.linalg.norm(g - grad)), alpha, float(np.linalg.norm(g))):
                break
            w = 0.5 * w
            g = grad + w
        else:
            g = grad.copy()
        return OracleSample(g, GroundTruth(g - grad, False))

    gnorm = float(np.linalg.norm(grad))
    M = spec.corruption_magnitude
    strategy = spec.corruption_strategy
    if strategy == "anti-descent" and gnorm == 0.0:
        strategy = "huge-random"
    if strategy == "huge-random":
        g = M * (1.0 + gnorm) * direction
    elif strategy == "negated-scaled":
        g = -M * grad
    elif strategy == "zero-vector":
        g = np.zeros(n)
    else:
        g = -M * grad / gnorm
    return OracleSample(g, GroundTruth(g - grad, True))


@dataclass(frozen=True)
class OracleSuite:
    zeroth: ZeroOrderSpec
    first: SfoSpec = field(default_factory=SfoSpec)

    @classmethod
    def exact(cls, accuracy_form: str = "trust-region") -> "OracleSuite":
        return cls(CzoSpec(0.0, 0.0, 0.0), SfoSpec(accuracy_form=accuracy_form))


def minibatch_clean_prob(outlier_rate: float, batch: int) -> float:
    """Probability that a batch of ``batch`` i.i.d. draws contains no outliers."""
    if not 0.0 <= outlier_rate <= 1.0:
        raise ValueError("outlier_rate must lie in [0, 1]")
    if batch < 1:
        raise ValueError("batch must be positive")
    return (1.0 - outlier_rate) ** batch
