"""Closed-form constants, thresholds and tail bounds of the complexity analysis.

Everything here is a pure function of the configuration. The
:class:`TheoryReport` bundles what the harness needs: the small-step
threshold, the progress function h(eps), the critical probability p_m, the
iteration threshold t and the tail-bound evaluator.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .oracles import CzoSpec, SzoSpec

INTEGRAL_TOL = 1e-9


class InfeasibleTheory(ValueError):
    """The configuration admits no valid analysis constants."""


@dataclass(frozen=True)
class MethodParams:
    method: str = "trust-region"
    theta: float = 0.5
    gamma_inc: float = 2.0
    gamma_dec: float = 0.5
    alpha_0: float = 1.0
    eta_1: float = 0.1
    eta_2: float = 1.0
    kappa_fcd: float = 1.0
    kappa_H: float = 0.0
    hessian_mode: str = "zero"
    eps_rej: float = 1e-3
    eps_f_assumed: float | None = None
    x0: tuple | None = None

    def __post_init__(self):
        if self.method not in ("trust-region", "line-search"):
            raise ValueError(f"unknown method {self.method!r}")
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        if not self.gamma_inc > 1.0 > self.gamma_dec > 0.0:
            raise ValueError("need gamma_inc > 1 > gamma_dec > 0")
        if self.alpha_0 <= 0:
            raise ValueError("alpha_0 must be positive")
        if self.method == "trust-region":
            if self.eta_1 <= 0 or self.eta_2 <= 0:
                raise ValueError("eta_1 and eta_2 must be positive")
            if not 0.0 < self.kappa_fcd <= 1.0:
                raise ValueError("kappa_fcd must lie in (0, 1]")
            if self.kappa_H < 0:
                raise ValueError("kappa_H must be nonnegative")
            if self.hessian_mode not in ("zero", "fd-diagonal"):
                raise ValueError(f"unknown hessian_mode {self.hessian_mode!r}")
        elif self.eps_rej <= 0:
            raise ValueError("eps_rej must be positive")
        if self.eps_f_assumed is not None and self.eps_f_assumed < 0:
            raise ValueError("eps_f_assumed must be nonnegative")


# --------------------------------------------------------------------------
# step-size ratio m
# --------------------------------------------------------------------------

def compute_m(gamma_inc: float, gamma_dec: float):
    """Return ``(m, m_floor, m_ceil, integral)`` with m = -ln(gamma_inc)/ln(gamma_dec).

    Values within 1e-9 of an integer are treated as that integer, so that
    e.g. gamma_dec = 2**(-1/3) gives m = 3 rather than 2.9999999999999996.
    """
    if not gamma_inc > 1.0 or not 0.0 < gamma_dec < 1.0:
        raise ValueError("need gamma_inc > 1 and 0 < gamma_dec < 1")
    m = -math.log(gamma_inc) / math.log(gamma_dec)
    r = round(m)
    if abs(m - r) <= INTEGRAL_TOL * max(1.0, abs(m)):
        return m, int(r), int(r), True
    return m, math.floor(m), math.ceil(m), False


def bound_coefficients(gamma_inc: float, gamma_dec: float):
    """Coefficients (A, B, C) of the pathwise bound
    sum I_k <= A (Z_0 + noise)/h + B * ceil_term + C * t.

    For integral m these are (m, m/(m+1), 1/(m+1)).
    """
    _, mf, mc, _ = compute_m(gamma_inc, gamma_dec)
    return mf * (mc + 1) / (mf + 1), mf / (mf + 1), 1.0 / (mf + 1)


def decay_steps(alpha_bar: float, alpha_0: float, gamma_dec: float) -> int:
    """ceil((ln alpha_bar - ln alpha_0) / ln gamma_dec), nonnegative when alpha_0 >= alpha_bar."""
    v = (math.log(alpha_bar) - math.log(alpha_0)) / math.log(gamma_dec)
    r = round(v)
    if abs(v - r) <= 1e-9 * max(1.0, abs(v)):
        return int(r)
    return math.ceil(v)


# --------------------------------------------------------------------------
# method constants
# --------------------------------------------------------------------------

def tr_eta_interval(params: MethodParams):
    a = (1.0 - params.eta_1) * params.kappa_fcd
    if a <= 0:
        raise InfeasibleTheory("eta interval empty: (1 - eta_1) * kappa_fcd <= 0")
    return 0.0, a / (a + 2.0)


def ls_eta_interval(params: MethodParams):
    return 0.0, (1.0 - params.theta) / (2.0 - params.theta)


def _pick_eta(interval, eta):
    lo, hi = interval
    if eta is None:
        return 0.5 * (lo + hi)
    if not lo < eta < hi:
        raise InfeasibleTheory(f"eta = {eta} outside the admissible interval ({lo}, {hi})")
    return eta


def tr_progress_constant(params: MethodParams) -> float:
    """C_prog = 1/2 eta_1 eta_2 kappa_fcd min(eta_2/kappa_H, 1)."""
    ratio = 1.0 if params.kappa_H == 0 else min(params.eta_2 / params.kappa_H, 1.0)
    return 0.5 * params.eta_1 * params.eta_2 * params.kappa_fcd * ratio


def tr_alpha_bar_slope(params: MethodParams, sfo, L: float, eta: float) -> float:
    """alpha_bar / eps for the trust-region method."""
    kappa = sfo.kappa
    a = (1.0 - params.eta_1) * params.kappa_fcd
    num = a * (1.0 - eta) - 2.0 * eta
    if num <= 0:
        raise InfeasibleTheory(f"alpha_bar numerator (1-eta_1) kappa_fcd (1-eta) - 2 eta = {num} <= 0")
    first = num / (L + params.kappa_H + 2.0 * kappa + a * kappa)
    second = (1.0 - eta) / (kappa + params.eta_2)
    return min(first, second)


def noise_level(zeroth) -> float:
    """The per-iteration noise budget that enters p_m: 4 eps_f (SZO) or 4 eps_f + 2 delta_0 eps_c (CZO)."""
    if isinstance(zeroth, CzoSpec):
        return 4.0 * zeroth.eps_f + 2.0 * zeroth.delta_0 * zeroth.eps_c
    return 4.0 * zeroth.eps_f


def tr_constants(params: MethodParams, zeroth, sfo, L: float, epsilon: float,
                 p: float | None = None, eta: float | None = None):
    """Trust-region constants at target accuracy ``epsilon``.

    Returns a dict with alpha_bar, h_eps, c_prog, eta, eta_interval,
    eps_floor (the stated lower bound on eps), and eps_feasible (the
    smallest eps for which p > p_m, which also scales with alpha_bar/eps).
    """
    interval = tr_eta_interval(params)
    eta = _pick_eta(interval, eta)
    slope = tr_alpha_bar_slope(params, sfo, L, eta)
    c_prog = tr_progress_constant(params)
    alpha_bar = slope * epsilon
    h_eps = c_prog * (alpha_bar / params.gamma_inc) ** 2
    m, mf, mc, _ = compute_m(params.gamma_inc, params.gamma_dec)
    A, _, C = bound_coefficients(params.gamma_inc, params.gamma_dec)
    bias = sfo.eps_g / eta
    noise = noise_level(zeroth)
    if p is None:
        eps_floor = eps_feasible = math.nan
    elif noise == 0.0:
        eps_floor = eps_feasible = bias
    elif p <= C:
        eps_floor = eps_feasible = math.inf
    else:
        root = math.sqrt(A * noise / (c_prog * (p - C)))
        eps_floor = max(bias, root)
        eps_feasible = max(bias, root * params.gamma_inc / slope)
    return {
        "alpha_bar": alpha_bar,
        "alpha_bar_slope": slope,
        "h_eps": h_eps,
        "c_prog": c_prog,
        "eta": eta,
        "eta_interval": interval,
        "eps_floor": eps_floor,
        "eps_feasible": eps_feasible,
    }


def ls_constants(params: MethodParams, zeroth, sfo, L: float, p: float | None = None,
                 eta: float | None = None, eps_rej: float | None = None):
    """Line-search constants.

    ``eps_rej`` defaults to ``params.eps_rej``; the resulting stationarity
    target is max(1/eta, 1 + tau) * eps_rej and h is evaluated there.
    """
    interval = ls_eta_interval(params)
    eta = _pick_eta(interval, eta)
    theta, kappa = params.theta, sfo.kappa
    num = 1.0 - 2.0 * eta - theta * (1.0 - eta)
    if num <= 0:
        raise InfeasibleTheory(f"alpha_bar term 1 - 2 eta - theta (1 - eta) = {num} <= 0")
    alpha_bar = min((1.0 - theta) / (0.5 * L + kappa), 2.0 * num / (L * (1.0 - eta)))
    mult = max(1.0 / eta, 1.0 + sfo.tau)
    eps_rej = params.eps_rej if eps_rej is None else eps_rej
    epsilon = mult * eps_rej
    h_eps = theta * alpha_bar / (params.gamma_inc * mult**2) * epsilon**2
    A, _, C = bound_coefficients(params.gamma_inc, params.gamma_dec)
    noise = noise_level(zeroth)
    if p is None:
        floor = math.nan
    elif noise == 0.0:
        floor = sfo.eps_g
    elif p <= C:
        floor = math.inf
    else:
        floor = max(sfo.eps_g, math.sqrt(A * noise * params.gamma_inc / (theta * alpha_bar * (p - C))))
    return {
        "alpha_bar": alpha_bar,
        "h_eps": h_eps,
        "eta": eta,
        "eta_interval": interval,
        "eps_rej": eps_rej,
        "eps_rej_floor": floor,
        "epsilon_resulting": epsilon,
        "multiplier": mult,
    }


def ls_h(params: MethodParams, alpha_bar: float, eps_rej: float) -> float:
    return params.theta * alpha_bar / params.gamma_inc * eps_rej**2


# --------------------------------------------------------------------------
# thresholds
# --------------------------------------------------------------------------

def p_m_threshold(regime: str, m: float, h_eps: float, eps_f: float,
                  delta_0: float = 0.0, eps_c: float = 0.0, m_ceil: int | None = None) -> float:
    """Critical probability p_m.

    With integral m this is 1/(m+1) + m * noise / h. For non-integral m pass
    ``m`` as the floor and ``m_ceil`` as the ceiling to get the general form
    1/(mf+1) + mf (mc+1)/(mf+1) * noise / h.
    """
    if regime.startswith("szo"):
        noise = 4.0 * eps_f
    elif regime == "czo":
        noise = 4.0 * eps_f + 2.0 * delta_0 * eps_c
    else:
        raise ValueError(f"unknown regime {regime!r}")
    if m_ceil is None:
        return 1.0 / (m + 1.0) + m * noise / h_eps
    return 1.0 / (m + 1.0) + m * (m_ceil + 1.0) / (m + 1.0) * noise / h_eps


def t_threshold(R: float, p_hat: float, p_m: float, s: float, h_eps: float) -> float:
    """R / (p_hat - p_m - s/h); ``math.inf`` when the denominator is not positive."""
    den = p_hat - p_m - s / h_eps
    if den <= 0:
        return math.inf
    return R / den


# --------------------------------------------------------------------------
# tail bounds
# --------------------------------------------------------------------------

def azuma_term(t, p: float, p_hat: float):
    return np.exp(-((p - p_hat) ** 2) * np.asarray(t, dtype=float) / (2.0 * p * p))


def fuk_nagaev_tail(t, s: float, q: float, zeta_2: float, zeta_q: float):
    t = np.asarray(t, dtype=float)
    expo = np.exp(-(s * s) * t / (2.0 * (q + 2.0) ** 2 * math.e**q * zeta_2))
    poly = (1.0 + 2.0 / q) ** q * 2.0**q * zeta_q / (s**q * t ** (q - 1.0))
    return expo + poly


def chebyshev_tail(t, s: float, sigma2: float):
    return 2.0 * sigma2 / (s * s * np.asarray(t, dtype=float))


def bernstein_tail(t, s: float, nu: float, b: float):
    rate = np.minimum(np.square(s) / (8.0 * nu * nu), np.asarray(s, dtype=float) / (4.0 * b))
    return np.exp(-rate * np.asarray(t, dtype=float))


def hoeffding_tail(t, s: float, eps_f: float, eps_c: float):
    width = eps_f + eps_c
    if width == 0:
        return np.zeros_like(np.asarray(t, dtype=float))
    return np.exp(-(s * s) * np.asarray(t, dtype=float) / (2.0 * width * width))


TAIL_VARIANTS = ("fuk-nagaev", "chebyshev", "bernstein", "hoeffding")


def default_variant(zeroth) -> str:
    if isinstance(zeroth, CzoSpec):
        return "hoeffding"
    if zeroth.noise_family == "subexponential":
        return "bernstein"
    if zeroth.q == 2:
        return "chebyshev"
    return "fuk-nagaev"


def noise_tail(variant: str, zeroth, t, s: float):
    """delta_t(s): bound on the probability that accumulated zeroth-order noise exceeds its budget."""
    if variant == "hoeffding":
        return hoeffding_tail(t, s, zeroth.eps_f, zeroth.eps_c)
    if variant == "fuk-nagaev":
        return fuk_nagaev_tail(t, s, zeroth.q, zeroth.zeta_2, zeroth.zeta_q)
    if variant == "chebyshev":
        return chebyshev_tail(t, s, zeroth.zeta_2)
    if variant == "bernstein":
        return bernstein_tail(t, s, zeroth.subexp_nu, zeroth.subexp_b)
    raise ValueError(f"unknown tail variant {variant!r}")


def tail_bound(variant: str, zeroth, t, s: float, p: float, p_hat: float,
               p_m: float, h_eps: float, t_min: float = 0.0):
    """Bound on P(T_eps > t); 1 wherever t <= t_min (the theorem says nothing there)."""
    if not p_m + s / h_eps < p_hat < p:
        raise ValueError(
            f"need p_m + s/h < p_hat < p, got p_m={p_m}, s/h={s / h_eps}, p_hat={p_hat}, p={p}"
        )
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        total = azuma_term(t, p, p_hat) + noise_tail(variant, zeroth, t, s)
    total = np.minimum(total, 1.0)
    return np.where(t > t_min, total, 1.0)


# --------------------------------------------------------------------------
# p lower bound
# --------------------------------------------------------------------------

def p_lower_bound(zeroth, sfo, draws: int = 100_000, seed: int = 12345) -> float:
    """Composed lower bound on P(iteration is true).

    CZO: 1 - delta_1 - 2 delta_0. SZO: 1 - delta_1 - P(E + E+ > 2 eps_f),
    the last probability estimated by Monte Carlo.
    """
    if isinstance(zeroth, CzoSpec):
        return 1.0 - sfo.delta_1 - 2.0 * zeroth.delta_0
    if zeroth.eps_f == 0:
        return 1.0 - sfo.delta_1
    rng = np.random.default_rng(seed)
    s = zeroth.draw_abs(rng, draws) + zeroth.draw_abs(rng, draws)
    return 1.0 - sfo.delta_1 - float(np.mean(s > 2.0 * zeroth.eps_f))


# --------------------------------------------------------------------------
# report
# --------------------------------------------------------------------------

@dataclass
class TheoryReport:
    method: str
    regime: str
    tail_variant: str
    m: float
    m_floor: int
    m_ceil: int
    m_integral: bool
    alpha_bar: float
    alpha_bar_redefined: bool
    eta: float
    eta_interval: tuple
    h_eps: float
    c_prog: float | None
    epsilon: float
    eps_floor: float
    eps_feasible: float
    eps_rej: float | None
    p_lower: float
    p_lower_source: str
    mu: float
    p_m: float
    Z0: float
    d: float
    decay_steps: int
    R: float
    s: float
    p_hat: float
    t_threshold: float
    feasible: bool
    notes: list = field(default_factory=list)
    zeroth: object = field(default=None, repr=False)

    def tail(self, t):
        """Bound on P(T_eps > t) over an array of t."""
        if not self.feasible:
            return np.ones_like(np.asarray(t, dtype=float))
        return tail_bound(self.tail_variant, self.zeroth, t, self.s, self.p_lower,
                          self.p_hat, self.p_m, self.h_eps, self.t_threshold)

    def tail_terms(self, t):
        t = np.asarray(t, dtype=float)
        if not self.feasible:
            one = np.ones_like(t)
            return one, one, one
        with np.errstate(over="ignore", divide="ignore"):
            az = azuma_term(t, self.p_lower, self.p_hat)
            nz = noise_tail(self.tail_variant, self.zeroth, t, self.s)
        return az, nz, self.tail(t)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("zeroth")
        d["eta_interval"] = list(self.eta_interval)
        return {k: _jsonable(v) for k, v in d.items()}

    def render(self) -> str:
        lines = [f"method            {self.method} ({self.regime}, tail bound: {self.tail_variant})"]
        lines.append(f"m                 {self.m:.6g}  (floor {self.m_floor}, ceil {self.m_ceil}"
                     f"{', integral' if self.m_integral else ''})")
        lines.append(f"eta               {self.eta:.6g} in ({self.eta_interval[0]:.6g}, {self.eta_interval[1]:.6g})")
        lines.append(f"alpha_bar         {self.alpha_bar:.6g}"
                     f"{'  (redefined to alpha_0)' if self.alpha_bar_redefined else ''}")
        if self.c_prog is not None:
            lines.append(f"C_prog            {self.c_prog:.6g}")
        lines.append(f"epsilon           {self.epsilon:.6g}")
        if self.eps_rej is not None:
            lines.append(f"eps_rej           {self.eps_rej:.6g}")
        lines.append(f"eps_floor         {self.eps_floor:.6g}")
        lines.append(f"eps_feasible      {self.eps_feasible:.6g}")
        lines.append(f"h(eps)            {self.h_eps:.6g}")
        lines.append(f"p_lower           {self.p_lower:.6g}  [{self.p_lower_source}]")
        lines.append(f"p_m               {self.p_m:.6g}")
        lines.append(f"Z0                {self.Z0:.6g}")
        lines.append(f"R                 {self.R:.6g}  (d = {self.d:.6g})")
        if self.feasible:
            lines.append(f"s, p_hat           {self.s:.6g}, {self.p_hat:.6g}")
            lines.append(f"t threshold       {self.t_threshold:.6g}")
        else:
            lines.append("regime            INFEASIBLE")
        lines.extend(f"note: {n}" for n in self.notes)
        return "\n".join(lines)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, (np.floating,)):
        return _jsonable(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def regime_of(zeroth) -> str:
    return "czo" if isinstance(zeroth, CzoSpec) else "szo"


def mu_bound(zeroth) -> float:
    """Uniform bound on E[E_k + E_k^+]."""
    if isinstance(zeroth, CzoSpec):
        return 2.0 * zeroth.eps_f + 2.0 * zeroth.delta_0 * zeroth.eps_c
    return 2.0 * zeroth.eps_f


def build_report(problem, oracles, params: MethodParams, epsilon: float | None = None,
                 *, p_lower: float | None = None, eta: float | None = None,
                 s: float | None = None, p_hat: float | None = None,
                 tail_variant: str | None = None, x0=None) -> TheoryReport:
    """Assemble every constant for one configuration.

    For the line-search method ``epsilon`` is ignored in favour of
    max(1/eta, 1 + tau) * eps_rej. Raises :class:`InfeasibleTheory` when the
    eta interval or alpha_bar is degenerate; an infeasible probability regime
    is reported through ``feasible = False``.
    """
    zeroth, sfo = oracles.zeroth, oracles.first
    notes = []
    if p_lower is None:
        p_lower = p_lower_bound(zeroth, sfo)
        source = "composed oracle bound"
        if isinstance(zeroth, SzoSpec) and zeroth.eps_f > 0:
            source += " (Monte Carlo, 1e5 draws)"
    else:
        source = "override"
    m, mf, mc, integral = compute_m(params.gamma_inc, params.gamma_dec)
    A, B, C = bound_coefficients(params.gamma_inc, params.gamma_dec)
    if not integral:
        notes.append("m is not an integer; using the floor/ceil form of the pathwise bound")
    L = problem.lipschitz_L
    if params.method == "trust-region":
        if epsilon is None:
            raise ValueError("trust-region theory needs epsilon")
        c = tr_constants(params, zeroth, sfo, L, epsilon, p=p_lower, eta=eta)
        c_prog, eps_rej = c["c_prog"], None
        eps_floor, eps_feasible = c["eps_floor"], c["eps_feasible"]
    else:
        c = ls_constants(params, zeroth, sfo, L, p=p_lower, eta=eta)
        c_prog, eps_rej = None, c["eps_rej"]
        if epsilon is not None and not math.isclose(epsilon, c["epsilon_resulting"], rel_tol=1e-12):
            notes.append(f"line search reaches eps = {c['epsilon_resulting']:.6g}; requested {epsilon:.6g} ignored")
        epsilon = c["epsilon_resulting"]
        eps_floor = eps_feasible = c["eps_rej_floor"] * c["multiplier"]
    alpha_bar, h_eps = c["alpha_bar"], c["h_eps"]
    redefined = False
    if params.alpha_0 < alpha_bar:
        alpha_bar, redefined = params.alpha_0, True
        if params.method == "trust-region":
            h_eps = c_prog * (alpha_bar / params.gamma_inc) ** 2
        else:
            h_eps = ls_h(params, alpha_bar, eps_rej)
        notes.append("alpha_0 < alpha_bar; alpha_bar redefined to alpha_0 and h(eps) recomputed")
    x0 = problem.default_start if x0 is None else np.asarray(x0, dtype=float)
    Z0 = problem.value_at(x0) - problem.lower_bound
    k_decay = decay_steps(alpha_bar, params.alpha_0, params.gamma_dec)
    d = B * k_decay
    R = A * Z0 / h_eps + d
    mu = mu_bound(zeroth)
    regime = regime_of(zeroth)
    dz = getattr(zeroth, "delta_0", 0.0)
    ec = getattr(zeroth, "eps_c", 0.0)
    if integral:
        p_m = p_m_threshold(regime, mf, h_eps, zeroth.eps_f, dz, ec)
    else:
        p_m = p_m_threshold(regime, mf, h_eps, zeroth.eps_f, dz, ec, m_ceil=mc)
    variant = tail_variant or default_variant(zeroth)
    gap = p_lower - p_m
    feasible = gap > 0
    if s is None:
        s = h_eps * gap / 4.0 if feasible else math.nan
    if p_hat is None:
        p_hat = p_m + s / h_eps + gap / 2.0 if feasible else math.nan
    if feasible and not p_m + s / h_eps < p_hat < p_lower:
        feasible = False
        notes.append("(s, p_hat) violate p_m + s/h < p_hat < p")
    t_thr = t_threshold(R, p_hat, p_m, s, h_eps) if feasible else math.inf
    if not feasible:
        notes.append("regime infeasible: p_lower <= p_m")
    return TheoryReport(
        method=params.method, regime=regime, tail_variant=variant,
        m=m, m_floor=mf, m_ceil=mc, m_integral=integral,
        alpha_bar=alpha_bar, alpha_bar_redefined=redefined,
        eta=c["eta"], eta_interval=tuple(c["eta_interval"]),
        h_eps=h_eps, c_prog=c_prog, epsilon=epsilon,
        eps_floor=eps_floor, eps_feasible=eps_feasible, eps_rej=eps_rej,
        p_lower=p_lower, p_lower_source=source, mu=mu, p_m=p_m,
        Z0=Z0, d=d, decay_steps=k_decay, R=R, s=s, p_hat=p_hat,
        t_threshold=t_thr, feasible=feasible, notes=notes, zeroth=zeroth,
    )
