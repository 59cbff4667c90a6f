"""Optimal constant strategies and value functions under log and power utility.

A constant strategy fixes the risky weight ``pi``, the liability ratio
``kappa`` and a dividend rate proportional to wealth, ``xi``.  Wealth is then
a geometric jump-diffusion whose log-drift is ``drift_log(pi, kappa) - xi``,
and the discounted-utility objective has a closed form.  The solvers below
maximise that closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

from .errors import DispatchAmbiguity, DomainError, EtaIsOne, IllPosed, InfeasibleC
from .model import ValidatedModel
from .rootfind import newton_bisect

ETA_DISPATCH_TOL = 1e-9
# Right end of the root bracket, as a fraction of 1/gamma.
_BRACKET_SHRINK = 1e-12


@dataclass(frozen=True)
class ConstantStrategy:
    pi_c: float
    kappa_c: float
    xi_c: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.pi_c, self.kappa_c, self.xi_c)):
            raise DomainError(f"strategy components must be finite: {self}")
        if self.kappa_c < 0:
            raise DomainError(f"liability ratio kappa_c={self.kappa_c} must be >= 0")
        if self.xi_c < 0:
            raise DomainError(f"dividend rate xi_c={self.xi_c} must be >= 0")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.pi_c, self.kappa_c, self.xi_c)


@dataclass(frozen=True)
class DerivedConstants:
    lambda_sharpe: float
    a: float
    b: float
    c: float


@dataclass(frozen=True)
class Solution:
    """Optimal constant strategy together with the quantities it was built from.

    ``drift_star`` is the maximised drift functional (``f*`` for log utility,
    ``g*`` for power utility).  ``value_coeffs`` is ``(1/delta, (f*-delta)/delta**2)``
    for log and ``(psi**-eta / (1-eta),)`` for power utility.
    """

    strategy: ConstantStrategy
    utility_kind: Literal["log", "power"]
    eta: float
    delta: float
    drift_star: float
    psi: float | None
    value_coeffs: tuple[float, ...]
    constants: DerivedConstants
    method: Literal["quadratic", "root", "explicit"]
    boundary: bool = False

    @property
    def pi_star(self) -> float:
        return self.strategy.pi_c

    @property
    def kappa_star(self) -> float:
        return self.strategy.kappa_c

    @property
    def xi_star(self) -> float:
        return self.strategy.xi_c


def derived_constants(model: ValidatedModel) -> DerivedConstants:
    m = model
    lam_s = (m.mu - m.r) / m.sigma
    one_m_rho2 = 1.0 - m.rho**2
    a = m.gamma * m.beta**2 * one_m_rho2
    b = m.beta**2 * one_m_rho2 + m.gamma * (m.p - m.alpha + m.beta * m.rho * lam_s)
    c = m.p - m.alpha + m.beta * m.rho * lam_s - m.lam * m.gamma
    return DerivedConstants(lam_s, a, b, c)


def _check_kappa(model: ValidatedModel, y2: float) -> None:
    if not 0.0 <= y2 < model.kappa_max:
        raise DomainError(f"liability ratio {y2} outside [0, {model.kappa_max})")


def _quad(model: ValidatedModel, y1: float, y2: float) -> float:
    m = model
    return m.sigma**2 * y1**2 - 2.0 * m.beta * m.rho * m.sigma * y1 * y2 + m.beta**2 * y2**2


def drift_log(model: ValidatedModel, y1: float, y2: float) -> float:
    """Log-drift ``f`` of wealth under constant weights ``(y1, y2)``, before dividends."""
    _check_kappa(model, y2)
    m = model
    val = m.r + (m.mu - m.r) * y1 + (m.p - m.alpha) * y2 - 0.5 * _quad(m, y1, y2)
    if m.lam > 0:
        val += m.lam * math.log1p(-m.gamma * y2)
    return val


def _power_jump_term(gamma: float, eta: float, y2: float) -> float:
    # ((1 - gamma*y2)**(1-eta) - 1) / (1-eta), stable as eta -> 1
    k = 1.0 - eta
    log_surv = math.log1p(-gamma * y2)
    return math.expm1(k * log_surv) / k


def drift_power(model: ValidatedModel, eta: float, y1: float, y2: float) -> float:
    """Certainty-equivalent drift ``g`` for power utility with risk aversion ``eta``."""
    if eta == 1.0:
        raise EtaIsOne("eta == 1 is log utility; use drift_log")
    if not eta > 0:
        raise DomainError(f"eta={eta} must be > 0")
    _check_kappa(model, y2)
    m = model
    val = m.r + (m.mu - m.r) * y1 + (m.p - m.alpha) * y2 - 0.5 * eta * _quad(m, y1, y2)
    if m.lam > 0:
        val += m.lam * _power_jump_term(m.gamma, eta, y2)
    return val


def drift_gradient(model: ValidatedModel, eta: float, y1: float, y2: float) -> tuple[float, float]:
    """Gradient of ``drift_log`` (``eta == 1``) or ``drift_power`` in ``(y1, y2)``."""
    _check_kappa(model, y2)
    m = model
    d1 = (m.mu - m.r) - eta * (m.sigma**2 * y1 - m.beta * m.rho * m.sigma * y2)
    d2 = (m.p - m.alpha) - eta * (m.beta**2 * y2 - m.beta * m.rho * m.sigma * y1)
    if m.lam > 0:
        d2 -= m.lam * m.gamma * (1.0 - m.gamma * y2) ** (-eta)
    return d1, d2


def _drift(model: ValidatedModel, eta: float, y1: float, y2: float) -> float:
    return drift_log(model, y1, y2) if eta == 1.0 else drift_power(model, eta, y1, y2)


def _merton_pi(model: ValidatedModel, eta: float, kappa: float) -> float:
    m = model
    return (m.mu - m.r) / (eta * m.sigma**2) + m.rho * m.beta / m.sigma * kappa


def _log_solution(model, kappa, consts, method, boundary=False) -> Solution:
    d = model.delta
    pi = _merton_pi(model, 1.0, kappa)
    f_star = drift_log(model, pi, kappa)
    return Solution(
        strategy=ConstantStrategy(pi, kappa, d),
        utility_kind="log",
        eta=1.0,
        delta=d,
        drift_star=f_star,
        psi=None,
        value_coeffs=(1.0 / d, (f_star - d) / d**2),
        constants=consts,
        method=method,
        boundary=boundary,
    )


def _power_solution(model, eta, kappa, consts, method, boundary=False) -> Solution:
    pi = _merton_pi(model, eta, kappa)
    g_star = drift_power(model, eta, pi, kappa)
    psi = (model.delta - (1.0 - eta) * g_star) / eta
    if not psi > 0:
        raise IllPosed(
            f"psi={psi:.6g} <= 0: need delta > (1-eta)*g* = {(1.0 - eta) * g_star:.6g}; "
            f"the value is {'+inf' if eta < 1 else '-inf'}"
        )
    return Solution(
        strategy=ConstantStrategy(pi, kappa, psi),
        utility_kind="power",
        eta=eta,
        delta=model.delta,
        drift_star=g_star,
        psi=psi,
        value_coeffs=(psi ** (-eta) / (1.0 - eta),),
        constants=consts,
        method=method,
        boundary=boundary,
    )


def log_quadratic_root(consts: DerivedConstants) -> float:
    """Smaller root of ``A y^2 - B y + C``, written to avoid cancellation."""
    a, b, c = consts.a, consts.b, consts.c
    disc = b * b - 4.0 * a * c
    return 2.0 * c / (b + math.sqrt(max(disc, 0.0)))


def solve_log(model: ValidatedModel, clamp_boundary: bool = False) -> Solution:
    """Optimal constant strategy for log utility (the dividend rate equals ``delta``)."""
    consts = derived_constants(model)
    if consts.c < 0:
        if not clamp_boundary:
            raise InfeasibleC(
                f"C={consts.c:.6g} < 0: the unconstrained optimum shorts insurance; "
                "pass clamp_boundary to accept kappa* = 0"
            )
        return _log_solution(model, 0.0, consts, "quadratic", boundary=True)
    if model.lam > 0:
        kappa = log_quadratic_root(consts)
        return _log_solution(model, kappa, consts, "quadratic")
    # without jumps the quadratic factors as (gamma y - 1)(beta^2 (1-rho^2) y - C)
    kappa = consts.c / (model.beta**2 * (1.0 - model.rho**2))
    return _log_solution(model, kappa, consts, "explicit")


def kappa_equation(model: ValidatedModel, eta: float, y: float) -> float:
    """Residual ``(1-gamma y)^-eta + eta A y/(lam gamma^2) - C/(lam gamma) - 1``."""
    m = model
    consts = derived_constants(m)
    lg = m.lam * m.gamma
    return (1.0 - m.gamma * y) ** (-eta) + eta * consts.a / (lg * m.gamma) * y - consts.c / lg - 1.0


def kappa_root_power(model: ValidatedModel, eta: float) -> float:
    """Liability ratio solving the power-utility first-order condition (jumps present).

    The iteration runs on the condition multiplied through by ``lam*gamma``,
    which keeps it well scaled as ``lam`` shrinks; the returned root is the
    same.
    """
    m = model
    if not m.lam > 0:
        raise DomainError("kappa_root_power needs lambda > 0; use solve_diffusion")
    if eta == 1.0:
        raise EtaIsOne("eta == 1 reduces to the quadratic of solve_log")
    consts = derived_constants(m)
    if consts.c < 0:
        raise InfeasibleC(f"C={consts.c:.6g} < 0")
    if consts.c == 0:
        return 0.0
    lg = m.lam * m.gamma
    slope = eta * m.beta**2 * (1.0 - m.rho**2)
    excess = consts.c + lg

    def fn(y):
        return lg * (1.0 - m.gamma * y) ** (-eta) + slope * y - excess

    def dfn(y):
        return lg * eta * m.gamma * (1.0 - m.gamma * y) ** (-eta - 1.0) + slope

    hi = (1.0 - _BRACKET_SHRINK) / m.gamma
    guess = min(log_quadratic_root(consts), hi)
    root, _ = newton_bisect(fn, dfn, 0.0, hi, x0=guess)
    return _polish(lambda y: kappa_equation(m, eta, y), lambda y: dfn(y) / lg, root, hi)


def _polish(res, dres, y: float, hi: float, span: int = 8) -> float:
    """Refine a root for the unscaled residual ``res``.

    The scaled iteration stops within a few ulps, but for small ``lam`` one
    ulp of ``y`` moves the unscaled residual by up to ~1e-12. Take Newton
    steps on ``res`` and keep the neighbouring float with the smallest
    ``|res|``.
    """
    for _ in range(2):
        step = res(y) / dres(y)
        if not math.isfinite(step) or not 0.0 <= y - step <= hi:
            break
        y -= step
    best, best_abs = y, abs(res(y))
    for direction in (math.inf, -math.inf):
        cand = y
        for _ in range(span):
            cand = math.nextafter(cand, direction)
            if not 0.0 <= cand <= hi:
                break
            r = abs(res(cand))
            if r < best_abs:
                best, best_abs = cand, r
    return best


def solve_diffusion(model: ValidatedModel, clamp_boundary: bool = False) -> Solution:
    """Closed-form optimum without jumps (``lambda == 0``), any ``eta > 0``."""
    m = model
    if m.lam != 0:
        raise DomainError("solve_diffusion needs lambda == 0")
    eta = m.eta
    consts = derived_constants(m)
    hedge_premium = m.p - m.alpha + m.beta * m.rho * consts.lambda_sharpe
    if not hedge_premium > 0:
        if not clamp_boundary:
            raise InfeasibleC(
                f"p - alpha + beta*rho*Lambda = {hedge_premium:.6g} <= 0; "
                "pass clamp_boundary to accept kappa* = 0"
            )
        kappa, boundary = 0.0, True
    else:
        kappa, boundary = hedge_premium / (eta * m.beta**2 * (1.0 - m.rho**2)), False
    if eta == 1.0:
        return _log_solution(m, kappa, consts, "explicit", boundary=boundary)
    return _power_solution(m, eta, kappa, consts, "explicit", boundary=boundary)


def g_hat_star(model: ValidatedModel) -> float:
    """Maximised drift without jumps, evaluated from its explicit formula."""
    m = model
    lam_s = (m.mu - m.r) / m.sigma
    hp = m.p - m.alpha + m.beta * m.rho * lam_s
    return m.r + hp**2 / (2.0 * m.eta * m.beta**2 * (1.0 - m.rho**2)) + lam_s**2 / (2.0 * m.eta)


def solve_power(model: ValidatedModel, clamp_boundary: bool = False) -> Solution:
    """Optimal constant strategy for power utility (``eta != 1``)."""
    eta = model.eta
    if eta == 1.0:
        raise EtaIsOne("eta == 1 is log utility; use solve_log")
    if model.lam == 0:
        return solve_diffusion(model, clamp_boundary=clamp_boundary)
    consts = derived_constants(model)
    if consts.c < 0:
        if not clamp_boundary:
            raise InfeasibleC(
                f"C={consts.c:.6g} < 0: the unconstrained optimum shorts insurance; "
                "pass clamp_boundary to accept kappa* = 0"
            )
        return _power_solution(model, eta, 0.0, consts, "root", boundary=True)
    kappa = kappa_root_power(model, eta)
    return _power_solution(model, eta, kappa, consts, "root")


def solve(model: ValidatedModel, clamp_boundary: bool = False) -> Solution:
    """Dispatch on the preference parameter: log for ``eta == 1``, power otherwise."""
    eta = model.eta
    if eta == 1.0:
        return solve_log(model, clamp_boundary=clamp_boundary)
    if abs(eta - 1.0) < ETA_DISPATCH_TOL:
        raise DispatchAmbiguity(
            f"eta={eta!r} is within {ETA_DISPATCH_TOL} of 1; use eta = 1 exactly for log utility"
        )
    return solve_power(model, clamp_boundary=clamp_boundary)


def value_function(solution: Solution, x: float) -> float:
    if not x > 0:
        raise DomainError(f"initial wealth x={x} must be > 0")
    if solution.utility_kind == "log":
        c0, c1 = solution.value_coeffs
        return c0 * math.log(solution.delta * x) + c1
    (c0,) = solution.value_coeffs
    return c0 * x ** (1.0 - solution.eta)


def discount_gap(model: ValidatedModel, u_c: ConstantStrategy) -> float:
    """Exponential decay rate of the expected discounted power-utility integrand.

    ``delta - (1-eta) g(pi, kappa) + (1-eta) xi``; the objective is finite iff
    this is positive.
    """
    eta = model.eta
    g = drift_power(model, eta, u_c.pi_c, u_c.kappa_c)
    return model.delta - (1.0 - eta) * g + (1.0 - eta) * u_c.xi_c


def objective_constant(model: ValidatedModel, u_c: ConstantStrategy, x: float) -> float:
    """Exact discounted expected utility of dividends under a constant strategy."""
    if not x > 0:
        raise DomainError(f"initial wealth x={x} must be > 0")
    _check_kappa(model, u_c.kappa_c)
    eta, d = model.eta, model.delta
    if eta == 1.0:
        if u_c.xi_c == 0:
            raise DomainError("xi_c = 0 pays no dividends; log utility of 0 is -inf")
        f = drift_log(model, u_c.pi_c, u_c.kappa_c)
        return math.log(x) / d + math.log(u_c.xi_c) / d + f / d**2 - u_c.xi_c / d**2
    if abs(eta - 1.0) < ETA_DISPATCH_TOL:
        raise DispatchAmbiguity(f"eta={eta!r} is within {ETA_DISPATCH_TOL} of 1; use eta = 1")
    if u_c.xi_c == 0 and eta > 1:
        raise DomainError("xi_c = 0 pays no dividends; utility of 0 is -inf for eta > 1")
    gap = discount_gap(model, u_c)
    if not gap > 0:
        raise IllPosed(f"delta - (1-eta) g + (1-eta) xi = {gap:.6g} <= 0; objective is not finite")
    k = 1.0 - eta
    return x**k / k * u_c.xi_c**k / gap
