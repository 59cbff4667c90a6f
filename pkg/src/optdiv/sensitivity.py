"""Comparative statics of the no-jump optimal strategy.

Analytic partial derivatives of ``(pi*, kappa*, xi*)`` are available for
``lambda == 0``, where the optimum is explicit.  With jumps only central
finite differences of the solver are reported.
"""

from __future__ import annotations

import csv
import io
import math
import os
from collections.abc import Iterable
from dataclasses import dataclass

from .closed_form import Solution, g_hat_star, solve, solve_diffusion
from .errors import FeasibilityLost, IllPosed, NoAnalyticGradient, UnsupportedParameter, ValidationError
from .model import ValidatedModel

PARAMETERS = ("rho", "eta", "mu_bar", "sigma", "alpha", "beta")
COMPONENTS = ("pi", "kappa", "xi")
DEFAULT_STEP = 1e-5
# Denominator floor for relative errors of (near-)zero partials.
REL_FLOOR = 1e-6


@dataclass(frozen=True)
class StrategyGradient:
    wrt: str
    d_pi: float
    d_kappa: float
    d_xi: float

    def component(self, name: str) -> float:
        return {"pi": self.d_pi, "kappa": self.d_kappa, "xi": self.d_xi}[name]


@dataclass(frozen=True)
class FdRow:
    wrt: str
    component: str
    analytic: float | None
    finite_diff: float
    rel_error: float | None

    @property
    def label(self) -> str:
        return "analytic" if self.analytic is not None else "fd_only"


def _check_tag(wrt: str) -> None:
    if wrt not in PARAMETERS:
        raise UnsupportedParameter(f"unsupported parameter {wrt!r}; expected one of {', '.join(PARAMETERS)}")


def grad(model: ValidatedModel, wrt: str) -> StrategyGradient:
    """Exact partials of the no-jump optimum with respect to ``wrt``.

    ``mu_bar`` is the excess return ``mu - r`` with ``r`` held fixed; ``sigma``
    is varied with ``mu - r`` held fixed.
    """
    _check_tag(wrt)
    if model.lam != 0:
        raise NoAnalyticGradient("analytic partials exist only for lambda == 0; use fd_check")
    sol = solve_diffusion(model)
    m = model
    eta, beta, sigma, rho, r = m.eta, m.beta, m.sigma, m.rho, m.r
    mu_bar, p_bar = m.mu - m.r, m.p - m.alpha
    lam_s = mu_bar / sigma
    q = 1.0 - rho**2
    kappa, pi, xi = sol.kappa_star, sol.pi_star, sol.xi_star
    risk = (1.0 - eta) / eta

    if wrt == "rho":
        dk = (lam_s / (eta * beta) + 2.0 * rho * kappa) / q
        dp = beta / sigma * (kappa + rho * dk)
        dx = -risk * kappa * beta * (lam_s + eta * beta * rho * kappa)
    elif wrt == "eta":
        dp = -pi / eta
        dk = -kappa / eta
        dx = -xi / eta + (g_hat_star(m) + (eta - 1.0) * r) / eta**2
    elif wrt == "mu_bar":
        dp = 1.0 / (eta * sigma**2 * q)
        dk = rho / (eta * beta * sigma * q)
        dx = -risk / eta * (rho * p_bar + beta * lam_s) / (beta * sigma * q)
    elif wrt == "sigma":
        dp = -(2.0 - rho**2) * lam_s / (eta * sigma**2 * q) - rho * beta / sigma**2 * kappa
        dk = -rho * mu_bar / (eta * beta * sigma**2 * q)
        dx = risk / eta * mu_bar / sigma**2 * (rho * p_bar + beta * lam_s) / (beta * q)
    elif wrt == "alpha":
        dk = -1.0 / (eta * beta**2 * q)
        dp = rho * beta / sigma * dk
        dx = risk * kappa
    else:  # beta
        dk = -(2.0 * p_bar + rho * beta * lam_s) / (eta * beta**3 * q)
        dp = rho * beta / sigma * (kappa / beta + dk)
        dx = risk / eta * (p_bar**2 + beta * rho * p_bar * lam_s) / (beta**3 * q)
    return StrategyGradient(wrt, dp, dk, dx)


def _solver_for(model: ValidatedModel):
    return solve_diffusion if model.lam == 0 else solve


def _shifted(model: ValidatedModel, wrt: str, h: float) -> Solution:
    key = "mu" if wrt == "mu_bar" else wrt
    try:
        bumped = model.replace(**{key: getattr(model, key) + h})
        return _solver_for(model)(bumped)
    except (ValidationError, IllPosed) as exc:
        raise FeasibilityLost(f"{wrt} shifted by {h:g} leaves the feasible set: {exc}") from exc


def central_difference(model: ValidatedModel, wrt: str, step: float = DEFAULT_STEP) -> StrategyGradient:
    """Central difference of the solver's strategy; halves ``step`` once on feasibility loss."""
    _check_tag(wrt)
    if not step > 0:
        raise UnsupportedParameter(f"step must be > 0, got {step}")
    for attempt in range(2):
        try:
            up, dn = _shifted(model, wrt, step), _shifted(model, wrt, -step)
            break
        except FeasibilityLost:
            if attempt == 1:
                raise
            step /= 2.0
    d = [(a - b) / (2.0 * step) for a, b in zip(up.strategy.as_tuple(), dn.strategy.as_tuple())]
    return StrategyGradient(wrt, *d)


def fd_check(model: ValidatedModel, wrt: str | Iterable[str] = PARAMETERS, step: float = DEFAULT_STEP) -> list[FdRow]:
    """Compare analytic partials with central differences, one row per (parameter, component)."""
    tags = [wrt] if isinstance(wrt, str) else list(wrt)
    rows = []
    for tag in tags:
        fd = central_difference(model, tag, step)
        exact = grad(model, tag) if model.lam == 0 else None
        for comp in COMPONENTS:
            num = fd.component(comp)
            if exact is None:
                rows.append(FdRow(tag, comp, None, num, None))
                continue
            ana = exact.component(comp)
            rows.append(FdRow(tag, comp, ana, num, abs(ana - num) / max(abs(ana), REL_FLOOR)))
    return rows


def _fmt(v: float | None) -> str:
    return "" if v is None else f"{v:.12g}"


def report_csv(rows: list[FdRow], destination: str | os.PathLike | None = None) -> str:
    """Serialise rows as CSV (wrt, component, analytic, finite_diff, rel_error); returns the text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["wrt", "component", "analytic", "finite_diff", "rel_error"])
    for row in rows:
        writer.writerow([row.wrt, row.component, _fmt(row.analytic), _fmt(row.finite_diff), _fmt(row.rel_error)])
    text = buf.getvalue()
    if destination is not None:
        with open(destination, "w", newline="") as fh:
            fh.write(text)
    return text


def _sign(v: float) -> float:
    return 0.0 if v == 0 else math.copysign(1.0, v)


def sign_laws(model: ValidatedModel, corrected: bool = False) -> dict[str, bool]:
    """Evaluate qualitative sign laws of the no-jump partials at ``model``.

    The default set is the one usually quoted for this model. Two of its
    members do not hold in general: ``d_pi/d_alpha`` has the sign of
    ``-rho``, and ``d_pi/d_rho`` is positive only when
    ``p_bar (1 + rho^2) + 2 beta rho Lambda > 0``. ``corrected=True``
    returns the laws implied by the exact partials instead.
    """
    g = {tag: grad(model, tag) for tag in PARAMETERS}
    m, rho = model, model.rho
    lam_s = (m.mu - m.r) / m.sigma
    p_bar = m.p - m.alpha
    kappa = solve_diffusion(m).kappa_star
    laws = {
        "d_kappa/d_eta < 0": g["eta"].d_kappa < 0,
        "d_kappa/d_alpha < 0": g["alpha"].d_kappa < 0,
        "d_kappa/d_beta < 0": g["beta"].d_kappa < 0,
        "d_pi/d_mu_bar > 0": g["mu_bar"].d_pi > 0,
    }
    if corrected:
        laws["sign(d_pi/d_rho) = sign(p_bar(1+rho^2) + 2 beta rho Lambda)"] = _sign(g["rho"].d_pi) == _sign(
            p_bar * (1 + rho**2) + 2 * m.beta * rho * lam_s
        )
        laws["sign(d_pi/d_alpha) = -sign(rho)"] = _sign(g["alpha"].d_pi) == -_sign(rho)
        if rho > -lam_s / (m.eta * m.beta * kappa) and m.eta != 1:
            laws["sign(d_xi/d_rho) = sign(eta-1)"] = _sign(g["rho"].d_xi) == _sign(m.eta - 1)
    else:
        laws["d_pi/d_rho > 0"] = g["rho"].d_pi > 0
        laws["sign(d_pi/d_alpha) = sign(rho)"] = _sign(g["alpha"].d_pi) == _sign(rho)
    if rho >= 0:
        laws["d_pi/d_sigma < 0"] = g["sigma"].d_pi < 0
        laws["d_kappa/d_rho > 0"] = g["rho"].d_kappa > 0
    laws["d_xi/d_sigma = -Lambda d_xi/d_mu_bar"] = math.isclose(
        g["sigma"].d_xi, -lam_s * g["mu_bar"].d_xi, rel_tol=1e-12, abs_tol=1e-15
    )
    return laws
