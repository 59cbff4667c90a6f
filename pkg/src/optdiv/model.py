"""Model parameters, standing assumptions and the premium rule."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import AssumptionViolation, NonpositiveLoading, UsageError

CONFIG_KEYS = ("r", "mu", "sigma", "alpha", "beta", "gamma", "lambda", "rho", "p", "delta", "eta")


@dataclass(frozen=True)
class MarketParams:
    r: float
    mu: float
    sigma: float


@dataclass(frozen=True)
class InsuranceParams:
    alpha: float
    beta: float
    gamma: float
    lam: float
    rho: float
    p: float


@dataclass(frozen=True)
class Preferences:
    """Discount rate ``delta`` and relative risk aversion ``eta`` (1 means log utility)."""

    delta: float
    eta: float


@dataclass(frozen=True)
class ModelParams:
    market: MarketParams
    insurance: InsuranceParams


@dataclass(frozen=True)
class ValidatedModel:
    """Market, insurance and preference parameters known to satisfy all assumptions.

    Only build through :func:`validate`; the solver and simulator take nothing else.
    Flat attribute access (``m.r``, ``m.lam``, ...) is provided for use in formulas.
    """

    market: MarketParams
    insurance: InsuranceParams
    prefs: Preferences

    r = property(lambda self: self.market.r)
    mu = property(lambda self: self.market.mu)
    sigma = property(lambda self: self.market.sigma)
    alpha = property(lambda self: self.insurance.alpha)
    beta = property(lambda self: self.insurance.beta)
    gamma = property(lambda self: self.insurance.gamma)
    lam = property(lambda self: self.insurance.lam)
    rho = property(lambda self: self.insurance.rho)
    p = property(lambda self: self.insurance.p)
    delta = property(lambda self: self.prefs.delta)
    eta = property(lambda self: self.prefs.eta)

    @property
    def kappa_max(self) -> float:
        """Upper (open) bound on the liability ratio.

        ``1/gamma`` keeps wealth positive across a jump; with ``lam == 0`` no jump
        can occur and the bound is vacuous.
        """
        return 1.0 / self.gamma if self.lam > 0 else math.inf

    def to_flat(self) -> dict[str, float]:
        flat = {**asdict(self.market), **asdict(self.insurance), **asdict(self.prefs)}
        flat["lambda"] = flat.pop("lam")
        return {k: flat[k] for k in CONFIG_KEYS}

    def replace(self, **overrides: float) -> ValidatedModel:
        """Return a re-validated copy with flat-key overrides (``lambda`` or ``lam``)."""
        flat = self.to_flat()
        for key, value in overrides.items():
            key = "lambda" if key == "lam" else key
            if key not in flat:
                raise UsageError(f"unknown parameter {key!r}")
            flat[key] = float(value)
        return from_flat(flat)


def validate(market: MarketParams, insurance: InsuranceParams, prefs: Preferences) -> ValidatedModel:
    values = {**asdict(market), **asdict(insurance), **asdict(prefs)}
    for name, value in values.items():
        if not math.isfinite(value):
            raise AssumptionViolation("nonfinite_parameter", f"{name}={value!r}")
    if market.sigma <= 0:
        raise AssumptionViolation("nonpositive_sigma", f"sigma={market.sigma} must be > 0")
    if not market.mu > market.r:
        raise AssumptionViolation("mu_le_r", f"need mu > r, got mu={market.mu}, r={market.r}")
    if insurance.beta <= 0:
        raise AssumptionViolation("nonpositive_beta", f"beta={insurance.beta} must be > 0")
    if insurance.gamma <= 0:
        raise AssumptionViolation("nonpositive_gamma", f"gamma={insurance.gamma} must be > 0")
    if insurance.lam < 0:
        raise AssumptionViolation("negative_lambda", f"lambda={insurance.lam} must be >= 0")
    if not -1.0 < insurance.rho < 1.0:
        raise AssumptionViolation("rho_out_of_range", f"need -1 < rho < 1, got rho={insurance.rho}")
    fair = insurance.alpha + insurance.lam * insurance.gamma
    if not insurance.p > fair:
        raise AssumptionViolation(
            "premium_not_fair",
            f"need premium p > alpha + lambda*gamma, got p={insurance.p} <= {fair}",
        )
    if prefs.delta <= 0:
        raise AssumptionViolation("nonpositive_delta", f"delta={prefs.delta} must be > 0")
    if prefs.eta <= 0:
        raise AssumptionViolation("nonpositive_eta", f"eta={prefs.eta} must be > 0")
    return ValidatedModel(market, insurance, prefs)


def expected_value_premium(alpha: float, lam: float, gamma: float, theta: float) -> float:
    """Premium rate ``(1 + theta) * (alpha + lam * gamma)`` under the expected value principle."""
    if not theta > 0:
        raise NonpositiveLoading(f"loading theta={theta} must be > 0")
    return (1.0 + theta) * (alpha + lam * gamma)


def from_flat(values: dict[str, float]) -> ValidatedModel:
    """Validate a flat mapping keyed by :data:`CONFIG_KEYS` (``lambda`` defaults to 0)."""
    unknown = set(values) - set(CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    values = dict(values)
    values.setdefault("lambda", 0.0)
    missing = [k for k in CONFIG_KEYS if k not in values]
    if missing:
        raise UsageError(f"missing config keys: {', '.join(missing)}")
    try:
        v = {k: float(values[k]) for k in CONFIG_KEYS}
    except (TypeError, ValueError) as exc:
        raise UsageError(f"config values must be numbers: {exc}") from None
    return validate(
        MarketParams(v["r"], v["mu"], v["sigma"]),
        InsuranceParams(v["alpha"], v["beta"], v["gamma"], v["lambda"], v["rho"], v["p"]),
        Preferences(v["delta"], v["eta"]),
    )


def read_config(path: str | Path) -> dict[str, float]:
    """Read the flat JSON key-value parameter file without validating it."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a flat object")
    return data


def load_config(path: str | Path, **overrides: float) -> ValidatedModel:
    values = read_config(path)
    values.update(overrides)
    return from_flat(values)


# Reference parameters; gamma is not fixed by the no-jump set and takes the jump-study value.
TABLE1 = {
    "r": 0.01,
    "mu": 0.05,
    "sigma": 0.25,
    "alpha": 0.1,
    "beta": 0.1,
    "gamma": 0.3,
    "lambda": 0.0,
    "rho": 0.0,
    "p": 0.15,
    "delta": 0.15,
    "eta": 2.0,
}


def table1(**overrides: float) -> ValidatedModel:
    values = dict(TABLE1)
    values.update({("lambda" if k == "lam" else k): v for k, v in overrides.items()})
    return from_flat(values)


__all__ = [
    "CONFIG_KEYS",
    "TABLE1",
    "InsuranceParams",
    "MarketParams",
    "ModelParams",
    "Preferences",
    "ValidatedModel",
    "expected_value_premium",
    "from_flat",
    "load_config",
    "read_config",
    "table1",
    "validate",
]
