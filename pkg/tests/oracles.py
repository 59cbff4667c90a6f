"""Independent reference computations used to freeze expected values.

Nothing here calls the solver; the drift functionals are re-evaluated
from their defining formulas on numpy grids.
"""

import numpy as np


def drift_grid(params, eta, y1, y2):
    r, mu, sigma = params["r"], params["mu"], params["sigma"]
    alpha, beta, gamma = params["alpha"], params["beta"], params["gamma"]
    lam, rho, p = params["lambda"], params["rho"], params["p"]
    quad = sigma**2 * y1**2 - 2 * beta * rho * sigma * y1 * y2 + beta**2 * y2**2
    val = r + (mu - r) * y1 + (p - alpha) * y2 - 0.5 * eta * quad
    if lam > 0:
        surv = 1 - gamma * y2
        with np.errstate(invalid="ignore", divide="ignore"):
            if eta == 1:
                jump = np.log(surv)
            else:
                jump = (surv ** (1 - eta) - 1) / (1 - eta)
        val = val + lam * np.where(surv > 0, jump, -np.inf)
    return val


def zoom_argmax(params, eta, y1_box, y2_box, n=201, tol=1e-10):
    """Maximise the drift over a box by repeated grid refinement."""
    (a1, b1), (a2, b2) = y1_box, y2_box
    while max(b1 - a1, b2 - a2) > tol:
        g1 = np.linspace(a1, b1, n)
        g2 = np.linspace(a2, b2, n)
        Y1, Y2 = np.meshgrid(g1, g2, indexing="ij")
        vals = drift_grid(params, eta, Y1, Y2)
        i, j = np.unravel_index(np.nanargmax(vals), vals.shape)
        c1, c2 = g1[i], g2[j]
        w1, w2 = (b1 - a1) / 20, (b2 - a2) / 20
        a1, b1 = c1 - w1, c1 + w1
        lo2 = y2_box[0]
        a2, b2 = max(lo2, c2 - w2), c2 + w2
    c1, c2 = 0.5 * (a1 + b1), 0.5 * (a2 + b2)
    return c1, c2, float(drift_grid(params, eta, np.array(c1), np.array(c2)))


def bisect_increasing(fn, lo, hi, tol=1e-13):
    flo, fhi = fn(lo), fn(hi)
    assert flo <= 0 < fhi, (flo, fhi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fn(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def table1(**over):
    base = {"r": 0.01, "mu": 0.05, "sigma": 0.25, "alpha": 0.1, "beta": 0.1, "gamma": 0.3,
            "lambda": 0.0, "rho": 0.0, "p": 0.15, "delta": 0.15, "eta": 2.0}
    base.update(over)
    return base
