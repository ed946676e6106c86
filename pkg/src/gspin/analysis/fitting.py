"""Weighted nonlinear least squares with covariance-based uncertainties."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .models import FitModel

FTOL = 1e-10
XTOL = 1e-12
MAX_ITER = 500
SINGULAR_RCOND = 1e-10


@dataclass(frozen=True)
class FitResult:
    model: FitModel
    params: dict
    errors: dict
    residual_norm: float
    chi2: float
    dof: int
    converged: bool
    iterations: int
    message: str = ""
    merged: tuple[tuple[int, int], ...] = field(default=())

    @property
    def authoritative(self) -> bool:
        """Estimates are only meaningful when the fit converged."""
        return self.converged

    @property
    def values(self) -> np.ndarray:
        return np.array([self.params[k] for k in self.model.names])

    def component(self, name: str) -> np.ndarray:
        """All values of a per-component parameter (``center``, ``freq``, ...)."""
        return np.array([self.params[f"{name}_{k}"] for k in range(self.model.n)])

    def component_errors(self, name: str) -> np.ndarray:
        return np.array([self.errors[f"{name}_{k}"] for k in range(self.model.n)])

    def predict(self, x) -> np.ndarray:
        return self.model(x, self.values)

    def to_dict(self) -> dict:
        return {
            "model": self.model.kind,
            "components": self.model.n,
            "params": self.params,
            "errors": self.errors,
            "residual_norm": self.residual_norm,
            "chi2": self.chi2,
            "dof": self.dof,
            "converged": self.converged,
            "iterations": self.iterations,
            "message": self.message,
            "merged": [list(m) for m in self.merged],
        }


def _sort_components(model: FitModel, p: np.ndarray, cov: np.ndarray):
    if model.kind == "lorentzian_sum":
        head, key = 1, 1
    elif model.kind == "damped_cosine_sum":
        head, key = 2, 1
    else:
        return p, cov
    order = np.argsort(p[head + key::3])
    idx = np.r_[np.arange(head), (head + 3 * order[:, None] + np.arange(3)).ravel()]
    return p[idx], cov[np.ix_(idx, idx)]


def _merged_lines(model: FitModel, p: np.ndarray) -> tuple[tuple[int, int], ...]:
    if model.kind != "lorentzian_sum" or model.n < 2:
        return ()
    centers, widths = p[2::3], p[3::3]
    limit = 0.5 * float(np.mean(np.abs(widths)))
    return tuple((k, k + 1) for k in range(model.n - 1) if centers[k + 1] - centers[k] < limit)


def fit(model: FitModel, x, y, sigma=None) -> FitResult:
    """Fit ``model`` to ``(x, y)`` with optional 1-sigma errors ``sigma``.

    With ``sigma`` the uncertainties are absolute; without it the data are
    unit-weighted and the covariance is rescaled by the reduced chi-square.
    Non-convergence and rank-deficient Jacobians are reported through
    ``converged`` rather than raised.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    npar = len(model.names)
    if x.size < npar:
        raise ValueError(f"{x.size} points cannot constrain {npar} parameters")
    absolute = sigma is not None
    s = np.ones_like(y) if sigma is None else np.asarray(sigma, dtype=float)
    if np.any(s <= 0):
        raise ValueError("sigma must be positive")
    if model.p0 is None:
        model = model.with_guess(x, y)

    def residuals(p):
        return (model(x, p) - y) / s

    res = least_squares(
        residuals,
        np.asarray(model.p0),
        bounds=(np.asarray(model.lower), np.asarray(model.upper)),
        method="trf",
        jac="3-point",
        x_scale="jac",
        ftol=FTOL,
        xtol=XTOL,
        gtol=1e-15,
        max_nfev=MAX_ITER,
    )
    j = res.jac
    _, sv, vt = np.linalg.svd(j, full_matrices=False)
    singular = sv.size < npar or sv[-1] <= SINGULAR_RCOND * sv[0]
    keep = sv > SINGULAR_RCOND * sv[0]
    cov = (vt[keep].T / sv[keep] ** 2) @ vt[keep]
    chi2 = float(np.sum(res.fun**2))
    dof = max(x.size - npar, 1)
    if not absolute:
        cov = cov * chi2 / dof
    p, cov = _sort_components(model, res.x, cov)
    err = np.sqrt(np.clip(np.diag(cov), 0, None))
    if singular:
        err = np.full(npar, np.inf)
    converged = bool(res.status > 0 and not singular)
    message = res.message if not singular else "singular Jacobian at the optimum"
    names = model.names
    return FitResult(
        model=model,
        params={k: float(v) for k, v in zip(names, p)},
        errors={k: float(v) for k, v in zip(names, err)},
        residual_norm=float(np.sqrt(chi2)),
        chi2=chi2,
        dof=dof,
        converged=converged,
        iterations=int(res.nfev),
        message=str(message),
        merged=_merged_lines(model, p),
    )
