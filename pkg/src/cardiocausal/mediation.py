"""Three-variable mediation fits with the Sobel significance test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats


class MediationError(ValueError):
    """Degenerate or mismatched mediation inputs."""


@dataclass(frozen=True)
class MediationFit:
    path: tuple[str, str, str]
    a_hat: float
    se_a: float
    b_hat: float
    se_b: float
    direct_effect: float
    indirect_effect: float
    sobel_z: float
    sobel_p: float

    def __post_init__(self):
        if abs(self.indirect_effect - self.a_hat * self.b_hat) > 1e-9:
            raise MediationError("indirect_effect must equal a_hat * b_hat")
        if not 0.0 <= self.sobel_p <= 1.0:
            raise MediationError("sobel_p must lie in [0, 1]")


def _ols(design: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(coefficients, standard errors) of ordinary least squares."""
    n, k = design.shape
    xtx = design.T @ design
    try:
        beta = np.linalg.solve(xtx, design.T @ y)
    except np.linalg.LinAlgError:
        raise MediationError("degenerate design matrix") from None
    resid = y - design @ beta
    dof = n - k
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(xtx)
    return beta, np.sqrt(np.diag(cov))


def mediation_fit(x, m, y, path: tuple[str, str, str] = ("x", "m", "y")) -> MediationFit:
    """Fit m ~ x and y ~ m + x; test the indirect effect a*b with Sobel's z.

    The first-order delta-method standard error is used:
    z = a*b / sqrt(b^2 se_a^2 + a^2 se_b^2); p is the two-sided normal tail.
    A zero denominator (a = b = 0) yields p = 1 by convention.
    """
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (x.shape == m.shape == y.shape) or x.ndim != 1:
        raise MediationError("inputs must be equal-length vectors")
    n = x.size
    if n < 10:
        raise MediationError("need at least 10 observations")
    for label, v in (("x", x), ("m", m), ("y", y)):
        if not np.all(np.isfinite(v)):
            raise MediationError(f"non-finite values in {label}")
        if np.std(v) == 0:
            raise MediationError(f"degenerate variance in {label}")

    ones = np.ones(n)
    coef_a, se_vec_a = _ols(np.column_stack([ones, x]), m)
    a_hat, se_a = float(coef_a[1]), float(se_vec_a[1])
    coef_b, se_vec_b = _ols(np.column_stack([ones, m, x]), y)
    b_hat, se_b = float(coef_b[1]), float(se_vec_b[1])
    direct = float(coef_b[2])

    indirect = a_hat * b_hat
    denom = math.sqrt(b_hat**2 * se_a**2 + a_hat**2 * se_b**2)
    if denom == 0.0:
        z, p = 0.0, 1.0
    else:
        z = indirect / denom
        p = float(2.0 * stats.norm.sf(abs(z)))
    return MediationFit(
        path=tuple(path),
        a_hat=a_hat,
        se_a=se_a,
        b_hat=b_hat,
        se_b=se_b,
        direct_effect=direct,
        indirect_effect=indirect,
        sobel_z=z,
        sobel_p=p,
    )
