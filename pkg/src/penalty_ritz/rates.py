"""Decay-rate algebra for penalty schedules and log-log slope fitting.

With ``lam_n ~ n^sigma`` and ansatz classes approximating at rate ``r``
in H1 and ``s`` on the boundary:

* if the rates hold uniformly for ``u_lam``, the error bound decays like
  ``min(r, s - sigma/2, sigma)``, best at ``sigma = 2s/3``;
* if they hold only for ``u*``, it decays like ``min(r, s - sigma/2, sigma/2)``,
  best at ``sigma = s``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def _check_positive(**values):
    for name, v in values.items():
        if not v > 0:
            raise DomainError(f"{name} must be positive, got {v!r}")


def rho_uniform(sigma, r, s):
    _check_positive(r=r, s=s)
    return min(r, s - sigma / 2, sigma)


def rho_star_uniform(r, s):
    """``(sigma*, rho*) = (2s/3, min(2s/3, r))``."""
    _check_positive(r=r, s=s)
    sigma = 2 * s / 3
    return sigma, min(sigma, r)


def rho_nonuniform(sigma, r, s):
    _check_positive(r=r, s=s)
    return min(r, s - sigma / 2, sigma / 2)


def rho_star_nonuniform(r, s):
    """``(sigma*, rho*) = (s, min(s/2, r))``."""
    _check_positive(r=r, s=s)
    return s, min(s / 2, r)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    points: tuple
    window: str

    @property
    def rate(self):
        """Decay exponent, i.e. ``-slope`` (for errors against ``n`` or ``lam``)."""
        return -self.slope


def fit_rate(points, window=4):
    """Least-squares slope of ``log(error)`` against ``log(scale)``.

    ``window`` keeps the last ``window`` points (``None`` keeps all), which
    drops the coarsest, pre-asymptotic entries of a refinement sequence.
    """
    pts = [(float(a), float(b)) for a, b in points]
    if len(pts) < 3:
        raise DomainError(f"need at least 3 points to fit a rate, got {len(pts)}")
    used = pts if window is None or window >= len(pts) else pts[-window:]
    if len(used) < 2:
        raise DomainError("fit window must contain at least 2 points")
    scale = np.array([p[0] for p in used])
    err = np.array([p[1] for p in used])
    if np.any(scale <= 0) or np.any(err <= 0) or not np.all(np.isfinite(err)):
        raise DomainError("scales and errors must be positive and finite (floor errors at machine noise)")
    x, y = np.log(scale), np.log(err)
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_res = float(np.sum((y - intercept - slope * x) ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    desc = f"last {len(used)} of {len(pts)}"
    return RateFit(slope, intercept, r2, tuple(used), desc)
