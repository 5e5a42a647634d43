"""Cumulative quadrature on uniform logarithmic grids.

All integrals in this package are taken over geometric grids, i.e. uniform
grids in tau = log x.  The workhorse is the trapezoid rule with the leading
Euler-Maclaurin endpoint correction,

    int phi dtau ~ trapz(phi) - dtau^2/12 * (phi'(b) - phi'(a)),

which is exact for cubics, telescopes into cumulative form, and upgrades the
composite rule to fourth order whenever the integrand derivative is known
(analytically or from a second-order finite difference).
"""

from __future__ import annotations

import numpy as np


def cumtrapz_corrected(phi: np.ndarray, dphi: np.ndarray, dtau: float) -> np.ndarray:
    """Cumulative integral of phi over [tau_0, tau_i] for every node i.

    ``dphi`` holds d(phi)/dtau at the nodes; entry 0 of the result is 0.
    """
    inner = np.concatenate(([0.0], np.cumsum(phi[1:] + phi[:-1]) * (0.5 * dtau)))
    return inner - (dtau * dtau / 12.0) * (dphi - dphi[0])


def hermite_eval(
    tau: np.ndarray | float,
    tau0: float,
    dtau: float,
    values: np.ndarray,
    dvalues: np.ndarray,
) -> np.ndarray | float:
    """Cubic Hermite evaluation on a uniform grid.

    ``values``/``dvalues`` are the nodal values and tau-derivatives; queries
    outside the grid raise (no extrapolation).
    """
    t = np.asarray(tau, dtype=float)
    pos = (t - tau0) / dtau
    n = len(values)
    if np.any(pos < -1e-9) or np.any(pos > n - 1 + 1e-9):
        raise ValueError("hermite_eval: query outside stored grid")
    k = np.clip(np.floor(pos).astype(int), 0, n - 2)
    s = pos - k
    h0 = values[k]
    h1 = values[k + 1]
    d0 = dvalues[k]
    d1 = dvalues[k + 1]
    s2 = s * s
    s3 = s2 * s
    out = (
        h0 * (1.0 - 3.0 * s2 + 2.0 * s3)
        + h1 * (3.0 * s2 - 2.0 * s3)
        + dtau * (d0 * (s - 2.0 * s2 + s3) + d1 * (s3 - s2))
    )
    if np.isscalar(tau) or (isinstance(tau, float)):
        return float(out)
    return out
