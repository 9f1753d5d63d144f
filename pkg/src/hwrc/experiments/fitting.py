"""Exponential decay fits and process infidelity for cycle benchmarking."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import curve_fit

# process infidelity of a two-qubit Pauli channel: (d^2 - 1)/d^2 times the mean Pauli infidelity
D2 = 16


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class ExpFit:
    amplitude: float
    decay: float
    amplitude_err: float
    decay_err: float


def _model(m, a, p):
    return a * np.power(p, m)


def fit_exponential(
    depths: Sequence[float], means: Sequence[float], sigmas: Sequence[float] | None = None
) -> ExpFit:
    """Least-squares fit of ``A * p**m`` to per-depth mean expectations.

    With ``sigmas`` the fit is weighted and the covariance is absolute;
    otherwise it is scaled by the residual variance (zero when the fit is exact).
    """
    m = np.asarray(depths, dtype=float)
    y = np.asarray(means, dtype=float)
    if m.shape != y.shape or m.ndim != 1:
        raise FitError("depths and means must be 1-d and the same length")
    if len(np.unique(m)) < 2:
        raise FitError("need at least two distinct depths")
    if np.any(np.abs(y) > 1.0 + 1e-12):
        raise FitError("mean expectations must lie in [-1, 1]")

    # log-linear start; exact for noiseless data
    pos = y > 0
    if pos.sum() >= 2 and len(np.unique(m[pos])) >= 2:
        slope, intercept = np.polyfit(m[pos], np.log(y[pos]), 1)
        p0 = (math.exp(intercept), math.exp(slope))
    else:
        p0 = (1.0, 0.9)
    p0 = (p0[0], min(max(p0[1], -1.0), 1.0))

    sig = None if sigmas is None else np.maximum(np.asarray(sigmas, dtype=float), 1e-12)
    try:
        popt, pcov = curve_fit(
            _model,
            m,
            y,
            p0=p0,
            sigma=sig,
            absolute_sigma=sig is not None,
            bounds=([-np.inf, -1.0], [np.inf, 1.0]),
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
            max_nfev=10000,
        )
    except (RuntimeError, ValueError) as exc:
        raise FitError(str(exc)) from exc
    errs = np.sqrt(np.clip(np.diag(pcov), 0.0, None)) if np.all(np.isfinite(pcov)) else np.zeros(2)
    return ExpFit(float(popt[0]), float(popt[1]), float(errs[0]), float(errs[1]))


@dataclass(frozen=True)
class Infidelity:
    value: float
    stderr: float
    per_pauli: Mapping[str, tuple[float, float]]


def process_infidelity(fits: Mapping[str, ExpFit]) -> Infidelity:
    """Average Pauli infidelity scaled so global depolarizing gives ``(1 - lam) * 15/16``."""
    if not fits:
        raise FitError("need at least one fitted Pauli")
    per = {label: (1.0 - f.decay, f.decay_err) for label, f in fits.items()}
    k = len(per)
    scale = (D2 - 1) / D2
    value = scale * sum(e for e, _ in per.values()) / k
    err = scale * math.sqrt(sum(s * s for _, s in per.values())) / k
    return Infidelity(value, err, per)
