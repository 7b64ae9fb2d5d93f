"""Closed-system search dynamics and running-time accounting.

Exact spectral propagation of the uniform initial state for dense
Hamiltonians, the reduced two-level success probability, the weak/strong
disorder classification, and the expected runtime with repetitions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple, Union

import numpy as np

from .errors import InvalidParameterError
from .model import SearchHamiltonian
from .spectral import Spectrum, TwoLevelSystem, eigendecompose


@dataclass(frozen=True)
class ClosedRunResult:
    """Solution population on a time grid plus first-peak summary."""

    times: np.ndarray
    p_w: np.ndarray
    t_peak: float
    p_peak: float
    repetitions: float
    t_expected: float

    def summary(self) -> dict:
        return {
            "t_peak": self.t_peak,
            "p_peak": self.p_peak,
            "repetitions": self.repetitions,
            "t_expected": self.t_expected,
        }


def default_time_grid(delta: float, points: int = 2000, t_max: Optional[float] = None) -> np.ndarray:
    """Uniform grid over [0, 3*pi/delta] unless t_max is given."""
    if delta <= 0:
        raise InvalidParameterError(f"delta must be positive, got {delta}")
    if points < 2:
        raise InvalidParameterError(f"need at least 2 grid points, got {points}")
    if t_max is None:
        t_max = 3.0 * math.pi / delta
    return np.linspace(0.0, t_max, points)


def _validate_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise InvalidParameterError("time grid must be a nonempty 1-d array")
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise InvalidParameterError("time grid must be finite and nonnegative")
    return t


def _first_peak(times: np.ndarray, values: np.ndarray) -> Tuple[float, float, int]:
    """First local maximum at least half the global one, parabolically refined."""
    best = float(values.max())
    idx = None
    for i in range(1, len(values) - 1):
        if values[i] >= values[i - 1] and values[i] >= values[i + 1] and values[i] >= 0.5 * best:
            idx = i
            break
    if idx is None:
        idx = int(np.argmax(values))
    if 0 < idx < len(values) - 1:
        y0, y1, y2 = values[idx - 1], values[idx], values[idx + 1]
        denom = y0 - 2.0 * y1 + y2
        if denom < 0:
            # vertex of the parabola through the three points (uniform step)
            shift = float(np.clip(0.5 * (y0 - y2) / denom, -1.0, 1.0))
            step = 0.5 * (times[idx + 1] - times[idx - 1])
            return float(times[idx] + shift * step), float(y1), idx
    return float(times[idx]), float(values[idx]), idx


def evolve_closed(h: SearchHamiltonian, times) -> ClosedRunResult:
    """Exact unitary evolution of the uniform state |s>, reporting p_w(t).

    Propagates through the eigenbasis, so accuracy is set by the dense
    eigensolver, not by step size.
    """
    t = _validate_times(times)
    spectrum = eigendecompose(h)
    n = spectrum.n
    s = np.full(n, 1.0 / math.sqrt(n))
    proj = spectrum.eigenvectors.conj().T @ s
    wrow = spectrum.eigenvectors[h.w, :]
    weights = wrow * proj

    def amplitudes(ts: np.ndarray) -> np.ndarray:
        return np.exp(-1j * np.outer(ts, spectrum.eigenvalues)) @ weights

    # clip the roundoff overshoot above 1 so 0 <= p_w <= 1 holds exactly
    p_w = np.clip(np.abs(amplitudes(t)) ** 2, 0.0, 1.0)
    t_peak, p_peak, _ = _first_peak(t, p_w)
    # the parabola only locates the peak; the value is recomputed exactly
    p_refined = float(min(np.abs(amplitudes(np.array([t_peak]))[0]) ** 2, 1.0))
    if p_refined >= p_peak:
        p_peak = p_refined
    repetitions = 1.0 / p_peak if p_peak > 0 else math.inf
    t.setflags(write=False)
    p_w.setflags(write=False)
    return ClosedRunResult(
        times=t, p_w=p_w, t_peak=t_peak, p_peak=p_peak,
        repetitions=repetitions, t_expected=t_peak * repetitions,
    )


def _reduced_amplitude_weights(tl: TwoLevelSystem) -> Tuple[float, float]:
    """Weights alpha_k = <w|lam_k><lam_k|s> of the two-frequency amplitude."""
    return tl.a1 * tl.s_overlap(1), tl.a2 * tl.s_overlap(2)


def success_probability_reduced(tl: TwoLevelSystem, t) -> Union[float, np.ndarray]:
    """Solution population of the reduced model at time(s) t.

    plain policy: sin^2(delta t/2) / (1 + n eps_w^2/4), the leading-order
    closed form (its t=0 value is 0, dropping the 1/n initial overlap).
    shifted policy: exact two-level propagation of the projected uniform
    state, |<w|e^{-i h_red t} P|s>|^2, whose t=0 value is exactly 1/n.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise InvalidParameterError("time must be nonnegative")
    if tl.policy == "plain":
        damp = 1.0 / (1.0 + tl.n * tl.eps_w**2 / 4.0)
        out = damp * np.sin(0.5 * tl.delta * t_arr) ** 2
    else:
        alpha1, alpha2 = _reduced_amplitude_weights(tl)
        amp = alpha1 * np.exp(-1j * tl.eigenvalues[0] * t_arr) + alpha2 * np.exp(
            -1j * tl.eigenvalues[1] * t_arr
        )
        out = np.abs(amp) ** 2
    return float(out) if np.isscalar(t) else out


def reduced_peak(tl: TwoLevelSystem) -> Tuple[float, float]:
    """(t_peak, p_peak) of the reduced success probability."""
    if tl.policy == "plain":
        return math.pi / tl.delta, 1.0 / (1.0 + tl.n * tl.eps_w**2 / 4.0)
    alpha1, alpha2 = _reduced_amplitude_weights(tl)
    p_peak = (abs(alpha1) + abs(alpha2)) ** 2
    t_peak = math.pi / tl.delta if alpha1 * alpha2 <= 0 else 2.0 * math.pi / tl.delta
    return t_peak, p_peak


def regime_classify(n: int, sigma: float) -> str:
    """"weak" when sigma <= 1/sqrt(n) (boundary inclusive), else "strong"."""
    if n < 2:
        raise InvalidParameterError(f"need n >= 2, got n={n}")
    if sigma < 0:
        raise InvalidParameterError(f"sigma must be nonnegative, got {sigma}")
    return "weak" if sigma <= 1.0 / math.sqrt(n) else "strong"


class RuntimeEstimate(NamedTuple):
    t_single: float
    repetitions: float
    t_expected: float


def expected_runtime(n: int, eps_w: float) -> RuntimeEstimate:
    """Single-shot time pi/delta, repetitions 1 + n eps_w^2/4, and their product.

    The product equals (pi sqrt(n)/2) sqrt(1 + n eps_w^2/4) identically.
    """
    if n < 2:
        raise InvalidParameterError(f"need n >= 2, got n={n}")
    delta = math.sqrt(eps_w**2 + 4.0 / n)
    t_single = math.pi / delta
    repetitions = 1.0 + n * eps_w**2 / 4.0
    return RuntimeEstimate(t_single, repetitions, t_single * repetitions)
