"""Thermal bath with an exponential-cutoff power-law spectral density.

Provides the spectral density, one-sided transition rates S(omega), the
bath correlation function (closed forms plus an adaptive-quadrature
oracle), the correlation time, and the weak-coupling validity checks.
The sign convention for rate_S is fixed by detailed balance: the
two-level steady state it induces is thermal.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import InvalidParameterError, OutOfRegimeError
from .special import trigamma

# thresholds on the dimensionless margins used to grade "much less than"
CHI_MARKOV = 0.1
CHI_SECULAR = 0.5


@dataclass(frozen=True)
class BathSpec:
    """Bath parameters. beta=inf selects the zero-temperature branch."""

    g: float
    beta: float = math.inf
    omega_c: float = 2.0
    eta: float = 1.0
    d: float = 1.0

    def __post_init__(self) -> None:
        if self.g < 0:
            raise InvalidParameterError(f"coupling g must be nonnegative, got {self.g}")
        if not (self.beta > 0):
            raise InvalidParameterError(f"beta must be positive, got {self.beta}")
        if self.omega_c <= 0:
            raise InvalidParameterError(f"omega_c must be positive, got {self.omega_c}")
        if self.eta <= 0:
            raise InvalidParameterError(f"eta must be positive, got {self.eta}")
        if self.d <= 0:
            raise InvalidParameterError(f"exponent d must be positive, got {self.d}")

    @property
    def temperature_mode(self) -> str:
        return "zero" if math.isinf(self.beta) else "finite"

    @property
    def is_zero_temperature(self) -> bool:
        return math.isinf(self.beta)


def spectral_density(omega: float, bath: BathSpec) -> float:
    """J(omega) = eta g^2 omega^d omega_c^(1-d) exp(-omega/omega_c), omega >= 0."""
    omega = float(omega)
    if omega < 0:
        raise OutOfRegimeError(
            f"spectral density is defined for omega >= 0, got {omega}; use rate_S for signed frequencies"
        )
    if omega == 0.0:
        return 0.0
    return (
        bath.eta
        * bath.g**2
        * omega**bath.d
        * bath.omega_c ** (1.0 - bath.d)
        * math.exp(-omega / bath.omega_c)
    )


def _occupation(x: float) -> float:
    """Bose factor 1/(e^x - 1) for x > 0, stable at small x."""
    if x < 1e-6:
        return 1.0 / x - 0.5 + x / 12.0
    return 1.0 / math.expm1(x)


def rate_S(omega: float, bath: BathSpec) -> float:
    """One-sided bath rate at transition frequency omega (no 2*pi factor).

    omega > 0 is the emission branch J(omega)(N+1): energy omega is
    released into the bath. omega < 0 is the absorption branch
    J(|omega|) N(|omega|). The omega=0 limit is eta g^2 / beta, which both
    branches approach continuously; it vanishes at zero temperature.
    """
    omega = float(omega)
    if bath.is_zero_temperature:
        return spectral_density(omega, bath) if omega > 0 else 0.0
    if omega == 0.0:
        return bath.eta * bath.g**2 / bath.beta
    a = abs(omega)
    n_occ = _occupation(bath.beta * a)
    j = spectral_density(a, bath)
    return j * (n_occ + 1.0) if omega > 0 else j * n_occ


def correlation_zero_T(t, bath: BathSpec):
    """Zero-temperature correlation eta g^2 omega_c^2 / (1 + i t omega_c)^2.

    Closed form for d=1 only. Accepts scalar or array t.
    """
    if not bath.is_zero_temperature:
        raise OutOfRegimeError("zero-temperature correlation requested for a finite-beta bath")
    if bath.d != 1.0:
        raise OutOfRegimeError(f"closed form requires d=1, got d={bath.d}")
    t_arr = np.asarray(t, dtype=float)
    out = bath.eta * bath.g**2 * bath.omega_c**2 / (1.0 + 1j * t_arr * bath.omega_c) ** 2
    return complex(out) if np.isscalar(t) else out


def correlation_finite_T(t, bath: BathSpec):
    """Finite-temperature correlation via the trigamma closed form (d=1).

    F(t) = (eta g^2/beta^2) [psi'(1/(beta omega_c) + it/beta)
                             + psi'(1 + 1/(beta omega_c) - it/beta)].
    Accepts scalar or array t.
    """
    if bath.is_zero_temperature:
        raise OutOfRegimeError("finite-temperature correlation requested for a zero-T bath")
    if bath.d != 1.0:
        raise OutOfRegimeError(f"closed form requires d=1, got d={bath.d}")
    if bath.beta * bath.omega_c < 5.0:
        warnings.warn(
            f"beta*omega_c = {bath.beta * bath.omega_c:.3g} < 5: "
            "finite-temperature correlation accuracy may degrade",
            stacklevel=2,
        )
    pref = bath.eta * bath.g**2 / bath.beta**2
    a = 1.0 / (bath.beta * bath.omega_c)

    def one(tv: float) -> complex:
        z = tv / bath.beta
        return pref * (trigamma(a + 1j * z) + trigamma(1.0 + a - 1j * z))

    if np.isscalar(t):
        return one(float(t))
    t_arr = np.asarray(t, dtype=float)
    return np.array([one(tv) for tv in t_arr.ravel()]).reshape(t_arr.shape)


def _coth(x: float) -> float:
    if x < 1e-6:
        return 1.0 / x + x / 3.0
    return 1.0 / math.tanh(x)


def correlation_quadrature(t: float, bath: BathSpec, epsabs: float = 1e-13) -> complex:
    """Adaptive-quadrature oracle for the bath correlation function.

    Integrates J(omega) [coth(beta omega/2) cos(omega t) - i sin(omega t)]
    over [0, 40 omega_c]; at zero temperature the coth weight is 1. Works
    for any exponent d > 0. Oscillatory weights are integrated with the
    dedicated cos/sin rules.
    """
    t = float(t)
    if t < 0:
        return correlation_quadrature(-t, bath, epsabs=epsabs).conjugate()
    upper = 40.0 * bath.omega_c

    def j_density(omega: float) -> float:
        return spectral_density(omega, bath)

    if bath.is_zero_temperature:
        real_integrand = j_density
    else:

        def real_integrand(omega: float) -> float:
            if omega == 0.0:
                # ohmic-like J ~ omega^d; finite limit only for d=1
                return 2.0 * bath.eta * bath.g**2 / bath.beta if bath.d == 1.0 else 0.0
            return j_density(omega) * _coth(0.5 * bath.beta * omega)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if t == 0.0:
            re, _ = quad(real_integrand, 0.0, upper, epsabs=epsabs, epsrel=1e-12, limit=400)
            return complex(re, 0.0)
        re, _ = quad(
            real_integrand, 0.0, upper,
            weight="cos", wvar=t, epsabs=epsabs, epsrel=1e-12, limit=400,
        )
        im, _ = quad(
            j_density, 0.0, upper,
            weight="sin", wvar=t, epsabs=epsabs, epsrel=1e-12, limit=400,
        )
    return complex(re, -im)


def correlation_time(bath: BathSpec) -> float:
    """Decay width of the correlation function: 1/omega_c, or max(beta, 1/omega_c)."""
    if bath.is_zero_temperature:
        return 1.0 / bath.omega_c
    return max(bath.beta, 1.0 / bath.omega_c)


def _grade(margin: float, chi: float) -> str:
    if margin < chi:
        return "ok"
    if margin < 1.0:
        return "marginal"
    return "fail"


@dataclass(frozen=True)
class ValidityReport:
    """Margins for the weak-coupling, coarse-graining, and two-level checks.

    A margin is the ratio of the coupling to its bound; the booleans are
    True below 1, with statuses grading "ok" (below the configured
    threshold), "marginal", or "fail".
    """

    delta_t: float
    markov_margin: float
    markov_ok: bool
    markov_status: str
    secular_margin: float
    secular_ok: bool
    secular_status: str
    two_level_ok: bool
    beta_star: float
    notes: str = field(default="")

    def to_dict(self) -> dict:
        return {
            "delta_t": self.delta_t,
            "markov_margin": self.markov_margin,
            "markov_ok": self.markov_ok,
            "markov_status": self.markov_status,
            "secular_margin": self.secular_margin,
            "secular_ok": self.secular_ok,
            "secular_status": self.secular_status,
            "two_level_ok": self.two_level_ok,
            "beta_star": self.beta_star,
            "notes": self.notes,
        }


def validate_approximations(
    bath: BathSpec,
    delta: float,
    n: int,
    chi_markov: float = CHI_MARKOV,
    chi_secular: float = CHI_SECULAR,
) -> ValidityReport:
    """Evaluate g*delta_t, g*sqrt(delta_t/delta), and the two-level bound.

    The memoryless-bath condition needs g << 1/delta_t; the
    population-coherence decoupling needs g << sqrt(delta/delta_t); the
    two-level truncation needs beta above log(n) divided by the spectral
    gap 1 - delta separating the retained pair from the rest. Reports,
    never raises, for any finite inputs.
    """
    if delta <= 0:
        raise InvalidParameterError(f"delta must be positive, got {delta}")
    if n < 2:
        raise InvalidParameterError(f"need n >= 2, got n={n}")
    dt = correlation_time(bath)
    markov_margin = bath.g * dt
    secular_margin = bath.g * math.sqrt(dt / delta)
    markov_status = _grade(markov_margin, chi_markov)
    secular_status = _grade(secular_margin, chi_secular)
    rest_gap = 1.0 - delta
    if rest_gap > 0:
        beta_star = math.log(n) / rest_gap
        two_level_ok = bath.beta > beta_star
    else:
        beta_star = math.inf
        two_level_ok = False
    notes = []
    if markov_status != "ok":
        notes.append(f"memoryless-bath margin {markov_margin:.3g} is {markov_status}")
    if secular_status != "ok":
        notes.append(f"coarse-graining margin {secular_margin:.3g} is {secular_status}")
    if not two_level_ok:
        notes.append(f"two-level truncation needs beta > {beta_star:.3g}")
    return ValidityReport(
        delta_t=dt,
        markov_margin=markov_margin,
        markov_ok=markov_margin < 1.0,
        markov_status=markov_status,
        secular_margin=secular_margin,
        secular_ok=secular_margin < 1.0,
        secular_status=secular_status,
        two_level_ok=two_level_ok,
        beta_star=beta_star,
        notes="; ".join(notes),
    )
