"""Exact eigendecomposition and the two-level reduction of the search problem.

The reduction projects the problem onto the marked node |w> and the
uniform superposition |s_wbar> over the remaining nodes. Coupling
coefficients derived from either the exact spectrum or the reduced pair
feed the open-system modules. Large reduced systems are handled without
ever materializing per-site arrays: the unmarked sites share one row of
coefficients, stored once with a multiplicity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .errors import ContractViolationError, InvalidParameterError, OutOfRegimeError
from .model import SearchHamiltonian

_HERMITICITY_TOL = 1e-10


@dataclass(frozen=True)
class Spectrum:
    """Full ascending eigendecomposition with the two lowest gaps."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    gap: float
    gap2: float

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive.

    Ties break toward the lowest index (np.argmax).
    """
    v = vectors.copy()
    for k in range(v.shape[1]):
        col = v[:, k]
        i = int(np.argmax(np.abs(col)))
        pivot = col[i]
        if pivot != 0:
            v[:, k] = col * (abs(pivot) / pivot)
    if np.isrealobj(vectors):
        return v
    return v.real if np.allclose(v.imag, 0.0, atol=1e-14) else v


def eigendecompose(h: Union[np.ndarray, SearchHamiltonian]) -> Spectrum:
    """Full dense eigendecomposition with a deterministic phase convention."""
    if isinstance(h, SearchHamiltonian):
        h = h.dense()
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ContractViolationError(f"operator must be square, got shape {h.shape}")
    scale = max(1.0, float(np.linalg.norm(h, ord="fro")))
    if np.linalg.norm(h - h.conj().T, ord="fro") > _HERMITICITY_TOL * scale:
        raise ContractViolationError("operator is not Hermitian within tolerance")
    eigenvalues, eigenvectors = np.linalg.eigh(h)
    eigenvectors = _fix_phases(eigenvectors)
    n = eigenvalues.shape[0]
    gap = float(eigenvalues[1] - eigenvalues[0])
    gap2 = float(eigenvalues[2] - eigenvalues[0]) if n >= 3 else math.nan
    eigenvalues.setflags(write=False)
    eigenvectors.setflags(write=False)
    return Spectrum(eigenvalues=eigenvalues, eigenvectors=eigenvectors, gap=gap, gap2=gap2)


@dataclass(frozen=True)
class TwoLevelSystem:
    """Reduced pair of levels in the {|w>, |s_wbar>} subspace.

    overlaps = (<w|lam1>, <w|lam2>, <s_wbar|lam1>, <s_wbar|lam2>), with the
    same phase convention as eigendecompose.
    """

    n: int
    eps_w: float
    sigma: Optional[float]
    policy: str
    delta: float
    eigenvalues: np.ndarray
    overlaps: Tuple[float, float, float, float]
    h_red: np.ndarray

    @property
    def a1(self) -> float:
        return self.overlaps[0]

    @property
    def a2(self) -> float:
        return self.overlaps[1]

    @property
    def b1(self) -> float:
        return self.overlaps[2]

    @property
    def b2(self) -> float:
        return self.overlaps[3]

    def s_overlap(self, k: int) -> float:
        """Exact overlap <lam_k|s> with the uniform state over all n nodes."""
        if k not in (1, 2):
            raise InvalidParameterError(f"level index must be 1 or 2, got {k}")
        a, b = (self.a1, self.b1) if k == 1 else (self.a2, self.b2)
        return a / math.sqrt(self.n) + b * math.sqrt(1.0 - 1.0 / self.n)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "eps_w": self.eps_w,
            "sigma": self.sigma,
            "policy": self.policy,
            "delta": self.delta,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "overlaps": [float(x) for x in self.overlaps],
        }


def _eig2(d1: float, d2: float, v: float):
    """Stable eigenpairs of [[d1, v], [v, d2]], eigenvalues ascending."""
    mean = 0.5 * (d1 + d2)
    half = 0.5 * (d1 - d2)
    r = math.hypot(half, v)
    lam1, lam2 = mean - r, mean + r
    # pick the better-conditioned null-space expression
    if abs(lam1 - d1) >= abs(lam1 - d2):
        e1 = np.array([v, lam1 - d1])
    else:
        e1 = np.array([lam1 - d2, v])
    norm = np.linalg.norm(e1)
    if norm == 0.0:
        e1 = np.array([1.0, 0.0])
    else:
        e1 = e1 / norm
    i = int(np.argmax(np.abs(e1)))
    if e1[i] < 0:
        e1 = -e1
    e2 = np.array([-e1[1], e1[0]])
    i = int(np.argmax(np.abs(e2)))
    if e2[i] < 0:
        e2 = -e2
    return lam1, lam2, e1, e2


def reduce_two_level(
    n: int,
    eps_w: float,
    sigma: Optional[float] = None,
    policy: str = "plain",
) -> TwoLevelSystem:
    """Reduced 2x2 problem for the complete graph with disorder only at w.

    plain policy: h_red = [[-1+eps_w, -1/sqrt(n)], [-1/sqrt(n), -1]], whose
    gap is exactly sqrt(eps_w^2 + 4/n). shifted policy replaces the
    off-diagonal and second diagonal by the (1-sigma)-scaled hopping,
    giving gap sqrt((sigma-eps_w)^2 + 4(1-sigma)^2/n); it is diagonalized
    exactly rather than to leading order.
    """
    if n < 2:
        raise InvalidParameterError(f"need n >= 2, got n={n}")
    if policy not in ("plain", "shifted"):
        raise InvalidParameterError(f"unknown gamma policy {policy!r}")
    if sigma is not None:
        if sigma < 0:
            raise InvalidParameterError(f"sigma must be nonnegative, got {sigma}")
        if sigma >= 1:
            raise OutOfRegimeError(f"sigma={sigma} >= 1 is outside the sigma << 1 regime")
        if abs(eps_w) > sigma:
            raise InvalidParameterError(
                f"|eps_w|={abs(eps_w)} exceeds the disorder half-width sigma={sigma}"
            )
    if policy == "shifted":
        if sigma is None:
            raise InvalidParameterError("shifted policy requires sigma")
        c = 1.0 - sigma
    else:
        c = 1.0
    v = -c / math.sqrt(n)
    d1 = -1.0 + eps_w
    d2 = -c
    h_red = np.array([[d1, v], [v, d2]])
    lam1, lam2, e1, e2 = _eig2(d1, d2, v)
    h_red.setflags(write=False)
    eigenvalues = np.array([lam1, lam2])
    eigenvalues.setflags(write=False)
    return TwoLevelSystem(
        n=int(n),
        eps_w=float(eps_w),
        sigma=None if sigma is None else float(sigma),
        policy=policy,
        delta=float(lam2 - lam1),
        eigenvalues=eigenvalues,
        overlaps=(float(e1[0]), float(e2[0]), float(e1[1]), float(e2[1])),
        h_red=h_red,
    )


@dataclass(frozen=True)
class CouplingCoefficients:
    """Node-basis coefficients of the retained eigenvectors, in compact form.

    rows holds the distinct coefficient rows, counts their site
    multiplicities; every site-summed product needed downstream is an
    exact weighted sum over the distinct rows, so reduced systems with
    n ~ 1e6 never allocate per-site storage. lambda_kl, o1, o2, o3 follow
    the quartic definitions used by the rate and tensor builders.
    """

    n: int
    m: int
    rows: np.ndarray
    counts: np.ndarray
    lambda_kl: np.ndarray
    o1: float
    o2: float
    o3: float

    @property
    def c(self) -> np.ndarray:
        """Materialized n x m coefficient matrix (marked-node row first)."""
        return np.repeat(self.rows, self.counts.astype(int), axis=0)

    @property
    def a12(self) -> np.ndarray:
        """Per-site products c_i1 c_i2 of the two lowest retained levels."""
        c = self.c
        return c[:, 0] * c[:, 1]


def coupling_coefficients(
    source: Union[Spectrum, TwoLevelSystem],
    retained: int,
) -> CouplingCoefficients:
    """Coefficients of the retained levels over the n sites.

    From a TwoLevelSystem, retained must be 2: the marked node carries
    (a1, a2) and each of the n-1 remaining nodes carries (b1, b2)/sqrt(n-1).
    From a Spectrum, retained may be 2 (two lowest levels) or n (all).
    """
    if isinstance(source, TwoLevelSystem):
        if retained != 2:
            raise InvalidParameterError(
                f"a reduced system provides exactly 2 retained levels, got {retained}"
            )
        n = source.n
        scale = 1.0 / math.sqrt(n - 1)
        rows = np.array([
            [source.a1, source.a2],
            [source.b1 * scale, source.b2 * scale],
        ])
        counts = np.array([1.0, float(n - 1)])
    elif isinstance(source, Spectrum):
        n = source.n
        if retained == n:
            rows = np.asarray(source.eigenvectors, dtype=float)
        elif retained == 2:
            rows = np.asarray(source.eigenvectors[:, :2], dtype=float)
        else:
            raise InvalidParameterError(
                f"retained must be 2 or n={n}, got {retained}"
            )
        counts = np.ones(n)
    else:
        raise InvalidParameterError(
            f"source must be a Spectrum or TwoLevelSystem, got {type(source).__name__}"
        )
    sq = rows**2
    weighted_sq = counts[:, None] * sq
    lambda_kl = weighted_sq.T @ sq
    prod = rows[:, 0] * rows[:, 1]
    diff = sq[:, 0] - sq[:, 1]
    o1 = float(np.dot(counts, prod**2))
    o2 = float(np.dot(counts, prod * diff))
    o3 = float(np.dot(counts, diff**2))
    lambda_kl.setflags(write=False)
    rows.setflags(write=False)
    counts.setflags(write=False)
    return CouplingCoefficients(
        n=int(n), m=int(rows.shape[1]), rows=rows, counts=counts,
        lambda_kl=lambda_kl, o1=o1, o2=o2, o3=o3,
    )
