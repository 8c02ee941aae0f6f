"""Three equivalent representations of the cluster limit functional.

For a continuous test function rho the limit of the scaled-shift averages
can be written as (i) an explicit one-dimensional integral against the
triangular density (1-|u|) du on [-1, 1], (ii) a Monte-Carlo average of
rho(-(B/2) ell3) over the rotation-invariant measure on the unit-covector
index set, and (iii) a two-angle integral against the reduced geodesic
density cos(psi) sin(psi) sin(theta).  This module evaluates all three and
the consistency checks that tie them to the Liouville measure of the
regularized Kepler flow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .classical_kepler import OrbitElements, _inverse_arrays, sample_index_batch
from .spectral_cluster import ks_two_sample, ks_distance, EmpiricalMeasure, triangular_shift_cdf

__all__ = [
    "TestFunction",
    "AngleState",
    "HaarGrid",
    "McEstimate",
    "PushforwardCheck",
    "limit_triangular",
    "limit_angle_density",
    "limit_quadric_mc",
    "liouville_pushforward_check",
    "haar_density_normalization",
    "beta_marginalization_gap",
]

_MAX_MONOMIAL_DEGREE = 12


@dataclass(frozen=True)
class TestFunction:
    """Bounded test function: a monomial, a polynomial, or a tabulated curve.

    ``data`` holds the degree, the ascending-degree coefficient array, or
    the (x, y) table for linear interpolation (constant beyond the table).
    """

    kind: str
    data: tuple

    __test__ = False  # not a pytest case, despite the domain name

    @classmethod
    def monomial(cls, degree: int) -> "TestFunction":
        if not 0 <= degree <= _MAX_MONOMIAL_DEGREE:
            raise ValueError(f"monomial degree must be in [0, {_MAX_MONOMIAL_DEGREE}]")
        return cls(kind="monomial", data=(degree,))

    @classmethod
    def polynomial(cls, coefficients) -> "TestFunction":
        coeffs = tuple(float(c) for c in coefficients)
        if not coeffs:
            raise ValueError("need at least one coefficient")
        return cls(kind="polynomial", data=coeffs)

    @classmethod
    def tabulated(cls, xs, ys) -> "TestFunction":
        xs = tuple(float(v) for v in xs)
        ys = tuple(float(v) for v in ys)
        if len(xs) != len(ys) or len(xs) < 2:
            raise ValueError("need matching tables with at least two points")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("abscissae must be strictly increasing")
        return cls(kind="tabulated", data=(xs, ys))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "monomial":
            return x ** self.data[0] if self.data[0] else np.ones_like(x)
        if self.kind == "polynomial":
            out = np.zeros_like(x)
            for c in reversed(self.data):
                out = out * x + c
            return out
        xs, ys = self.data
        return np.interp(x, xs, ys)


@dataclass(frozen=True)
class AngleState:
    """Orbit angles (psi, theta, phi, gamma, beta) with an optional lift angle.

    psi in (0, pi/2) splits angular momentum and eccentricity; theta, phi
    orient the angular momentum; gamma and beta move around the orbit
    plane and along the orbit; delta parametrizes the residual rotation of
    the orthogonal frame.
    """

    psi: float
    theta: float
    phi: float
    gamma: float
    beta: float
    delta: float | None = None

    def __post_init__(self):
        if not 0.0 < self.psi < np.pi / 2:
            raise ValueError(f"psi must lie in (0, pi/2), got {self.psi!r}")
        if not 0.0 <= self.theta <= np.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta!r}")
        for name in ("phi", "gamma", "beta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 2.0 * np.pi:
                raise ValueError(f"{name} must lie in [0, 2 pi], got {v!r}")
        if self.delta is not None and not 0.0 <= self.delta <= 2.0 * np.pi:
            raise ValueError(f"delta must lie in [0, 2 pi], got {self.delta!r}")

    def to_orbit_elements(self) -> OrbitElements:
        return OrbitElements.from_angles(self.psi, self.theta, self.phi, self.gamma, self.beta)

    @property
    def ell3(self) -> float:
        """Axial angular momentum cos(psi) cos(theta) of these elements."""
        return float(np.cos(self.psi) * np.cos(self.theta))


def _gauss_nodes(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * t + 0.5 * (a + b), 0.5 * (b - a) * w


def limit_triangular(
    rho: Callable[[np.ndarray], np.ndarray], B: float, tol: float = 1e-12
) -> float:
    """integral of rho(-(B/2) u) (1 - |u|) du over [-1, 1].

    Gauss panels split at the kink u = 0, node counts doubled until the
    value is stable to ``tol`` absolutely.
    """
    if B < 0:
        raise ValueError("B must be >= 0")

    def value(n: int) -> float:
        total = 0.0
        for a, b in ((-1.0, 0.0), (0.0, 1.0)):
            u, w = _gauss_nodes(n, a, b)
            total += float(np.sum(w * np.asarray(rho(-(B / 2.0) * u)) * (1.0 - np.abs(u))))
        return total

    n = 16
    prev = value(n)
    for _ in range(8):
        n *= 2
        cur = value(n)
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
    return prev


def limit_angle_density(
    rho: Callable[[np.ndarray], np.ndarray], B: float, tol: float = 1e-10
) -> float:
    """Two-angle form: rho(-(B/2) cos psi cos theta) against
    cos(psi) sin(psi) sin(theta) d psi d theta on (0, pi/2) x (0, pi).

    Evaluated in the variables c = cos(psi), s = cos(theta), where the
    density becomes c dc ds and polynomial test functions are integrated
    exactly; node counts double until stable.
    """
    if B < 0:
        raise ValueError("B must be >= 0")

    def value(n: int) -> float:
        c, wc = _gauss_nodes(n, 0.0, 1.0)
        s, ws = np.polynomial.legendre.leggauss(n)
        vals = np.asarray(rho(-(B / 2.0) * np.outer(c, s)))
        return float((wc * c) @ vals @ ws)

    n = 16
    prev = value(n)
    for _ in range(8):
        n *= 2
        cur = value(n)
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
    return prev


@dataclass
class McEstimate:
    value: float
    std_error: float
    n_samples: int


def limit_quadric_mc(
    rho: Callable[[np.ndarray], np.ndarray],
    B: float,
    n_samples: int,
    rng: np.random.Generator,
) -> McEstimate:
    """Monte-Carlo average of rho(-(B/2) ell3) over the index measure."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    a, b = sample_index_batch(rng, n_samples)
    ell3 = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    vals = np.asarray(rho(-(B / 2.0) * ell3), dtype=float)
    mean = float(vals.mean())
    sem = float(vals.std(ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
    return McEstimate(value=mean, std_error=sem, n_samples=n_samples)


@dataclass
class PushforwardCheck:
    max_pointwise_gap: float
    ks_vs_index_law: float
    ks_vs_triangular: float
    skipped_fraction: float
    n_samples: int
    sample_ell3_index: np.ndarray | None = None
    sample_ell3_phase: np.ndarray | None = None


def liouville_pushforward_check(
    n_samples: int, rng: np.random.Generator, keep_samples: int = 0
) -> PushforwardCheck:
    """Compare ell3 on the energy shell with ell3 read off the index.

    Indices are mapped to phase points through the inverse Moser lift of
    their unit covector; samples whose base point falls within 1e-12 of
    the north pole are skipped and counted.  The pointwise gap must vanish
    (the two quantities agree exactly off the exclusion set), hence the
    sample-law distance is zero and only the distance to the triangular
    limit law carries statistical error.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    a, b = sample_index_batch(rng, n_samples)
    keep = (1.0 - a[:, 3]) > 1e-12
    skipped = int(n_samples - keep.sum())
    a, b = a[keep], b[keep]
    ell3_index = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    x, p = _inverse_arrays(a, b)
    ell3_phase = x[:, 0] * p[:, 1] - x[:, 1] * p[:, 0]
    gap = float(np.max(np.abs(ell3_phase - ell3_index))) if len(a) else 0.0
    ks_same = ks_two_sample(ell3_phase, ell3_index)
    measure = EmpiricalMeasure(
        values=ell3_phase, weights=np.full(len(ell3_phase), 1.0 / len(ell3_phase))
    )
    ks_tri = ks_distance(measure, triangular_shift_cdf(2.0))
    keep = min(keep_samples, len(a))
    return PushforwardCheck(
        max_pointwise_gap=gap,
        ks_vs_index_law=ks_same,
        ks_vs_triangular=ks_tri,
        skipped_fraction=skipped / n_samples,
        n_samples=n_samples,
        sample_ell3_index=ell3_index[:keep].copy() if keep else None,
        sample_ell3_phase=ell3_phase[:keep].copy() if keep else None,
    )


@dataclass(frozen=True)
class HaarGrid:
    """Tensor node counts over the six angles (psi, theta, phi, gamma, beta, delta)."""

    n_psi: int = 48
    n_theta: int = 48
    n_phi: int = 8
    n_gamma: int = 8
    n_beta: int = 512
    n_delta: int = 8

    def doubled(self) -> "HaarGrid":
        return HaarGrid(
            2 * self.n_psi,
            2 * self.n_theta,
            self.n_phi,
            self.n_gamma,
            2 * self.n_beta,
            self.n_delta,
        )


def _beta_trapezoid(sin_psi: float, n_beta_min: int) -> float:
    """Periodic trapezoid value of integral d beta / (1 + sin_psi cos beta).

    The integrand has complex poles at distance eta = sqrt(2(1-sin_psi))
    from the real axis, so the trapezoid rate is exp(-n eta); the node
    count is raised until that bound is far below double precision.
    """
    eta = np.sqrt(max(2.0 * (1.0 - sin_psi), 1e-300))
    n = max(n_beta_min, int(np.ceil(45.0 / eta)))
    beta = 2.0 * np.pi * np.arange(n) / n
    return float(np.sum(1.0 / (1.0 + sin_psi * np.cos(beta)))) * (2.0 * np.pi / n)


def haar_density_normalization(grid: HaarGrid = HaarGrid()) -> float:
    """Total mass of the six-angle group density; must come out 1.

    The density (1/(2 pi)^4) cos^2(psi) sin(psi) sin(theta) /
    (1 + sin(psi) cos(beta)) is independent of phi, gamma, delta, so the
    full tensor-product quadrature factorizes exactly into a (psi, beta)
    sum times the remaining one-dimensional sums; that factored evaluation
    is what is computed.  ``n_beta`` is treated as a minimum: polar nodes
    approaching psi = pi/2 push the beta integrand's poles toward the real
    axis and get proportionally more azimuthal nodes.
    """
    psi, w_psi = _gauss_nodes(grid.n_psi, 0.0, np.pi / 2.0)
    theta, w_theta = _gauss_nodes(grid.n_theta, 0.0, np.pi)
    sin_psi = np.sin(psi)
    beta_vals = np.array([_beta_trapezoid(s, grid.n_beta) for s in sin_psi])
    joint = float(np.sum(w_psi * np.cos(psi) ** 2 * sin_psi * beta_vals))
    theta_part = float(np.sum(w_theta * np.sin(theta)))
    # phi, gamma, delta are uniform factors of length 2 pi each
    return joint * theta_part * (2.0 * np.pi) ** 3 / (2.0 * np.pi) ** 4


def beta_marginalization_gap(n_psi: int = 32, n_beta: int = 4096) -> float:
    """Worst relative gap in the closed beta marginal of the group density.

    For each psi node the periodic trapezoid value of
    integral d beta / (1 + sin(psi) cos(beta)) is compared with
    2 pi / cos(psi), relative to that value since it diverges toward
    psi = pi/2; node counts adapt to the pole distance as in
    :func:`haar_density_normalization`.
    """
    psi, _ = _gauss_nodes(n_psi, 0.0, np.pi / 2.0)
    worst = 0.0
    for p in psi:
        closed = 2.0 * np.pi / np.cos(p)
        got = _beta_trapezoid(float(np.sin(p)), n_beta)
        worst = max(worst, abs(got - closed) / closed)
    return worst
