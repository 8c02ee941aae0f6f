"""Degenerate hydrogenic shells and matrix elements of the magnetic perturbation.

Everything lives in the scaled frame where the unperturbed Hamiltonian is
-(1/2)laplacian - 1/|x| with shell energies E_N = -1/(2(N+1)^2), shell
dimension (N+1)^2, and the field enters through the effective strength
lambda = h^3 eps(h) B, h = 1/(N+1), eps(h) = h^q.  The perturbation

    W(lambda) = (lambda^2/8) (x1^2 + x2^2) - (lambda/2) L3

commutes with L3, so every assembled matrix is block diagonal in the
azimuthal quantum number m, and the diamagnetic part couples l to l, l+-2
within a block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_laguerre, roots_legendre

__all__ = [
    "ShellState",
    "ScalingSchedule",
    "ShellMatrix",
    "MultiShellMatrix",
    "ResourceBudgetError",
    "QuadratureConvergenceError",
    "enumerate_shell",
    "radial_wavefunction",
    "radial_integral_r2",
    "radial_integral_r2_cross",
    "ladder_coefficient",
    "angular_cos2_element",
    "angular_sin2_element",
    "shell_matrix_L3",
    "shell_matrix_rho2",
    "shell_matrix_W",
    "multishell_band_matrix",
    "multishell_states",
    "shell_energy",
    "cluster_radius",
]

# Exactness of Gauss-Laguerre degrades once weights underflow; beyond this
# combined quantum number the radial engine switches to a truncated
# Gauss-Legendre rule with the exponential kept inside the integrand.
_LAGUERRE_MAX_NN = 130
_RADIAL_RTOL = 1e-10


class ResourceBudgetError(MemoryError):
    """Dense assembly would exceed the configured memory budget."""

    def __init__(self, required_bytes: int, budget_bytes: int):
        self.required_bytes = required_bytes
        self.budget_bytes = budget_bytes
        super().__init__(
            f"dense matrix needs {required_bytes} bytes, budget is {budget_bytes}"
        )


class QuadratureConvergenceError(RuntimeError):
    """Adaptive node doubling failed to stabilize the quadrature."""


@dataclass(frozen=True)
class ShellState:
    """Quantum labels (N; l, m) of one state in the shell of index N.

    The principal quantum number is n = N + 1; the full shell has (N+1)^2
    states.
    """

    N: int
    l: int
    m: int

    def __post_init__(self):
        if self.N < 0:
            raise ValueError(f"shell index must be non-negative, got {self.N}")
        if not 0 <= self.l <= self.N:
            raise ValueError(f"need 0 <= l <= N, got l={self.l}, N={self.N}")
        if abs(self.m) > self.l:
            raise ValueError(f"need |m| <= l, got m={self.m}, l={self.l}")


@dataclass(frozen=True)
class ScalingSchedule:
    """Field strength B and the exponent q of the coupling schedule eps(h) = h^q.

    The default q = 17 keeps the perturbation weak enough that the cluster
    around each shell stays well separated for every N; q is configurable
    because that default is far from the smallest workable exponent.
    ``include_diamagnetic`` switches the (lambda^2/8)(x1^2+x2^2) term off
    entirely, which collapses the cluster onto the exactly known
    paramagnetic ladder (useful as an oracle).
    """

    B: float
    q: float = 17.0
    include_diamagnetic: bool = True

    def __post_init__(self):
        if self.B < 0:
            raise ValueError(f"field strength must be >= 0, got {self.B}")

    def h(self, N: int) -> float:
        return 1.0 / (N + 1)

    def epsilon(self, N: int) -> float:
        return self.h(N) ** self.q

    def lam(self, N: int) -> float:
        """Effective field lambda = h^3 eps(h) B."""
        h = self.h(N)
        return h**3 * self.epsilon(N) * self.B

    def shift_scale(self, N: int) -> float:
        """h^2 eps(h), the scale on which cluster shifts are O(1)."""
        return self.h(N) ** 2 * self.epsilon(N)

    def diamagnetic_bound(self, N: int) -> float:
        """Upper bound 3 lambda^2 (N+1)^4 / 8 on the diamagnetic block norm."""
        return 3.0 * self.lam(N) ** 2 * (N + 1) ** 4 / 8.0

    def diamagnetic_slack(self, N: int) -> float:
        """The bound above in units of the shift scale.

        This is the amount by which scaled shifts may exceed [-B/2, B/2].
        """
        return self.diamagnetic_bound(N) / self.shift_scale(N)

    def diamagnetic_negligible(self, N: int) -> bool:
        """True when the diamagnetic term cannot move any scaled shift by 1e-8.

        In that regime assembling it would only add float noise below the
        resolution of every downstream quantity, so matrix builders skip it.
        """
        if not self.include_diamagnetic:
            return True
        return self.diamagnetic_bound(N) < 1e-8 * self.shift_scale(N) * max(self.B, 1e-300)


def shell_energy(N: int) -> float:
    """Unperturbed shell energy E_N = -1/(2(N+1)^2)."""
    return -0.5 / (N + 1) ** 2


def cluster_radius(N: int) -> float:
    """Radius of the separating circle around E_N.

    A quarter of the gap to the nearest neighboring shell; any constant
    below half the gap works, this one leaves symmetric slack on both sides.
    """
    if N == 0:
        return abs(shell_energy(1) - shell_energy(0)) / 4.0
    lower = abs(shell_energy(N - 1) - shell_energy(N))
    upper = abs(shell_energy(N + 1) - shell_energy(N))
    return min(lower, upper) / 4.0


def enumerate_shell(N: int) -> list[ShellState]:
    """All (N+1)^2 states of shell N, ordered by ascending m then ascending l."""
    if N < 0:
        raise ValueError(f"shell index must be non-negative, got {N}")
    return [ShellState(N, l, m) for m in range(-N, N + 1) for l in range(abs(m), N + 1)]


# ---------------------------------------------------------------------------
# radial matrix elements
# ---------------------------------------------------------------------------


def _laguerre_weighted(k: int, alpha: float, x: np.ndarray) -> np.ndarray:
    """L_k^(alpha)(x) * exp(-x/2) by upward recurrence.

    Folding the exponential into the seed keeps every intermediate bounded
    for the x, k ranges that occur here, where the bare polynomial would
    overflow.
    """
    e = np.exp(-0.5 * x)
    if k == 0:
        return e
    f_prev = e
    f = (alpha + 1.0 - x) * e
    for j in range(1, k):
        f_prev, f = f, ((2 * j + 1 + alpha - x) * f - (j + alpha) * f_prev) / (j + 1.0)
    return f


def radial_wavefunction(n: int, l: int, r: np.ndarray) -> np.ndarray:
    """Normalized hydrogenic radial function R_{n,l}(r), unit charge.

    Satisfies integral of R^2 r^2 dr = 1.  Evaluated with the exponential
    woven into the Laguerre recurrence and the prefactor accumulated in log
    space, so it stays finite for n of a few hundred.
    """
    if not 0 <= l <= n - 1:
        raise ValueError(f"need 0 <= l <= n-1, got l={l}, n={n}")
    r = np.asarray(r, dtype=float)
    x = 2.0 * r / n
    log_c = (
        1.5 * math.log(2.0 / n)
        + 0.5 * (math.lgamma(n - l) - math.lgamma(n + l + 1))
        - 0.5 * math.log(2.0 * n)
    )
    f = _laguerre_weighted(n - l - 1, 2 * l + 1, x)
    if l == 0:
        return math.exp(log_c) * f
    with np.errstate(divide="ignore"):
        t = log_c + l * np.log(np.where(x > 0, x, 1.0))
    out = np.zeros_like(x)
    pos = x > 0
    safe = pos & (t < 680.0)
    out[safe] = np.exp(t[safe]) * f[safe]
    big = pos & ~safe  # combine exponents before exponentiating
    if np.any(big):
        fb = f[big]
        nz = fb != 0.0
        vals = np.zeros_like(fb)
        vals[nz] = np.sign(fb[nz]) * np.exp(t[big][nz] + np.log(np.abs(fb[nz])))
        out[big] = vals
    return out


def _radial_quad_laguerre(n: int, l: int, n2: int, l2: int, nodes: int) -> float:
    gamma = 1.0 / n + 1.0 / n2
    s, w = roots_laguerre(nodes)
    keep = (s < 700.0) & (w > 0.0)
    s, w = s[keep], w[keep]
    r = s / gamma
    g = radial_wavefunction(n, l, r) * radial_wavefunction(n2, l2, r) * r**4
    return float(np.sum(w * np.exp(s) * g)) / gamma


def _radial_quad_legendre(n: int, l: int, n2: int, l2: int, nodes: int) -> float:
    # the r^4 weight fattens the tail; 4.5 n^2 keeps the truncation below 1e-13
    r_cut = 4.5 * max(n, n2) ** 2 + 60.0
    t, w = roots_legendre(nodes)
    r = 0.5 * r_cut * (t + 1.0)
    g = radial_wavefunction(n, l, r) * radial_wavefunction(n2, l2, r) * r**4
    return float(np.sum(w * g)) * 0.5 * r_cut


@lru_cache(maxsize=None)
def _radial_integral(n: int, l: int, n2: int, l2: int) -> float:
    """integral of R_{n,l}(r) r^2 R_{n2,l2}(r) r^2 dr with certified doubling.

    Node counts are doubled until the value moves by less than 1e-10
    relative; the polynomial-exact Gauss-Laguerre path is used whenever its
    weights stay representable, a truncated Gauss-Legendre rule otherwise.
    """
    use_laguerre = (n + n2) <= _LAGUERRE_MAX_NN
    if use_laguerre:
        nodes = max(24, (n + n2) // 2 + 4)
        rule = _radial_quad_laguerre
    else:
        nodes = max(512, 4 * max(n, n2))
        rule = _radial_quad_legendre
    value = rule(n, l, n2, l2, nodes)
    for _ in range(6):
        nodes *= 2
        refined = rule(n, l, n2, l2, nodes)
        if abs(refined - value) <= _RADIAL_RTOL * max(1.0, abs(refined)):
            return refined
        value = refined
    raise QuadratureConvergenceError(
        f"radial integral (n={n},l={l};n2={n2},l2={l2}) did not stabilize"
    )


def radial_integral_r2(n: int, l: int, l2: int) -> float:
    """Same-shell radial element of r^2 between (n,l) and (n,l2).

    Only the couplings the perturbation produces are allowed:
    |l - l2| in {0, 2}.
    """
    if not (0 <= l <= n - 1 and 0 <= l2 <= n - 1):
        raise ValueError(f"need 0 <= l, l2 <= n-1, got l={l}, l2={l2}, n={n}")
    if abs(l - l2) not in (0, 2):
        raise ValueError(f"unsupported angular coupling |l-l2|={abs(l - l2)}")
    return _radial_integral(n, l, n, l2)


def radial_integral_r2_cross(n: int, l: int, n2: int, l2: int) -> float:
    """Cross-shell radial element of r^2 between (n,l) and (n2,l2)."""
    if not (0 <= l <= n - 1 and 0 <= l2 <= n2 - 1):
        raise ValueError(f"need 0 <= l <= n-1 and 0 <= l2 <= n2-1")
    if abs(l - l2) not in (0, 2):
        raise ValueError(f"unsupported angular coupling |l-l2|={abs(l - l2)}")
    if (n2, l2) < (n, l):
        n, l, n2, l2 = n2, l2, n, l
    return _radial_integral(n, l, n2, l2)


# ---------------------------------------------------------------------------
# angular matrix elements
# ---------------------------------------------------------------------------


def ladder_coefficient(l: int, m: int) -> float:
    """c_{l,m} in cos(theta) Y_{l,m} = c_{l,m} Y_{l+1,m} + c_{l-1,m} Y_{l-1,m}."""
    if l < abs(m):
        return 0.0
    return math.sqrt(((l + 1) ** 2 - m * m) / ((2 * l + 1.0) * (2 * l + 3.0)))


def angular_cos2_element(l: int, l2: int, m: int) -> float:
    """<l2, m| cos^2(theta) |l, m> from two ladder steps."""
    if abs(m) > min(l, l2):
        raise ValueError(f"need |m| <= min(l, l2), got m={m}, l={l}, l2={l2}")
    lo, hi = min(l, l2), max(l, l2)
    if hi == lo:
        return ladder_coefficient(l, m) ** 2 + ladder_coefficient(l - 1, m) ** 2
    if hi == lo + 2:
        return ladder_coefficient(lo, m) * ladder_coefficient(lo + 1, m)
    raise ValueError(f"unsupported angular coupling |l-l2|={hi - lo}")


def angular_sin2_element(l: int, l2: int, m: int) -> float:
    """<l2, m| sin^2(theta) |l, m> = delta_{l,l2} - <l2, m| cos^2(theta) |l, m>."""
    base = 1.0 if l == l2 else 0.0
    return base - angular_cos2_element(l, l2, m)


# ---------------------------------------------------------------------------
# shell matrices
# ---------------------------------------------------------------------------


@dataclass
class ShellMatrix:
    """Real symmetric operator restricted to shell N, stored as m-blocks.

    ``blocks[m]`` is the matrix over l = |m|..N in ascending l order.  The
    dense layout follows :func:`enumerate_shell` (ascending m, then l);
    entries between different m vanish identically because they are never
    assembled.
    """

    N: int
    blocks: dict[int, np.ndarray] = field(repr=False)

    @property
    def dim(self) -> int:
        return (self.N + 1) ** 2

    def block(self, m: int) -> np.ndarray:
        return self.blocks[m]

    def block_slices(self) -> dict[int, slice]:
        """Index range of each m-block inside the dense layout."""
        out = {}
        off = 0
        for m in range(-self.N, self.N + 1):
            size = self.N + 1 - abs(m)
            out[m] = slice(off, off + size)
            off += size
        return out

    def dense(self, budget_bytes: int = 2 << 30) -> np.ndarray:
        required = 8 * self.dim**2
        if required > budget_bytes:
            raise ResourceBudgetError(required, budget_bytes)
        out = np.zeros((self.dim, self.dim))
        off = 0
        for m in range(-self.N, self.N + 1):
            size = self.N + 1 - abs(m)
            out[off : off + size, off : off + size] = self.blocks[m]
            off += size
        return out

    def norm(self) -> float:
        """Spectral norm, maximized over m-blocks."""
        return max(
            float(np.max(np.abs(np.linalg.eigvalsh(b)))) if b.size else 0.0
            for b in self.blocks.values()
        )

    def eigenvalues_by_block(self) -> dict[int, np.ndarray]:
        return {m: np.linalg.eigvalsh(b) for m, b in self.blocks.items()}


def shell_matrix_L3(N: int) -> ShellMatrix:
    """L3 restricted to shell N: diagonal m with multiplicity N+1-|m|."""
    if N < 0:
        raise ValueError(f"shell index must be non-negative, got {N}")
    blocks = {
        m: np.diag(np.full(N + 1 - abs(m), float(m))) for m in range(-N, N + 1)
    }
    return ShellMatrix(N=N, blocks=blocks)


def shell_matrix_rho2(N: int) -> ShellMatrix:
    """x1^2 + x2^2 = r^2 sin^2(theta) restricted to shell N.

    Radial and angular factors separate in spherical coordinates, so each
    entry is a product of a same-shell radial integral and a ladder-built
    angular element.
    """
    if N < 0:
        raise ValueError(f"shell index must be non-negative, got {N}")
    n = N + 1
    blocks: dict[int, np.ndarray] = {}
    for m in range(-N, N + 1):
        ls = range(abs(m), N + 1)
        size = N + 1 - abs(m)
        block = np.zeros((size, size))
        for i, l in enumerate(ls):
            for l2 in (l, l + 2):
                if l2 > N:
                    continue
                j = l2 - abs(m)
                val = radial_integral_r2(n, l, l2) * angular_sin2_element(l, l2, m)
                block[i, j] = val
                block[j, i] = val
        blocks[m] = block
    return ShellMatrix(N=N, blocks=blocks)


def shell_matrix_W(N: int, schedule: ScalingSchedule) -> ShellMatrix:
    """(lambda^2/8) rho^2 - (lambda/2) L3 on shell N.

    The diamagnetic part is dropped when provably below the resolution of
    every scaled quantity (see ScalingSchedule.diamagnetic_negligible); the
    paramagnetic part is diagonal and exact.
    """
    lam = schedule.lam(N)
    with_rho2 = not schedule.diamagnetic_negligible(N)
    rho2 = shell_matrix_rho2(N) if with_rho2 else None
    blocks: dict[int, np.ndarray] = {}
    for m in range(-N, N + 1):
        size = N + 1 - abs(m)
        block = np.diag(np.full(size, -0.5 * lam * m))
        if rho2 is not None:
            block = block + (lam**2 / 8.0) * rho2.blocks[m]
        blocks[m] = block
    return ShellMatrix(N=N, blocks=blocks)


# ---------------------------------------------------------------------------
# multishell band matrix
# ---------------------------------------------------------------------------


def multishell_states(N: int, delta: int) -> list[ShellState]:
    """Union basis over shells N-delta..N+delta, ordered by (m, shell, l)."""
    if delta < 0 or N - delta < 0:
        raise ValueError(f"need delta >= 0 and N - delta >= 0, got N={N}, delta={delta}")
    mmax = N + delta
    states = []
    for m in range(-mmax, mmax + 1):
        for Np in range(N - delta, N + delta + 1):
            for l in range(abs(m), Np + 1):
                states.append(ShellState(Np, l, m))
    return states


@dataclass
class MultiShellMatrix:
    """Band operator over shells N-delta..N+delta in the ordering of
    :func:`multishell_states`, stored as m-blocks with their state labels."""

    N: int
    delta: int
    blocks: dict[int, np.ndarray] = field(repr=False)
    block_states: dict[int, list[ShellState]] = field(repr=False)

    @property
    def dim(self) -> int:
        return sum(len(s) for s in self.block_states.values())

    def dense(self, budget_bytes: int = 2 << 30) -> np.ndarray:
        required = 8 * self.dim**2
        if required > budget_bytes:
            raise ResourceBudgetError(required, budget_bytes)
        out = np.zeros((self.dim, self.dim))
        off = 0
        mmax = self.N + self.delta
        for m in range(-mmax, mmax + 1):
            size = len(self.block_states[m])
            out[off : off + size, off : off + size] = self.blocks[m]
            off += size
        return out


def _band_blocks(
    N: int,
    delta: int,
    schedule: ScalingSchedule,
    subtract_center: bool,
    budget_bytes: int = 2 << 30,
) -> MultiShellMatrix:
    if delta < 0 or N - delta < 0:
        raise ValueError(f"need delta >= 0 and N - delta >= 0, got N={N}, delta={delta}")
    lam = schedule.lam(N)
    with_rho2 = not schedule.diamagnetic_negligible(N)
    e_center = shell_energy(N) if subtract_center else 0.0
    mmax = N + delta
    block_bytes = 8 * sum(
        sum(Np + 1 - abs(m) for Np in range(N - delta, N + delta + 1) if Np >= abs(m)) ** 2
        for m in range(-mmax, mmax + 1)
    )
    if block_bytes > budget_bytes:
        raise ResourceBudgetError(block_bytes, budget_bytes)
    blocks: dict[int, np.ndarray] = {}
    block_states: dict[int, list[ShellState]] = {}
    for m in range(-mmax, mmax + 1):
        labels = [
            ShellState(Np, l, m)
            for Np in range(N - delta, N + delta + 1)
            for l in range(abs(m), Np + 1)
        ]
        size = len(labels)
        block = np.zeros((size, size))
        for i, st in enumerate(labels):
            block[i, i] = (shell_energy(st.N) - e_center) - 0.5 * lam * m
        if with_rho2:
            coeff = lam**2 / 8.0
            for i, st in enumerate(labels):
                for j in range(i, size):
                    st2 = labels[j]
                    if abs(st.l - st2.l) not in (0, 2):
                        continue
                    val = coeff * radial_integral_r2_cross(
                        st.N + 1, st.l, st2.N + 1, st2.l
                    ) * angular_sin2_element(st.l, st2.l, m)
                    block[i, j] += val
                    if j != i:
                        block[j, i] += val
        blocks[m] = block
        block_states[m] = labels
    return MultiShellMatrix(N=N, delta=delta, blocks=blocks, block_states=block_states)


def multishell_band_matrix(N: int, delta: int, schedule: ScalingSchedule) -> MultiShellMatrix:
    """S_V + W(lambda) over the union basis of shells N-delta..N+delta.

    Diagonal carries the shell energies E_{N'}; the diamagnetic term mixes
    shells through cross-shell radial quadrature.  For delta = 0 this is
    E_N I + shell_matrix_W(N).
    """
    return _band_blocks(N, delta, schedule, subtract_center=False)
