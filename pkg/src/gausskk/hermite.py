"""Hermite analysis of +-1 valued body functions: low-degree weights, noise
stability, the cube closed form and the degree-2 ball correlation."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._mc import DEFAULT_BATCH, Estimate, batched_moments, batched_reduce
from .bodies import Body, BodyKind, cube_half_width
from .density import gaussian_volume, shell_density
from .errors import ContractViolation
from .sampling import RngStream, chi_quantile, gamma_p

__all__ = [
    "HermiteIndex",
    "Pm1Function",
    "WeightReport",
    "CubeWeight",
    "RStar",
    "BallCorrelation",
    "hermite_univariate",
    "as_pm1",
    "sign_function",
    "product_of_signs",
    "hermite_coeff",
    "low_level_weight",
    "cube_degree2_coeff",
    "cube_low_weight_exact",
    "noise_stability",
    "sheppard",
    "psi1_stability_exact",
    "find_r_star",
    "ball_correlation",
    "ball_correlation_grid",
]

MAX_WEIGHT_DIM = 512


def hermite_univariate(d: int, x):
    """Orthonormal Hermite polynomial h_d at x (scalar or array)."""
    if d < 0:
        raise ContractViolation("degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if d == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = x.copy()
    for k in range(1, d):
        h_prev, h = h, (x * h - math.sqrt(k) * h_prev) / math.sqrt(k + 1)
    return h if h.ndim else float(h)


@dataclass(frozen=True)
class HermiteIndex:
    """Multi-index as ((coordinate, degree), ...); empty means the constant."""

    terms: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        terms = tuple(sorted((int(c), int(d)) for c, d in self.terms))
        coords = [c for c, _ in terms]
        if len(set(coords)) != len(coords):
            raise ContractViolation("coordinates in a Hermite index must be distinct")
        if any(d < 1 or c < 0 for c, d in terms):
            raise ContractViolation("degrees must be >= 1 and coordinates >= 0")
        object.__setattr__(self, "terms", terms)

    @property
    def degree(self) -> int:
        return sum(d for _, d in self.terms)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        out = np.ones(x.shape[0])
        for c, d in self.terms:
            out = out * hermite_univariate(d, x[:, c])
        return out


@dataclass(frozen=True)
class Pm1Function:
    """A +-1 valued function on R^n. If ``relevant`` is set, the function reads
    only the first ``relevant`` coordinates and samplers may skip the rest."""

    dim: int
    fn: Callable[[np.ndarray], np.ndarray]
    relevant: int | None = None
    label: str = ""

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.fn(x)

    @property
    def sample_dim(self) -> int:
        return self.relevant if self.relevant is not None else self.dim


def as_pm1(f) -> Pm1Function:
    if isinstance(f, Pm1Function):
        return f
    if isinstance(f, Body):
        body = f
        return Pm1Function(body.dim, lambda x: np.where(body.contains(x), 1.0, -1.0), label=body.label)
    raise TypeError("expected a Body or a Pm1Function")


def sign_function(n: int, coord: int = 0) -> Pm1Function:
    """sign(x_coord), with sign(0) = 1."""
    return Pm1Function(n, lambda x: np.where(x[:, coord] >= 0, 1.0, -1.0), relevant=coord + 1,
                       label=f"sign:x{coord + 1}")


def product_of_signs(n: int, T: int) -> Pm1Function:
    """prod_{i<T} sign(x_i)."""
    return Pm1Function(n, lambda x: np.prod(np.where(x[:, :T] >= 0, 1.0, -1.0), axis=1), relevant=T,
                       label=f"psi1:{T}")


def hermite_coeff(f, idx: HermiteIndex, samples: int, rng: RngStream, batch_size: int = DEFAULT_BATCH) -> Estimate:
    """Monte Carlo estimate of <f, H_idx> under the Gaussian measure."""
    f = as_pm1(f)
    if idx.degree > 4:
        raise ContractViolation("coefficient estimation is capped at total degree 4")
    if idx.terms and idx.terms[-1][0] >= f.dim:
        raise ContractViolation("index coordinate out of range")
    m_dim = max([f.sample_dim] + [c + 1 for c, _ in idx.terms])

    def fn(gen, m):
        x = gen.standard_normal((m, m_dim))
        return f(x) * idx.evaluate(x)

    mom = batched_moments(fn, samples, rng, batch_size)
    return Estimate(float(mom.mean[0]), float(mom.std_error()[0]), int(samples), rng.ident)


# ---------------------------------------------------------------- low-degree weight

@dataclass(frozen=True)
class WeightReport:
    w0: float
    w1: float
    w2: float
    w0_se: float
    w1_se: float
    w2_se: float
    samples: int
    n: int
    volume: float
    seed: tuple[int, int]

    @property
    def total(self) -> float:
        return self.w0 + self.w1 + self.w2

    @property
    def total_se(self) -> float:
        return math.sqrt(self.w0_se ** 2 + self.w1_se ** 2 + self.w2_se ** 2)


def _debiased(c: np.ndarray, v: np.ndarray, m: int) -> tuple[float, float]:
    """sum c^2 - v/m and a delta-method std error for it."""
    est = float(np.sum(c * c) - np.sum(v) / m)
    var = float(np.sum(4 * c * c * v / m + 2 * (v / m) ** 2))
    return est, math.sqrt(max(var, 0.0))


def low_level_weight(f, samples: int, rng: RngStream, batch_size: int = 8192) -> WeightReport:
    """Hermite weight of a +-1 function at levels 0, 1 and 2 from one shared panel.

    Summing squared coefficient estimates overshoots by var/m per coefficient;
    that bias is subtracted using the empirical variances.
    """
    f = as_pm1(f)
    n = f.dim
    if n > MAX_WEIGHT_DIM:
        raise ContractViolation(f"n = {n} exceeds {MAX_WEIGHT_DIM}; use noise_stability as a proxy instead")

    def fn(gen, m):
        x = gen.standard_normal((m, n))
        y = f(x)
        x2 = x * x
        fx = x * y[:, None]
        return (
            np.array([y.sum()]),
            fx.sum(axis=0),
            x2.sum(axis=0),
            (x2 * y[:, None]).sum(axis=0),
            ((x2 - 1) ** 2).sum(axis=0),
            fx.T @ x,
            x2.T @ x2,
        )

    s_f, s1, s1sq, d, dsq, s2, s2sq = batched_reduce(fn, samples, rng, batch_size)
    m = int(samples)
    mf = float(s_f[0]) / m
    vol = (1 + mf) / 2
    w0 = 4 * (vol - 0.5) ** 2
    se_f = math.sqrt(max(1 - mf * mf, 0.0) / m)
    w0_se = 2 * abs(mf) * se_f + se_f ** 2

    c1 = s1 / m
    v1 = s1sq / m - c1 * c1
    w1, w1_se = _debiased(c1, v1, m)

    cd = (d - s_f[0]) / (m * math.sqrt(2))
    vd = dsq / (2 * m) - cd * cd
    iu = np.triu_indices(n, 1)
    co = s2[iu] / m
    vo = s2sq[iu] / m - co * co
    w2, w2_se = _debiased(np.concatenate([cd, co]), np.concatenate([vd, vo]), m)
    return WeightReport(w0, w1, w2, w0_se, w1_se, w2_se, m, n, vol, rng.ident)


# ---------------------------------------------------------------- cube closed form

@dataclass(frozen=True)
class CubeWeight:
    n: int
    c: float
    a0: float
    a2: float
    w_indicator: float  # 0/1 convention, nonconstant levels <= 2
    w_pm1: float  # +-1 convention, 4 * w_indicator


def cube_degree2_coeff(c: float) -> float:
    """<1_{|x| <= c}, h_2> under N(0, 1): -c exp(-c^2/2) / sqrt(pi)."""
    return -c * math.exp(-c * c / 2) / math.sqrt(math.pi)


def cube_low_weight_exact(n: int) -> CubeWeight:
    """Exact level <= 2 weight of the half-volume cube [-c, c]^n.

    The only nonzero coefficients up to level 2 sit at 0 and at 2 e_i.
    """
    if n < 1:
        raise ContractViolation("n must be positive")
    c = cube_half_width(n)
    a0 = 0.5 ** (1.0 / n)
    a2 = cube_degree2_coeff(c)
    w = n * (a0 ** (n - 1) * a2) ** 2
    return CubeWeight(n, c, a0, a2, w, 4 * w)


# ---------------------------------------------------------------- noise stability

def noise_stability(f, t: float, samples: int, rng: RngStream, batch_size: int = DEFAULT_BATCH) -> Estimate:
    """E[f(x) f(e^{-t} x + sqrt(1 - e^{-2t}) y)] for independent Gaussians x, y."""
    if t < 0:
        raise ContractViolation("noise rate must be nonnegative")
    f = as_pm1(f)
    rho = math.exp(-t)
    s = math.sqrt(max(0.0, 1 - rho * rho))
    k = f.sample_dim

    def fn(gen, m):
        x = gen.standard_normal((m, k))
        y = gen.standard_normal((m, k))
        return f(x) * f(rho * x + s * y)

    mom = batched_moments(fn, samples, rng, batch_size)
    return Estimate(float(mom.mean[0]), float(mom.std_error()[0]), int(samples), rng.ident)


def sheppard(t: float) -> float:
    """Noise stability of sign(x_1): (2/pi) arcsin(e^{-t})."""
    return 2 / math.pi * math.asin(math.exp(-t))


def psi1_stability_exact(n: int, t: float) -> float:
    """Noise stability of the product of the first n^{1/4} coordinate signs."""
    T = round(n ** 0.25)
    if T ** 4 != n:
        warnings.warn(f"n = {n} is not a fourth power; using T = {T}", RuntimeWarning, stacklevel=2)
    return sheppard(t) ** T


# ---------------------------------------------------------------- r* and ball correlation

@dataclass(frozen=True)
class RStar:
    r_star: float
    nu_star: float
    flat: bool
    steps: int
    volume: Estimate


def find_r_star(body: Body, tol: float = 1e-2, rng: RngStream | None = None, volume: Estimate | None = None,
                volume_samples: int = 200_000, min_samples: int = 4096, max_samples: int = 262_144) -> RStar:
    """Root of beta(nu) - vol(K) by bisection in nu.

    Each midpoint is probed with a doubling sample count until the sign is
    resolved at 3 sigma or ``max_samples`` is hit. An unresolved sign means
    beta is flat against vol at the noise floor; the midpoint is returned and
    flagged.
    """
    rng = rng if rng is not None else RngStream(0)
    n = body.dim
    vol = volume if volume is not None else gaussian_volume(body, volume_samples, rng.derive(0))
    if not 0 < vol.mean < 1:
        raise ContractViolation("volume estimate must lie strictly between 0 and 1")
    lo, hi = 1e-9, 1 - 1e-9
    steps = 0
    flat = False
    while chi_quantile(n, hi) - chi_quantile(n, lo) > tol and steps < 200:
        mid = 0.5 * (lo + hi)
        r = chi_quantile(n, mid)
        m = min_samples
        sign = 0
        while True:
            est = shell_density(body, r, m, rng.derive(1, steps, m))
            gap = est.mean - vol.mean
            sig = math.hypot(est.std_error, vol.std_error, 1.0 / m)
            if abs(gap) > 3 * sig:
                sign = 1 if gap > 0 else -1
                break
            if m >= max_samples:
                break
            m *= 2
        steps += 1
        if sign == 0:
            flat = True
            lo = hi = mid
            break
        if sign > 0:
            lo = mid
        else:
            hi = mid
    nu = 0.5 * (lo + hi)
    return RStar(chi_quantile(n, nu), nu, flat, steps, vol)


@dataclass(frozen=True)
class BallCorrelation:
    estimate: float
    std_error: float
    weight_bound: float
    samples: int
    method: str
    discretization: float = 0.0


def ball_correlation(body: Body, r_star: float, samples: int, rng: RngStream,
                     batch_size: int = DEFAULT_BATCH) -> BallCorrelation:
    """E[(K(g) - vol) (r*^2 - |g|^2)], with vol the panel's own membership rate.

    weight_bound = estimate^2 / (2n), since the centered quadratic has variance 2n.
    """
    if r_star <= 0:
        raise ContractViolation("r_star must be positive")
    n = body.dim
    if body.kind is BodyKind.FULL or body.kind is BodyKind.EMPTY:
        return BallCorrelation(0.0, 0.0, 0.0, int(samples), "exact")
    r2 = r_star * r_star

    def fn(gen, m):
        x = gen.standard_normal((m, n))
        k = body.contains(x).astype(float)
        p = r2 - np.einsum("ij,ij->i", x, x)
        return np.column_stack([k, p, k * p, p * p, k * p * p])

    mom = batched_moments(fn, samples, rng, batch_size)
    ek, ep, ekp, epp, ekpp = (float(v) for v in mom.mean)
    est = ekp - ek * ep
    # variance of (k - ek)(p - ep), expanded with k^2 = k
    e4 = (ekpp - 2 * ep * ekp + ep * ep * ek) * (1 - 2 * ek) + ek * ek * (epp - 2 * ep * ep + ep * ep)
    se = math.sqrt(max(e4 - est * est, 0.0) / samples)
    return BallCorrelation(est, se, est * est / (2 * n), int(samples), "monte-carlo")


def ball_correlation_grid(body: Body, r_star: float, rng: RngStream, volume: Estimate,
                          grid_points: int = 256, samples_per_point: int = 20_000) -> BallCorrelation:
    """The same correlation as an integral over quantile levels of
    (beta(nu) - vol) * (r*^2 - r(nu)^2).

    beta is held constant on each of ``grid_points`` equal cells; the quadratic
    is integrated exactly per cell through E[R^2; R in cell] = n Pr[chi^2_{n+2} in cell].
    The discretization field compares against pairing adjacent cells.
    """
    n = body.dim
    r2 = r_star * r_star
    edges = [0.0] + [chi_quantile(n, k / grid_points) ** 2 for k in range(1, grid_points)] + [math.inf]
    upper = [0.0] + [gamma_p(n / 2 + 1, e / 2) for e in edges[1:-1]] + [1.0]
    width = 1.0 / grid_points
    w = np.array([r2 * width - n * (upper[k + 1] - upper[k]) for k in range(grid_points)])
    beta = np.empty(grid_points)
    se = np.empty(grid_points)
    for k in range(grid_points):
        est = shell_density(body, chi_quantile(n, (k + 0.5) / grid_points), samples_per_point, rng.derive(k))
        beta[k], se[k] = est.mean, est.std_error
    bbar = beta - volume.mean
    val = float(bbar @ w)
    var = float((w * se) @ (w * se)) + (float(w.sum()) * volume.std_error) ** 2
    pairs = 0.5 * np.abs((bbar[1::2] - bbar[0::2]) * (w[0::2] - w[1::2]))
    return BallCorrelation(val, math.sqrt(var), val * val / (2 * n), grid_points * samples_per_point, "quantile-grid",
                           float(pairs.sum()))
