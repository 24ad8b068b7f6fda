"""Shell densities, density-increment checks and exact 2D cross-sections."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._mc import DEFAULT_BATCH, DensityEstimate, batched_moments, bernoulli_estimate
from .bodies import FACETED, Body, BodyKind
from .errors import ContractViolation, DegenerateInput
from .sampling import Plane2D, RngStream, as_stream, chi_quantile, sample_plane

__all__ = [
    "DensityEstimate",
    "IncrementReport",
    "ArcSet",
    "ArcDiagnostics",
    "RazReport",
    "ProfileRow",
    "Profile",
    "C_CAL_SYMMETRIC",
    "C_CAL_GENERAL",
    "shell_density",
    "gaussian_volume",
    "density_profile",
    "increment_bound",
    "increment_check",
    "cross_section_arcs",
    "arc_shrink_measure",
    "two_d_increment_bound",
    "raz_experiment",
]

C_CAL_SYMMETRIC = 0.05
C_CAL_GENERAL = 0.02
TWO_PI = 2 * math.pi


def _unit_dirs(gen: np.random.Generator, m: int, n: int) -> np.ndarray:
    g = gen.standard_normal((m, n))
    return g / np.linalg.norm(g, axis=1)[:, None]


def shell_density(body: Body, r: float, samples: int, rng: RngStream, batch_size: int = DEFAULT_BATCH) -> DensityEstimate:
    """alpha_K(r): fraction of the radius-r sphere inside the body."""
    if r <= 0:
        raise ContractViolation("shell radius must be positive")
    n = body.dim

    def fn(gen, m):
        return body.contains(r * _unit_dirs(gen, m, n))

    mom = batched_moments(fn, samples, rng, batch_size)
    return bernoulli_estimate(float(mom.mean[0]), samples, rng.ident)


def gaussian_volume(body: Body, samples: int, rng: RngStream, batch_size: int = DEFAULT_BATCH) -> DensityEstimate:
    n = body.dim

    def fn(gen, m):
        return body.contains(gen.standard_normal((m, n)))

    mom = batched_moments(fn, samples, rng, batch_size)
    return bernoulli_estimate(float(mom.mean[0]), samples, rng.ident)


# ---------------------------------------------------------------- profile

@dataclass(frozen=True)
class ProfileRow:
    nu: float
    r: float
    beta: DensityEstimate


@dataclass(frozen=True)
class Profile:
    rows: list[ProfileRow]
    area: float
    area_std_error: float


def default_grid(points: int = 64) -> list[float]:
    """Evenly spaced levels from 1/128 to 127/128."""
    return list(np.linspace(1 / 128, 127 / 128, points))


def density_profile(body: Body, grid, samples_per_point: int, rng: RngStream) -> Profile:
    """beta(nu) = alpha_K(r(nu)) on a grid of levels, plus its integral over [0, 1].

    The integral uses the trapezoid rule on the grid and holds beta constant
    beyond the first and last grid points.
    """
    grid = [float(v) for v in grid]
    if any(not 0 < v < 1 for v in grid) or grid != sorted(grid):
        raise ContractViolation("grid must be sorted inside (0, 1)")
    rows = []
    for i, nu in enumerate(grid):
        r = chi_quantile(body.dim, nu)
        rows.append(ProfileRow(nu, r, shell_density(body, r, samples_per_point, rng.derive(i))))
    nus = np.array(grid)
    b = np.array([row.beta.mean for row in rows])
    se = np.array([row.beta.std_error for row in rows])
    w = np.zeros(len(grid))
    if len(grid) > 1:
        dx = np.diff(nus)
        w[:-1] += dx / 2
        w[1:] += dx / 2
    w[0] += nus[0]
    w[-1] += 1 - nus[-1]
    return Profile(rows, float(w @ b), float(math.sqrt(float((w * se) @ (w * se)))))


# ---------------------------------------------------------------- increments

@dataclass(frozen=True)
class IncrementReport:
    r: float
    kappa: float
    alpha_r: DensityEstimate
    alpha_shrunk: DensityEstimate
    theorem_bound: float
    passed: bool
    regime: str
    status: str  # "pass", "fail" or "degenerate"
    diff_std_error: float  # std error of the paired difference

    @property
    def increment(self) -> float:
        return self.alpha_shrunk.mean - self.alpha_r.mean

    @property
    def combined_std_error(self) -> float:
        return math.hypot(self.alpha_r.std_error, self.alpha_shrunk.std_error)


def increment_bound(alpha: float, kappa: float, regime: str, r: float | None = None,
                    r_small: float | None = None, c_cal: float | None = None) -> float:
    """Guaranteed increment for the given regime (calibrated constants)."""
    if regime == "symmetric":
        c = C_CAL_SYMMETRIC if c_cal is None else c_cal
        return c * kappa * (alpha * (1 - alpha)) ** 2
    if regime == "general":
        c = C_CAL_GENERAL if c_cal is None else c_cal
        ratio = min(1.0, r_small / r)
        if alpha <= 0.5:
            return c * kappa * alpha * ratio
        return c * kappa * (1 - alpha) * min(1 - alpha, ratio)
    raise ContractViolation(f"unknown regime {regime!r}")


def increment_check(body: Body, r: float, kappa: float, samples: int, rng: RngStream,
                    regime: str | None = None, c_cal: float | None = None,
                    batch_size: int = DEFAULT_BATCH) -> IncrementReport:
    """Compare alpha_K((1-kappa) r) - alpha_K(r) against the guaranteed increment.

    Both shells are probed along the same random directions, which keeps the
    difference estimate tight; the pass rule still uses the combined error of
    the two marginal estimates.
    """
    if not 0 < kappa <= 0.1:
        raise ContractViolation("kappa must lie in (0, 1/10]")
    if r <= 0:
        raise ContractViolation("radius must be positive")
    if regime is None:
        regime = "symmetric" if body.symmetric else "general"
    if regime == "symmetric" and not body.symmetric:
        raise ContractViolation("symmetric regime needs a centrally symmetric body")
    if regime == "general" and body.inner_radius is None:
        raise ContractViolation("general regime needs a body with an inner-radius certificate")
    n = body.dim
    rs = (1 - kappa) * r

    def fn(gen, m):
        u = _unit_dirs(gen, m, n)
        a = body.contains(r * u).astype(float)
        b = body.contains(rs * u).astype(float)
        return np.column_stack([a, b, b - a])

    mom = batched_moments(fn, samples, rng, batch_size)
    est_r = bernoulli_estimate(float(mom.mean[0]), samples, rng.ident)
    est_s = bernoulli_estimate(float(mom.mean[1]), samples, rng.ident)
    diff_se = float(mom.std_error()[2])
    alpha = est_r.mean
    sig = max(est_r.std_error, 1.0 / samples)
    bound = increment_bound(min(max(alpha, 0.0), 1.0), kappa, regime, r, body.inner_radius, c_cal)
    if alpha <= 3 * sig or alpha >= 1 - 3 * sig:
        return IncrementReport(r, kappa, est_r, est_s, bound, False, regime, "degenerate", diff_se)
    comb = math.hypot(est_r.std_error, est_s.std_error)
    ok = (est_s.mean - est_r.mean) >= bound - 3 * comb
    return IncrementReport(r, kappa, est_r, est_s, bound, ok, regime, "pass" if ok else "fail", diff_se)


# ---------------------------------------------------------------- arcs

@dataclass
class ArcDiagnostics:
    tangent_facets: int = 0
    parallel_facets: int = 0


@dataclass(frozen=True)
class ArcSet:
    """Disjoint half-open angular intervals inside [0, 2 pi)."""

    intervals: tuple[tuple[float, float], ...]

    @property
    def total_measure(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    @property
    def fraction(self) -> float:
        return self.total_measure / TWO_PI

    def contains_angle(self, theta) -> np.ndarray:
        t = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        out = np.zeros(t.shape, dtype=bool)
        for a, b in self.intervals:
            out |= (t >= a) & (t < b)
        return out

    @staticmethod
    def full() -> "ArcSet":
        return ArcSet(((0.0, TWO_PI),))

    @staticmethod
    def empty() -> "ArcSet":
        return ArcSet(())


def _arc(start: float, length: float) -> list[tuple[float, float]]:
    """The arc [start, start+length) split at 2 pi."""
    s = start % TWO_PI
    e = s + length
    if e <= TWO_PI:
        return [(s, e)]
    return [(s, TWO_PI), (0.0, e - TWO_PI)]


def _intersect(a: list[tuple[float, float]], b: list[tuple[float, float]]) -> list[tuple[float, float]]:
    out = []
    i = j = 0
    a = sorted(a)
    b = sorted(b)
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo < hi:
            out.append((lo, hi))
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return out


def cross_section_arcs(body: Body, plane: Plane2D, rho: float,
                       diagnostics: ArcDiagnostics | None = None, tangent_tol: float = 1e-12) -> ArcSet:
    """Exact set of angles theta with rho (cos theta e1 + sin theta e2) in the body."""
    if rho <= 0:
        raise ContractViolation("circle radius must be positive")
    if plane.dim != body.dim:
        raise ContractViolation("plane and body dimensions differ")
    diag = diagnostics if diagnostics is not None else ArcDiagnostics()
    if body.kind is BodyKind.BALL:
        return ArcSet.full() if rho <= body.radius else ArcSet.empty()
    if body.kind is BodyKind.EMPTY:
        return ArcSet.empty()
    if body.kind is BodyKind.FULL:
        return ArcSet.full()
    if body.kind not in FACETED:
        raise ContractViolation(f"no exact cross-section for {body.kind.value} bodies")
    a, c = body.facets()
    pa = rho * (a @ plane.e1)
    pb = rho * (a @ plane.e2)
    amp = np.hypot(pa, pb)
    phase = np.arctan2(pb, pa)
    current = [(0.0, TWO_PI)]
    for R, ph, ci in zip(amp, phase, c):
        # facet reads R cos(theta - ph) <= ci
        if R <= tangent_tol:
            diag.parallel_facets += 1
            if ci < 0:
                return ArcSet.empty()
            continue
        if abs(R - ci) <= tangent_tol * max(1.0, R):
            diag.tangent_facets += 1
            continue
        if ci >= R:
            continue
        if ci <= -R:
            return ArcSet.empty()
        half = math.acos(ci / R)
        allowed = _arc(ph + half, TWO_PI - 2 * half)
        current = _intersect(current, allowed)
        if not current:
            return ArcSet.empty()
    merged: list[tuple[float, float]] = []
    for lo, hi in sorted(current):
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(hi, merged[-1][1]))
        else:
            merged.append((lo, hi))
    return ArcSet(tuple(merged))


def arc_shrink_measure(t: float, kappa: float) -> float:
    """Angular measure of an arc of length t that stays inside its chord
    triangle once the circle is shrunk by 1 - kappa."""
    if not 0 <= t <= TWO_PI or not 0 < kappa < 1:
        raise ContractViolation("need 0 <= t <= 2 pi and 0 < kappa < 1")
    c = math.cos(t / 2)
    if c >= 1 - kappa:
        return t
    return max(0.0, t - 2 * math.acos(max(-1.0, c / (1 - kappa))))


def two_d_increment_bound(p: float, kappa: float) -> float:
    """Lower bound on the angular gain of a symmetric planar convex set covering
    a fraction p of the unit circle when the circle shrinks by 1 - kappa."""
    return math.pi * kappa * (1 - p) * math.sin(math.pi * p / 2)


# ---------------------------------------------------------------- Raz experiment

@dataclass(frozen=True)
class RazReport:
    r: float
    alpha: float
    beta: float
    interval: tuple[float, float]
    frequency: float
    std_error: float
    target: float  # beta / 2
    plane_trials: int
    monte_carlo: bool
    mu: np.ndarray = field(repr=False)


def _mu_monte_carlo(body: Body, plane: Plane2D, r: float, gen: np.random.Generator, points: int = 10_000) -> float:
    theta = gen.uniform(0, TWO_PI, size=points)
    pts = plane.embed(r * np.cos(theta), r * np.sin(theta))
    return float(np.mean(body.contains(pts)))


def raz_experiment(body: Body, r: float, plane_trials: int, rng: RngStream) -> RazReport:
    """Fraction of Haar 2-planes whose circle section lands in the claimed window."""
    exact = body.kind in FACETED or body.kind in (BodyKind.BALL, BodyKind.FULL, BodyKind.EMPTY)
    mu = np.empty(plane_trials)
    for i in range(plane_trials):
        sub = rng.derive(i)
        plane = sample_plane(body.dim, sub)
        if exact:
            mu[i] = cross_section_arcs(body, plane, r).fraction
        else:
            mu[i] = _mu_monte_carlo(body, plane, r, sub.generator)
    alpha = float(mu.mean())
    beta = min(alpha, 1 - alpha)
    if beta <= 0:
        raise DegenerateInput("shell density is 0 or 1 at this radius")
    interval = (beta / 4, 0.9) if alpha <= 0.5 else (0.1, 1 - beta / 4)
    hit = (mu >= interval[0]) & (mu <= interval[1])
    f = float(hit.mean())
    return RazReport(r, alpha, beta, interval, f, math.sqrt(f * (1 - f) / plane_trials), beta / 2,
                     plane_trials, not exact, mu)
