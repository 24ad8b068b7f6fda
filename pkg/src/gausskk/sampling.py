"""Random streams, Gaussian/sphere/plane samplers and the deterministic
one-dimensional functions that the rest of the package leans on:
chi quantiles and spherical cap masses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ContractViolation

__all__ = [
    "RngStream",
    "Plane2D",
    "as_generator",
    "sample_gaussian",
    "sample_sphere",
    "sample_plane",
    "gamma_p",
    "chi_cdf",
    "chi_quantile",
    "cap_mass",
    "log_cap_mass",
    "solve_slab_width",
    "cap_ratio_check",
]


# ---------------------------------------------------------------- streams

@dataclass(frozen=True)
class RngStream:
    """A splittable, counter-based random stream.

    The generator is Philox keyed by ``(seed, stream_id)``, so a stream replays
    bit-identically on any platform. ``derive`` produces independent children.
    """

    seed: int
    stream_id: int = 0

    @cached_property
    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.Philox(ss))

    def derive(self, *keys: int) -> "RngStream":
        ss = np.random.SeedSequence(entropy=[int(self.stream_id) & 0xFFFFFFFFFFFFFFFF, *map(int, keys)])
        sid = int(ss.generate_state(2, np.uint32).astype(np.uint64) @ np.array([1 << 32, 1], dtype=np.uint64))
        return RngStream(self.seed, sid)

    @property
    def ident(self) -> tuple[int, int]:
        return (int(self.seed), int(self.stream_id))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def as_stream(rng) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng))
    raise TypeError(f"expected RngStream or int seed, got {type(rng).__name__}")


# ---------------------------------------------------------------- samplers

@dataclass(frozen=True)
class Plane2D:
    """An orthonormal pair spanning a 2-dimensional subspace of R^n."""

    e1: np.ndarray
    e2: np.ndarray

    def __post_init__(self):
        e1 = np.asarray(self.e1, dtype=float)
        e2 = np.asarray(self.e2, dtype=float)
        if e1.shape != e2.shape or e1.ndim != 1:
            raise ContractViolation("plane basis vectors must be 1-d and of equal length")
        if abs(np.dot(e1, e1) - 1) > 1e-12 or abs(np.dot(e2, e2) - 1) > 1e-12 or abs(np.dot(e1, e2)) > 1e-12:
            raise ContractViolation("plane basis is not orthonormal")
        object.__setattr__(self, "e1", e1)
        object.__setattr__(self, "e2", e2)

    @property
    def dim(self) -> int:
        return self.e1.shape[0]

    def embed(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return a[..., None] * self.e1 + b[..., None] * self.e2


def sample_gaussian(n: int, rng, size: int | None = None) -> np.ndarray:
    """Standard Gaussian vector(s) in R^n; shape (n,) or (size, n)."""
    if n < 1:
        raise ContractViolation("dimension must be at least 1")
    gen = as_generator(rng)
    if size is None:
        return gen.standard_normal(n)
    return gen.standard_normal((size, n))


def sample_sphere(n: int, r: float, rng, size: int | None = None) -> np.ndarray:
    """Uniform point(s) on the radius-r sphere, as r*g/|g|."""
    if r <= 0:
        raise ContractViolation("sphere radius must be positive")
    gen = as_generator(rng)
    m = 1 if size is None else size
    g = gen.standard_normal((m, n))
    norms = np.linalg.norm(g, axis=1)
    bad = norms == 0
    while bad.any():  # probability zero, kept for completeness
        g[bad] = gen.standard_normal((int(bad.sum()), n))
        norms = np.linalg.norm(g, axis=1)
        bad = norms == 0
    out = g * (r / norms)[:, None]
    return out[0] if size is None else out


def sample_plane(n: int, rng) -> Plane2D:
    """Haar-uniform 2-plane via Gram-Schmidt on two Gaussian vectors."""
    if n < 2:
        raise ContractViolation("a plane needs n >= 2")
    gen = as_generator(rng)
    while True:
        g1 = gen.standard_normal(n)
        g2 = gen.standard_normal(n)
        n1 = np.linalg.norm(g1)
        if n1 == 0:
            continue
        e1 = g1 / n1
        v = g2 - np.dot(g2, e1) * e1
        nv = np.linalg.norm(v)
        if nv < 1e-8 * np.linalg.norm(g2):
            continue
        e2 = v / nv
        # one more pass keeps the pair orthonormal to rounding
        e2 = e2 - np.dot(e2, e1) * e1
        e2 /= np.linalg.norm(e2)
        return Plane2D(e1, e2)


# ---------------------------------------------------------------- chi distribution

def gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x).

    Series expansion below x = a + 1, Lentz continued fraction for Q above.
    """
    if a <= 0:
        raise ContractViolation("shape must be positive")
    if x <= 0:
        return 0.0
    log_pref = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1:
        term = 1.0 / a
        total = term
        ap = a
        for _ in range(100000):
            ap += 1
            term *= x / ap
            total += term
            if term < total * 1e-17:
                break
        return min(1.0, total * math.exp(log_pref))
    tiny = 1e-300
    b = x + 1 - a
    c = 1 / tiny
    d = 1 / b
    h = d
    for i in range(1, 100000):
        an = -i * (i - a)
        b += 2
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1 / d
        delta = d * c
        h *= delta
        if abs(delta - 1) < 1e-16:
            break
    return max(0.0, 1.0 - math.exp(log_pref) * h)


def chi_cdf(n: int, r: float) -> float:
    if r <= 0:
        return 0.0
    return gamma_p(n / 2.0, r * r / 2.0)


def chi_quantile(n: int, nu: float) -> float:
    """r(nu) with Pr[chi(n) <= r(nu)] = nu, by bisection on the CDF."""
    if n < 1:
        raise ContractViolation("dimension must be at least 1")
    if not 0.0 < nu < 1.0:
        raise ContractViolation(f"quantile level must lie in (0, 1), got {nu}")
    lo, hi = 0.0, math.sqrt(n) + 4.0
    while chi_cdf(n, hi) < nu:
        lo, hi = hi, 2 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if chi_cdf(n, mid) < nu:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------- spherical caps

def _simpson_adaptive(f, a: float, b: float, tol: float, floor: float = 0.0, max_depth: int = 48) -> float:
    """Adaptive Simpson with Richardson correction; ``tol`` is absolute.

    Panel tolerances halve on refinement but never drop below ``floor``,
    otherwise rounding noise would force refinement to full depth.
    """
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) * (fa + 4 * fm + fb) / 6
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        a0, b0, fa0, fm0, fb0, s0, eps, depth = stack.pop()
        m0 = 0.5 * (a0 + b0)
        lm, rm = 0.5 * (a0 + m0), 0.5 * (m0 + b0)
        flm, frm = f(lm), f(rm)
        left = (m0 - a0) * (fa0 + 4 * flm + fm0) / 6
        right = (b0 - m0) * (fm0 + 4 * frm + fb0) / 6
        err = left + right - s0
        if depth >= max_depth or abs(err) <= 15 * eps:
            total += left + right + err / 15
        else:
            half = max(eps / 2, floor)
            stack.append((a0, m0, fa0, flm, fm0, left, half, depth + 1))
            stack.append((m0, b0, fm0, frm, fb0, right, half, depth + 1))
    return total


def log_cap_mass(n: int, alpha: float, tol: float = 1e-12) -> float:
    """log Pr_{u ~ S^{n-1}}[v.u >= alpha] for 0 < alpha < 1.

    With z = cos(phi) the integral of (1-z^2)^{(n-3)/2} over [alpha, 1] becomes
    the integral of sin^{n-2} over [0, arccos alpha]. The integrand is divided by
    its peak value before quadrature, so nothing underflows.
    """
    phi0 = math.acos(alpha)
    log_norm = math.lgamma(n / 2) - 0.5 * math.log(math.pi) - math.lgamma((n - 1) / 2)
    k = n - 2
    if k == 0:
        return log_norm + math.log(phi0)
    ls0 = math.log(math.sin(phi0))

    def g(phi: float) -> float:
        s = math.sin(phi)
        if s <= 0:
            return 0.0
        return math.exp(k * (math.log(s) - ls0))

    # rough scale of the scaled integral so the tolerance can be relative
    grid = np.linspace(0.0, phi0, 257)
    vals = np.exp(k * (np.log(np.maximum(np.sin(grid), 1e-300)) - ls0))
    rough = max(float((vals[1:] + vals[:-1]).sum() * (grid[1] - grid[0]) / 2), 1e-300)
    integral = _simpson_adaptive(g, 0.0, phi0, tol * rough, floor=1e-16 * rough)
    return log_norm + k * ls0 + math.log(integral)


def cap_mass(n: int, alpha: float, tol: float = 1e-12) -> float:
    """Pr_{u ~ S^{n-1}}[v.u >= alpha] for a fixed unit v."""
    if n < 2:
        raise ContractViolation("cap mass needs n >= 2")
    if alpha > 1 or alpha < -1 or math.isnan(alpha):
        raise ContractViolation(f"cap threshold must lie in [-1, 1], got {alpha}")
    if alpha < 0:
        return 1.0 - cap_mass(n, -alpha, tol)
    if alpha == 0:
        return 0.5
    if alpha == 1:
        return 0.0
    return math.exp(log_cap_mass(n, alpha, tol))


def solve_slab_width(n: int, target: float) -> float:
    """d >= 0 with Pr_u[|v.u| >= d/sqrt(n)] = target."""
    if not 0.0 < target <= 1.0:
        raise ContractViolation(f"tail target must lie in (0, 1], got {target}")
    if target == 1.0:
        return 0.0
    rn = math.sqrt(n)
    lo, hi = 0.0, rn
    d = 0.5 * (lo + hi)
    for _ in range(400):
        d = 0.5 * (lo + hi)
        val = 2 * cap_mass(n, d / rn)
        if abs(val - target) <= 1e-12 * target:
            break
        if val > target:
            lo = d
        else:
            hi = d
        if hi - lo <= 4e-16 * hi:
            break
    return d


def cap_ratio_check(n: int, alpha: float, eps: float) -> float:
    """R = Pr[|v.u| >= alpha] / Pr[|v.u| >= (1+eps) alpha].

    Valid for alpha > 1/sqrt(n), (1+eps) alpha <= 1/2 and n alpha^2 eps <= 1/(8 e^2).
    """
    beta = (1 + eps) * alpha
    if eps < 0 or eps >= 1:
        raise ContractViolation("eps must lie in [0, 1)")
    if not 1 / math.sqrt(n) < alpha:
        raise ContractViolation(f"need alpha > 1/sqrt(n) = {1 / math.sqrt(n):.4g}")
    if beta > 0.5:
        raise ContractViolation("need (1+eps) alpha <= 1/2")
    if n * alpha * alpha * eps > 1 / (8 * math.e ** 2):
        raise ContractViolation("need n alpha^2 eps <= 1/(8 e^2)")
    if eps == 0:
        return 1.0
    return math.exp(log_cap_mass(n, alpha) - log_cap_mass(n, beta))
