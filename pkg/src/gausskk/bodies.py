"""Convex bodies in R^n: the concrete families used throughout the package.

All bodies are closed. Halfspace normals are normalized at construction and
the offsets rescaled with them, so every facet reads a.x <= c with |a| = 1.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from .errors import ContractViolation
from .sampling import RngStream, as_stream

__all__ = [
    "BodyKind",
    "Body",
    "CheckResult",
    "ball",
    "cube",
    "cube_half_width",
    "half_volume_cube",
    "halfspace",
    "halfspace_intersection",
    "slab",
    "slab_conjunction",
    "full_space",
    "empty_set",
    "contains",
    "build_random_symmetric_polytope",
    "build_random_polytope",
    "check_convexity",
    "check_symmetry",
]


class BodyKind(enum.Enum):
    BALL = "ball"
    CUBE = "cube"
    HALFSPACE = "halfspace"
    HALFSPACE_INTERSECTION = "polytope"
    SLAB_CONJUNCTION = "slabs"
    FULL = "full"
    EMPTY = "empty"


FACETED = (BodyKind.HALFSPACE, BodyKind.HALFSPACE_INTERSECTION, BodyKind.SLAB_CONJUNCTION, BodyKind.CUBE)


@dataclass(frozen=True, eq=False)
class Body:
    kind: BodyKind
    dim: int
    normals: np.ndarray | None = None
    offsets: np.ndarray | None = None
    radius: float | None = None
    symmetric: bool = False
    inner_radius: float | None = None
    label: str = field(default="")

    def contains(self, x) -> np.ndarray | bool:
        return contains(self, x)

    def facets(self) -> tuple[np.ndarray, np.ndarray]:
        """All facets as (A, c) with rows a.x <= c."""
        if self.kind is BodyKind.CUBE:
            eye = np.eye(self.dim)
            a = np.vstack([eye, -eye])
            return a, np.full(2 * self.dim, self.radius)
        if self.kind is BodyKind.SLAB_CONJUNCTION:
            a = np.vstack([self.normals, -self.normals])
            return a, np.full(a.shape[0], self.radius)
        if self.kind in (BodyKind.HALFSPACE, BodyKind.HALFSPACE_INTERSECTION):
            return self.normals, self.offsets
        if self.kind is BodyKind.FULL:
            return np.zeros((0, self.dim)), np.zeros(0)
        raise ContractViolation(f"{self.kind.value} body has no facet description")

    def radial(self, u: np.ndarray) -> np.ndarray:
        """Largest t with t*u in the body, for unit rows u (body must contain 0)."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        _check_dim(self, u)
        if self.kind is BodyKind.BALL:
            return np.full(u.shape[0], self.radius)
        if self.kind is BodyKind.FULL:
            return np.full(u.shape[0], np.inf)
        if self.kind is BodyKind.EMPTY:
            raise ContractViolation("the empty set has no radial function")
        if self.kind is BodyKind.CUBE:
            with np.errstate(divide="ignore"):
                return self.radius / np.abs(u).max(axis=1)
        if self.kind is BodyKind.SLAB_CONJUNCTION:
            with np.errstate(divide="ignore"):
                return self.radius / np.abs(u @ self.normals.T).max(axis=1)
        a, c = self.facets()
        if np.any(c < 0):
            raise ContractViolation("radial function needs the origin inside the body")
        proj = u @ a.T
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(proj > 0, c / proj, np.inf)
        return t.min(axis=1)

    def __repr__(self) -> str:
        return f"Body({self.label or self.kind.value}, n={self.dim})"


def _check_dim(body: Body, x: np.ndarray) -> None:
    if x.shape[-1] != body.dim:
        raise ContractViolation(f"point has dimension {x.shape[-1]}, body has dimension {body.dim}")


def contains(body: Body, x):
    """Membership for a point (n,) or a batch (m, n)."""
    x = np.asarray(x, dtype=float)
    _check_dim(body, x)
    k = body.kind
    if k is BodyKind.FULL:
        out = np.ones(x.shape[:-1], dtype=bool)
    elif k is BodyKind.EMPTY:
        out = np.zeros(x.shape[:-1], dtype=bool)
    elif k is BodyKind.BALL:
        out = np.einsum("...i,...i->...", x, x) <= body.radius ** 2
    elif k is BodyKind.CUBE:
        out = np.abs(x).max(axis=-1) <= body.radius
    elif k is BodyKind.SLAB_CONJUNCTION:
        out = np.all(np.abs(x @ body.normals.T) <= body.radius, axis=-1)
    else:
        out = np.all(x @ body.normals.T <= body.offsets, axis=-1)
    return bool(out) if out.ndim == 0 else out


# ---------------------------------------------------------------- constructors

def _unit_rows(w) -> tuple[np.ndarray, np.ndarray]:
    w = np.atleast_2d(np.asarray(w, dtype=float))
    norms = np.linalg.norm(w, axis=1)
    if np.any(norms == 0) or not np.all(np.isfinite(norms)):
        raise ContractViolation("halfspace normals must be nonzero and finite")
    return w / norms[:, None], norms


def ball(n: int, r0: float) -> Body:
    if r0 < 0:
        raise ContractViolation("ball radius must be nonnegative")
    return Body(BodyKind.BALL, n, radius=float(r0), symmetric=True, inner_radius=float(r0), label=f"ball:{r0:g}")


def cube(n: int, c: float) -> Body:
    if c < 0:
        raise ContractViolation("cube half-width must be nonnegative")
    return Body(BodyKind.CUBE, n, radius=float(c), symmetric=True, label=f"cube:{c:g}")


def cube_half_width(n: int) -> float:
    """c with Pr[|g| <= c] = (1/2)^{1/n}, so that [-c, c]^n has Gaussian volume 1/2."""
    q = 0.5 ** (1.0 / n)
    return NormalDist().inv_cdf((1 + q) / 2)


def half_volume_cube(n: int) -> Body:
    return cube(n, cube_half_width(n))


def halfspace(w, theta: float) -> Body:
    """{x : w.x >= theta}, the positive side of the hyperplane.

    Stored in facet form as the single row (-w, -theta), so ``normals`` and
    ``offsets`` follow the a.x <= c convention used by every faceted body.
    """
    a, norms = _unit_rows(w)
    th = theta / norms[0]
    return Body(BodyKind.HALFSPACE, a.shape[1], normals=-a, offsets=np.array([-th]), symmetric=False,
                inner_radius=-th if th < 0 else None, label=f"halfspace:{th:g}")


def _is_symmetric_facets(a: np.ndarray, c: np.ndarray, tol: float = 1e-12) -> bool:
    if a.shape[0] == 0:
        return True
    neg = -a
    for i in range(a.shape[0]):
        d = np.abs(a - neg[i]).max(axis=1) + np.abs(c - c[i])
        if d.min() > tol:
            return False
    return True


def halfspace_intersection(w, thetas, label: str = "polytope") -> Body:
    a, norms = _unit_rows(w)
    c = np.asarray(thetas, dtype=float).reshape(-1) / norms
    if c.shape[0] != a.shape[0]:
        raise ContractViolation("one offset per normal is required")
    inner = float(c.min()) if c.size and np.all(c > 0) else None
    return Body(BodyKind.HALFSPACE_INTERSECTION, a.shape[1], normals=a, offsets=c,
                symmetric=_is_symmetric_facets(a, c), inner_radius=inner, label=label)


def slab_conjunction(z, d: float, label: str | None = None) -> Body:
    """{x : |z_i.x| <= d for all i}; the z_i are normalized."""
    if d < 0:
        raise ContractViolation("slab half-width must be nonnegative")
    a, _ = _unit_rows(z)
    return Body(BodyKind.SLAB_CONJUNCTION, a.shape[1], normals=a, radius=float(d), symmetric=True,
                label=label or f"slabs:{a.shape[0]}:{d:g}")


def slab(n: int, d: float, direction=0) -> Body:
    """Single slab {|v.x| <= d}; ``direction`` is a coordinate index or a vector."""
    if isinstance(direction, (int, np.integer)):
        v = np.zeros(n)
        v[int(direction)] = 1.0
        tag = f"e{int(direction) + 1}"
    else:
        v = np.asarray(direction, dtype=float)
        tag = "v"
    return slab_conjunction(v[None, :], d, label=f"slab:{tag}:{d:g}")


def full_space(n: int) -> Body:
    return Body(BodyKind.FULL, n, symmetric=True, label="full")


def empty_set(n: int) -> Body:
    return Body(BodyKind.EMPTY, n, symmetric=True, label="empty")


def _offsets(gen: np.random.Generator, k: int, offset) -> np.ndarray:
    if isinstance(offset, (tuple, list)):
        lo, hi = offset
        if not 0 < lo <= hi:
            raise ContractViolation("offset range must satisfy 0 < lo <= hi")
        return gen.uniform(lo, hi, size=k)
    if offset <= 0:
        raise ContractViolation("offsets must be positive")
    return np.full(k, float(offset))


def build_random_symmetric_polytope(n: int, k: int, offset, seed) -> Body:
    """Intersection of k random slabs {|w_i.x| <= theta_i}, written as 2k facets.

    ``offset`` is a fixed theta or a (lo, hi) range sampled uniformly per slab.
    """
    if k < 0:
        raise ContractViolation("k must be nonnegative")
    if k == 0:
        warnings.warn("k = 0 facets: returning the full space", RuntimeWarning, stacklevel=2)
        return full_space(n)
    gen = as_stream(seed).generator
    w = gen.standard_normal((k, n))
    w /= np.linalg.norm(w, axis=1)[:, None]
    th = _offsets(gen, k, offset)
    body = halfspace_intersection(np.vstack([w, -w]), np.concatenate([th, th]), label=f"sympoly:{n}:{k}")
    return body


def build_random_polytope(n: int, k: int, offset, seed) -> Body:
    """Intersection of k random halfspaces w_i.x <= theta_i with theta_i > 0."""
    if k < 1:
        raise ContractViolation("k must be positive")
    gen = as_stream(seed).generator
    w = gen.standard_normal((k, n))
    return halfspace_intersection(w / np.linalg.norm(w, axis=1)[:, None], _offsets(gen, k, offset),
                                  label=f"poly:{n}:{k}")


# ---------------------------------------------------------------- randomized checks

class CheckResult(enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"

    def __bool__(self) -> bool:
        return self is CheckResult.PASS


def _members(body, need: int, gen: np.random.Generator, max_draws: int) -> tuple[np.ndarray, int]:
    found, drawn, batch = [], 0, 4096
    total = 0
    while total < need and drawn < max_draws:
        g = gen.standard_normal((batch, body.dim))
        drawn += batch
        inside = g[np.asarray(body.contains(g), dtype=bool)]
        found.append(inside)
        total += inside.shape[0]
    pts = np.vstack(found) if found else np.zeros((0, body.dim))
    return pts[:need], drawn


def check_convexity(body, trials: int = 1000, seed=0) -> CheckResult:
    """Randomized convexity test on Gaussian member pairs.

    For each pair it tests the midpoint and two random convex combinations.
    Inconclusive when the body's Gaussian volume looks smaller than 1e-6.
    """
    gen = as_stream(seed).generator
    max_draws = max(1_000_000, 50 * trials)
    pts, drawn = _members(body, 2 * trials, gen, max_draws)
    if pts.shape[0] < 2 or pts.shape[0] / drawn < 1e-6:
        return CheckResult.INCONCLUSIVE
    half = pts.shape[0] // 2
    x, y = pts[:half], pts[half:2 * half]
    lam = np.concatenate([np.full(half, 0.5), gen.uniform(size=2 * half)])
    xs = np.vstack([x, x, x])
    ys = np.vstack([y, y, y])
    z = lam[:, None] * xs + (1 - lam[:, None]) * ys
    return CheckResult.PASS if np.all(body.contains(z)) else CheckResult.FAIL


def check_symmetry(body, trials: int = 1000, seed=0) -> CheckResult:
    """Checks x in K <=> -x in K on Gaussian points."""
    gen = as_stream(seed).generator
    g = gen.standard_normal((trials, body.dim))
    same = np.asarray(body.contains(g)) == np.asarray(body.contains(-g))
    return CheckResult.PASS if np.all(same) else CheckResult.FAIL
