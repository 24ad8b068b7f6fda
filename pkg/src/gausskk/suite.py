"""The acceptance suite: eleven numbered checks, each returning a pass flag,
a one-line detail and a flat dict of the estimates it relied on.

Criterion 11 reruns criteria 1-10 on a different number of worker threads and
compares every estimate field bit for bit.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from ._mc import workers
from .bodies import (ball, build_random_polytope, cube, cube_half_width, halfspace, halfspace_intersection,
                     slab)
from .boolean_fourier import (exact_fourier, influences, is_monotone, low_level_weight_boolean, random_monotone,
                              tribes, tribes_params_near_half)
from .density import gaussian_volume, increment_check, raz_experiment, shell_density
from .hermite import (HermiteIndex, as_pm1, ball_correlation, ball_correlation_grid, cube_low_weight_exact,
                      find_r_star, hermite_coeff, low_level_weight, noise_stability, product_of_signs, psi1_stability_exact,
                      sheppard, sign_function)
from .learners import GaussianExamples, HypothesisKind, general_convex_weak_learner, three_hypothesis_learner
from .lowerbound import (C_LB, advantage_bound, build_hard_params, ideal_membership_prob, run_query_sweep,
                         sample_ideal, tv_poisson_vs_bernoulli)
from .sampling import RngStream, cap_mass, chi_quantile, solve_slab_width

__all__ = ["CriterionResult", "SuiteProfile", "PROFILES", "CRITERIA", "run_criterion", "run_suite"]

SLAB_D = NormalDist().inv_cdf(0.75)  # half-volume slab half-width


@dataclass(frozen=True)
class SuiteProfile:
    name: str
    shell_samples: int = 1_000_000
    increment_samples: int = 1_000_000
    suite_bodies: int = 50
    suite_samples: int = 20_000
    raz_planes: int = 2000
    learner_budget: int = 1_000_000
    halfspace_budget: int = 100_000
    cube_samples: int = 10_000_000
    sheppard_samples: int = 1_000_000
    psi_samples: int = 10_000_000
    weight_samples: int = 200_000
    rstar_bodies: int = 10
    corr_samples: int = 400_000
    grid_points: int = 256
    grid_samples: int = 4000
    ideal_draws: int = 10_000
    game_trials: int = 1000
    sweep_trials: int = 200
    sweep_eval: int = 250
    game_support: int = 20_000
    monotone_functions: int = 200


PROFILES = {
    "acceptance": SuiteProfile("acceptance"),
    "quick": SuiteProfile(
        "quick", shell_samples=100_000, increment_samples=100_000, suite_bodies=10, suite_samples=10_000,
        raz_planes=500, learner_budget=200_000, halfspace_budget=20_000, cube_samples=1_000_000,
        sheppard_samples=200_000, psi_samples=500_000, weight_samples=50_000, rstar_bodies=3,
        corr_samples=100_000, grid_points=64, grid_samples=2000, ideal_draws=2000, game_trials=200,
        sweep_trials=60, sweep_eval=200, game_support=10_000, monotone_functions=50,
    ),
}


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    estimates: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}: {self.detail}"


def _within(est: float, target: float, se: float, k: float = 3.0) -> bool:
    return abs(est - target) <= k * se


# ---------------------------------------------------------------- 1-2

def c1_shell_density(root: RngStream, prof: SuiteProfile) -> CriterionResult:
    n = 100
    body = slab(n, SLAB_D)
    ok, est, worst = True, {}, 0.0
    for i, f in enumerate((0.8, 1.0, 1.2)):
        r = f * math.sqrt(n)
        e = shell_density(body, r, prof.shell_samples, root.derive(i))
        exact = 1 - 2 * cap_mass(n, SLAB_D / r)
        z = e.z(exact)
        worst = max(worst, abs(z))
        ok &= abs(z) <= 3
        est[f"alpha@{f}"] = e.mean
        est[f"se@{f}"] = e.std_error
        est[f"exact@{f}"] = exact
    return CriterionResult(1, "shell density vs cap-measure oracle", ok, f"max |z| = {worst:.2f} over 3 radii", est)


def c2_increment_exact(root: RngStream, prof: SuiteProfile) -> CriterionResult:
    n, kappa = 100, 0.1
    r = math.sqrt(n)
    body = slab(n, SLAB_D)
    exact = (1 - 2 * cap_mass(n, SLAB_D / ((1 - kappa) * r))) - (1 - 2 * cap_mass(n, SLAB_D / r))
    rep = increment_check(body, r, kappa, prof.increment_samples, root)
    z = (rep.increment - exact) / rep.combined_std_error
    ok = exact >= 0.03 and abs(z) <= 3
    return CriterionResult(2, "density increment, exact slab case", ok,
                           f"exact {exact:.5f}, MC {rep.increment:.5f} (z = {z:.2f})",
                           {"exact": exact, "increment": rep.increment, "se": rep.combined_std_error})


# ---------------------------------------------------------------- 3

def _radius_for_half(body, root: RngStream, pilot: int = 4000) -> float:
    """r with pilot shell density near 1/2, by bisection on a fixed panel of directions."""
    n = body.dim
    g = root.generator.standard_normal((pilot, n))
    u = g / np.linalg.norm(g, axis=1)[:, None]
    lo, hi = 0.05 * math.sqrt(n), 4 * math.sqrt(n)
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if np.mean(body.contains(mid * u)) > 0.5:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _symmetric_polytope(n: int, k: int, gen: np.random.Generator, label: str):
    w = gen.standard_normal((k, n))
    w /= np.linalg.norm(w, axis=1)[:, None]
    th = gen.uniform(0.5, 1.5, size=k)
    return halfspace_intersection(np.vstack([w, -w]), np.concatenate([th, th]), label=label)


def c3_increment_suite(root: RngStream, prof: SuiteProfile) -> CriterionResult:
    n, k, kappa = 32, 8, 0.1
    need = math.ceil(prof.suite_bodies * 48 / 50)
    est = {}
    tallies = {}
    for regime, stream in (("symmetric", root.derive(0)), ("general", root.derive(1))):
        passes = 0
        for i in range(prof.suite_bodies):
            sub = stream.derive(i)
            gen = sub.derive(0).generator
            if regime == "symmetric":
                body = _symmetric_polytope(n, k, gen, f"sympoly:{i}")
            else:
                body = build_random_polytope(n, 2 * k, (0.5, 1.5), sub.derive(0))
            r = _radius_for_half(body, sub.derive(1))
            rep = increment_check(body, r, kappa, prof.suite_samples, sub.derive(2), regime=regime)
            in_band = 0.2 <= rep.alpha_r.mean <= 0.8
            passes += bool(rep.passed and in_band)
            est[f"{regime}:{i}:alpha"] = rep.alpha_r.mean
            est[f"{regime}:{i}:increment"] = rep.increment
        tallies[regime] = passes
    ok = all(v >= need for v in tallies.values())
    return CriterionResult(3, "density increment, random polytope suites", ok,
                           f"symmetric {tallies['symmetric']}/{prof.suite_bodies}, "
                           f"general {tallies['general']}/{prof.suite_bodies} (need {need})", est)


# ---------------------------------------------------------------- 4

def c4_raz(root: RngStream, prof: SuiteProfile) -> CriterionResult:
    n = 64
    r = math.sqrt(n)
    body = slab(n, solve_slab_width(n, 0.5))
    rep = raz_experiment(body, r, prof.raz_planes, root)
    lo, hi = 1 / 8, 9 / 10
    f = float(np.mean((rep.mu >= lo) & (rep.mu <= hi)))
    se = math.sqrt(f * (1 - f) / prof.raz_planes)
    ok = f >= 0.25 - 3 * se and not rep.monte_carlo
    return CriterionResult(4, "random-plane section frequency", ok,
                           f"frequency {f:.4f} +- {se:.4f} in [1/8, 9/10] (alpha {rep.alpha:.4f})",
                           {"frequency": f, "se": se, "alpha": rep.alpha})


# ---------------------------------------------------------------- 5

def c5_learners(root: RngStream, prof: SuiteProfile) -> CriterionResult:
    est = {}
    scaled = []
    ok = True
    for i, n in enumerate((16, 64, 256)):
        src = GaussianExamples(slab(n, SLAB_D), root.derive(i))
        res = three_hypothesis_learner(src, prof.learner_budget, n)
        ok &= res.advantage > 3 * res.std_error
        scaled.append(res.advantage * math.sqrt(n))
        est[f"adv@{n}"] = res.advantage
        est[f"se@{n}"] = res.std_error
    band = max(scaled) / min(scaled) if min(scaled) > 0 else math.inf
    ok &= band <= 4
    n = 32
    w = np.zeros(n)
    w[0] = 1.0
    target = halfspace(w, 0.05)
    res = general_convex_weak_learner(GaussianExamples(target, root.derive(3)), prof.halfspace_budget, n)
    agree = 0.5 + res.advantage
    hs_ok = res.hypothesis.kind is HypothesisKind.HALFSPACE and agree >= 7 / 8
    ok &= hs_ok
    est["halfspace_agreement"] = agree
    return CriterionResult(5, "weak-learning advantage and scaling", ok,
                           f"adv*sqrt(n) = {', '.join(f'{v:.3f}' for v in scaled)} (band {band:.2f}), "
                           f"halfspace agreement {agree:.4f}", est)


# ---------------------------------------------------------------- 6

def c6_cube(root: RngStream, prof: SuiteProfile) -> CriterionResult:
    cw = cube_low_weight_exact(1)
    body = cube(1, cube_half_width(1))
    e = hermite_coeff(as_pm1(body), HermiteIndex(((0, 2),)), prof.cube_samples, root)
    target = 2 * cw.a2  # +-1 convention
    z = e.z(target)
    vals = []
    for n in (64, 256, 1024, 4096):
        vals.append(cube_low_weight_exact(n).w_pm1 * n / math.log(n) ** 2)
    ratio = max(vals) / min(vals)
    ok = abs(z) <= 3 and ratio <= 10
    est = {"coeff_mc": e.mean, "coeff_se": e.std_error, "coeff_exact": target}
    est.update({f"scaled@{n}": v for n, v in zip((64, 256, 1024, 4096), vals)})
    return CriterionResult(6, "cube Hermite closed form", ok,
                           f"n=1 coefficient z = {z:.2f}; W*n/ln^2 n in [{min(vals):.3f}, {max(vals):.3f}]", est)


# ---------------------------------------------------------------- 7

def c7_stability(root: RngStream, prof: SuiteProfile) -> CriterionResult:
    est = {}
    ok = True
    zs = []
    sgn = sign_function(1)
    for i, t in enumerate((0.5, 1.0, math.log(2))):
        e = noise_stability(sgn, t, prof.sheppard_samples, root.derive(0, i))
        target = 1 / 3 if i == 2 else sheppard(t)
        zs.append(e.z(target))
        est[f"sheppard@{t:.4f}"] = e.mean
    ok &= all(abs(z) <= 3 for z in zs)
    psi = noise_stability(product_of_signs(256, 4), 1.0, prof.psi_samples, root.derive(1))
    zp = psi.z(psi1_stability_exact(256, 1.0))
    ok &= abs(zp) <= 3
    est["psi1"] = psi.mean
    n, t = 16, 1.0
    margins = []
    for j, body in enumerate((slab(n, SLAB_D), ball(n, chi_quantile(n, 0.5)))):
        wr = low_level_weight(body, prof.weight_samples, root.derive(2, j))
        st = noise_stability(body, t, prof.sheppard_samples, root.derive(3, j))
        bound = math.exp(-2 * t) * wr.total
        se = math.hypot(st.std_error, math.exp(-2 * t) * wr.total_se)
        margins.append((st.mean - bound) / se)
        ok &= st.mean >= bound - 3 * se
        est[f"stab:{j}"] = st.mean
        est[f"weight:{j}"] = wr.total
    return CriterionResult(7, "stability identities and bounds", ok,
                           f"Sheppard z = {', '.join(f'{z:.2f}' for z in zs)}; psi1 z = {zp:.2f}; "
                           f"bound margins {', '.join(f'{m:.1f}' for m in margins)} sigma", est)


# ---------------------------------------------------------------- 8

def _half_volume_polytope(n: int, k: int, sub: RngStream, label: str):
    """k random slab pairs sharing one offset, tuned to volume 1/2 on a pilot panel."""
    w = sub.derive(0).generator.standard_normal((k, n))
    w /= np.linalg.norm(w, axis=1)[:, None]
    panel = sub.derive(1).generator.standard_normal((100_000, n))
    th = float(np.quantile(np.abs(panel @ w.T).max(axis=1), 0.5))
    return halfspace_intersection(np.vstack([w, -w]), np.full(2 * k, th), label=label)


def c8_r_star(root: RngStream, prof: SuiteProfile) -> CriterionResult:
    n, k = 64, 8
    est = {}
    ok = True
    bad = []
    for i in range(prof.rstar_bodies):
        sub = root.derive(i)
        body = _half_volume_polytope(n, k, sub.derive(0), f"halfpoly:{i}")
        vol = gaussian_volume(body, 200_000, sub.derive(1))
        rs = find_r_star(body, rng=sub.derive(2), volume=vol)
        mc = ball_correlation(body, rs.r_star, prof.corr_samples, sub.derive(3))
        gr = ball_correlation_grid(body, rs.r_star, sub.derive(4), vol, prof.grid_points, prof.grid_samples)
        checks = (
            abs(vol.mean - 0.5) <= 0.02,
            n / 4 <= rs.r_star ** 2 <= 4 * n,
            abs(mc.estimate - gr.estimate) <= 3 * math.hypot(mc.std_error, gr.std_error) + gr.discretization,
            mc.estimate >= 0.1 - 3 * mc.std_error,
        )
        if not all(checks):
            bad.append(i)
        est[f"{i}:vol"] = vol.mean
        est[f"{i}:r_star_sq"] = rs.r_star ** 2
        est[f"{i}:corr_mc"] = mc.estimate
        est[f"{i}:corr_grid"] = gr.estimate
    ok = not bad
    rsq = [est[f"{i}:r_star_sq"] for i in range(prof.rstar_bodies)]
    return CriterionResult(8, "r* and ball correlation", ok,
                           f"r*^2 in [{min(rsq):.1f}, {max(rsq):.1f}], failing bodies {bad or 'none'}", est)


# ---------------------------------------------------------------- 9

def c9_lower_bound(root: RngStream, prof: SuiteProfile) -> CriterionResult:
    n, s, gamma = 64, 16, 2
    par = build_hard_params(n, s, gamma, M_override=prof.game_support, seed=root.derive(0))
    est = {}
    # (a) anchor
    x = root.derive(1).generator.standard_normal(n)
    x *= math.sqrt(n) / np.linalg.norm(x)
    anchor = ideal_membership_prob(n, par.d, par.Lambda, math.sqrt(n))
    hits = sum(bool(np.atleast_1d(sample_ideal(n, par.d, par.Lambda, root.derive(2, j)).contains(x))[0])
               for j in range(prof.ideal_draws))
    freq = hits / prof.ideal_draws
    se = math.sqrt(anchor * (1 - anchor) / prof.ideal_draws)
    a_ok = abs(anchor - 0.5) <= 1e-9 and _within(freq, anchor, se)
    est.update(anchor=anchor, ideal_frequency=freq)
    # (b) TV grid
    tv_ok = all(tv_poisson_vs_bernoulli(M, lam) <= 2 * lam * lam / M
                for M in range(1, 9) for lam in (0.1, 0.5, 1.0))
    # (c) game invariants
    game = run_query_sweep(par, "random", [s], prof.game_trials, 0, root.derive(3)).reports[0]
    ones_ok = bool(np.all(game.ones <= s))
    zero_frac = float(np.mean(game.zeros <= 2 * s / par.p))
    c_ok = ones_ok and zero_frac >= 0.99
    est.update(max_ones=float(game.ones.max()), zero_fraction=zero_frac)
    # (d) scaled advantage and monotonicity
    sweep = run_query_sweep(par, "random", [0, 4, 16, 64], prof.sweep_trials, prof.sweep_eval, root.derive(4))
    errs = [r.error for r in sweep.reports]
    adv16 = 0.5 - sweep.at(16).error
    bound = advantage_bound(n, s, gamma, C_LB)
    mono = True
    for a, b in zip(sweep.reports, sweep.reports[1:]):
        diff = b.errors - a.errors
        mono &= float(diff.mean()) <= 3 * float(diff.std(ddof=1)) / math.sqrt(len(diff))
    d_ok = adv16 <= bound and mono
    est.update({f"error@{r.queries}": r.error for r in sweep.reports})
    ok = a_ok and tv_ok and c_ok and d_ok
    return CriterionResult(9, "lower-bound machine", ok,
                           f"(a) anchor {anchor:.12f}, ideal freq {freq:.4f} {'ok' if a_ok else 'FAIL'}; "
                           f"(b) TV {'ok' if tv_ok else 'FAIL'}; (c) max ones {int(game.ones.max())}, "
                           f"zeros ok {zero_frac:.3f}; (d) adv16 {adv16:.4f} <= {bound:.4f}, "
                           f"errors {', '.join(f'{e:.4f}' for e in errs)}", est)


# ---------------------------------------------------------------- 10

def c10_boolean(root: RngStream, prof: SuiteProfile) -> CriterionResult:
    f = tribes(2, 2)
    c = exact_fourier(f)
    pr = float(np.mean(f.table == 1))
    w0, w1 = low_level_weight_boolean(f)
    t_ok = pr == 7 / 16 and np.allclose(c[[1, 2, 4, 8]], 3 / 8, atol=1e-15) and abs(w0 + w1 - 37 / 64) < 1e-15
    m_ok = True
    for j in range(prof.monotone_functions):
        sub = root.derive(j)
        n = 1 + j % 6
        g = random_monotone(n, 1 + j % 5, sub)
        cg = exact_fourier(g)
        m_ok &= is_monotone(g) and np.allclose(cg[[1 << i for i in range(n)]], influences(g), atol=1e-12)
    vals = {}
    for n in range(4, 21):
        w, k = tribes_params_near_half(n)
        if w == 1 or k == 1 or not 0.2 <= 1 - (1 - 2.0 ** -w) ** k <= 0.8:
            continue
        a, b = low_level_weight_boolean(tribes(w, k))
        vals[n] = (a + b) * n / math.log(n) ** 2
    ratio = max(vals.values()) / min(vals.values())
    ok = bool(t_ok and m_ok and ratio <= 10)
    est = {"tribes_pr": pr, "tribes_w1": w0 + w1}
    est.update({f"scaled@{n}": v for n, v in vals.items()})
    return CriterionResult(10, "Boolean Fourier checks", ok,
                           f"tribes(2,2) {'ok' if t_ok else 'FAIL'}; monotone identity "
                           f"{'ok' if m_ok else 'FAIL'}; TRIBES window ratio {ratio:.2f}", est)


CRITERIA = {
    1: c1_shell_density,
    2: c2_increment_exact,
    3: c3_increment_suite,
    4: c4_raz,
    5: c5_learners,
    6: c6_cube,
    7: c7_stability,
    8: c8_r_star,
    9: c9_lower_bound,
    10: c10_boolean,
}


def run_criterion(number: int, seed: int, profile: str = "acceptance") -> CriterionResult:
    prof = PROFILES[profile]
    try:
        return CRITERIA[number](RngStream(int(seed), number), prof)
    except Exception as exc:  # contract violations surface as failed rows
        return CriterionResult(number, CRITERIA[number].__name__, False, f"error: {exc!r}")


def _fingerprint(results: list[CriterionResult]) -> str:
    return json.dumps([[r.number, {k: float(v).hex() for k, v in r.estimates.items()}] for r in results])


def run_suite(seed: int, profile: str = "acceptance", numbers=None, worker_counts=(1, 2),
              progress=None) -> list[CriterionResult]:
    """Run the selected criteria (default 1-10) and, if both worker counts are
    given, the determinism rerun as criterion 11."""
    numbers = sorted(numbers) if numbers is not None else list(CRITERIA)
    numbers = [k for k in numbers if k != 11]
    with workers(worker_counts[0]):
        first = []
        for k in numbers:
            first.append(run_criterion(k, seed, profile))
            if progress:
                progress(first[-1])
    if len(worker_counts) < 2:
        return first
    with workers(worker_counts[1]):
        second = [run_criterion(k, seed, profile) for k in numbers]
    same = _fingerprint(first) == _fingerprint(second)
    changed = [a.number for a, b in zip(first, second) if _fingerprint([a]) != _fingerprint([b])]
    fields = sum(len(r.estimates) for r in first)
    last = CriterionResult(11, "determinism across worker counts", same,
                           f"{fields} estimate fields compared at workers {worker_counts[0]} vs {worker_counts[1]}; "
                           f"differing criteria {changed or 'none'}")
    if progress:
        progress(last)
    return first + [last]
