"""Property suites behind the ``verify`` command and the acceptance tests.

Each check returns a :class:`CheckResult`; suites are lists of checks.
All randomness comes from one seed through a Philox generator, with a
distinct counter stream per check so suites can run in any order.
"""
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .calculus import FLUXES, get_pair, sigma_c1_check
from .dissipation import (dissipation_direct, dissipation_interval_form,
                          estimate_negativity_constant, lax_margin,
                          lax_quadruples)
from .filippov import characteristic_ladder, filippov_bracket_check, path_traces
from .hilbert import (SpectralGrid, hilbert_source, hilbert_transform, inner, l2_norm,
                      random_bandlimited, translation_equivariance_check, zero_source)
from .solver import (Field, SchemeConfig, entropy_residual, evolve, front_position,
                     riemann_field, step)
from .stability import (StabilityScenario, envelope_check, gamma_monotonicity,
                        loglog_slope, run_stability, shift_l2_control)

SUITES = ("lemmas", "solver", "characteristics", "stability", "all")
SWEEP_AMPLITUDES = (0.02, 0.04, 0.08, 0.16)
SIGMA_BASE_POINTS = (-2.0, -0.5, 0.0, 0.7, 2.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""
    seconds: float = 0.0
    data: dict = field(default_factory=dict, repr=False)

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.name}: {self.detail} ({self.seconds:.2f} s)"


def rng_for(seed, stream):
    """Independent Philox stream ``stream`` under the 64-bit ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def _timed(fn):
    def wrapped(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    wrapped.__name__ = fn.__name__
    wrapped.__doc__ = fn.__doc__
    return wrapped


# ---------------------------------------------------------------------------
# operator and lemma checks

@_timed
def check_hilbert(seed=0, n=1024, fields=20, tol=1e-10):
    """Isometry, anti-involution, skew-symmetry and translation equivariance."""
    grid = SpectralGrid(n)
    rng = rng_for(seed, 1)
    op = hilbert_source()
    worst = {"isometry": 0.0, "anti-involution": 0.0, "skew": 0.0, "translation": 0.0}
    for _ in range(fields):
        f = random_bandlimited(grid, rng)
        g = random_bandlimited(grid, rng)
        f -= f.mean()             # the mean is annihilated, so work on its complement
        Hf = hilbert_transform(grid, f)
        Hg = hilbert_transform(grid, g)
        nf = l2_norm(grid, f)
        worst["isometry"] = max(worst["isometry"], abs(l2_norm(grid, Hf) - nf) / nf)
        worst["anti-involution"] = max(worst["anti-involution"],
                                       l2_norm(grid, hilbert_transform(grid, Hf) + f) / nf)
        scale = l2_norm(grid, f) * l2_norm(grid, g)
        worst["skew"] = max(worst["skew"], abs(inner(grid, Hf, g) + inner(grid, f, Hg)) / scale)
        k = int(rng.integers(1, n))
        worst["translation"] = max(worst["translation"],
                                   translation_equivariance_check(op, grid, f, k * grid.dx) / nf)
    value = max(worst.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f" (tol {tol:g})"
    return CheckResult("hilbert operator", value < tol, value, tol, detail, data=worst)


@_timed
def check_interval_form(seed=0, count=1000, bound=4.0, tol=1e-8,
                        pairs=("burgers-quadratic", "burgers-quartic", "quartic-quadratic")):
    """Direct dissipation against the signed interval integrals."""
    worst = {}
    for k, name in enumerate(pairs):
        pair = get_pair(name, bound)
        quads = lax_quadruples(rng_for(seed, 10 + k), count, bound)
        errs = []
        for q in quads:
            d = dissipation_direct(pair, q)
            i = dissipation_interval_form(pair, q, tol=1e-11)
            errs.append(abs(d - i) / (abs(d) + 1e-14))
        worst[name] = float(max(errs))
    value = max(worst.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f" (tol {tol:g})"
    return CheckResult("dissipation interval form", value < tol, value, tol, detail, data=worst)


@_timed
def check_negativity(seed=0, count=10_000, delta=1.0, bound=4.0, stability=0.20):
    """Sampled negativity constant is positive and stable when density doubles."""
    pair = get_pair("burgers-quadratic", bound)
    a = estimate_negativity_constant(pair, delta, bound, count, rng_for(seed, 20))
    b = estimate_negativity_constant(pair, delta, bound, 2 * count, rng_for(seed, 21))
    change = abs(b.c_est - a.c_est) / a.c_est if a.c_est > 0 else np.inf
    ok = a.c_est > 0 and b.c_est > 0 and change < stability
    detail = (f"c_est {a.c_est:.5g} at {count}, {b.c_est:.5g} at {2 * count}, "
              f"change {change:.1%} (limit {stability:.0%})")
    return CheckResult("shock negativity", bool(ok), change, stability, detail,
                       data={"c_est": a.c_est, "c_est_doubled": b.c_est})


@_timed
def check_lax_equivalence(size=200, bound=4.0, boundary=1e-12):
    """Entropy admissibility agrees with ``u_L >= u_R`` on a state grid."""
    states = np.linspace(-bound, bound, size)
    uL, uR = np.meshgrid(states, states, indexing="ij")
    bad = 0
    for name in ("burgers-quadratic", "burgers-quartic", "quartic-quadratic"):
        pair = get_pair(name, bound)
        # whole grid at once; lax_entropic_check is the scalar form of margin <= 0
        margin = lax_margin(pair, uL, uR)
        decided = np.abs(margin) >= boundary
        bad += int(np.sum((margin <= 0.0)[decided] != (uL >= uR)[decided]))
    return CheckResult("lax equivalence", bad == 0, float(bad), 0.0,
                       f"{bad} discrepancies on a {size}x{size} grid, three pairs")


@_timed
def check_sigma_c1(points=SIGMA_BASE_POINTS, min_order=0.9):
    """Finite-difference derivative of the shock speed on the diagonal."""
    worst = np.inf
    failed = []
    for name, make in FLUXES.items():
        flux = make()
        for x0 in points:
            rep = sigma_c1_check(flux, x0, min_order=min_order)
            worst = min(worst, float(np.min(rep.orders)))
            if not rep.passed:
                failed.append(f"{name}@{x0}")
    detail = (f"{len(FLUXES)} fluxes x {len(points)} points, min order "
              f"{worst:.2f} (limit {min_order})" + (f", failed {failed}" if failed else ""))
    return CheckResult("shock speed differentiability", not failed, worst, min_order, detail)


# ---------------------------------------------------------------------------
# solver checks

def _riemann_run(n, uL, uR, T, x0=0.0):
    pair = get_pair("burgers-quadratic")
    state = riemann_field(SpectralGrid(n), pair.flux, uL, uR, x0)
    return evolve(state, pair, zero_source(), SchemeConfig(t_end=T)).states[-1]


@_timed
def check_shock_speed(ns=(256, 512, 1024), uL=1.5, uR=-0.5, T=4.0):
    """Captured front against the Rankine-Hugoniot position."""
    speed = 0.5 * (uL + uR)
    errs, ok = [], True
    for n in ns:
        final = _riemann_run(n, uL, uR, T)
        pos = front_position(final, uL, uR, near=speed * T)
        err = abs(pos / T - speed)
        errs.append(err)
        ok &= err < 2 * (16.0 / n) / T
    detail = ", ".join(f"n={n} err {e:.2e} (limit {2 * 16.0 / n / T:.2e})" for n, e in zip(ns, errs))
    return CheckResult("riemann shock speed", bool(ok), max(errs), 2 * 16.0 / ns[-1] / T, detail)


@_timed
def check_rarefaction_order(ns=(1024, 2048, 4096), uL=-1.0, uR=1.0, T=4.0, window=6.0,
                            min_order=0.8):
    """L1 error of the captured fan inside ``|x| < window``, fitted order."""
    pair = get_pair("burgers-quadratic")
    errs, dxs = [], []
    for n in ns:
        final = _riemann_run(n, uL, uR, T)
        grid = final.grid
        exact = riemann_field(grid, pair.flux, uL, uR, 0.0, T).values
        mask = np.abs(grid.x) < window
        errs.append(float(np.sum(np.abs(final.values - exact)[mask]) * grid.dx))
        dxs.append(grid.dx)
    order = loglog_slope(dxs, errs)
    detail = f"errors {', '.join(f'{e:.3e}' for e in errs)}, order {order:.3f} (limit {min_order})"
    return CheckResult("rarefaction order", order >= min_order, order, min_order, detail)


@_timed
def check_conservation(seed=0, n=1024, steps=200, tol=1e-12):
    """Mass drift per step under the Hilbert source."""
    grid = SpectralGrid(n)
    pair = get_pair("burgers-quadratic")
    state = Field(random_bandlimited(grid, rng_for(seed, 30), amplitude=2.0), grid)
    m0 = state.mass()
    worst = 0.0
    cfg = SchemeConfig(t_end=10.0)
    src = hilbert_source()
    for _ in range(steps):
        new = step(state, pair, src, cfg)
        worst = max(worst, abs(new.mass() - state.mass()))
        state = new
    detail = f"max drift per step {worst:.1e}, total {abs(state.mass() - m0):.1e} (limit {tol:g})"
    return CheckResult("conservation", worst < tol, worst, tol, detail)


def positive_entropy_residual(n, T=0.5, amplitude=1.0):
    """``sum dt dx max(residual, 0)`` for a smooth pulse that steepens into a shock."""
    grid = SpectralGrid(n)
    pair = get_pair("burgers-quadratic")
    src = hilbert_source()
    state = Field(amplitude * np.exp(-grid.x ** 2), grid)
    cfg = SchemeConfig(t_end=T)
    total = 0.0
    while state.time < T - 1e-14:
        new = step(state, pair, src, cfg)
        dt = new.time - state.time
        if new.time > T:
            new = step(state, pair, src, cfg, dt=T - state.time)
            dt = T - state.time
        res = entropy_residual(state, new, pair, src, dt)
        total += float(np.sum(np.maximum(res, 0.0)) * grid.dx * dt)
        state = new
    return total


@_timed
def check_entropy_residual(ns=(256, 512, 1024), T=0.5, band=0.30):
    """Positive part of the discrete entropy residual halves under refinement."""
    totals = [positive_entropy_residual(n, T) for n in ns]
    ratios = [b / a for a, b in zip(totals[:-1], totals[1:])]
    ok = all(abs(r - 0.5) <= band * 0.5 for r in ratios)
    detail = (f"totals {', '.join(f'{v:.3e}' for v in totals)}, ratios "
              f"{', '.join(f'{r:.3f}' for r in ratios)} (target 0.5 +/- {band:.0%})")
    return CheckResult("entropy residual", ok, max(abs(r - 0.5) for r in ratios), band * 0.5,
                       detail)


# ---------------------------------------------------------------------------
# characteristics

@_timed
def check_filippov(sc=None, budget=0.01):
    """Ladder convergence, bracket property and sigma consistency of the shift."""
    sc = StabilityScenario() if sc is None else sc
    rep = run_stability(sc, keep_trajectory=True)
    pair = get_pair(sc.pair, sc.bound)
    traj = rep.trajectory
    lad = characteristic_ladder(traj, sc.s0, pair.flux, sc.ladder)
    final = lad.final
    traces = path_traces(traj, final)
    br = filippov_bracket_check(final, traj, pair, budget=budget, traces=traces)
    tol = 5.0 * (sc.length / sc.n + 1.0 / final.mollification_n)
    mismatch = rep.shift_mismatch
    ok = lad.monotone and br.passed and mismatch < tol
    detail = (f"gaps {', '.join(f'{g:.3e}' for g in lad.gaps)} "
              f"({'monotone' if lad.monotone else 'not monotone'}), bracket {br.fraction:.1%} "
              f"(limit {1 - budget:.0%}), shift speed mismatch {mismatch:.3f} (tol {tol:.3f})")
    return CheckResult("filippov characteristic", bool(ok), mismatch, tol, detail,
                       data={"gaps": lad.gaps, "bracket": br.fraction, "facts": br.facts_fraction})


# ---------------------------------------------------------------------------
# stability

def sweep_reports(amplitudes=SWEEP_AMPLITUDES, n=1024, base=None, **changes):
    base = StabilityScenario() if base is None else base
    return [run_stability(replace(base, n=n, ladder=None if n != base.n else base.ladder,
                                  amplitude=a, **changes)) for a in amplitudes]


@_timed
def check_envelope(n=1024, amplitudes=SWEEP_AMPLITUDES, gamma=4.0, rho=3.0,
                   slope_range=(0.2, 1.1), small=3, reports=None, refined=None):
    """One constant for the whole sweep, stable under refinement, plus the slope."""
    reports = sweep_reports(amplitudes, n) if reports is None else reports
    refined = sweep_reports(amplitudes, 2 * n) if refined is None else refined
    fit = envelope_check(reports, gamma, rho)
    fit2 = envelope_check(refined, gamma, rho)
    change = max(fit.C, fit2.C) / min(fit.C, fit2.C) if min(fit.C, fit2.C) > 0 else np.inf
    E0 = [r.E0 for r in reports[:small]]
    ET = [r.ET for r in reports[:small]]
    slope = loglog_slope(E0, ET)
    ok = (fit.passed and fit2.passed and change < 2.0
          and slope_range[0] <= slope <= slope_range[1])
    detail = (f"C {fit.C:.4g} at n={n}, {fit2.C:.4g} at n={2 * n} (ratio {change:.2f}, limit 2), "
              f"slope {slope:.3f} in [{slope_range[0]}, {slope_range[1]}]")
    return CheckResult("stability envelope", bool(ok), change, 2.0, detail,
                       data={"C": fit.C, "C_refined": fit2.C, "slope": slope})


@_timed
def check_shift_control(n=1024, amplitudes=SWEEP_AMPLITUDES, reports=None, noise=0.10):
    """``int X'^2`` monotone in the amplitude and inside its fitted envelope."""
    reports = sweep_reports(amplitudes, n) if reports is None else reports
    ctl = shift_l2_control(reports, noise=noise)
    detail = (f"int X'^2 {', '.join(f'{v:.3e}' for v in ctl.lhs)}, "
              f"{'monotone' if ctl.monotone else 'not monotone'}, C~ {ctl.C_fixed:.4g}, "
              f"{'bounded' if ctl.bounded else 'not bounded'}, "
              f"fitted exponents ({ctl.gamma_fit:.2f}, {ctl.rho_fit:.2f})")
    return CheckResult("shift control", ctl.passed, ctl.C_fixed, np.inf, detail,
                       data={"lhs": ctl.lhs, "E0": ctl.E0})


@_timed
def check_ablation(n=1024, amplitude=0.16, factor=10.0):
    """Gamma with ``X = 0`` against the budget, and the shifted run under refinement."""
    base = StabilityScenario(n=n, amplitude=amplitude)
    zero = gamma_monotonicity(run_stability(StabilityScenario(n=n, amplitude=amplitude,
                                                              shift_mode="zero")))
    coarse = gamma_monotonicity(run_stability(base))
    fine = gamma_monotonicity(run_stability(StabilityScenario(n=2 * n, amplitude=amplitude)))
    ratio = zero.worst / zero.budget
    ok = ratio > factor and fine.worst < coarse.worst
    detail = (f"X=0 worst rise {zero.worst:.3e} = {ratio:.1f} x budget {zero.budget:.3e} "
              f"(limit {factor:g}x); shifted worst {coarse.worst:.3e} at n={n}, "
              f"{fine.worst:.3e} at n={2 * n}")
    return CheckResult("shift ablation", bool(ok), ratio, factor, detail,
                       data={"zero": zero.worst, "budget": zero.budget,
                             "shifted": coarse.worst, "shifted_refined": fine.worst})


# ---------------------------------------------------------------------------
# suites

def suite_checks(name, seed=0):
    """Callables (no arguments) making up a suite."""
    lemmas = [lambda: check_interval_form(seed), lambda: check_negativity(seed),
              check_lax_equivalence, check_sigma_c1]
    solver = [lambda: check_hilbert(seed), check_shock_speed, check_rarefaction_order,
              lambda: check_conservation(seed), check_entropy_residual]
    characteristics = [check_filippov]
    stability = [check_envelope, check_shift_control, check_ablation]
    table = {"lemmas": lemmas, "solver": solver, "characteristics": characteristics,
             "stability": stability}
    if name == "all":
        return lemmas + solver + characteristics + stability
    if name not in table:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return table[name]


def run_suite(name, seed=0, jobs=1):
    checks = suite_checks(name, seed)
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_call, name, seed, i) for i in range(len(checks))]
            return [f.result() for f in futures]
    return [c() for c in checks]


def _call(name, seed, index):
    return suite_checks(name, seed)[index]()


def format_table(results):
    width = max(len(r.name) for r in results) if results else 0
    rows = [f"{'check':<{width}}  verdict  seconds  detail"]
    for r in results:
        rows.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<7}  "
                    f"{r.seconds:7.2f}  {r.detail}")
    return "\n".join(rows)
