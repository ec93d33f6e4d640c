"""Monte Carlo and exact-enumeration weak-error estimation.

The MC engine advances fixed-size chunks of paths through the grid with all
arithmetic vectorized over the chunk.  Per-chunk mean/M2 statistics are
combined in ascending chunk order, so the result is bit-identical for any
thread count given (seed, M, chunk size).  Increments are counter-based
functions of (seed, path index, step), see streams.py.

The enumeration oracle expands the joint outcome tree of all steps level by
level and is exact up to floating-point arithmetic; it is the noise-free
reference the MC machinery is validated against.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .increments import (
    CapacityError,
    enumerate_outcomes,
    outcome_count,
    sample_batch,
)
from .integrator import (
    BlowupError,
    TimeGrid,
    compute_step_arrays,
    evaluate_dense,
)
from .sde import Functional, SdeProblem
from .tableau import CsrkTableau

__all__ = [
    "MonteCarloEstimate",
    "ErrorRecord",
    "OrderEstimate",
    "mc_expectation",
    "mc_expectations_at",
    "exact_weak_expectation",
    "error_table",
    "empirical_order",
    "dense_error_profile",
    "grid_for_step",
    "DEFAULT_CHUNK_SIZE",
]

DEFAULT_CHUNK_SIZE = 4096
_ENUM_SLICE = 1 << 20


def normal_quantile(confidence: float) -> float:
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    return NormalDist().inv_cdf(0.5 + confidence / 2.0)


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    variance_of_mean: float
    half_width: float
    samples: int
    seed: int
    eval_time: float
    confidence: float


@dataclass(frozen=True)
class ErrorRecord:
    h: float
    mean_error: float
    variance_of_mean: float
    half_width: float

    @property
    def ci_low(self) -> float:
        return self.mean_error - self.half_width

    @property
    def ci_high(self) -> float:
        return self.mean_error + self.half_width


@dataclass(frozen=True)
class OrderEstimate:
    pairs: tuple[tuple[float, float], ...]  # (h, |error|)
    slope: float
    intercept: float


def grid_for_step(problem: SdeProblem, h: float,
                  allow_shortened: bool = False) -> TimeGrid:
    """Uniform grid with step h; h must divide the horizon unless the caller
    explicitly allows a shortened final step."""
    span = problem.T - problem.t0
    n_exact = span / h
    n = round(n_exact)
    if n >= 1 and abs(n_exact - n) <= 1e-9 * max(1.0, n):
        return TimeGrid.uniform(problem.t0, problem.T, n)
    if not allow_shortened:
        raise ValueError(
            f"step {h} does not divide the horizon {span}; pass "
            "allow_shortened to accept a shortened final step"
        )
    n = math.floor(n_exact)
    times = list(problem.t0 + h * np.arange(n + 1))
    if times[-1] < problem.T:
        times.append(problem.T)
    return TimeGrid(np.array(times))


# ---------------------------------------------------------------------------
# chunked Monte Carlo core
# ---------------------------------------------------------------------------

def _chunk_values(scheme, problem, grid, eval_points, f, seed, start, count):
    """f-values at every eval point for paths [start, start+count)."""
    m = problem.dim_noise
    paths = np.arange(start, start + count, dtype=np.uint64)
    by_step: dict[int, list[tuple[int, float]]] = {}
    for idx, (n, theta) in enumerate(eval_points):
        by_step.setdefault(n, []).append((idx, theta))
    last_step = max(by_step)
    y = np.broadcast_to(problem.x0, (count, problem.dim_state)).copy()
    vals = np.empty((len(eval_points), count))
    for n in range(last_step + 1):
        t_n, h_n = grid.step(n)
        dW, V = sample_batch(m, h_n, seed, paths, n)
        try:
            cache = compute_step_arrays(scheme, problem, t_n, y, h_n, dW, V)
            y = evaluate_dense(cache, scheme, 1.0)
        except BlowupError as exc:
            exc.step = n
            exc.path = start  # first path of the failing chunk
            raise
        for idx, theta in by_step.get(n, ()):
            v = y if theta == 1.0 else evaluate_dense(cache, scheme, theta)
            vals[idx] = f(v)
        bad = ~np.isfinite(y).all(axis=-1)
        if bad.any():
            raise BlowupError(
                f"path {start + int(np.argmax(bad))} blew up at step {n}",
                step=n, path=start + int(np.argmax(bad)),
            )
    return vals


def _combine(acc, other):
    """Welford-style combination of (n, mean, M2) accumulators."""
    n_a, mean_a, m2_a = acc
    n_b, mean_b, m2_b = other
    n = n_a + n_b
    delta = mean_b - mean_a
    mean = mean_a + delta * (n_b / n)
    m2 = m2_a + m2_b + delta * delta * (n_a * n_b / n)
    return n, mean, m2


def _mc_moments(scheme, problem, grid, eval_points, f, M, seed,
                chunk_size=DEFAULT_CHUNK_SIZE, threads=1):
    """Per-eval-point (count, mean, M2), deterministic in (seed, M, chunk)."""
    if M < 2:
        raise ValueError("need at least M = 2 samples")
    n_chunks = (M + chunk_size - 1) // chunk_size

    def one(c):
        start = c * chunk_size
        count = min(chunk_size, M - start)
        vals = _chunk_values(
            scheme, problem, grid, eval_points, f, seed, start, count
        )
        mean = vals.mean(axis=1)
        m2 = ((vals - mean[:, None]) ** 2).sum(axis=1)
        return count, mean, m2

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = pool.map(one, range(n_chunks))
            acc = None
            for r in results:  # ascending chunk order fixes the reduction
                acc = r if acc is None else _combine(acc, r)
    else:
        acc = None
        for c in range(n_chunks):
            acc = one(c) if acc is None else _combine(acc, one(c))
    return acc


def mc_expectations_at(
    scheme: CsrkTableau,
    problem: SdeProblem,
    grid: TimeGrid,
    f: Functional,
    eval_times,
    M: int,
    seed: int,
    confidence: float = 0.9,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
) -> list[MonteCarloEstimate]:
    """Estimates of E f(Y(t)) at several times, sharing one set of paths."""
    z = normal_quantile(confidence)
    eval_points = [grid.locate(t) for t in eval_times]
    n, mean, m2 = _mc_moments(
        scheme, problem, grid, eval_points, f, M, seed, chunk_size, threads
    )
    out = []
    for t, mu, s2 in zip(eval_times, mean, m2):
        var_mean = s2 / (n - 1) / n
        out.append(
            MonteCarloEstimate(
                mean=float(mu),
                variance_of_mean=float(var_mean),
                half_width=float(z * math.sqrt(var_mean)),
                samples=n,
                seed=seed,
                eval_time=float(t),
                confidence=confidence,
            )
        )
    return out


def mc_expectation(
    scheme, problem, grid, f, t_eval, M, seed,
    confidence: float = 0.9,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
) -> MonteCarloEstimate:
    return mc_expectations_at(
        scheme, problem, grid, f, [t_eval], M, seed, confidence, chunk_size,
        threads,
    )[0]


# ---------------------------------------------------------------------------
# exact enumeration
# ---------------------------------------------------------------------------

def exact_weak_expectation(
    scheme: CsrkTableau,
    problem: SdeProblem,
    grid: TimeGrid,
    f: Functional,
    theta_eval: float = 1.0,
    outcome_cap: int = 10**7,
) -> float:
    """E f(Y) by exhaustive expansion of the joint outcome tree.

    ``theta_eval`` applies to the final step, so the value is
    E f(Y(t_{N-1} + theta_eval * h_{N-1})).  Exact up to floating point.
    """
    if not 0.0 <= theta_eval <= 1.0:
        raise ValueError("theta_eval must lie in [0, 1]")
    m, N = problem.dim_noise, grid.n_steps
    k = outcome_count(m)
    if k**N > outcome_cap:
        raise CapacityError(
            f"{k}^{N} outcome sequences exceed the cap {outcome_cap}; "
            "use mc_expectation instead"
        )
    states = problem.x0[None, :].copy()
    probs = np.array([1.0])
    for n in range(N):
        t_n, h_n = grid.step(n)
        outs = enumerate_outcomes(m, h_n)
        final = n == N - 1
        theta = theta_eval if final else 1.0
        new_states, new_probs, total = [], [], 0.0
        for inc, p in outs:
            for lo in range(0, states.shape[0], _ENUM_SLICE):
                sl = states[lo:lo + _ENUM_SLICE]
                cache = compute_step_arrays(
                    scheme, problem, t_n, sl, h_n, inc.dW, inc.V
                )
                y = evaluate_dense(cache, scheme, theta)
                if final:
                    total += p * float(
                        probs[lo:lo + _ENUM_SLICE] @ f(y)
                    )
                else:
                    new_states.append(y)
                    new_probs.append(p * probs[lo:lo + _ENUM_SLICE])
        if final:
            return total
        states = np.concatenate(new_states)
        probs = np.concatenate(new_probs)
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# tables and regression
# ---------------------------------------------------------------------------

def error_table(
    scheme, problem, f, t_eval, h_list, M, seed,
    confidence: float = 0.9,
    provenance: str | None = None,
    allow_shortened: bool = False,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
) -> list[ErrorRecord]:
    """One MC estimate per step size against the problem's reference."""
    ref = problem.reference_for(f, provenance)
    exact = ref.value(t_eval)
    records = []
    for h in h_list:
        grid = grid_for_step(problem, h, allow_shortened)
        est = mc_expectation(
            scheme, problem, grid, f, t_eval, M, seed, confidence,
            chunk_size, threads,
        )
        records.append(
            ErrorRecord(
                h=float(h),
                mean_error=est.mean - exact,
                variance_of_mean=est.variance_of_mean,
                half_width=est.half_width,
            )
        )
    return records


def empirical_order(records) -> OrderEstimate:
    """Least-squares slope of log2|error| against log2 h.

    Accepts ErrorRecords or (h, error) pairs; zero-error entries are dropped
    with a warning.
    """
    pairs = []
    for r in records:
        h, err = (r.h, r.mean_error) if isinstance(r, ErrorRecord) else r
        if err == 0.0:
            warnings.warn(f"dropping zero error at h={h} from order fit")
            continue
        pairs.append((float(h), abs(float(err))))
    if len(pairs) < 2:
        raise ValueError("order estimation needs at least 2 nonzero errors")
    x = np.log2([h for h, _ in pairs])
    y = np.log2([e for _, e in pairs])
    slope, intercept = np.polyfit(x, y, 1)
    return OrderEstimate(tuple(pairs), float(slope), float(intercept))


def dense_error_profile(
    scheme, problem, f, h, theta_list, M, seed,
    confidence: float = 0.9,
    provenance: str | None = None,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
):
    """Errors of E f(Y(t_n + theta h)) at every node and theta.

    One MC pass: each path's step caches are queried at all requested times.
    Returns a list of (t, theta, ErrorRecord) triples.
    """
    for th in theta_list:
        if not 0.0 <= th < 1.0:
            raise ValueError("theta values must lie in [0, 1)")
    ref = problem.reference_for(f, provenance)
    grid = grid_for_step(problem, h)
    times, thetas = [], []
    for n in range(grid.n_steps):
        t_n, h_n = grid.step(n)
        for th in theta_list:
            times.append(t_n + th * h_n)
            thetas.append(th)
    ests = mc_expectations_at(
        scheme, problem, grid, f, times, M, seed, confidence, chunk_size,
        threads,
    )
    out = []
    for t, th, est in zip(times, thetas, ests):
        out.append(
            (
                t,
                th,
                ErrorRecord(
                    h=float(h),
                    mean_error=est.mean - ref.value(t),
                    variance_of_mean=est.variance_of_mean,
                    half_width=est.half_width,
                ),
            )
        )
    return out
