"""Online runs, hindsight baselines, regret growth fits, and validity checks.

The laboratory measures the quantities the strongly-convex analysis of the
linear-divisor rules is stated in terms of:

* cumulative regret R(T') against the best fixed point in hindsight,
  recomputed per checkpoint prefix;
* growth fits of R against a + b*log T and a + b*sqrt(T);
* the closed-form regret budget for fastadabelief runs, assembled from
  constants measured on the trace;
* the stepsize-weight increment band (``check_condition4``), the weighted
  second-moment lower bound (``check_condition3``), and positivity of the
  per-coordinate weight increments Gamma_t (``check_gamma_psd``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericFailure
from .optim import (
    OPTIMIZER_KINDS,
    FeasibleRegion,
    HyperParams,
    box_region,
    init_state,
    step,
    stepsize_probe,
    validate_hyperparams,
)

#: second-moment-maximum rules; their divisor weights come from s_hat.
_MAX_RULES = ("adabelief", "fastadabelief")


@dataclass
class TrajectoryTrace:
    """Dense per-step record of one online run.

    Arrays are indexed by step-1 (row 0 holds step t=1).  ``x`` and ``loss``
    are the iterate the round loss was evaluated at and its value, before
    the step was taken.
    """

    kind: str
    hp: HyperParams
    seed: int
    region: FeasibleRegion
    horizon: int
    problem_kind: str
    sigma: float
    loss: np.ndarray
    x: np.ndarray
    g: np.ndarray
    m: np.ndarray
    s: np.ndarray
    s_hat: np.ndarray
    alpha: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    step_inf: np.ndarray
    x_final: np.ndarray

    def truncate(self, upto: int) -> "TrajectoryTrace":
        if not 1 <= upto <= self.horizon:
            raise ValueError(f"cannot truncate horizon {self.horizon} to {upto}")
        final = self.x_final if upto == self.horizon else self.x[upto]
        return TrajectoryTrace(
            kind=self.kind, hp=self.hp, seed=self.seed, region=self.region,
            horizon=upto, problem_kind=self.problem_kind, sigma=self.sigma,
            loss=self.loss[:upto], x=self.x[:upto], g=self.g[:upto],
            m=self.m[:upto], s=self.s[:upto], s_hat=self.s_hat[:upto],
            alpha=self.alpha[:upto], beta1=self.beta1[:upto],
            beta2=self.beta2[:upto], step_inf=self.step_inf[:upto],
            x_final=final,
        )


def run_online(problem, kind: str, hp: HyperParams, region: FeasibleRegion,
               horizon: int, seed: int) -> TrajectoryTrace:
    """Run the online protocol for ``horizon`` rounds.

    Each round evaluates the problem's loss and gradient at the current
    iterate, records them, then applies one optimizer step.  Identical
    inputs give identical traces; NaN anywhere aborts with the step index.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    validate_hyperparams(kind, hp)
    if problem.dim != region.dim:
        raise ValueError(f"problem dimension {problem.dim} != region dimension {region.dim}")
    n = region.dim
    state = init_state(kind, problem.initial_point(region, seed), region)
    loss = np.empty(horizon)
    xs = np.empty((horizon, n))
    gs = np.empty((horizon, n))
    ms = np.empty((horizon, n))
    ss = np.empty((horizon, n))
    shs = np.empty((horizon, n))
    alphas = np.empty(horizon)
    beta1s = np.empty(horizon)
    beta2s = np.empty(horizon)
    stepn = np.empty(horizon)
    for t in range(1, horizon + 1):
        f_t, g_t = problem.round_loss_grad(state.x, t, seed)
        if not np.isfinite(f_t):
            raise NumericFailure(f"nonfinite loss at step {t}")
        i = t - 1
        loss[i] = f_t
        xs[i] = state.x
        gs[i] = g_t
        state, out = step(state, g_t, hp, region)
        ms[i] = state.m
        ss[i] = state.s
        shs[i] = state.s_hat
        alphas[i] = out.alpha_t
        beta1s[i] = out.beta1_t
        beta2s[i] = out.beta2_t
        stepn[i] = out.step_inf_norm
    return TrajectoryTrace(
        kind=kind, hp=hp, seed=seed, region=region, horizon=horizon,
        problem_kind=problem.kind, sigma=float(problem.sigma),
        loss=loss, x=xs, g=gs, m=ms, s=ss, s_hat=shs,
        alpha=alphas, beta1=beta1s, beta2=beta2s, step_inf=stepn,
        x_final=state.x,
    )


# ------------------------------------------------------------- hindsight


def _solve_projected(grad, region: FeasibleRegion, x0: np.ndarray, l_est: float,
                     sigma: float, tol: float = 1e-10,
                     max_iters: int = 10 ** 6) -> np.ndarray:
    """Minimize a sigma-strongly-convex, L-smooth function over the box.

    Projected gradient steps at the fixed rate 1/l_est, with the constant
    strong-convexity momentum and a restart whenever the momentum points
    against the latest step.  Terminates only when the fixed-point residual
    || P(x - grad(x)/L) - x ||_inf drops to ``tol``, so the returned point
    meets that criterion regardless of the path taken.
    """
    if not l_est > 0:
        raise ValueError("l_est must be positive")
    gamma = 1.0 / l_est
    q = min(1.0, sigma / l_est) if sigma > 0 else 0.0
    theta = (1.0 - math.sqrt(q)) / (1.0 + math.sqrt(q)) if q > 0 else 0.0
    x_prev = region.project(np.asarray(x0, dtype=np.float64))
    y = x_prev
    for k in range(max_iters):
        x = region.project(y - gamma * grad(y))
        moved = float(np.max(np.abs(x - x_prev))) if x.size else 0.0
        if moved <= tol or (k & 63) == 0:
            residual = float(np.max(np.abs(region.project(x - gamma * grad(x)) - x)))
            if residual <= tol:
                return x
        if float((y - x) @ (x - x_prev)) > 0.0:
            y = x
        else:
            y = x + theta * (x - x_prev)
        x_prev = x
    raise NumericFailure(
        f"hindsight solve did not reach residual {tol} in {max_iters} iterations")


def best_in_hindsight(problem, region: FeasibleRegion, trace: TrajectoryTrace,
                      upto: int | None = None,
                      x_start: np.ndarray | None = None):
    """Best fixed feasible point for the first ``upto`` rounds of the run.

    Returns (x_star, total_loss) where total_loss = sum_{t<=upto} f_t(x_star).
    Strong convexity of both problem families makes x_star unique.
    """
    upto = trace.horizon if upto is None else upto
    if not 1 <= upto <= trace.horizon:
        raise ValueError(f"upto must lie in [1, {trace.horizon}], got {upto}")
    f_avg, g_avg, l_est = problem.prefix_objective(upto, trace.seed)
    if x_start is None:
        x_start = problem.initial_point(region, trace.seed)
    x_star = _solve_projected(g_avg, region, x_start, l_est, problem.sigma)
    return x_star, upto * f_avg(x_star)


def checkpoint_grid(horizon: int, start: int = 128) -> list[int]:
    """Geometric checkpoints start, 2*start, ... capped at and including T."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    points = []
    c = start
    while c <= horizon:
        points.append(c)
        c *= 2
    if not points or points[-1] != horizon:
        points.append(horizon)
    return points


@dataclass(frozen=True)
class GrowthFit:
    """OLS fit of regret against 1 and a growth regressor."""

    model: str
    intercept: float
    slope: float
    r_squared: float


@dataclass
class RegretReport:
    checkpoints: list[int]
    regret: np.ndarray
    ratio: np.ndarray
    hindsight_x_star: np.ndarray
    hindsight_value: float
    log_fit: GrowthFit | None
    sqrt_fit: GrowthFit | None


def _ols(u: np.ndarray, y: np.ndarray, model: str) -> GrowthFit:
    design = np.column_stack([np.ones_like(u), u])
    gram = design.T @ design
    if abs(np.linalg.det(gram)) < 1e-300:
        raise ValueError("degenerate design matrix for growth fit")
    coef = np.linalg.solve(gram, design.T @ y)
    resid = y - design @ coef
    ss_res = float(resid @ resid)
    centered = y - y.mean()
    ss_tot = float(centered @ centered)
    if ss_tot == 0.0:
        # Constant y: the fit is exact in exact arithmetic, so only rule
        # out residuals beyond what the normal-equation solve can leak.
        scale = max(1.0, float(abs(y.mean())))
        r2 = 1.0 if ss_res <= y.size * (1e-12 * scale) ** 2 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return GrowthFit(model=model, intercept=float(coef[0]), slope=float(coef[1]),
                     r_squared=r2)


def fit_growth(checkpoints, regret) -> tuple[GrowthFit, GrowthFit]:
    """Fit R(T') ~ a + b log T' and ~ a + b sqrt(T') by least squares."""
    t = np.asarray(checkpoints, dtype=np.float64)
    y = np.asarray(regret, dtype=np.float64)
    if t.ndim != 1 or t.shape != y.shape:
        raise ValueError("checkpoints and regret must be 1-d and aligned")
    if t.size < 4:
        raise ValueError(f"need at least 4 checkpoints for a growth fit, got {t.size}")
    if np.any(np.diff(t) <= 0):
        raise ValueError("checkpoints must be strictly increasing")
    return _ols(np.log(t), y, "log"), _ols(np.sqrt(t), y, "sqrt")


def compute_regret(problem, region: FeasibleRegion, trace: TrajectoryTrace,
                   checkpoints: list[int] | None = None) -> RegretReport:
    """Regret series against the per-prefix hindsight optimum.

    Each checkpoint T' re-solves the hindsight problem on rounds 1..T' (the
    solves warm-start from the previous checkpoint, which leaves the values
    unchanged because the checkpoint chain of a truncated trace is a prefix
    of the full chain).  The regret sum is compensated so the tiny per-round
    excesses of near-converged runs survive the accumulation.
    """
    if checkpoints is None:
        checkpoints = checkpoint_grid(trace.horizon)
    checkpoints = sorted(set(int(c) for c in checkpoints))
    if checkpoints[0] < 1 or checkpoints[-1] > trace.horizon:
        raise ValueError("checkpoints must lie in [1, horizon]")
    if checkpoints[-1] != trace.horizon:
        checkpoints.append(trace.horizon)
    regret = np.empty(len(checkpoints))
    warm = None
    x_star = None
    value = math.nan
    for j, upto in enumerate(checkpoints):
        x_star, value = best_in_hindsight(problem, region, trace, upto, x_start=warm)
        warm = x_star
        avg = value / upto
        regret[j] = math.fsum(float(v) - avg for v in trace.loss[:upto])
    ratio = regret / np.asarray(checkpoints, dtype=np.float64)
    log_fit = sqrt_fit = None
    if len(checkpoints) >= 4:
        log_fit, sqrt_fit = fit_growth(checkpoints, regret)
    return RegretReport(checkpoints=checkpoints, regret=regret, ratio=ratio,
                        hindsight_x_star=x_star, hindsight_value=value,
                        log_fit=log_fit, sqrt_fit=sqrt_fit)


# ------------------------------------------------------------- constants


@dataclass(frozen=True)
class BoundConstants:
    """Everything the closed-form regret budget needs."""

    n: int
    horizon: int
    d_inf: float
    g_inf: float
    r: float
    r_rule: str
    sum_g_norms: float
    alpha: float
    beta1: float
    lam: float
    delta: float

    def __post_init__(self):
        for name in ("d_inf", "g_inf", "r", "sum_g_norms", "alpha", "delta"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")


def measure_constants(trace: TrajectoryTrace, region: FeasibleRegion,
                      r: float | None = None) -> BoundConstants:
    """Measure the bound constants on a trace (truncate first for prefixes).

    The default r is the largest inverse square root of the effective
    divisor observed along the run, max over t and i of
    (s_hat_{t,i} + delta/t)^(-1/2).  Degenerate all-zero-gradient traces
    legitimately measure g_inf = 0.
    """
    hp = trace.hp
    if r is None:
        tcol = np.arange(1, trace.horizon + 1, dtype=np.float64)[:, None]
        divisor = trace.s_hat + hp.delta / tcol
        low = float(divisor.min())
        if low <= 0:
            raise ValueError("effective divisor hit zero; cannot apply the default r rule")
        r = 1.0 / math.sqrt(low)
        r_rule = "max over t,i of (s_hat + delta/t)^(-1/2), measured on the trace"
    else:
        r_rule = "user-supplied"
    g_inf = float(np.max(np.abs(trace.g))) if trace.g.size else 0.0
    sum_g_norms = float(np.sum(np.sqrt(np.sum(trace.g ** 4, axis=0))))
    return BoundConstants(
        n=region.dim, horizon=trace.horizon, d_inf=region.diameter_inf,
        g_inf=g_inf, r=float(r), r_rule=r_rule, sum_g_norms=sum_g_norms,
        alpha=hp.alpha, beta1=hp.beta1, lam=hp.lam, delta=hp.delta,
    )


def theoretical_bound(c: BoundConstants) -> float:
    """Closed-form regret budget for the linear-divisor belief rule.

    R(T) <= n*delta*D^2 / (2*alpha*(1-beta1))
          + alpha*r^2*log(T)/(1-beta1)^2 * S
          + (2*alpha*r^2 + alpha*delta^2) / (2*(1-beta1)^2) * S
          + n*beta1*lam*D^2*(G+delta) / (2*alpha*(1-beta1)*(1-lam)^2)

    with S = sum_g_norms.  The last term exists only for decaying momentum
    (lam < 1); with beta1 = 0 it vanishes and lam = 1 is allowed.
    """
    if c.beta1 >= 1.0:
        raise ValueError("beta1 must be below 1")
    one_minus_b1 = 1.0 - c.beta1
    term1 = c.n * c.delta * c.d_inf ** 2 / (2.0 * c.alpha * one_minus_b1)
    term2 = c.alpha * c.r ** 2 * math.log(c.horizon) / one_minus_b1 ** 2 * c.sum_g_norms
    term3 = (2.0 * c.alpha * c.r ** 2 + c.alpha * c.delta ** 2) \
        / (2.0 * one_minus_b1 ** 2) * c.sum_g_norms
    if c.beta1 == 0.0:
        term4 = 0.0
    elif c.lam == 1.0:
        raise ValueError(
            "the momentum term n*beta1*lam*D^2*(G+delta)/(2*alpha*(1-beta1)*(1-lam)^2) "
            "is undefined at lam = 1 with beta1 > 0")
    else:
        term4 = c.n * c.beta1 * c.lam * c.d_inf ** 2 * (c.g_inf + c.delta) \
            / (2.0 * c.alpha * one_minus_b1 * (1.0 - c.lam) ** 2)
    return term1 + term2 + term3 + term4


# ------------------------------------------------------------- conditions


@dataclass
class Condition4Result:
    """Per-step extremes of (t/alpha)*sqrt(s_t) - ((t-1)/alpha)*sqrt(s_{t-1})."""

    lhs_min: np.ndarray
    lhs_max: np.ndarray
    upper: float
    tol: float
    passed: bool


def _cond4_values(trace: TrajectoryTrace, variant: str) -> np.ndarray:
    """(T, n) array of weighted sqrt-second-moment increments."""
    alpha = trace.hp.alpha
    t = np.arange(1, trace.horizon + 1, dtype=np.float64)[:, None]
    factor = np.sqrt(t) / alpha if variant == "sqrt_t" else t / alpha
    weighted = factor * np.sqrt(trace.s)
    prev = np.vstack([np.zeros((1, trace.s.shape[1])), weighted[:-1]])
    return weighted - prev


def check_condition4(trace: TrajectoryTrace, sigma: float,
                     tol: float = 1e-12, variant: str = "t") -> Condition4Result:
    """Band check 0 <= increment <= sigma*(1 - beta1) + tol at every step.

    ``variant="t"`` uses the t/alpha weighting of the strongly convex
    analysis; ``variant="sqrt_t"`` is the sqrt(t)/alpha flavor of the
    general convex conditions, exposed for diagnostics only.  beta1 is the
    supremum of the momentum schedule, i.e. hp.beta1 itself.
    """
    if variant not in ("t", "sqrt_t"):
        raise ValueError("variant must be 't' or 'sqrt_t'")
    values = _cond4_values(trace, variant)
    lhs_min = values.min(axis=1)
    lhs_max = values.max(axis=1)
    upper = sigma * (1.0 - trace.hp.beta1)
    passed = bool(np.all(lhs_min >= 0.0) and np.all(lhs_max <= upper + tol))
    return Condition4Result(lhs_min=lhs_min, lhs_max=lhs_max, upper=upper,
                            tol=tol, passed=passed)


@dataclass
class Condition3Result:
    """Smallest feasible zeta per step, and its maximum over the horizon."""

    zeta_series: np.ndarray
    zeta: float


def check_condition3(trace: TrajectoryTrace, variant: str = "t") -> Condition3Result:
    """Smallest zeta with (t/alpha)*sqrt(W_t,i) >= sqrt(sum_j g_{j,i}^2)/zeta.

    W is the beta2-weighted squared-gradient average; expanding the nested
    products gives the recursion W_t = beta2_t W_{t-1} + (1-beta2_t) g_t^2,
    which is what makes an O(T) sweep possible.  Coordinates with W = 0 and
    a nonzero gradient history force zeta = inf; an all-zero history
    contributes 0 by convention.
    """
    if variant not in ("t", "sqrt_t"):
        raise ValueError("variant must be 't' or 'sqrt_t'")
    alpha = trace.hp.alpha
    horizon, n = trace.g.shape
    w = np.zeros(n)
    g2_sum = np.zeros(n)
    zeta_series = np.empty(horizon)
    for t in range(1, horizon + 1):
        b2 = trace.beta2[t - 1]
        g2 = trace.g[t - 1] ** 2
        w = b2 * w + (1.0 - b2) * g2
        g2_sum += g2
        factor = math.sqrt(t) / alpha if variant == "sqrt_t" else t / alpha
        lhs = factor * np.sqrt(w)
        rhs = np.sqrt(g2_sum)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = rhs / lhs
        ratio = np.where(rhs == 0.0, 0.0, ratio)
        ratio = np.where((lhs == 0.0) & (rhs > 0.0), np.inf, ratio)
        zeta_series[t - 1] = ratio.max() if n else 0.0
    return Condition3Result(zeta_series=zeta_series, zeta=float(zeta_series.max()))


def gamma_series(trace: TrajectoryTrace) -> np.ndarray:
    """Per-step minimum over i of D_{t,i}/alpha_t - D_{t-1,i}/alpha_{t-1}.

    D is the second-moment series that actually weights the update: s_hat
    for the running-max belief rules, s (the plain average) otherwise.  The
    t=1 entry is D_{1,i}/alpha_1, the increment from an all-zero start.
    With a nondecreasing D and a nonincreasing alpha_t both divisions are
    monotone, so for those rules every entry is >= 0 in exact float
    arithmetic, not merely up to rounding.
    """
    d = trace.s_hat if trace.kind in _MAX_RULES else trace.s
    weighted = d / trace.alpha[:, None]
    prev = np.vstack([np.zeros((1, d.shape[1])), weighted[:-1]])
    return (weighted - prev).min(axis=1)


def check_gamma_psd(trace: TrajectoryTrace) -> float:
    """Minimum weight increment over all steps and coordinates."""
    return float(gamma_series(trace).min())


@dataclass
class ConditionReport:
    cond4: Condition4Result
    cond3: Condition3Result
    gamma_per_step: np.ndarray
    gamma_min: float


def condition_report(trace: TrajectoryTrace, sigma: float | None = None,
                     tol: float = 1e-12) -> ConditionReport:
    sigma = trace.sigma if sigma is None else sigma
    gseries = gamma_series(trace)
    return ConditionReport(
        cond4=check_condition4(trace, sigma, tol=tol),
        cond3=check_condition3(trace),
        gamma_per_step=gseries,
        gamma_min=float(gseries.min()),
    )


# ------------------------------------------------------------- scenarios


def region_scenarios(length: int = 1000) -> dict[str, np.ndarray]:
    """The three scalar gradient scripts used for stepsize comparisons.

    region1: persistently tiny gradients (plateau-like);
    region2: sign-alternating unit gradients (high-variance);
    region3: constant unit gradients (steady descent).
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    region2 = np.where(np.arange(length) % 2 == 0, 1.0, -1.0)
    return {
        "region1": np.full(length, 1e-3),
        "region2": region2,
        "region3": np.ones(length),
    }


PROBE_KINDS = ("sgd_momentum", "adam", "sadam", "adabelief", "fastadabelief")


def _probe_hyperparams(kind: str, alpha: float, delta: float) -> HyperParams:
    if kind in ("sadam", "fastadabelief"):
        return HyperParams(alpha=alpha, beta2_mode="sadam", delta=delta)
    return HyperParams(alpha=alpha, delta=delta)


def region_stepsize_table(t_values=(10, 100, 1000), alpha: float = 0.01,
                          delta: float = 0.1, length: int | None = None):
    """|Delta_t| for the five comparison rules on the three scripts.

    Each rule's own recursions evolve (m, s) along the script (by running
    the real step kernels on an effectively unconstrained scalar problem),
    then the probe evaluates the displacement at the requested steps.
    Returns rows of (region, optimizer, t, m, s, delta_abs).
    """
    t_values = sorted(int(t) for t in t_values)
    if t_values[0] < 1:
        raise ValueError("probe steps must be >= 1")
    if length is None:
        length = t_values[-1]
    if length < t_values[-1]:
        raise ValueError("script shorter than the largest probe step")
    wide = box_region(-1e18, 1e18, 1)
    rows = []
    for name, script in region_scenarios(length).items():
        for kind in PROBE_KINDS:
            hp = _probe_hyperparams(kind, alpha, delta)
            state = init_state(kind, np.zeros(1), wide)
            wanted = set(t_values)
            for t in range(1, length + 1):
                state, _ = step(state, np.array([script[t - 1]]), hp, wide)
                if t in wanted:
                    m = float(state.m[0])
                    s = float(state.s[0])
                    delta_t = stepsize_probe(kind, state.m, state.s, t, hp)
                    rows.append((name, kind, t, m, s, float(np.abs(delta_t[0]))))
    return rows
