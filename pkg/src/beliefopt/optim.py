"""Projected online optimizers over box-constrained domains.

Seven step rules share one state layout (first moment ``m``, second moment
``s``, running max ``s_hat``) and one projection primitive.  With gradient
``g`` at step ``t`` (1-based) the updates are, elementwise:

    sgd_momentum   m' = b1*m + g                     x' = P(x - a_t*m')
    adam           m' EMA(b1), v' = EMA(b2) of g^2   x' = P(x - a_t*m'/(sqrt(v')+eps))
    yogi           v' = v - (1-b2)*sign(v-g^2)*g^2   divisor sqrt(v')+eps
    adabound       rate = clip(a_t/sqrt(v'), eta_l(t), eta_u(t)),  x' = P(x - rate*m')
    adabelief      s' = EMA(b2) of (g-m')^2, sh' = max(sh, s')     divisor sqrt(sh')+eps
    sadam          v' = EMA(b2_t) of g^2              divisor v' + delta/t   (no sqrt)
    fastadabelief  s' = EMA(b1_t, b2_t belief), sh' = max(sh, s')  divisor sh' + delta/t

The two strongly-convex rules (sadam, fastadabelief) divide by their second
moment linearly; the vanishing offset ``delta/t`` keeps the divisor positive.
This is deliberately a separate code path from the square-root family and
must stay that way: unifying them behind a flag would hide the property the
regret analysis depends on (the weighted divisor grows at least like t).

Default stepsize schedules: ``alpha/t`` for sadam and fastadabelief,
``alpha/sqrt(t)`` for the square-root family, constant for sgd_momentum.
``HyperParams.step_schedule`` overrides the default for diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericFailure

OPTIMIZER_KINDS = (
    "sgd_momentum",
    "adam",
    "yogi",
    "adabound",
    "adabelief",
    "sadam",
    "fastadabelief",
)

# Canonical schedule per rule; see module docstring.
_DEFAULT_SCHEDULE = {
    "sgd_momentum": "constant",
    "adam": "inverse_sqrt_t",
    "yogi": "inverse_sqrt_t",
    "adabound": "inverse_sqrt_t",
    "adabelief": "inverse_sqrt_t",
    "sadam": "inverse_t",
    "fastadabelief": "inverse_t",
}

_SCHEDULES = ("inverse_t", "inverse_sqrt_t", "constant")


@dataclass(frozen=True)
class HyperParams:
    """Shared hyperparameter bundle.

    ``beta2_mode`` selects the second-moment averaging: ``"constant"`` uses
    ``beta2`` every step, ``"sadam"`` uses the schedule ``1 - beta2_c/t``.
    ``lam`` decays the first-moment coefficient of fastadabelief as
    ``beta1 * lam**t``; ``lam=1`` keeps it constant.  ``eta_final`` and
    ``bound_gamma`` only affect adabound's rate clipping.
    """

    alpha: float = 0.001
    beta1: float = 0.9
    lam: float = 1.0
    beta2_mode: str = "constant"
    beta2: float = 0.999
    beta2_c: float = 0.9
    delta: float = 0.1
    epsilon: float = 1e-8
    step_schedule: str | None = None
    eta_final: float = 0.1
    bound_gamma: float = 1e-3

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0.0 <= self.beta1 < 1.0:
            raise ValueError(f"beta1 must lie in [0, 1), got {self.beta1}")
        if not 0.0 < self.lam <= 1.0:
            raise ValueError(f"lam must lie in (0, 1], got {self.lam}")
        if self.beta2_mode not in ("constant", "sadam"):
            raise ValueError(f"beta2_mode must be 'constant' or 'sadam', got {self.beta2_mode!r}")
        if self.beta2_mode == "constant" and not 0.0 <= self.beta2 < 1.0:
            raise ValueError(f"beta2 must lie in [0, 1), got {self.beta2}")
        if self.beta2_mode == "sadam" and not 0.0 < self.beta2_c < 1.0:
            raise ValueError(f"beta2_c must lie in (0, 1), got {self.beta2_c}")
        if self.delta < 0:
            raise ValueError(f"delta must be nonnegative, got {self.delta}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")
        if self.step_schedule is not None and self.step_schedule not in _SCHEDULES:
            raise ValueError(f"step_schedule must be one of {_SCHEDULES}, got {self.step_schedule!r}")
        if not self.eta_final > 0:
            raise ValueError(f"eta_final must be positive, got {self.eta_final}")
        if not self.bound_gamma > 0:
            raise ValueError(f"bound_gamma must be positive, got {self.bound_gamma}")

    def beta1_at(self, t: int) -> float:
        return self.beta1 * self.lam ** t

    def beta2_at(self, t: int) -> float:
        if self.beta2_mode == "sadam":
            return 1.0 - self.beta2_c / t
        return self.beta2


def validate_hyperparams(kind: str, hp: HyperParams) -> None:
    """Reject combinations that a run would only discover by dividing by zero."""
    if kind not in OPTIMIZER_KINDS:
        raise ValueError(f"unknown optimizer kind {kind!r}")
    if kind in ("sadam", "fastadabelief") and not hp.delta > 0:
        raise ValueError(f"{kind} requires delta > 0 (divisor at t=1 is the second moment plus delta)")
    if kind in ("adam", "yogi", "adabelief") and not hp.epsilon > 0:
        # A zero epsilon divides by zero on any zero-gradient prefix.
        raise ValueError(f"{kind} requires epsilon > 0")


def alpha_at(kind: str, hp: HyperParams, t: int) -> float:
    """Stepsize at step t under the rule's schedule (or the override in hp)."""
    schedule = hp.step_schedule or _DEFAULT_SCHEDULE[kind]
    if schedule == "inverse_t":
        return hp.alpha / t
    if schedule == "inverse_sqrt_t":
        return hp.alpha / np.sqrt(t)
    return hp.alpha


@dataclass(frozen=True)
class FeasibleRegion:
    """Axis-aligned box {x : lower <= x <= upper}, bounds finite elementwise."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=np.float64)
        upper = np.asarray(self.upper, dtype=np.float64)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("region bounds must be 1-d arrays of equal length")
        if not (np.isfinite(lower).all() and np.isfinite(upper).all()):
            raise ValueError("region bounds must be finite")
        if np.any(lower > upper):
            raise ValueError("region has lower > upper in some coordinate")

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def diameter_inf(self) -> float:
        """D_inf: the largest per-coordinate extent."""
        return float(np.max(self.upper - self.lower))

    def contains(self, x: np.ndarray, atol: float = 0.0) -> bool:
        return bool(np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol))

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)


def box_region(lo: float, hi: float, dim: int) -> FeasibleRegion:
    return FeasibleRegion(np.full(dim, float(lo)), np.full(dim, float(hi)))


def project_weighted(z: np.ndarray, w: np.ndarray, region: FeasibleRegion) -> np.ndarray:
    """Weighted projection argmin_{x in box} sum_i w_i (x_i - z_i)^2.

    The objective is separable, so the minimizer is the coordinatewise clip
    of z regardless of the (strictly positive) weights.  The weights are
    still validated because a zero or negative weight would make the
    projection ill-posed.
    """
    z = np.asarray(z, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if z.shape != (region.dim,) or w.shape != (region.dim,):
        raise ValueError("z and w must match the region dimension")
    if not np.all(w > 0):
        raise ValueError("projection weights must be strictly positive")
    return region.project(z)


@dataclass
class OptimizerState:
    """Per-run mutable state.  ``s`` holds the second moment (belief residual
    average for the belief rules, squared-gradient average otherwise) and
    ``s_hat`` its running max where the rule uses one (zeros elsewhere)."""

    kind: str
    t: int
    x: np.ndarray
    m: np.ndarray
    s: np.ndarray
    s_hat: np.ndarray


@dataclass(frozen=True)
class StepOutcome:
    """Diagnostics for one accepted step.

    ``delta`` is the pre-projection step (x + delta is what gets projected)
    and ``scale`` the elementwise effective stepsize multiplying the first
    moment, so delta = -scale * m_new.
    """

    alpha_t: float
    beta1_t: float
    beta2_t: float
    delta: np.ndarray
    scale: np.ndarray

    @property
    def step_inf_norm(self) -> float:
        return float(np.max(np.abs(self.delta))) if self.delta.size else 0.0


def init_state(kind: str, x0: np.ndarray, region: FeasibleRegion) -> OptimizerState:
    if kind not in OPTIMIZER_KINDS:
        raise ValueError(f"unknown optimizer kind {kind!r}")
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (region.dim,):
        raise ValueError(f"x0 has shape {x0.shape}, region has dimension {region.dim}")
    if not region.contains(x0):
        raise ValueError("x0 lies outside the feasible region")
    n = region.dim
    return OptimizerState(
        kind=kind,
        t=0,
        x=x0.copy(),
        m=np.zeros(n),
        s=np.zeros(n),
        s_hat=np.zeros(n),
    )


def _check_gradient(state: OptimizerState, g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    if g.shape != state.x.shape:
        raise ValueError(f"gradient shape {g.shape} does not match state shape {state.x.shape}")
    if not np.isfinite(g).all():
        raise NumericFailure(f"nonfinite gradient at step {state.t + 1}")
    return g


def _finish(state: OptimizerState, t: int, x_next: np.ndarray, m: np.ndarray,
            s: np.ndarray, s_hat: np.ndarray, outcome: StepOutcome) -> tuple[OptimizerState, StepOutcome]:
    if not (np.isfinite(x_next).all() and np.isfinite(m).all()
            and np.isfinite(s).all() and np.isfinite(s_hat).all()):
        raise NumericFailure(f"nonfinite optimizer state after step {t}")
    new = OptimizerState(kind=state.kind, t=t, x=x_next, m=m, s=s, s_hat=s_hat)
    return new, outcome


def sgd_momentum_step(state, g, hp, region):
    """Heavy-ball update m' = beta1*m + g (no EMA damping on the gradient)."""
    g = _check_gradient(state, g)
    t = state.t + 1
    a_t = alpha_at("sgd_momentum", hp, t)
    m = hp.beta1 * state.m + g
    scale = np.full_like(m, a_t)
    delta = -a_t * m
    x_next = region.project(state.x + delta)
    out = StepOutcome(a_t, hp.beta1, 0.0, delta, scale)
    return _finish(state, t, x_next, m, state.s.copy(), state.s_hat.copy(), out)


def adam_step(state, g, hp, region):
    g = _check_gradient(state, g)
    t = state.t + 1
    a_t = alpha_at("adam", hp, t)
    b2 = hp.beta2_at(t)
    m = hp.beta1 * state.m + (1.0 - hp.beta1) * g
    v = b2 * state.s + (1.0 - b2) * g * g
    scale = a_t / (np.sqrt(v) + hp.epsilon)
    delta = -scale * m
    x_next = region.project(state.x + delta)
    out = StepOutcome(a_t, hp.beta1, b2, delta, scale)
    return _finish(state, t, x_next, m, v, state.s_hat.copy(), out)


def yogi_step(state, g, hp, region):
    """Adam-shaped, but the second moment moves additively:
    v' = v - (1-beta2) * sign(v - g^2) * g^2."""
    g = _check_gradient(state, g)
    t = state.t + 1
    a_t = alpha_at("yogi", hp, t)
    b2 = hp.beta2_at(t)
    m = hp.beta1 * state.m + (1.0 - hp.beta1) * g
    g2 = g * g
    v = state.s - (1.0 - b2) * np.sign(state.s - g2) * g2
    scale = a_t / (np.sqrt(v) + hp.epsilon)
    delta = -scale * m
    x_next = region.project(state.x + delta)
    out = StepOutcome(a_t, hp.beta1, b2, delta, scale)
    return _finish(state, t, x_next, m, v, state.s_hat.copy(), out)


def adabound_step(state, g, hp, region):
    """Adam with the per-coordinate rate alpha_t/sqrt(v) clipped into the
    closing interval [eta_l(t), eta_u(t)] around eta_final."""
    g = _check_gradient(state, g)
    t = state.t + 1
    a_t = alpha_at("adabound", hp, t)
    b2 = hp.beta2_at(t)
    m = hp.beta1 * state.m + (1.0 - hp.beta1) * g
    v = b2 * state.s + (1.0 - b2) * g * g
    eta_l = hp.eta_final * (1.0 - 1.0 / (hp.bound_gamma * t + 1.0))
    eta_u = hp.eta_final * (1.0 + 1.0 / (hp.bound_gamma * t))
    with np.errstate(divide="ignore"):
        raw = np.where(v > 0, a_t / np.sqrt(v), np.inf)
    scale = np.clip(raw, eta_l, eta_u)
    delta = -scale * m
    x_next = region.project(state.x + delta)
    out = StepOutcome(a_t, hp.beta1, b2, delta, scale)
    return _finish(state, t, x_next, m, v, state.s_hat.copy(), out)


def adabelief_step(state, g, hp, region):
    """Belief rule: the second moment averages (g - m')^2 and a running max
    keeps the divisor sqrt(s_hat) + epsilon nondecreasing."""
    g = _check_gradient(state, g)
    t = state.t + 1
    a_t = alpha_at("adabelief", hp, t)
    b2 = hp.beta2_at(t)
    m = hp.beta1 * state.m + (1.0 - hp.beta1) * g
    resid = g - m
    s = b2 * state.s + (1.0 - b2) * resid * resid
    s_hat = np.maximum(state.s_hat, s)
    scale = a_t / (np.sqrt(s_hat) + hp.epsilon)
    delta = -scale * m
    x_next = region.project(state.x + delta)
    out = StepOutcome(a_t, hp.beta1, b2, delta, scale)
    return _finish(state, t, x_next, m, s, s_hat, out)


def sadam_step(state, g, hp, region):
    """Squared-gradient average with the 1 - c/t schedule, divided linearly:
    x' = P(x - a_t * m' / (v' + delta/t))."""
    g = _check_gradient(state, g)
    t = state.t + 1
    a_t = alpha_at("sadam", hp, t)
    b2 = hp.beta2_at(t)
    m = hp.beta1 * state.m + (1.0 - hp.beta1) * g
    v = b2 * state.s + (1.0 - b2) * g * g
    denom = v + hp.delta / t
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = a_t / denom
    delta = -scale * m
    x_next = region.project(state.x + delta)
    out = StepOutcome(a_t, hp.beta1, b2, delta, scale)
    return _finish(state, t, x_next, m, v, state.s_hat.copy(), out)


def fastadabelief_step(state, g, hp, region):
    """Belief second moment with running max, divided linearly with the
    vanishing offset:  x' = P(x - (alpha/t) * m' / (s_hat' + delta/t)).

    The first-moment coefficient decays as beta1 * lam**t; with the default
    lam = 1 it stays constant.
    """
    g = _check_gradient(state, g)
    t = state.t + 1
    a_t = alpha_at("fastadabelief", hp, t)
    b1 = hp.beta1_at(t)
    b2 = hp.beta2_at(t)
    m = b1 * state.m + (1.0 - b1) * g
    resid = g - m
    s = b2 * state.s + (1.0 - b2) * resid * resid
    s_hat = np.maximum(state.s_hat, s)
    denom = s_hat + hp.delta / t
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = a_t / denom
    delta = -scale * m
    x_next = region.project(state.x + delta)
    out = StepOutcome(a_t, b1, b2, delta, scale)
    return _finish(state, t, x_next, m, s, s_hat, out)


_STEP_FUNCS = {
    "sgd_momentum": sgd_momentum_step,
    "adam": adam_step,
    "yogi": yogi_step,
    "adabound": adabound_step,
    "adabelief": adabelief_step,
    "sadam": sadam_step,
    "fastadabelief": fastadabelief_step,
}


def step(state: OptimizerState, g: np.ndarray, hp: HyperParams,
         region: FeasibleRegion) -> tuple[OptimizerState, StepOutcome]:
    """Dispatch one step by state.kind."""
    return _STEP_FUNCS[state.kind](state, g, hp, region)


def stepsize_probe(kind: str, m: np.ndarray, s: np.ndarray, t: int,
                   hp: HyperParams) -> np.ndarray:
    """Signed displacement Delta_t at a frozen (m, s), without any state change.

    These are the stylized comparison formulas (all written with a square
    root so the five rules are on one scale), not the step kernels:

        sgd_momentum    -a_t * m
        adam            -a_t * m / sqrt(s)          (s is the g^2 average)
        adabelief       -a_t * m / sqrt(s)          (s is the belief average)
        sadam           -a_t * m / sqrt(s + delta/t)
        fastadabelief   -a_t * m / sqrt(s + delta/t)

    a_t follows hp.step_schedule when set, otherwise the rule's canonical
    schedule.  A zero divisor yields inf, which is meaningful output for a
    probe (an unbounded stepsize), not an error.
    """
    if kind not in OPTIMIZER_KINDS:
        raise ValueError(f"unknown optimizer kind {kind!r}")
    m = np.asarray(m, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if m.shape != s.shape:
        raise ValueError("m and s must have the same shape")
    if np.any(s < 0):
        raise ValueError("second moment must be nonnegative")
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    a_t = alpha_at(kind, hp, t)
    if kind == "sgd_momentum":
        return -a_t * m
    if kind in ("sadam", "fastadabelief"):
        denom = np.sqrt(s + hp.delta / t)
    else:
        denom = np.sqrt(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -a_t * m / denom
    # 0/0 produces nan; report it as a zero step over an unbounded rate.
    return np.where(np.isnan(out) & (m == 0), 0.0, out)
