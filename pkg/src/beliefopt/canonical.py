"""The two reference experiment setups, pinned as config text.

These are the configurations the regression suite measures logarithmic
regret growth, the increment band, and the closed-form budget on.  The
files under configs/ carry the same text for command line use; keep them
in sync (the config tests compare them verbatim).

Why these numbers:

* quadratic: eigenvalues log-spaced on [0.1, 1] make the per-coordinate
  effective-stepsize crossover times delta/(2*alpha*eig) spread evenly in
  log t across a 16384-step horizon, which is what gives the regret series
  its clean a + b*log t shape.  The start point sits 1e-5 off the
  unconstrained minimizer so the very first sqrt-second-moment increment
  (about 0.85 * 1e-5 / alpha) stays inside the band sigma*(1-beta1) = 0.01.
  lam is 0.999 rather than 1 because the budget's momentum term needs
  lam < 1 when beta1 > 0.
* softmax: a two-class overlapping-blob instance (separation 0.7) with a
  small batch keeps the per-round gradients noisy relative to the gradient
  at the zero start.  That matters because the sadam beta2 schedule puts
  weight 0.9 on the very first belief residual, so the running max s_hat
  is set by whichever is larger: the start-point gradient or the sampling
  noise.  With noise on top, the 1/t stepsize against the linear divisor
  settles to a lower noise floor than the sqrt-divisor baselines by
  T=5000, and the regret sum accumulates logarithmically at T=16384.
  lam stays 1 (constant momentum); budget reporting is the quadratic
  setup's job.  The compare grid is the four-point tuning grid
  {0.1, 0.01, 0.001, 0.0001} for every optimizer.
"""

from __future__ import annotations

from .config import RunConfig, parse_config

CANONICAL_QUADRATIC = """\
[problem]
kind = quadratic
dim = 10
eig_min = 0.1
eig_max = 1.0
x_star = 0.5
x0_jitter = 1e-5

[optimizer]
kind = fastadabelief
alpha = 0.001
beta1 = 0.9
lam = 0.999
beta2_mode = sadam
beta2_c = 0.9
delta = 1.0

[run]
horizon = 16384
region_lo = -5
region_hi = 5
seed = 0
"""

CANONICAL_SOFTMAX = """\
[problem]
kind = softmax
source = synth
classes = 2
features = 2
samples = 2000
separation = 0.7
data_seed = 7
sigma1 = 0.01
sigma2 = 0.01
batch_size = 12

[optimizer]
kind = fastadabelief
alpha = 0.1
beta1 = 0.9
lam = 1.0
beta2_mode = sadam
beta2_c = 0.9
delta = 1.0

[run]
horizon = 16384
region_lo = -5
region_hi = 5
seed = 0
"""

CANONICAL_COMPARE = """\
[problem]
kind = softmax
source = synth
classes = 2
features = 2
samples = 2000
separation = 0.7
data_seed = 7
sigma1 = 0.01
sigma2 = 0.01
batch_size = 12

[optimizer]
kind = fastadabelief
alpha = 0.1,0.01,0.001,0.0001
beta2_mode = sadam
beta2_c = 0.9
delta = 1.0

[optimizer]
kind = sadam
alpha = 0.1,0.01,0.001,0.0001
beta2_mode = sadam
beta2_c = 0.9
delta = 1.0

[optimizer]
kind = adabelief
alpha = 0.1,0.01,0.001,0.0001

[optimizer]
kind = adam
alpha = 0.1,0.01,0.001,0.0001

[optimizer]
kind = yogi
alpha = 0.1,0.01,0.001,0.0001

[optimizer]
kind = adabound
alpha = 0.1,0.01,0.001,0.0001

[optimizer]
kind = sgd_momentum
alpha = 0.1,0.01,0.001,0.0001

[run]
horizon = 5000
region_lo = -5
region_hi = 5
seed = 0
"""


def canonical_quadratic() -> RunConfig:
    return parse_config(CANONICAL_QUADRATIC)


def canonical_softmax() -> RunConfig:
    return parse_config(CANONICAL_SOFTMAX)


def canonical_compare() -> RunConfig:
    return parse_config(CANONICAL_COMPARE)
