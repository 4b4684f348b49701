"""Loss oracles and data plumbing for the online experiments.

Two problem families are supported:

* ``quadratic``: f(x) = x'Ax/2 + b'x with symmetric A.  The same loss is
  served every round, so the online run is deterministic given x0.
* ``softmax_l2``: multiclass cross-entropy over minibatches plus separate
  L2 penalties on the weight rows and the biases,

      J(w, b) = -(1/m) sum_i log softmax(w x_i + b)[y_i]
                + sigma1 * sum ||w_k||^2 + sigma2 * sum b_k^2.

  Parameters are packed as the K*d weight entries row-major, then the K
  biases.  Both penalties strictly convexify the objective; the certified
  strong-convexity modulus is 2*min(sigma1, sigma2).

Minibatches are drawn with replacement and keyed by (seed, t), so any round
can be replayed without storing index lists.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .optim import FeasibleRegion


@dataclass(frozen=True)
class Dataset:
    """Feature matrix (n_samples, d) with dense integer labels in [0, K)."""

    features: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        if features.ndim != 2:
            raise ValueError("features must be a 2-d array")
        if labels.shape != (features.shape[0],):
            raise ValueError("labels must be 1-d with one entry per sample")
        if self.n_classes < 2:
            raise ValueError("need at least two classes")
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise ValueError("labels must lie in [0, n_classes)")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class MiniBatch:
    """Row indices drawn for round t."""

    indices: np.ndarray
    t: int


def synth_classification(seed: int, n_classes: int = 10, n_features: int = 20,
                         n_samples: int = 2000, separation: float = 3.0) -> Dataset:
    """Gaussian blobs with unit covariance, one per class.

    Class means are scaled standard-basis vectors (recentered to zero mean),
    so every pair of means is exactly ``separation`` apart; this needs
    n_features >= n_classes.  Labels are assigned round-robin so class
    sizes differ by at most one.
    """
    if n_classes < 2:
        raise ValueError("need at least two classes")
    if n_features < n_classes:
        raise ValueError(
            f"standard-basis means for {n_classes} classes need at least "
            f"{n_classes} features, got {n_features}")
    if n_samples < n_classes:
        raise ValueError("need at least one sample per class")
    # Scaled standard-basis corners have pairwise distance sqrt(2); recenter
    # so the blob cloud is mean-zero.
    means = np.zeros((n_classes, n_features))
    means[:, :n_classes] = np.eye(n_classes) * (separation / np.sqrt(2.0))
    means -= means.mean(axis=0, keepdims=True)
    rng = np.random.default_rng(seed)
    labels = np.arange(n_samples, dtype=np.int64) % n_classes
    features = rng.standard_normal((n_samples, n_features)) + means[labels]
    return Dataset(features=features, labels=labels, n_classes=n_classes)


def load_csv(path: str) -> Dataset:
    """Read rows of ``label, f1, ..., fd``.

    A first line whose feature fields are not all numeric is treated as a
    header and skipped (labels may be arbitrary tokens, so the label field
    says nothing).  Labels are reindexed densely in order of first
    appearance.  Ragged or non-numeric feature rows raise ValueError naming
    the offending line.
    """
    label_ids: dict[str, int] = {}
    labels: list[int] = []
    rows: list[list[float]] = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if lineno == 1 and len(parts) >= 2:
                try:
                    for p in parts[1:]:
                        float(p)
                except ValueError:
                    continue  # header row
            if len(parts) < 2:
                raise ValueError(f"{path} line {lineno}: need a label and at least one feature")
            if width is None:
                width = len(parts)
            elif len(parts) != width:
                raise ValueError(
                    f"{path} line {lineno}: expected {width} fields, got {len(parts)}")
            try:
                feats = [float(p) for p in parts[1:]]
            except ValueError as exc:
                raise ValueError(f"{path} line {lineno}: non-numeric feature: {exc}") from None
            key = parts[0]
            if key not in label_ids:
                label_ids[key] = len(label_ids)
            labels.append(label_ids[key])
            rows.append(feats)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return Dataset(features=np.array(rows), labels=np.array(labels, dtype=np.int64),
                   n_classes=len(label_ids))


def sample_batch(dataset: Dataset, m: int, t: int, seed: int) -> MiniBatch:
    """Draw m indices with replacement, deterministic in (seed, t)."""
    if m < 1:
        raise ValueError("batch size must be at least 1")
    if t < 1:
        raise ValueError("t must be >= 1")
    rng = np.random.default_rng([seed, t])
    idx = rng.integers(0, dataset.n_samples, size=m)
    return MiniBatch(indices=idx, t=t)


# ------------------------------------------------------------------ softmax


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def unpack_params(params: np.ndarray, n_classes: int, n_features: int):
    expected = n_classes * (n_features + 1)
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (expected,):
        raise ValueError(f"expected {expected} packed parameters, got shape {params.shape}")
    w = params[: n_classes * n_features].reshape(n_classes, n_features)
    b = params[n_classes * n_features:]
    return w, b


def pack_params(w: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.concatenate([np.ravel(w), np.ravel(b)])


def softmax_l2_loss(params, dataset, indices, sigma1=0.01, sigma2=0.01,
                    weights=None) -> float:
    """Objective over the given sample rows (optionally weighted)."""
    w, b = unpack_params(params, dataset.n_classes, dataset.n_features)
    x = dataset.features[indices]
    y = dataset.labels[indices]
    logp = _log_softmax(x @ w.T + b)
    picked = logp[np.arange(len(y)), y]
    if weights is None:
        data_term = -picked.mean()
    else:
        data_term = -float(picked @ weights)
    return float(data_term + sigma1 * np.sum(w * w) + sigma2 * np.sum(b * b))


def softmax_l2_grad(params, dataset, indices, sigma1=0.01, sigma2=0.01,
                    weights=None) -> np.ndarray:
    w, b = unpack_params(params, dataset.n_classes, dataset.n_features)
    x = dataset.features[indices]
    y = dataset.labels[indices]
    logp = _log_softmax(x @ w.T + b)
    p = np.exp(logp)
    p[np.arange(len(y)), y] -= 1.0
    if weights is None:
        p /= len(y)
    else:
        p *= weights[:, None]
    gw = p.T @ x + 2.0 * sigma1 * w
    gb = p.sum(axis=0) + 2.0 * sigma2 * b
    return pack_params(gw, gb)


# ------------------------------------------------------------------ quadratic


def quadratic_loss(x: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    return float(0.5 * x @ (a @ x) + b @ x)


def quadratic_grad(x: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ x + b


def finite_diff_grad(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences, one coordinate at a time."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


# ------------------------------------------------------------------ problems


class QuadraticProblem:
    """Fixed quadratic served every round.

    ``x0`` is the base initial point; ``x0_jitter`` adds a seeded +-1 pattern
    scaled by that amount so different seeds give distinct trajectories.
    """

    kind = "quadratic"

    def __init__(self, a, b, x0=None, x0_jitter: float = 0.0, sigma: float | None = None):
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("A must be square")
        if b.shape != (a.shape[0],):
            raise ValueError("b must match A")
        if np.max(np.abs(a - a.T)) > 1e-12:
            raise ValueError("A must be symmetric (tolerance 1e-12)")
        self.a = a
        self.b = b
        eigmin = float(np.linalg.eigvalsh(a)[0])
        if sigma is None:
            sigma = eigmin
        elif sigma > eigmin + 1e-12:
            raise ValueError(f"declared sigma {sigma} exceeds the smallest eigenvalue {eigmin}")
        if sigma <= 0:
            raise ValueError("quadratic must be strongly convex (smallest eigenvalue > 0)")
        self.sigma = sigma
        self.x0 = np.zeros(a.shape[0]) if x0 is None else np.asarray(x0, dtype=np.float64)
        self.x0_jitter = float(x0_jitter)

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def initial_point(self, region: FeasibleRegion, seed: int) -> np.ndarray:
        x = self.x0
        if self.x0_jitter:
            rng = np.random.default_rng([seed, 0x0FF5E7])
            x = x + self.x0_jitter * rng.choice([-1.0, 1.0], size=self.dim)
        return region.project(x)

    def round_loss_grad(self, x: np.ndarray, t: int, seed: int):
        return quadratic_loss(x, self.a, self.b), quadratic_grad(x, self.a, self.b)

    def full_loss(self, x: np.ndarray) -> float:
        return quadratic_loss(x, self.a, self.b)

    def prefix_objective(self, upto: int, seed: int):
        """Average of the first ``upto`` round losses: the quadratic itself."""
        def f(x):
            return quadratic_loss(x, self.a, self.b)

        def grad(x):
            return quadratic_grad(x, self.a, self.b)

        return f, grad, self._lipschitz_estimate()

    def _lipschitz_estimate(self, iters: int = 200) -> float:
        """Largest eigenvalue of A by power iteration."""
        rng = np.random.default_rng(3)
        v = rng.standard_normal(self.dim)
        v /= np.linalg.norm(v)
        lam = 1.0
        for _ in range(iters):
            w = self.a @ v
            lam = float(np.linalg.norm(w))
            if lam == 0.0:
                return 1.0
            v = w / lam
        return lam


class SoftmaxL2Problem:
    """Online multiclass softmax regression with L2 penalties.

    Each round serves the loss on a fresh with-replacement minibatch keyed
    by (seed, t); the full-data objective is used for reporting.
    """

    kind = "softmax_l2"

    def __init__(self, dataset: Dataset, batch_size: int = 32,
                 sigma1: float = 0.01, sigma2: float = 0.01):
        if sigma1 <= 0 or sigma2 <= 0:
            raise ValueError("sigma1 and sigma2 must be positive")
        if batch_size < 1:
            raise ValueError("batch size must be at least 1")
        self.dataset = dataset
        self.batch_size = int(batch_size)
        self.sigma1 = float(sigma1)
        self.sigma2 = float(sigma2)
        self.sigma = 2.0 * min(sigma1, sigma2)

    @property
    def dim(self) -> int:
        return self.dataset.n_classes * (self.dataset.n_features + 1)

    def initial_point(self, region: FeasibleRegion, seed: int) -> np.ndarray:
        return region.project(np.zeros(self.dim))

    def round_loss_grad(self, x: np.ndarray, t: int, seed: int):
        idx = sample_batch(self.dataset, self.batch_size, t, seed).indices
        loss = softmax_l2_loss(x, self.dataset, idx, self.sigma1, self.sigma2)
        grad = softmax_l2_grad(x, self.dataset, idx, self.sigma1, self.sigma2)
        return loss, grad

    def full_loss(self, x: np.ndarray) -> float:
        return softmax_l2_loss(x, self.dataset, np.arange(self.dataset.n_samples),
                               self.sigma1, self.sigma2)

    def prefix_objective(self, upto: int, seed: int):
        """Collapse rounds 1..upto into one weighted full-data objective.

        With-replacement sampling means the average of the round losses is
        the dataset loss weighted by how often each sample was drawn, so a
        prefix solve costs one pass over the dataset per gradient instead
        of one pass per round.
        """
        counts = np.zeros(self.dataset.n_samples, dtype=np.int64)
        for t in range(1, upto + 1):
            idx = sample_batch(self.dataset, self.batch_size, t, seed).indices
            counts += np.bincount(idx, minlength=self.dataset.n_samples)
        total = upto * self.batch_size
        weights = counts / float(total)
        rows = np.arange(self.dataset.n_samples)

        def f(x):
            return softmax_l2_loss(x, self.dataset, rows, self.sigma1, self.sigma2,
                                   weights=weights)

        def grad(x):
            return softmax_l2_grad(x, self.dataset, rows, self.sigma1, self.sigma2,
                                   weights=weights)

        # Per-sample cross-entropy Hessians are bounded by ||(x, 1)||^2 / 2,
        # so the weighted average obeys the weighted-mean bound; the
        # penalties add at most 2*max(sigma1, sigma2).
        aug = np.sum(self.dataset.features ** 2, axis=1) + 1.0
        l_est = float(0.5 * (weights @ aug) + 2.0 * max(self.sigma1, self.sigma2))
        return f, grad, l_est
