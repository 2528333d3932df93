"""Synthetic convex test problems with known optima and controllable noise.

Two families: diagonal quadratics (closed-form optimum, additive noise with a
declared variance) and multi-class logistic regression on a seeded Gaussian
mixture (noise arises from minibatching). Both expose exact gradients so
gradient-error estimation can run in exact mode and finite-difference checks
have something to check against.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    CAP_EXACT_GRADIENT,
    CAP_OBJECTIVE,
    CAP_OPTIMUM_POINT,
    CAP_OPTIMUM_VALUE,
    GradientSample,
    ParamVector,
    make_rng,
)
from .errors import ConfigError

NOISE_KINDS = ("none", "gaussian", "bounded_uniform", "sub_gaussian_mix")


@dataclass(frozen=True)
class NoiseModel:
    """Additive per-coordinate gradient noise.

    gaussian:        N(0, level^2) per coordinate
    bounded_uniform: U[-level, level], so the noisy gradient's max norm
                     exceeds the exact one by at most level
    sub_gaussian_mix: equal mixture of N(0, (level/2)^2) and N(0, level^2)
                     draws per coordinate; sub-Gaussian with factor ~level
    """

    kind: str = "none"
    level: float = 0.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ConfigError(f"unknown noise kind {self.kind!r}, expected one of {NOISE_KINDS}")
        if self.kind != "none" and not self.level > 0.0:
            raise ConfigError(f"noise level must be positive for kind {self.kind!r}")

    def sample(self, rng: np.random.Generator, d: int) -> ParamVector | None:
        """One noise vector, or None for the noiseless kind."""
        if self.kind == "none":
            return None
        if self.kind == "gaussian":
            return self.level * rng.standard_normal(d)
        if self.kind == "bounded_uniform":
            return rng.uniform(-self.level, self.level, d)
        scale = np.where(rng.random(d) < 0.5, 0.5 * self.level, self.level)
        return scale * rng.standard_normal(d)


@dataclass(frozen=True, eq=False)
class QuadraticProblem:
    """f(x) = 1/2 sum_i diag_i (x_i - x*_i)^2 with f* = 0 and L = max diag."""

    diag: ParamVector
    x_star: ParamVector
    noise: NoiseModel = field(default_factory=NoiseModel)
    capabilities = frozenset(
        {CAP_EXACT_GRADIENT, CAP_OBJECTIVE, CAP_OPTIMUM_VALUE, CAP_OPTIMUM_POINT}
    )

    def __post_init__(self):
        if self.diag.shape != self.x_star.shape or self.diag.ndim != 1:
            raise ConfigError("diag and x_star must be 1-D with matching shapes")
        if np.any(self.diag <= 0.0):
            raise ConfigError("diag must be positive coordinate-wise")

    @property
    def dimension(self) -> int:
        return self.diag.shape[0]

    def lipschitz_constant(self) -> float:
        return float(self.diag.max())

    def objective(self, x: ParamVector) -> float:
        r = x - self.x_star
        return 0.5 * float(np.dot(self.diag, r * r))

    def exact_gradient(self, x: ParamVector) -> ParamVector:
        return self.diag * (x - self.x_star)

    def stochastic_gradient(self, x: ParamVector, rng: np.random.Generator) -> GradientSample:
        g = self.diag * (x - self.x_star)
        eta = self.noise.sample(rng, self.dimension)
        if eta is not None:
            g = g + eta
        return GradientSample(gradient=g)

    def optimum_value(self) -> float:
        return 0.0

    def optimum_point(self) -> ParamVector:
        return self.x_star.copy()


def make_quadratic(
    dim: int,
    condition_number: float,
    seed: int,
    noise: NoiseModel | None = None,
) -> QuadraticProblem:
    """Diagonal quadratic with eigenvalues log-uniform on [1, kappa].

    The endpoints are pinned exactly so L = kappa holds to the bit; dim = 1
    degenerates to diag = [kappa]. x* is drawn uniformly from [-1, 1]^d.
    """
    if condition_number < 1.0:
        raise ConfigError(f"condition number must be >= 1, got {condition_number}")
    if dim < 1:
        raise ConfigError(f"dimension must be >= 1, got {dim}")
    kappa = float(condition_number)
    if dim == 1:
        diag = np.array([kappa])
    else:
        diag = kappa ** np.linspace(0.0, 1.0, dim)
        diag[0] = 1.0
        diag[-1] = kappa
    rng = make_rng(seed)
    x_star = rng.uniform(-1.0, 1.0, dim)
    return QuadraticProblem(diag=diag, x_star=x_star, noise=noise or NoiseModel())


def finite_difference_check(problem, x: ParamVector, step: float = 1e-5) -> float:
    """Max relative error between central differences and the exact gradient.

    Coordinates whose exact gradient is below 1e-8 in magnitude are compared
    absolutely instead (a relative error against ~0 is meaningless). The
    default step balances truncation against cancellation for double
    precision at the objective scales used here.
    """
    g = problem.exact_gradient(x)
    err = 0.0
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = step
        fd = (problem.objective(x + e) - problem.objective(x - e)) / (2.0 * step)
        diff = abs(fd - g[i])
        if abs(g[i]) >= 1e-8:
            diff /= abs(g[i])
        err = max(err, diff)
    return err


def _row_max(Z: np.ndarray) -> np.ndarray:
    # Column sweep: axis-1 reductions on short rows are slow in numpy.
    m = Z[:, 0].copy()
    for j in range(1, Z.shape[1]):
        np.maximum(m, Z[:, j], out=m)
    return m


def _row_sum(Z: np.ndarray) -> np.ndarray:
    s = Z[:, 0].copy()
    for j in range(1, Z.shape[1]):
        s += Z[:, j]
    return s


def _softmax_rows(Z: np.ndarray) -> np.ndarray:
    m = _row_max(Z)
    P = np.exp(Z - m[:, None])
    P /= _row_sum(P)[:, None]
    return P


@dataclass(frozen=True, eq=False)
class LogisticProblem:
    """Multi-class logistic regression; parameters are the flattened d x C
    weight matrix, the objective is mean cross-entropy plus 1/2 l2 ||w||^2.

    The stochastic gradient averages a uniformly drawn (with replacement)
    minibatch, which makes it exactly unbiased; mini_batch == n short-circuits
    to the full batch and consumes no randomness.
    """

    features: np.ndarray
    labels: np.ndarray
    classes: int
    mini_batch: int = 128
    l2: float = 0.0
    capabilities = frozenset({CAP_EXACT_GRADIENT, CAP_OBJECTIVE})

    def __post_init__(self):
        n, _ = self.features.shape
        if self.labels.shape != (n,):
            raise ConfigError("labels must have one entry per sample")
        if self.classes < 2:
            raise ConfigError(f"need at least 2 classes, got {self.classes}")
        if np.any(self.labels < 0) or np.any(self.labels >= self.classes):
            raise ConfigError("labels must lie in [0, classes)")
        if not 1 <= self.mini_batch <= n:
            raise ConfigError(f"mini_batch must lie in [1, {n}], got {self.mini_batch}")
        if self.l2 < 0.0:
            raise ConfigError(f"l2 must be >= 0, got {self.l2}")
        object.__setattr__(self, "_rows", np.arange(n))
        object.__setattr__(self, "_brows", np.arange(self.mini_batch))

    @property
    def dimension(self) -> int:
        return self.features.shape[1] * self.classes

    def _weights(self, w: ParamVector) -> np.ndarray:
        return w.reshape(self.features.shape[1], self.classes)

    def objective(self, w: ParamVector) -> float:
        W = self._weights(w)
        Z = self.features @ W
        m = _row_max(Z)
        corr = Z[self._rows, self.labels]
        lse = m + np.log(_row_sum(np.exp(Z - m[:, None])))
        loss = float(np.mean(lse - corr))
        if self.l2 > 0.0:
            loss += 0.5 * self.l2 * float(np.dot(w, w))
        return loss

    def _batch_gradient(self, W: np.ndarray, X: np.ndarray, y: np.ndarray, rows: np.ndarray) -> np.ndarray:
        P = _softmax_rows(X @ W)
        P[rows, y] -= 1.0
        G = X.T @ P
        G /= X.shape[0]
        if self.l2 > 0.0:
            G += self.l2 * W
        return G.ravel()

    def exact_gradient(self, w: ParamVector) -> ParamVector:
        return self._batch_gradient(self._weights(w), self.features, self.labels, self._rows)

    def stochastic_gradient(self, w: ParamVector, rng: np.random.Generator) -> GradientSample:
        n = self.features.shape[0]
        if self.mini_batch == n:
            return GradientSample(gradient=self.exact_gradient(w))
        idx = rng.integers(0, n, self.mini_batch)
        g = self._batch_gradient(
            self._weights(w), self.features[idx], self.labels[idx], self._brows
        )
        return GradientSample(gradient=g)

    def lipschitz_bound(self) -> float:
        """Smoothness bound 0.5 * lambda_max(X^T X)/n + l2 for the objective."""
        n = self.features.shape[0]
        gram = self.features.T @ self.features
        return 0.5 * float(np.linalg.eigvalsh(gram)[-1]) / n + self.l2


def make_logistic_synthetic(
    n: int,
    d: int,
    classes: int,
    separation: float,
    seed: int,
    mini_batch: int = 128,
    l2: float = 0.0,
) -> LogisticProblem:
    """Gaussian-mixture classification data: class means on a sphere of radius
    `separation`, unit isotropic noise around them, labels spread round-robin
    then shuffled (n = classes gives exactly one point per class).
    """
    if classes < 2 or n < classes:
        raise ConfigError(f"need n >= classes >= 2, got n={n}, classes={classes}")
    if d < 1:
        raise ConfigError(f"dimension must be >= 1, got {d}")
    if separation < 0.0:
        raise ConfigError(f"separation must be >= 0, got {separation}")
    rng = make_rng(seed)
    means = rng.standard_normal((classes, d))
    norms = np.sqrt((means * means).sum(axis=1, keepdims=True))
    means = separation * means / norms
    labels = np.arange(n, dtype=np.int64) % classes
    rng.shuffle(labels)
    features = means[labels] + rng.standard_normal((n, d))
    return LogisticProblem(
        features=features,
        labels=labels,
        classes=classes,
        mini_batch=min(mini_batch, n),
        l2=l2,
    )


def load_dataset_csv(path, classes: int | None = None, mini_batch: int = 128, l2: float = 0.0) -> LogisticProblem:
    """Load a dataset file: header row, one sample per line, label last.

    Untested against any published benchmark numbers; a convenience for users
    with their own data.
    """
    path = Path(path)
    try:
        raw = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.float64, ndmin=2)
    except OSError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: malformed dataset CSV ({exc})") from exc
    if raw.shape[1] < 2:
        raise ConfigError(f"{path}: need at least one feature column plus the label")
    features = raw[:, :-1]
    labels = raw[:, -1]
    if np.any(labels != np.round(labels)):
        raise ConfigError(f"{path}: labels (last column) must be integers")
    labels = labels.astype(np.int64)
    n_classes = classes if classes is not None else int(labels.max()) + 1
    return LogisticProblem(
        features=features,
        labels=labels,
        classes=n_classes,
        mini_batch=min(mini_batch, features.shape[0]),
        l2=l2,
    )
