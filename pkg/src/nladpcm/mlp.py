"""Small multilayer-perceptron predictor trained by Levenberg-Marquardt.

The contract-tested topology is 10 inputs, 2 hidden units and 1 linear output
(25 parameters). The flat parameter order is ``w1`` row-major, ``b1``, ``w2``,
``b2``; it is used both by the Jacobian columns and by the text snapshot format.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

N_INPUTS = 10
N_HIDDEN = 2
ACTIVATIONS = ("tanh", "sigmoid")


class TrainingError(ArithmeticError):
    """Levenberg-Marquardt hit a singular or non-finite system."""


def _act(z, activation):
    if activation == "tanh":
        return np.tanh(z)
    return 0.5 * (1.0 + np.tanh(0.5 * z))  # overflow-free logistic


def _act_deriv(a, activation):
    if activation == "tanh":
        return 1.0 - a * a
    return a * (1.0 - a)


def n_params(n_inputs: int = N_INPUTS, n_hidden: int = N_HIDDEN) -> int:
    return n_hidden * n_inputs + 2 * n_hidden + 1


@dataclass
class MlpWeights:
    """Parameters of a one-hidden-layer perceptron with scalar linear output.

    ``w1`` has shape (hidden, inputs), ``b1`` and ``w2`` have length hidden,
    ``b2`` is a float.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float
    activation: str = "tanh"

    def __post_init__(self):
        self.w1 = np.array(self.w1, dtype=np.float64, ndmin=2)
        self.b1 = np.array(self.b1, dtype=np.float64).reshape(-1)
        self.w2 = np.array(self.w2, dtype=np.float64).reshape(-1)
        self.b2 = float(self.b2)
        h = self.w1.shape[0]
        if self.b1.shape != (h,) or self.w2.shape != (h,):
            raise ValueError("inconsistent layer shapes")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def n_inputs(self) -> int:
        return self.w1.shape[1]

    @property
    def n_hidden(self) -> int:
        return self.w1.shape[0]

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.b1, self.w2, [self.b2]])

    @classmethod
    def from_vector(cls, theta, n_inputs=N_INPUTS, n_hidden=N_HIDDEN, activation="tanh"):
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (n_params(n_inputs, n_hidden),):
            raise ValueError(
                f"expected {n_params(n_inputs, n_hidden)} parameters, got {theta.shape}"
            )
        k = n_hidden * n_inputs
        return cls(
            theta[:k].reshape(n_hidden, n_inputs),
            theta[k : k + n_hidden],
            theta[k + n_hidden : k + 2 * n_hidden],
            theta[-1],
            activation,
        )

    def like(self, theta) -> "MlpWeights":
        return MlpWeights.from_vector(theta, self.n_inputs, self.n_hidden, self.activation)

    @classmethod
    def zeros(cls, n_inputs=N_INPUTS, n_hidden=N_HIDDEN, activation="tanh"):
        return cls.from_vector(np.zeros(n_params(n_inputs, n_hidden)), n_inputs, n_hidden, activation)

    @classmethod
    def random(cls, rng, scale=0.2, n_inputs=N_INPUTS, n_hidden=N_HIDDEN, activation="tanh"):
        theta = rng.uniform(-scale, scale, n_params(n_inputs, n_hidden))
        return cls.from_vector(theta, n_inputs, n_hidden, activation)

    def is_zero(self) -> bool:
        return not np.any(self.to_vector())


def format_weights(weights: MlpWeights) -> str:
    """Flat snapshot, one decimal value per line, in parameter order."""
    return "\n".join(repr(float(v)) for v in weights.to_vector()) + "\n"


def parse_weights(text: str, n_inputs=N_INPUTS, n_hidden=N_HIDDEN, activation="tanh") -> MlpWeights:
    values = [float(tok) for tok in text.split()]
    return MlpWeights.from_vector(values, n_inputs, n_hidden, activation)


@dataclass
class TrainingSet:
    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        self.inputs = np.ascontiguousarray(self.inputs, dtype=np.float64)
        self.targets = np.ascontiguousarray(self.targets, dtype=np.float64).reshape(-1)
        if self.inputs.ndim != 2 or len(self.inputs) != len(self.targets):
            raise ValueError("inputs must be (N, p) with one target per row")

    def __len__(self):
        return len(self.targets)

    @classmethod
    def from_window(cls, window, n_inputs: int = N_INPUTS) -> "TrainingSet":
        """Slide a ``n_inputs`` context over ``window``; each row predicts the next sample."""
        w = np.asarray(window, dtype=np.float64)
        if len(w) <= n_inputs:
            raise ValueError(f"window of {len(w)} samples gives no training pair")
        ctx = np.lib.stride_tricks.sliding_window_view(w[:-1], n_inputs)
        return cls(ctx.copy(), w[n_inputs:].copy())


def mlp_forward(weights: MlpWeights, inputs) -> np.ndarray | float:
    """Network output for one input vector (returns float) or a batch of rows."""
    x = np.asarray(inputs, dtype=np.float64)
    hidden = _act(x @ weights.w1.T + weights.b1, weights.activation)
    return hidden @ weights.w2 + weights.b2 if x.ndim > 1 else float(hidden @ weights.w2 + weights.b2)


def mlp_jacobian(weights: MlpWeights, data) -> np.ndarray:
    """d(output_k)/d(theta), one row per training pattern, flat parameter order."""
    x = data.inputs if isinstance(data, TrainingSet) else np.atleast_2d(np.asarray(data, float))
    a = _act(x @ weights.w1.T + weights.b1, weights.activation)
    g = _act_deriv(a, weights.activation) * weights.w2
    n, h = a.shape
    return np.hstack([
        (g[:, :, None] * x[:, None, :]).reshape(n, -1),
        g,
        a,
        np.ones((n, 1)),
    ])


def sse(weights: MlpWeights, data: TrainingSet) -> float:
    e = data.targets - mlp_forward(weights, data.inputs)
    return float(e @ e)


@dataclass
class TrainConfig:
    epochs: int = 6
    lambda_init: float = 1e-2
    lambda_up: float = 10.0
    lambda_down: float = 0.1
    lambda_max: float = 1e10

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if not (0.0 < self.lambda_down < 1.0 < self.lambda_up):
            raise ValueError("need 0 < lambda_down < 1 < lambda_up")
        if not (self.lambda_init > 0 and self.lambda_max > 0):
            raise ValueError("lambda_init and lambda_max must be positive")

    def with_epochs(self, epochs: int) -> "TrainConfig":
        return TrainConfig(epochs, self.lambda_init, self.lambda_up, self.lambda_down, self.lambda_max)


def lm_train(weights: MlpWeights, data: TrainingSet, config: TrainConfig | None = None):
    """Full-batch Levenberg-Marquardt.

    One epoch is one accepted step, or a run of rejected steps that ends when
    lambda exceeds ``lambda_max`` (training then stops). A step is accepted
    only if it strictly lowers the sum of squared errors, so the returned
    weights are always the best seen.

    Returns ``(weights, sse)``.
    """
    config = config or TrainConfig()
    if len(data) == 0:
        raise ValueError("empty training set")
    theta = weights.to_vector()
    e = data.targets - mlp_forward(weights, data.inputs)
    err = float(e @ e)
    if not np.isfinite(err):
        raise TrainingError("non-finite initial error")
    lam = config.lambda_init
    eye = np.eye(len(theta))
    current = weights
    for _ in range(config.epochs):
        jac = mlp_jacobian(current, data)
        grad = jac.T @ e
        hess = jac.T @ jac
        accepted = False
        while lam <= config.lambda_max:
            try:
                step = np.linalg.solve(hess + lam * eye, grad)
            except np.linalg.LinAlgError as exc:
                raise TrainingError(f"singular LM system at lambda={lam:g}") from exc
            if not np.all(np.isfinite(step)):
                raise TrainingError(f"non-finite LM step at lambda={lam:g}")
            trial = current.like(theta + step)
            e_trial = data.targets - mlp_forward(trial, data.inputs)
            err_trial = float(e_trial @ e_trial)
            if err_trial < err:
                theta, current, e, err = theta + step, trial, e_trial, err_trial
                lam *= config.lambda_down
                accepted = True
                break
            lam *= config.lambda_up
        if not accepted:
            break
    return current, err


class MultistartResult(NamedTuple):
    weights: MlpWeights
    selected_prev: bool
    score: float
    failed: int


def candidate_rng(rng_seed: int, index: int) -> np.random.Generator:
    """Generator for random candidate ``index``; independent of how many candidates run."""
    return np.random.default_rng(np.random.SeedSequence(rng_seed, spawn_key=(index,)))


def multistart_train(
    prev_weights: Optional[MlpWeights],
    data: TrainingSet,
    n_random: int = 3,
    epochs_random: int = 6,
    epochs_prev: int = 3,
    eval_data: Optional[TrainingSet] = None,
    rng_seed: int = 0,
    config: TrainConfig | None = None,
    score: Optional[Callable[[MlpWeights], float]] = None,
    init_scale: float = 0.2,
    n_inputs: int = N_INPUTS,
    n_hidden: int = N_HIDDEN,
    activation: str = "tanh",
) -> MultistartResult:
    """Train several initializations and keep the best one.

    Candidates are the previous weights (trained ``epochs_prev`` epochs) and
    ``n_random`` uniform draws in ``[-init_scale, init_scale]`` (trained
    ``epochs_random`` epochs). Each is scored by ``score`` (lower is better),
    by default the open-loop SSE on ``eval_data`` (or ``data``). Ties go to the
    previous weights, then to the lowest random index. Candidates whose
    training fails are skipped.
    """
    if n_random < 1 and prev_weights is None:
        raise ValueError("need at least one candidate")
    config = config or TrainConfig()
    eval_data = data if eval_data is None else eval_data
    if score is None:
        def score(w):
            return sse(w, eval_data)
    if prev_weights is not None:
        n_inputs, n_hidden, activation = prev_weights.n_inputs, prev_weights.n_hidden, prev_weights.activation

    starts = []
    if prev_weights is not None:
        starts.append((True, prev_weights, epochs_prev))
    for k in range(n_random):
        init = MlpWeights.random(candidate_rng(rng_seed, k), init_scale, n_inputs, n_hidden, activation)
        starts.append((False, init, epochs_random))

    best = None
    failed = 0
    for is_prev, init, epochs in starts:
        try:
            trained, _ = lm_train(init, data, config.with_epochs(epochs))
        except TrainingError:
            failed += 1
            continue
        value = float(score(trained))
        if not np.isfinite(value):
            failed += 1
            continue
        if best is None or value < best.score:
            best = MultistartResult(trained, is_prev, value, 0)
    if best is None:
        raise TrainingError(f"all {len(starts)} candidates failed")
    return best._replace(failed=failed)
