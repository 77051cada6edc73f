"""Open-loop recording and batch least-squares readout training.

The reservoir runs once over the whole input sequence while every sample's
estimated voltages are stacked into a state matrix; readout weights are then
solved offline.  Neurons sitting near their resting voltage contribute a
quasi-constant column, so no explicit bias regressor is added.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fabric import Fabric, ReservoirConfig


class IllConditionedError(np.linalg.LinAlgError):
    """Normal equations too close to singular to solve without a ridge."""

    def __init__(self, smallest_singular_value: float):
        super().__init__(
            "state covariance is numerically singular "
            f"(smallest singular value {smallest_singular_value:.3e}); "
            "set a ridge term to regularize"
        )
        self.smallest_singular_value = smallest_singular_value


@dataclass
class Recording:
    """One open-loop pass: the input driven and the states read back."""

    states: np.ndarray  # (T, N) estimated voltages
    inputs: np.ndarray  # (T,)
    sample_period: float
    seed: int


def record(
    config: ReservoirConfig,
    inputs: np.ndarray,
    sample_period: float,
    fabric: Fabric | None = None,
) -> Recording:
    """Drive the input sequence from reset and collect one state row per sample."""
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 1:
        raise ValueError(f"inputs must be one-dimensional, got shape {inputs.shape}")
    if inputs.size and (np.abs(inputs) > 1.0).any():
        bad = int(np.argmax(np.abs(inputs) > 1.0))
        raise ValueError(f"input sample {bad} out of [-1, 1]: {inputs[bad]}")
    if fabric is None:
        fabric = Fabric(config)
    fabric.reset()
    states = np.empty((inputs.size, config.n))
    for t, u in enumerate(inputs.tolist()):
        states[t] = fabric.run_until_sample(u, sample_period).voltages
    return Recording(
        states=states, inputs=inputs, sample_period=sample_period, seed=config.seed
    )


@dataclass(frozen=True)
class SplitPolicy:
    """Contiguous ignore / train / test partition of a recording."""

    ignore_frac: float = 0.10
    train_frac: float = 0.70
    test_frac: float = 0.20

    def __post_init__(self):
        for name in ("ignore_frac", "train_frac", "test_frac"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        total = self.ignore_frac + self.train_frac + self.test_frac
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {total}")


def split(n_samples: int, policy: SplitPolicy = SplitPolicy()) -> tuple[range, range, range]:
    """Partition [0, n_samples) into ignore/train/test index ranges.

    Boundaries are cumulative floors so the three parts always tile the
    full range; the test part absorbs any rounding slack.
    """
    if n_samples < 0:
        raise ValueError("n_samples must be nonnegative")

    def floor_boundary(x: float) -> int:
        # 0.1 + 0.7 rounds to 0.7999999999999999 in binary, which would pull
        # a boundary one sample early; nudge by a few ulps before flooring
        return int(np.floor(x + 8.0 * np.finfo(float).eps * max(1.0, x)))

    b1 = floor_boundary(n_samples * policy.ignore_frac)
    b2 = floor_boundary(n_samples * (policy.ignore_frac + policy.train_frac))
    return range(0, b1), range(b1, b2), range(b2, n_samples)


def auto_ridge(states: np.ndarray) -> float:
    """Default ridge scale: tiny relative to the mean regressor energy."""
    n = states.shape[1]
    return 1e-8 * float(np.trace(states.T @ states)) / n


def lsm_fit(
    states: np.ndarray, targets: np.ndarray, ridge: float | str | None = "auto"
) -> np.ndarray:
    """Solve the normal equations for readout weights, optionally ridged.

    targets may be (T,) or (T, K); the weight shape follows.  With
    ridge=None or 0 a singular system raises IllConditionedError instead of
    returning garbage.
    """
    states = np.asarray(states, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if states.ndim != 2:
        raise ValueError("states must be (T, N)")
    if targets.shape[0] != states.shape[0]:
        raise ValueError(
            f"targets length {targets.shape[0]} does not match {states.shape[0]} samples"
        )
    if ridge == "auto":
        ridge_value = auto_ridge(states)
    else:
        ridge_value = float(ridge or 0.0)
    if ridge_value < 0.0:
        raise ValueError("ridge must be nonnegative")
    gram = states.T @ states
    if ridge_value > 0.0:
        gram = gram + ridge_value * np.eye(states.shape[1])
    rhs = states.T @ targets
    try:
        # cholesky doubles as the positive-definiteness check
        np.linalg.cholesky(gram)
        return np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        smallest = float(np.linalg.svd(gram, compute_uv=False)[-1]) if gram.size else 0.0
        raise IllConditionedError(smallest) from None


def predict_series(states: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Readout output for every sample: one dot product per row."""
    return np.asarray(states) @ np.asarray(weights)
