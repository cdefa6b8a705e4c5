"""Block-residue detector for effective sensor attacks.

For a subset s the detector runs the stationary Kalman filter on the raw
outputs, forms the window residues

    r_s(t) = ybar_s(t) - O_s x_hat_s(t),

and compares the sample average of r_s r_s' over the test window against
its exact attack-free expectation:

    prediction:  O_s P O_s' + M_s
    filtering:   O_s F O_s' + M_s - D - D'

where M_s is the window noise covariance and D the same-time
cross-covariance correction.  The test is one-sided and elementwise: the
subset passes when no entry of (sample - expected) exceeds the threshold
eta.  An attack that inflates the realized estimation error beyond the
attack-free optimum by more than epsilon pushes some entry of the sample
average up, so a suitably small eta catches it; `auto_threshold` applies
the largest eta with that guarantee.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import AnalysisError, ConfigError
from .kalman import (
    FILTERING,
    PREDICTION,
    FilterRun,
    SteadyStateFilter,
    cross_covariance_correction,
    run_filter,
    solve_steady_state,
)
from .model import SystemModel, Trajectory
from .observability import (
    SensorSubset,
    block_output_matrix,
    min_gram_eigenvalue,
    normalize_subset,
    observability_matrix,
    noise_structure,
)

__all__ = [
    "DetectorConfig",
    "ResidueReport",
    "auto_threshold",
    "attack_detect",
    "residue_report",
    "expected_residue_matrix",
    "effective_attack_oracle",
]


@dataclass(frozen=True)
class DetectorConfig:
    """Window, threshold, and mode of the residue test.

    ``eta`` is the elementwise threshold; leave it None to derive the
    largest admissible value from (epsilon, k) per subset.  ``N`` is the
    window length (rounded up to a multiple of n at use time); ``t1``
    the window start, late enough for the filter transient to die out.
    """

    epsilon: float
    N: int = 20000
    t1: int = 200
    mode: str = PREDICTION
    eta: float | None = None
    k: int | None = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.N < 1 or self.t1 < 0:
            raise ConfigError("N must be >= 1 and t1 >= 0")
        if self.mode not in (PREDICTION, FILTERING):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.eta is None and self.k is None:
            raise ConfigError("either eta or k (for the auto threshold) is required")
        if self.eta is not None and self.eta <= 0:
            raise ConfigError("eta must be positive")

    def window_length(self, n: int) -> int:
        """N rounded up to the next multiple of the state dimension."""
        return int(math.ceil(self.N / n) * n)

    def threshold_for(self, model: SystemModel, s: Iterable[int]) -> float:
        if self.eta is not None:
            return self.eta
        assert self.k is not None
        return auto_threshold(model, s, self.k, self.epsilon)


@dataclass(frozen=True)
class ResidueReport:
    """Outcome of one residue test."""

    subset: SensorSubset
    mode: str
    sample_matrix: np.ndarray    # (n|s|, n|s|) sample average of r r'
    expected_matrix: np.ndarray  # attack-free expectation of r r'
    max_deviation: float         # max entry of sample - expected
    eta: float
    passed: bool
    per_sensor_mu: dict[int, float]  # normalized per-sensor residue scores
    n_samples: int
    t1: int

    def to_dict(self) -> dict:
        return {
            "subset": list(self.subset),
            "mode": self.mode,
            "sample_matrix": self.sample_matrix.tolist(),
            "expected_matrix": self.expected_matrix.tolist(),
            "max_deviation": self.max_deviation,
            "eta": self.eta,
            "passed": self.passed,
            "per_sensor_mu": {str(i): v for i, v in self.per_sensor_mu.items()},
            "n_samples": self.n_samples,
            "t1": self.t1,
        }


def auto_threshold(
    model: SystemModel, s: Iterable[int], k: int, epsilon: float
) -> float:
    """Largest admissible elementwise threshold for subset s against an
    adversary on at most k sensors:

        eta = min_gram_eigenvalue(s, k) * epsilon / (3 n (|s| - k))
    """
    subset = normalize_subset(s, model.p)
    if len(subset) <= k:
        raise ConfigError(f"need |s| > k, got |s|={len(subset)}, k={k}")
    lam = min_gram_eigenvalue(model, subset, k)
    if lam <= 0.0:
        raise AnalysisError(
            f"some {len(subset) - k}-sensor subset of {subset} is unobservable; "
            "no positive threshold exists"
        )
    return lam * epsilon / (3.0 * model.n * (len(subset) - k))


def expected_residue_matrix(
    model: SystemModel, s: Iterable[int], flt: SteadyStateFilter
) -> np.ndarray:
    """Attack-free expectation of the window-residue outer product."""
    subset = normalize_subset(s, model.p)
    Os = observability_matrix(model, subset).stacked
    M = noise_structure(model, subset).cov
    if flt.mode == PREDICTION:
        return Os @ flt.error_cov @ Os.T + M
    assert flt.filtered_cov is not None
    D = cross_covariance_correction(model, subset, flt)
    return Os @ flt.filtered_cov @ Os.T + M - D - D.T


def sensor_gram_maxima(model: SystemModel) -> dict[int, float]:
    """Largest eigenvalue of O_i' O_i per sensor (normalization constants
    for the per-sensor residue scores)."""
    bundle = observability_matrix(model, range(1, model.p + 1))
    return {
        i: float(np.linalg.eigvalsh(Oi.T @ Oi)[-1])
        for i, Oi in bundle.blocks.items()
    }


def residue_report(
    model: SystemModel,
    traj: Trajectory,
    s: Iterable[int],
    cfg: DetectorConfig,
    flt: SteadyStateFilter,
    run: FilterRun,
    expected: np.ndarray | None = None,
    stacked_obs: np.ndarray | None = None,
    gram_maxima: dict[int, float] | None = None,
) -> ResidueReport:
    """Residue test given an already-run filter.

    ``run`` must cover the window [t1, t1 + N - 1].  ``expected``,
    ``stacked_obs`` and ``gram_maxima`` only depend on (model, subset)
    and may be passed in when precomputed by a filter bank.
    """
    subset = normalize_subset(s, model.p)
    n = model.n
    N = cfg.window_length(n)
    eta = cfg.threshold_for(model, subset)
    ybar = block_output_matrix(traj, subset, cfg.t1, N)
    est = run.window(cfg.t1, N)
    Os = (
        stacked_obs
        if stacked_obs is not None
        else observability_matrix(model, subset).stacked
    )
    residues = ybar - est @ Os.T  # (N, n|s|)
    sample = residues.T @ residues / N
    if expected is None:
        expected = expected_residue_matrix(model, subset, flt)
    deviation = sample - expected
    max_dev = float(deviation.max())
    passed = max_dev <= eta

    # Per-sensor scores for conflict localization: trace deviation on the
    # sensor's diagonal block, offset by eta*n and normalized by the
    # sensor's observability energy.
    mu: dict[int, float] = {}
    for idx, i in enumerate(subset):
        block = slice(idx * n, (idx + 1) * n)
        tr_dev = float(np.trace(deviation[block, block]))
        if gram_maxima is not None:
            lam_max = gram_maxima[i]
        else:
            Oi = Os[block]
            lam_max = float(np.linalg.eigvalsh(Oi.T @ Oi)[-1])
        mu[i] = abs(tr_dev - eta * n) / lam_max
    return ResidueReport(
        subset=subset,
        mode=cfg.mode,
        sample_matrix=sample,
        expected_matrix=expected,
        max_deviation=max_dev,
        eta=eta,
        passed=passed,
        per_sensor_mu=mu,
        n_samples=N,
        t1=cfg.t1,
    )


def attack_detect(
    model: SystemModel,
    traj: Trajectory,
    s: Iterable[int],
    cfg: DetectorConfig,
) -> tuple[int, FilterRun, ResidueReport]:
    """Run the residue test for subset s; flag 0 means no effective
    attack was detected, flag 1 means the subset failed the test."""
    subset = normalize_subset(s, model.p)
    n = model.n
    N = cfg.window_length(n)
    need = cfg.t1 + N + n - 1
    if traj.horizon < need:
        raise ConfigError(
            f"horizon {traj.horizon} too short: window needs at least {need} steps"
        )
    flt = solve_steady_state(model, subset, cfg.mode)
    run = run_filter(flt, traj, cfg.t1, cfg.t1 + N - 1)
    report = residue_report(model, traj, subset, cfg, flt, run)
    flag = 0 if report.passed else 1
    return flag, run, report


def effective_attack_oracle(
    traj: Trajectory,
    estimates: FilterRun,
    P_ref: np.ndarray,
    epsilon: float,
    t1: int,
    N: int,
) -> bool:
    """Ground-truth effectiveness check (simulation only): does the
    sample average of the squared estimation error exceed the attack-free
    optimum trace by more than epsilon?

    ``P_ref`` is the prediction or filtered steady covariance matching
    the estimates' mode.
    """
    if t1 + N - 1 >= traj.horizon:
        raise ConfigError("oracle window exceeds trajectory horizon")
    err = traj.states[t1 : t1 + N] - estimates.window(t1, N)
    sample_trace = float(np.mean(np.sum(err * err, axis=1)))
    return sample_trace > float(np.trace(P_ref)) + epsilon
