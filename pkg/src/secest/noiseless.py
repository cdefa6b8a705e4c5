"""Exact attack detection and correction for noiseless plants.

Without noise, sensor d's outputs over an n-step window form a symbol
Y_d = O_d x(0); the p symbols make up an observation vector that plays
the role of a codeword for the initial state.  If the system stays
observable after removing any theta sensors, observation vectors of
distinct states differ in at least theta + 1 symbols, which yields the
classic coding bounds: corruptions of up to theta symbols are
detectable, and fewer than (theta + 1)/2 are correctable.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import AnalysisError, ConfigError
from .model import SystemModel
from .observability import (
    SensorSubset,
    full_subset,
    is_observable,
    observability_matrix,
    sparse_observability_index,
)

__all__ = [
    "SymbolObservation",
    "DecodeResult",
    "encode",
    "detect_corruption",
    "decode",
    "min_symbol_distance",
]

# Least-squares residual below CONSISTENCY_RTOL * (1 + |Y|) counts as an
# exact fit; states within STATE_MATCH_RTOL of each other count as equal
# when checking uniqueness.
CONSISTENCY_RTOL = 1e-8
STATE_MATCH_RTOL = 1e-6


@dataclass(frozen=True)
class SymbolObservation:
    """One n-vector symbol per sensor, row d-1 holding sensor d's window."""

    symbols: np.ndarray  # (p, n)

    def __post_init__(self):
        sym = np.atleast_2d(np.asarray(self.symbols, dtype=float))
        object.__setattr__(self, "symbols", sym)

    @property
    def p(self) -> int:
        return self.symbols.shape[0]

    def with_symbols(self, replacements: dict[int, np.ndarray]) -> "SymbolObservation":
        """Copy with the given sensors' symbols (1-based) replaced."""
        out = self.symbols.copy()
        for sensor, value in replacements.items():
            if not 1 <= sensor <= self.p:
                raise ConfigError(f"sensor {sensor} out of range 1..{self.p}")
            out[sensor - 1] = np.asarray(value, dtype=float)
        return SymbolObservation(out)


@dataclass(frozen=True)
class DecodeResult:
    state: np.ndarray
    corrupted: SensorSubset
    unique: bool


def encode(model: SystemModel, x0: np.ndarray) -> SymbolObservation:
    """Clean observation vector of initial state x0: Y_d = O_d x0."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != model.n:
        raise ConfigError(f"x0 has length {x0.shape[0]}, expected {model.n}")
    bundle = observability_matrix(model, full_subset(model.p))
    symbols = np.vstack([bundle.blocks[d] @ x0 for d in range(1, model.p + 1)])
    return SymbolObservation(symbols)


def _fit(stacked_O: np.ndarray, stacked_Y: np.ndarray) -> tuple[np.ndarray, float]:
    x, *_ = np.linalg.lstsq(stacked_O, stacked_Y, rcond=None)
    residual = float(np.linalg.norm(stacked_O @ x - stacked_Y))
    return x, residual


def detect_corruption(model: SystemModel, obs: SymbolObservation) -> bool:
    """True when no single state explains all symbols simultaneously."""
    if obs.p != model.p:
        raise ConfigError("observation does not match the model's sensor count")
    if not is_observable(model, full_subset(model.p)):
        raise AnalysisError("full sensor set is not observable")
    bundle = observability_matrix(model, full_subset(model.p))
    Y = obs.symbols.reshape(-1)
    _, residual = _fit(bundle.stacked, Y)
    return residual > CONSISTENCY_RTOL * (1.0 + float(np.linalg.norm(Y)))


def decode(
    model: SystemModel,
    obs: SymbolObservation,
    k: int,
    complete: bool = True,
) -> DecodeResult:
    """Recover the initial state assuming at most k corrupted symbols.

    Scans subsets of p - k sensors in lexicographic order for one whose
    symbols lie in the range of its stacked observability matrix; the
    first consistent subset supplies the state and its complement is
    reported as corrupted.  With ``complete`` (the default) the whole
    enumeration runs and ``unique`` records whether every consistent
    subset agrees on the state; ambiguous observations are reported, not
    hidden.  Raises AnalysisError when no subset is consistent.
    """
    if obs.p != model.p:
        raise ConfigError("observation does not match the model's sensor count")
    if not 0 <= k < model.p:
        raise ConfigError(f"need 0 <= k < p, got k={k}, p={model.p}")
    bundle = observability_matrix(model, full_subset(model.p))
    n = model.n

    first_state: np.ndarray | None = None
    first_subset: SensorSubset | None = None
    unique = True
    for s in combinations(range(1, model.p + 1), model.p - k):
        stacked_O = np.vstack([bundle.blocks[d] for d in s])
        stacked_Y = obs.symbols[[d - 1 for d in s]].reshape(-1)
        x, residual = _fit(stacked_O, stacked_Y)
        if residual > CONSISTENCY_RTOL * (1.0 + float(np.linalg.norm(stacked_Y))):
            continue
        if first_state is None:
            first_state = x
            first_subset = s
            if not complete:
                break
        elif np.linalg.norm(x - first_state) > STATE_MATCH_RTOL * (
            1.0 + float(np.linalg.norm(first_state))
        ):
            unique = False
    if first_state is None or first_subset is None:
        raise AnalysisError(
            f"no subset of {model.p - k} sensors is consistent with the observation"
        )
    corrupted = tuple(i for i in range(1, model.p + 1) if i not in first_subset)
    return DecodeResult(state=first_state, corrupted=corrupted, unique=unique)


def min_symbol_distance(model: SystemModel) -> int:
    """Minimum symbol Hamming distance between observation vectors of
    distinct initial states: one more than the sparse observability
    index."""
    theta = sparse_observability_index(model)
    if theta < 0:
        raise AnalysisError("full sensor set is not observable")
    return theta + 1
