"""Five-state CQI Markov chain for modulation prediction.

State i means the channel-quality indicator equals i and the transmitter
uses the i-th scheme of {BPSK, QPSK/4-QAM, 8-PSK, 16-PSK, 16-QAM}; the
receiver propagates its state belief with s[k+1] = s[k] P and predicts
the maximum-probability state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MarkovChain",
    "StateVector",
    "PredictError",
    "DEFAULT_STATE_LABELS",
    "step",
    "predict_modulation",
]

DEFAULT_STATE_LABELS = ("BPSK", "QPSK/4-QAM", "8-PSK", "16-PSK", "16-QAM")
_STOCHASTIC_TOL = 1e-12


class PredictError(ValueError):
    """Invalid transition matrix or state vector."""


@dataclass(frozen=True)
class MarkovChain:
    """Row-stochastic 5x5 transition matrix with state labels."""

    transition: np.ndarray
    state_labels: tuple[str, ...] = DEFAULT_STATE_LABELS

    def __post_init__(self):
        p = np.asarray(self.transition, dtype=float)
        if p.shape != (5, 5):
            raise PredictError(f"transition matrix must be 5x5, got {p.shape}")
        if np.any(p < 0) or np.any(p > 1):
            raise PredictError("transition probabilities must lie in [0, 1]")
        if np.any(np.abs(p.sum(axis=1) - 1.0) > _STOCHASTIC_TOL):
            raise PredictError("transition matrix rows must sum to 1")
        if len(self.state_labels) != 5:
            raise PredictError("need 5 state labels")
        object.__setattr__(self, "transition", p)
        object.__setattr__(self, "state_labels", tuple(self.state_labels))

    @classmethod
    def from_file(cls, path) -> "MarkovChain":
        """Load ``labels`` row plus 5 rows of 5 probabilities from text.

        Lines starting with '#' are comments.  The first non-comment line
        holds the five whitespace-separated state labels; the next five
        lines hold the matrix rows.
        """
        rows: list[list[float]] = []
        labels: tuple[str, ...] | None = None
        with open(path) as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if labels is None:
                    parts = line.split()
                    if len(parts) != 5:
                        raise PredictError(f"{path}: label row must have 5 entries")
                    labels = tuple(parts)
                    continue
                values = [float(v) for v in line.split()]
                if len(values) != 5:
                    raise PredictError(f"{path}: matrix rows must have 5 entries")
                rows.append(values)
        if labels is None or len(rows) != 5:
            raise PredictError(f"{path}: expected a label row and 5 matrix rows")
        return cls(np.array(rows), labels)


def _as_state(s) -> np.ndarray:
    if isinstance(s, StateVector):
        return s.probabilities
    v = np.asarray(s, dtype=float)
    if v.shape != (5,):
        raise PredictError(f"state vector must have 5 entries, got shape {v.shape}")
    if np.any(v < 0):
        raise PredictError("state probabilities must be >= 0")
    total = v.sum()
    if abs(total - 1.0) > _STOCHASTIC_TOL:
        raise PredictError("state probabilities must sum to 1")
    return v


@dataclass(frozen=True)
class StateVector:
    """Probability distribution over the five CQI states."""

    probabilities: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probabilities", _as_state(self.probabilities))

    @classmethod
    def delta(cls, state_index: int) -> "StateVector":
        if not 0 <= state_index < 5:
            raise PredictError("state index must be in 0..4")
        v = np.zeros(5)
        v[state_index] = 1.0
        return cls(v)

    @classmethod
    def uniform(cls) -> "StateVector":
        return cls(np.full(5, 0.2))


def step(s, chain: MarkovChain, k: int = 1) -> StateVector:
    """Propagate the belief k steps: s <- s P, renormalized each step."""
    if k < 1:
        raise PredictError("k must be >= 1")
    v = _as_state(s)
    for _ in range(k):
        v = v @ chain.transition
        v = np.maximum(v, 0.0)
        v = v / v.sum()
    return StateVector(v)


def predict_modulation(s, chain: MarkovChain) -> int:
    """Index of the most probable next state (ties go to the lowest index)."""
    nxt = step(s, chain, 1).probabilities
    return int(np.argmax(nxt))
