"""Online update schemes for the draft model: projected gradient descent,
optimistic two-step updates with last-gradient hints, and an exponential-weights
ensemble over gradient-descent base learners."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .draft import DraftParams, project_matrix

__all__ = [
    "LOSS_CLIP",
    "OgdState",
    "OptimisticState",
    "EnsembleState",
    "ogd_update",
    "optimistic_play",
    "optimistic_commit",
    "make_step_sizes",
    "default_epsilon",
    "hedge_weights",
    "ensemble_round",
    "state_to_json",
    "state_from_json",
]

# Cap on per-round losses fed to the meta learner, so exponential weights stay
# finite even if a loss evaluation returns the +inf KL sentinel.
LOSS_CLIP = 50.0


@dataclass(frozen=True)
class OgdState:
    """Projected online gradient descent: parameters and a fixed step size."""

    params: DraftParams
    eta: float

    def __post_init__(self):
        if self.eta <= 0.0:
            raise ValueError("step size must be positive")


@dataclass(frozen=True)
class OptimisticState:
    """Two-step optimistic update state.

    ``committed`` is the intermediate iterate updated with true gradients;
    ``played`` is the hint-shifted point actually evaluated each round;
    ``last_grad`` is the most recent true gradient, used as the next hint
    (zero before round 1).
    """

    committed: DraftParams
    played: DraftParams
    eta: float
    last_grad: np.ndarray

    def __post_init__(self):
        if self.eta <= 0.0:
            raise ValueError("step size must be positive")
        g = np.asarray(self.last_grad, dtype=np.float64)
        if g.shape != self.committed.matrix.shape:
            raise ValueError("last_grad shape mismatch")
        g = g.copy()
        g.setflags(write=False)
        object.__setattr__(self, "last_grad", g)

    @staticmethod
    def fresh(params: DraftParams, eta: float) -> "OptimisticState":
        return OptimisticState(params, params, eta, np.zeros_like(params.matrix))


@dataclass(frozen=True)
class EnsembleState:
    """Base learners with geometric step sizes under an exponential-weights meta."""

    bases: tuple
    cum_losses: np.ndarray
    epsilon: float
    weights: np.ndarray

    def __post_init__(self):
        if len(self.bases) < 2:
            raise ValueError("ensemble needs at least 2 base learners")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        losses = np.asarray(self.cum_losses, dtype=np.float64).copy()
        w = np.asarray(self.weights, dtype=np.float64).copy()
        if losses.shape != (len(self.bases),) or w.shape != (len(self.bases),):
            raise ValueError("cum_losses/weights must have one entry per base")
        if np.any(w < 0.0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be a probability vector")
        losses.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "cum_losses", losses)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bases", tuple(self.bases))

    @staticmethod
    def fresh(params: DraftParams, etas: Sequence[float], epsilon: float) -> "EnsembleState":
        n = len(etas)
        return EnsembleState(
            tuple(OgdState(params, eta) for eta in etas),
            np.zeros(n),
            epsilon,
            np.full(n, 1.0 / n),
        )


def ogd_update(state: OgdState, grad: np.ndarray) -> OgdState:
    """w <- project(w - eta * grad)."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != state.params.matrix.shape:
        raise ValueError("gradient shape mismatch")
    new_matrix = project_matrix(state.params.matrix - state.eta * grad, state.params.radius)
    return OgdState(DraftParams(new_matrix, state.params.radius), state.eta)


def optimistic_play(state: OptimisticState) -> tuple[DraftParams, OptimisticState]:
    """Shift the committed iterate by the hint: played = project(committed - eta * h)."""
    radius = state.committed.radius
    played = DraftParams(
        project_matrix(state.committed.matrix - state.eta * state.last_grad, radius), radius
    )
    return played, OptimisticState(state.committed, played, state.eta, state.last_grad)


def optimistic_commit(state: OptimisticState, grad: np.ndarray) -> OptimisticState:
    """Advance the committed iterate with the true gradient; store it as next hint."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != state.committed.matrix.shape:
        raise ValueError("gradient shape mismatch")
    radius = state.committed.radius
    committed = DraftParams(
        project_matrix(state.committed.matrix - state.eta * grad, radius), radius
    )
    return OptimisticState(committed, state.played, state.eta, grad)


def make_step_sizes(D: float, G: float, T: int) -> list:
    """Geometric step-size grid: eta_i = 2^(i-1) * D / (G sqrt(T)),
    with N = ceil(log2(1 + T) / 2) + 1 learners."""
    if D <= 0.0 or G <= 0.0:
        raise ValueError("D and G must be positive")
    if T < 1:
        raise ValueError("T must be at least 1")
    n = math.ceil(0.5 * math.log2(1 + T)) + 1
    base = D / (G * math.sqrt(T))
    return [base * (2.0**i) for i in range(n)]


def default_epsilon(n: int, T: int) -> float:
    """Scale-free Hedge tuning sqrt(8 ln N / T)."""
    return math.sqrt(8.0 * math.log(n) / T)


def hedge_weights(cum_losses, epsilon: float) -> np.ndarray:
    """Softmax of -epsilon * cumulative losses, max-subtracted for stability."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    scores = -epsilon * np.asarray(cum_losses, dtype=np.float64)
    scores -= scores.max()
    w = np.exp(scores)
    return w / w.sum()


def ensemble_round(
    state: EnsembleState,
    loss_eval: Callable[[DraftParams], float],
    grad_eval: Callable[[DraftParams], np.ndarray],
) -> tuple[DraftParams, EnsembleState]:
    """Play the weighted parameter average, then update every base on this
    round's loss.

    ``loss_eval``/``grad_eval`` must evaluate the same round-t loss for any
    parameters. The combined point stays inside the ball by convexity.
    """
    weights = hedge_weights(state.cum_losses, state.epsilon)
    radius = state.bases[0].params.radius
    combined_matrix = np.zeros_like(state.bases[0].params.matrix)
    for w, base in zip(weights, state.bases):
        combined_matrix += w * base.params.matrix
    combined = DraftParams(project_matrix(combined_matrix, radius), radius)

    new_losses = state.cum_losses.copy()
    new_bases = []
    for i, base in enumerate(state.bases):
        new_losses[i] += min(float(loss_eval(base.params)), LOSS_CLIP)
        new_bases.append(ogd_update(base, grad_eval(base.params)))
    return combined, EnsembleState(tuple(new_bases), new_losses, state.epsilon, weights)


def state_to_json(state) -> str:
    """Serialize any learner state for checkpoint/resume between CLI runs."""
    if isinstance(state, OgdState):
        payload = {
            "kind": "ogd",
            "eta": state.eta,
            "radius": state.params.radius,
            "matrix": state.params.matrix.ravel().tolist(),
            "shape": list(state.params.matrix.shape),
        }
    elif isinstance(state, OptimisticState):
        payload = {
            "kind": "optimistic",
            "eta": state.eta,
            "radius": state.committed.radius,
            "committed": state.committed.matrix.ravel().tolist(),
            "played": state.played.matrix.ravel().tolist(),
            "last_grad": state.last_grad.ravel().tolist(),
            "shape": list(state.committed.matrix.shape),
        }
    elif isinstance(state, EnsembleState):
        payload = {
            "kind": "ensemble",
            "epsilon": state.epsilon,
            "radius": state.bases[0].params.radius,
            "etas": [b.eta for b in state.bases],
            "matrices": [b.params.matrix.ravel().tolist() for b in state.bases],
            "cum_losses": state.cum_losses.tolist(),
            "weights": state.weights.tolist(),
            "shape": list(state.bases[0].params.matrix.shape),
        }
    else:
        raise TypeError(f"unknown learner state {type(state)!r}")
    return json.dumps(payload)


def state_from_json(text: str):
    obj = json.loads(text)
    shape = tuple(obj["shape"])
    radius = float(obj["radius"])

    def unpack(flat):
        return np.array(flat, dtype=np.float64).reshape(shape)

    if obj["kind"] == "ogd":
        return OgdState(DraftParams(unpack(obj["matrix"]), radius), float(obj["eta"]))
    if obj["kind"] == "optimistic":
        return OptimisticState(
            DraftParams(unpack(obj["committed"]), radius),
            DraftParams(unpack(obj["played"]), radius),
            float(obj["eta"]),
            unpack(obj["last_grad"]),
        )
    if obj["kind"] == "ensemble":
        bases = tuple(
            OgdState(DraftParams(unpack(m), radius), float(eta))
            for m, eta in zip(obj["matrices"], obj["etas"])
        )
        return EnsembleState(
            bases,
            np.array(obj["cum_losses"], dtype=np.float64),
            float(obj["epsilon"]),
            np.array(obj["weights"], dtype=np.float64),
        )
    raise ValueError(f"unknown learner kind {obj['kind']!r}")
