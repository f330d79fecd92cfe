"""Linear-softmax draft model: predictions, losses, exact gradients, projection.

The parameterization is deliberately linear in a bounded feature vector so
every gradient is analytic and the (D, G) constants of the norm-bounded
online-learning setup are concrete: with unit-norm features the cross-entropy
gradient satisfies ||grad||_F <= sqrt(2).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dist import Categorical

__all__ = [
    "GRAD_BOUND",
    "DraftParams",
    "PreferenceTuple",
    "as_feature",
    "predict",
    "ce_loss",
    "ce_grad",
    "project",
    "dpo_loss_grad",
    "params_to_json",
    "params_from_json",
]

# Frobenius bound on the cross-entropy gradient with unit-norm features.
GRAD_BOUND = float(np.sqrt(2.0))

_NORM_SLACK = 1e-9


def as_feature(values, dim: int | None = None) -> np.ndarray:
    """Validate a context feature vector: 1-D, Euclidean norm at most 1."""
    phi = np.asarray(values, dtype=np.float64)
    if phi.ndim != 1:
        raise ValueError("feature vector must be 1-D")
    if dim is not None and phi.shape[0] != dim:
        raise ValueError(f"feature dimension mismatch: {phi.shape[0]} vs {dim}")
    norm = float(np.linalg.norm(phi))
    if norm > 1.0 + _NORM_SLACK:
        raise ValueError(f"feature norm {norm} exceeds 1")
    return phi


@dataclass(frozen=True)
class DraftParams:
    """Norm-bounded parameter matrix of the softmax draft model.

    Immutable: updates produce new values, so predictions may be evaluated
    from many threads concurrently.
    """

    matrix: np.ndarray  # (V, d)
    radius: float

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2:
            raise ValueError("parameter matrix must be 2-D (V x d)")
        if self.radius <= 0.0:
            raise ValueError("radius must be positive")
        if float(np.linalg.norm(m)) > self.radius * (1.0 + _NORM_SLACK):
            raise ValueError("parameter matrix violates the Frobenius ball bound")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def vocab_size(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @staticmethod
    def zeros(vocab_size: int, dim: int, radius: float) -> "DraftParams":
        return DraftParams(np.zeros((vocab_size, dim)), radius)


@dataclass(frozen=True)
class PreferenceTuple:
    """One (prompt features, preferred sequence, dispreferred sequence) example."""

    prompt_features: np.ndarray  # (L, d), one feature vector per position
    y_w: tuple
    y_l: tuple

    def __post_init__(self):
        feats = np.asarray(self.prompt_features, dtype=np.float64)
        if feats.ndim != 2:
            raise ValueError("prompt_features must be (L, d)")
        if len(self.y_w) == 0 or len(self.y_l) == 0:
            raise ValueError("preference sequences must be nonempty")
        if max(len(self.y_w), len(self.y_l)) > feats.shape[0]:
            raise ValueError("not enough feature vectors for the sequences")
        feats = feats.copy()
        feats.setflags(write=False)
        object.__setattr__(self, "prompt_features", feats)
        object.__setattr__(self, "y_w", tuple(int(t) for t in self.y_w))
        object.__setattr__(self, "y_l", tuple(int(t) for t in self.y_l))


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    return shifted - np.log(np.exp(shifted).sum())


def predict(params: DraftParams, phi: np.ndarray) -> Categorical:
    """Softmax over ``matrix @ phi``; all entries strictly positive."""
    phi = np.asarray(phi, dtype=np.float64)
    if phi.shape != (params.dim,):
        raise ValueError(f"feature dimension mismatch: {phi.shape} vs ({params.dim},)")
    return Categorical(np.exp(_log_softmax(params.matrix @ phi)))


def ce_loss(params: DraftParams, phi: np.ndarray, target: Categorical) -> float:
    """Cross-entropy -sum target * ln q, in nats."""
    phi = np.asarray(phi, dtype=np.float64)
    if phi.shape != (params.dim,):
        raise ValueError("feature dimension mismatch")
    if target.size != params.vocab_size:
        raise ValueError("target dimension mismatch")
    logq = _log_softmax(params.matrix @ phi)
    return float(-np.dot(target.probs, logq))


def ce_grad(params: DraftParams, phi: np.ndarray, target: Categorical) -> np.ndarray:
    """Exact gradient of ``ce_loss`` in the matrix: (q - target) outer phi."""
    q = predict(params, phi)
    if target.size != params.vocab_size:
        raise ValueError("target dimension mismatch")
    return np.outer(q.probs - target.probs, np.asarray(phi, dtype=np.float64))


def project(params: DraftParams) -> DraftParams:
    """Euclidean projection onto the Frobenius ball of radius ``params.radius``."""
    return DraftParams(project_matrix(params.matrix, params.radius), params.radius)


def project_matrix(matrix: np.ndarray, radius: float) -> np.ndarray:
    """Project a raw matrix onto the Frobenius ball: radial rescale if outside."""
    norm = float(np.linalg.norm(matrix))
    if norm <= radius:
        return np.asarray(matrix, dtype=np.float64)
    return np.asarray(matrix, dtype=np.float64) * (radius / norm)


def _sequence_logprob_grad(
    params: DraftParams, feats: np.ndarray, tokens: Sequence[int], want_grad: bool
):
    """Sum of ln q(y_i | phi_i) over positions, and its gradient in the matrix."""
    total = 0.0
    grad = np.zeros_like(params.matrix) if want_grad else None
    for i, tok in enumerate(tokens):
        if not 0 <= tok < params.vocab_size:
            raise ValueError(f"token index {tok} out of range")
        phi = feats[i]
        logq = _log_softmax(params.matrix @ phi)
        total += float(logq[tok])
        if want_grad:
            q = np.exp(logq)
            onehot = np.zeros(params.vocab_size)
            onehot[tok] = 1.0
            grad += np.outer(onehot - q, phi)
    return total, grad


def dpo_loss_grad(
    params: DraftParams,
    ref: DraftParams,
    batch: Sequence[PreferenceTuple],
    beta: float,
) -> tuple[float, np.ndarray]:
    """Preference loss -sum ln sigmoid(beta * (L(y_w) - L(y_l))) and its gradient.

    L(y) is the log-likelihood ratio of the draft policy against the fixed
    reference policy, summed over sequence positions. Only ``params`` is
    differentiated; ``ref`` is held fixed.
    """
    if len(batch) == 0:
        raise ValueError("preference batch must be nonempty")
    loss = 0.0
    grad = np.zeros_like(params.matrix)
    for ex in batch:
        feats = ex.prompt_features
        lw, gw = _sequence_logprob_grad(params, feats, ex.y_w, want_grad=True)
        ll, gl = _sequence_logprob_grad(params, feats, ex.y_l, want_grad=True)
        rw, _ = _sequence_logprob_grad(ref, feats, ex.y_w, want_grad=False)
        rl, _ = _sequence_logprob_grad(ref, feats, ex.y_l, want_grad=False)
        z = beta * ((lw - rw) - (ll - rl))
        # -ln sigmoid(z), computed stably; d/dz = sigmoid(z) - 1
        loss += float(np.logaddexp(0.0, -z))
        sig = 1.0 / (1.0 + np.exp(-z))
        grad += (sig - 1.0) * beta * (gw - gl)
    return loss, grad


def params_to_json(params: DraftParams) -> str:
    """Serialize to the flat checkpoint schema {V_sz, d, D, matrix row-major}."""
    return json.dumps(
        {
            "V_sz": params.vocab_size,
            "d": params.dim,
            "D": params.radius,
            "matrix": params.matrix.ravel().tolist(),
        }
    )


def params_from_json(text: str) -> DraftParams:
    obj = json.loads(text)
    matrix = np.array(obj["matrix"], dtype=np.float64).reshape(obj["V_sz"], obj["d"])
    return DraftParams(matrix, float(obj["D"]))
