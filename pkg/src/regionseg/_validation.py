"""Input validation helpers shared across estimators."""

import numpy as np

SIMPLEX_ATOL = 1e-9


def as_feature_matrix(X, min_rows: int = 1) -> np.ndarray:
    """Coerce X to a finite 2-d float64 array."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d array, got {X.ndim}-d")
    if X.shape[0] < min_rows:
        raise ValueError(f"need at least {min_rows} rows, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")
    return X


def check_weights(weights, n_features: int) -> np.ndarray:
    """Validate a feature-weight vector: non-negative, on the unit simplex."""
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n_features,):
        raise ValueError(
            f"weight vector has shape {w.shape}, expected ({n_features},)")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights contain non-finite values")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    if abs(float(w.sum()) - 1.0) > SIMPLEX_ATOL:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    return w


def uniform_weights(n_features: int) -> np.ndarray:
    if n_features < 1:
        raise ValueError("n_features must be >= 1")
    return np.full(n_features, 1.0 / n_features)


def check_random_state(random_state) -> np.random.Generator:
    """Accept None, an int seed, a SeedSequence, or a Generator."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    if random_state is None or isinstance(random_state, (int, np.integer)):
        return np.random.default_rng(random_state)
    if isinstance(random_state, np.random.SeedSequence):
        return np.random.default_rng(random_state)
    raise TypeError(f"cannot use {type(random_state)} as a random state")


def derive_seed(*parts) -> int:
    """Stable child seed from an ordered tuple of integer parts.

    Used wherever results must be reproducible no matter how work is
    scheduled (per-restart, per-region, per-evaluation substreams).
    """
    entropy = [int(p) & 0xFFFFFFFFFFFFFFFF for p in parts]
    # 32-bit so the result is valid for numpy and sklearn seeding alike.
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint32)[0])
