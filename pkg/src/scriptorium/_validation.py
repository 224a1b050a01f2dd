"""Shared exceptions and input checks."""
import numpy as np


class ConfigurationError(ValueError):
    """Raised for malformed configuration: bad ranges, missing inputs, empty pools."""


class DegenerateInputError(ValueError):
    """Raised when a computation is undefined for the given data (zero variance, zero norm)."""


def check_vectors(X, name="X", min_samples=1):
    """Return ``X`` as a finite 2-D float64 array."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    if len(X) < min_samples:
        raise ValueError(f"{name} needs at least {min_samples} rows, got {len(X)}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def check_nonzero_rows(X, name="X"):
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0):
        raise DegenerateInputError(f"{name} contains a zero-norm vector; cosine similarity is undefined")
    return norms


def check_range(name, lo, hi):
    if lo > hi:
        raise ConfigurationError(f"range for {name!r} is malformed: min {lo} > max {hi}")
