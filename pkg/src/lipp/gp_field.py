"""Gaussian-process machinery for load-aware path planning.

The field is a zero-mean GP with a squared-exponential kernel. Collecting
``l`` physical samples at a vertex yields one averaged observation with noise
variance ``sigma^2 / l``; vertices with ``l = 0`` are simply left out of the
conditioning set.

Two routes to the same number are provided:

* :func:`posterior_variance` evaluates ``trace(M (k_TT - k_TV (k_VV + N)^-1 k_VT))``
  through a Cholesky factorisation of the sampled sub-block.
* :func:`optimal_llse` / :func:`llse_objective` solve for the best linear
  estimator ``A`` and evaluate the inverse-free quadratic
  ``tr(M (A (k_VV + N) A^T - 2 k_TV A^T + k_TT))``.

They agree to rounding error, which is what makes the quadratic objective of
the MIQP an exact stand-in for posterior variance.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InputError, NumericalError

PIVOT_RATIO = 1e-12
KERNEL_KINDS = ("squared-exponential",)


def as_points(points, name="points"):
    """Return ``points`` as a finite ``(k, 2)`` float array."""
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim == 1 and arr.shape[0] == 2:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InputError(f"{name} must be a list of planar (x, y) coordinates")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite coordinates")
    return arr


@dataclass(frozen=True)
class Kernel:
    """Squared-exponential covariance ``s^2 exp(-|x - x'|^2 / (2 l^2))``."""

    signal_variance: float = 1.0
    lengthscale: float = 1.0
    kind: str = "squared-exponential"

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise InputError(f"unsupported kernel kind {self.kind!r}")
        for attr in ("signal_variance", "lengthscale"):
            value = getattr(self, attr)
            if not (np.isfinite(value) and value > 0):
                raise InputError(f"kernel {attr} must be finite and > 0, got {value}")

    def __call__(self, rows, cols):
        a = as_points(rows, "rows")
        b = as_points(cols, "cols")
        sq = np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=-1)
        return self.signal_variance * np.exp(-0.5 * sq / self.lengthscale**2)

    def to_dict(self):
        return {
            "kind": self.kind,
            "signal_variance": self.signal_variance,
            "lengthscale": self.lengthscale,
        }


@dataclass(frozen=True)
class FieldModel:
    """Everything needed to score a sampling plan: kernel, noise, test set."""

    kernel: Kernel
    noise_variance: float
    test_points: tuple
    test_weights: tuple = None

    def __post_init__(self):
        pts = as_points(self.test_points, "test_points")
        if len(pts) < 1:
            raise InputError("at least one test point is required")
        object.__setattr__(self, "test_points", tuple(map(tuple, pts.tolist())))
        weights = self.test_weights
        if weights is None:
            weights = (1.0,) * len(pts)
        w = np.asarray(weights, dtype=float).ravel()
        if w.shape != (len(pts),):
            raise InputError("test_weights must have one entry per test point")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InputError("test_weights must be finite and nonnegative")
        object.__setattr__(self, "test_weights", tuple(w.tolist()))
        if not (np.isfinite(self.noise_variance) and self.noise_variance > 0):
            raise InputError("noise_variance must be finite and > 0")

    @property
    def m(self):
        return len(self.test_points)

    @property
    def weights(self):
        return np.asarray(self.test_weights)

    def with_weights(self, weights):
        return FieldModel(self.kernel, self.noise_variance, self.test_points, tuple(weights))

    def prior_variance(self):
        """``trace(M k_TT)``: the objective before any sample is taken."""
        diag = np.full(self.m, self.kernel.signal_variance)
        return float(self.weights @ diag)


@dataclass(frozen=True)
class Estimator:
    """Linear estimator ``f_T ~ A y``; columns outside ``support`` are zero."""

    coefficients: np.ndarray
    support: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        a = np.asarray(self.coefficients, dtype=float)
        if a.ndim != 2:
            raise InputError("estimator coefficients must be an m x n matrix")
        object.__setattr__(self, "coefficients", a)
        object.__setattr__(self, "support", frozenset(int(v) for v in self.support))
        outside = [j for j in range(a.shape[1]) if j not in self.support]
        if outside and np.any(a[:, outside] != 0.0):
            raise InputError("estimator has nonzero columns outside its support")

    def max_abs(self):
        return float(np.max(np.abs(self.coefficients))) if self.coefficients.size else 0.0


def kernel_matrix(kernel, rows, cols):
    """Covariance matrix between two point lists."""
    return kernel(rows, cols)


def counts_vector(allocation, n):
    """Normalise a sample allocation to an int array of length ``n``.

    ``allocation`` may be a mapping ``vertex -> count`` or a length-``n``
    sequence of counts.
    """
    if isinstance(allocation, Mapping):
        counts = np.zeros(n, dtype=int)
        for v, c in allocation.items():
            v = int(v)
            if not 0 <= v < n:
                raise InputError(f"allocation refers to unknown vertex {v}")
            counts[v] = c
    else:
        counts = np.asarray(allocation)
        if counts.shape != (n,):
            raise InputError(f"allocation must have {n} entries, got {counts.shape}")
    if np.any(counts < 0) or np.any(counts != np.round(counts)):
        raise InputError("sample counts must be nonnegative integers")
    return counts.astype(int)


def _guarded_cholesky(mat, sampled):
    try:
        chol = np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "kernel block is not positive definite",
            {"sampled": list(map(int, sampled)), "size": int(mat.shape[0])},
        ) from exc
    pivots = np.diag(chol) ** 2
    if pivots.min() < PIVOT_RATIO * pivots.max():
        raise NumericalError(
            "kernel block too ill-conditioned",
            {
                "sampled": list(map(int, sampled)),
                "min_pivot": float(pivots.min()),
                "max_pivot": float(pivots.max()),
            },
        )
    return chol


class VarianceEvaluator:
    """Posterior-variance oracle with the kernel blocks precomputed.

    Solvers query thousands of allocations over the same vertex set, so the
    kernel matrices are built once and results are memoised per count tuple.
    """

    def __init__(self, model: FieldModel, vertex_positions):
        self.model = model
        self.positions = as_points(vertex_positions, "vertex_positions")
        self.n = len(self.positions)
        self.k_vv = kernel_matrix(model.kernel, self.positions, self.positions)
        self.k_tv = kernel_matrix(model.kernel, model.test_points, self.positions)
        self.weights = model.weights
        self.prior = model.prior_variance()
        self._cache = {}

    def _noise(self, counts):
        return self.model.noise_variance / counts

    def variance(self, counts):
        counts = np.asarray(counts)
        idx = np.flatnonzero(counts)
        if idx.size == 0:
            return self.prior
        block = self.k_vv[np.ix_(idx, idx)] + np.diag(self._noise(counts[idx]))
        chol = _guarded_cholesky(block, idx)
        half = solve_triangular(chol, self.k_tv[:, idx].T, lower=True)
        return float(self.prior - self.weights @ np.sum(half**2, axis=0))

    def __call__(self, counts):
        key = tuple(int(c) for c in counts)
        try:
            return self._cache[key]
        except KeyError:
            value = self._cache[key] = self.variance(key)
            return value

    def batch(self, counts):
        """Posterior variance for each row of a ``(B, n)`` count matrix.

        Uses the precision form ``k_TV W^1/2 (I + W^1/2 k_VV W^1/2)^-1 W^1/2 k_VT``
        with ``W = diag(l / sigma^2)``, which handles ``l = 0`` without any
        index bookkeeping. This is a separate algebraic route from
        :meth:`variance` and is used by the enumeration oracle.
        """
        counts = np.atleast_2d(np.asarray(counts, dtype=float))
        root_w = np.sqrt(counts / self.model.noise_variance)
        inner = root_w[:, :, None] * self.k_vv[None] * root_w[:, None, :]
        inner += np.eye(self.n)[None]
        rhs = root_w[:, :, None] * self.k_tv.T[None]
        sol = np.linalg.solve(inner, rhs)
        reduction = np.einsum("bvt,bvt->bt", rhs, sol)
        return self.prior - reduction @ self.weights


def posterior_variance(model, vertex_positions, allocation):
    """``trace(M k_post)`` at the test points after sampling per ``allocation``."""
    ev = VarianceEvaluator(model, vertex_positions)
    return ev.variance(counts_vector(allocation, ev.n))


def llse_objective(model, vertex_positions, estimator, allocation):
    """Exact value of the inverse-free LLSE objective for a given ``A``."""
    ev = VarianceEvaluator(model, vertex_positions)
    counts = counts_vector(allocation, ev.n)
    a = estimator.coefficients
    if a.shape != (model.m, ev.n):
        raise InputError(f"estimator must be {model.m} x {ev.n}, got {a.shape}")
    sampled = set(np.flatnonzero(counts).tolist())
    if not estimator.support <= sampled:
        raise InputError(
            f"estimator support {sorted(estimator.support - sampled)} is not sampled"
        )
    noise = np.zeros(ev.n)
    noise[counts > 0] = model.noise_variance / counts[counts > 0]
    quad = a @ (ev.k_vv + np.diag(noise)) @ a.T - 2.0 * ev.k_tv @ a.T
    per_test = np.diag(quad) + model.kernel.signal_variance
    return float(ev.weights @ per_test)


def optimal_llse(model, vertex_positions, allocation):
    """Best linear estimator restricted to sampled vertices, and its objective.

    Solves the normal equations ``A_S = k_TS (k_SS + N_S)^-1``.
    """
    ev = VarianceEvaluator(model, vertex_positions)
    counts = counts_vector(allocation, ev.n)
    idx = np.flatnonzero(counts)
    a = np.zeros((model.m, ev.n))
    if idx.size:
        block = ev.k_vv[np.ix_(idx, idx)] + np.diag(model.noise_variance / counts[idx])
        chol = _guarded_cholesky(block, idx)
        y = solve_triangular(chol, ev.k_tv[:, idx].T, lower=True)
        a[:, idx] = solve_triangular(chol.T, y, lower=False).T
    est = Estimator(a, frozenset(idx.tolist()))
    return est, llse_objective(model, ev.positions, est, counts)


def default_a_max(model, vertex_positions, s_max, factor=10.0):
    """Big-M bound on estimator entries: ``factor`` x the full-sampling optimum."""
    n = len(as_points(vertex_positions))
    est, _ = optimal_llse(model, vertex_positions, [s_max] * n)
    return factor * max(est.max_abs(), 1e-12)

