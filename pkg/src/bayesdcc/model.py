"""
DCC-GARCH(1,1) model: variance and correlation recursions, likelihood, simulation.

Each margin follows

    h_{i,t} = omega_i + alpha_i * y_{i,t-1}^2 + beta_i * h_{i,t-1}

and the correlation matrix is the normalised version of

    Q_t = (1 - a - b) * R_bar + a * u_{t-1} u_{t-1}' + b * Q_{t-1},

with ``u_t = y_t / sqrt(h_t)``. Returns are ``y_t = D_t L_t eps_t`` where
``D_t = diag(sqrt(h_t))`` and ``L_t`` is the lower Cholesky factor of ``R_t``.

The recursions are started at ``h_1`` = sample variance of each series and
``Q_1 = R_bar``; when estimating, ``R_bar`` is the sample correlation of the
standardized returns implied by the current univariate parameters
(correlation targeting).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.signal import lfilter

from bayesdcc.distributions import (
    SKEW_FAMILIES,
    SkewFamily,
    family_has_tail,
    skew_log_density,
    skew_sample,
)
from bayesdcc.errors import InvalidInputError, NumericalDomainError

__all__ = [
    "ReturnsMatrix",
    "ParamVector",
    "RecursionState",
    "CovariancePath",
    "param_names",
    "as_returns",
    "garch_variance_step",
    "dcc_q_step",
    "correlation_from_q",
    "initial_state",
    "run_recursions",
    "log_likelihood",
    "simulate_path",
]


@dataclass
class ReturnsMatrix:
    """T x k matrix of zero-mean returns with optional series labels."""

    values: np.ndarray
    series_names: list = field(default_factory=list)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise InvalidInputError(f"returns must be a non-empty T x k matrix, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise InvalidInputError(f"non-finite return at row {bad[0]}, column {bad[1]}")
        self.values = values
        names = list(self.series_names) if self.series_names else []
        if not names:
            names = [f"y{i + 1}" for i in range(values.shape[1])]
        if len(names) != values.shape[1]:
            raise InvalidInputError("series_names length does not match the number of columns")
        self.series_names = names

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]


def as_returns(data, min_rows: int = 2) -> ReturnsMatrix:
    rm = data if isinstance(data, ReturnsMatrix) else ReturnsMatrix(data)
    if rm.T < min_rows:
        raise InvalidInputError(f"need at least {min_rows} observations, got {rm.T}")
    return rm


def param_names(k: int, family: str) -> list[str]:
    """Flat parameter labels in storage order.

    ``a`` and ``b`` only exist for ``k > 1``; ``tail`` only for the t and GED families.
    """
    names = [f"omega_{i + 1}" for i in range(k)]
    names += [f"alpha_{i + 1}" for i in range(k)]
    names += [f"beta_{i + 1}" for i in range(k)]
    if k > 1:
        names += ["a", "b"]
    names += [f"gamma_{i + 1}" for i in range(k)]
    if family_has_tail(family):
        names.append("tail")
    return names


@dataclass(frozen=True)
class ParamVector:
    """Full DCC-GARCH parameter set with its error distribution family."""

    omega: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    a: float
    b: float
    gamma: np.ndarray
    tail: Optional[float] = None
    family: str = "skew-t"

    def __post_init__(self):
        if self.family not in SKEW_FAMILIES:
            raise InvalidInputError(f"unknown family {self.family!r}")
        vecs = {}
        for name in ("omega", "alpha", "beta", "gamma"):
            v = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if v.ndim != 1:
                raise InvalidInputError(f"{name} must be a vector")
            vecs[name] = v
        k = vecs["omega"].size
        if any(v.size != k for v in vecs.values()):
            raise InvalidInputError("omega, alpha, beta and gamma must have equal length")
        for name, v in vecs.items():
            object.__setattr__(self, name, v)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if family_has_tail(self.family):
            if self.tail is None:
                raise InvalidInputError(f"{self.family} needs a tail parameter")
            object.__setattr__(self, "tail", float(self.tail))
        else:
            object.__setattr__(self, "tail", None)

    @property
    def k(self) -> int:
        return self.omega.size

    @classmethod
    def default(cls, k: int, family: str = "skew-t") -> "ParamVector":
        """Starting values omega=0.03, alpha=0.03, beta=0.8, a=0.03, b=0.8, gamma=1, tail=8."""
        return cls(
            omega=np.full(k, 0.03),
            alpha=np.full(k, 0.03),
            beta=np.full(k, 0.8),
            a=0.03 if k > 1 else 0.0,
            b=0.8 if k > 1 else 0.0,
            gamma=np.ones(k),
            tail=8.0 if family_has_tail(family) else None,
            family=family,
        )

    def names(self) -> list[str]:
        return param_names(self.k, self.family)

    def to_array(self) -> np.ndarray:
        parts = [self.omega, self.alpha, self.beta]
        if self.k > 1:
            parts.append([self.a, self.b])
        parts.append(self.gamma)
        if self.tail is not None:
            parts.append([self.tail])
        return np.concatenate([np.asarray(p, dtype=float) for p in parts])

    @classmethod
    def from_array(cls, x, k: int, family: str) -> "ParamVector":
        x = np.asarray(x, dtype=float)
        expected = len(param_names(k, family))
        if x.shape != (expected,):
            raise InvalidInputError(f"expected {expected} parameters, got shape {x.shape}")
        pos = 3 * k
        a = b = 0.0
        if k > 1:
            a, b = x[pos], x[pos + 1]
            pos += 2
        gamma = x[pos : pos + k]
        tail = x[pos + k] if family_has_tail(family) else None
        return cls(x[:k], x[k : 2 * k], x[2 * k : 3 * k], a, b, gamma, tail, family)

    def to_dict(self) -> dict:
        d = {
            "family": self.family,
            "omega": self.omega.tolist(),
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
            "gamma": self.gamma.tolist(),
        }
        if self.k > 1:
            d["a"] = self.a
            d["b"] = self.b
        if self.tail is not None:
            d["tail"] = self.tail
        return d

    def violations(self) -> list[str]:
        """Human-readable list of broken support constraints (empty when valid)."""
        out = []
        vals = [self.omega, self.alpha, self.beta, self.gamma, [self.a, self.b]]
        if self.tail is not None:
            vals.append([self.tail])
        if not all(np.all(np.isfinite(v)) for v in vals):
            return ["non-finite parameter"]
        if np.any(self.omega <= 0):
            out.append("omega_i > 0")
        if np.any(self.alpha < 0) or np.any(self.beta < 0):
            out.append("alpha_i >= 0 and beta_i >= 0")
        if np.any(self.alpha + self.beta >= 1):
            out.append("alpha_i + beta_i < 1")
        if self.k > 1 and not (self.a > 0 and self.b > 0 and self.a + self.b < 1):
            out.append("a > 0, b > 0, a + b < 1")
        if np.any(self.gamma <= 0):
            out.append("gamma_i > 0")
        if self.family == "skew-t" and not self.tail > 2:
            out.append("tail > 2")
        if self.family == "skew-GED" and not self.tail > 0:
            out.append("tail > 0")
        return out

    def is_valid(self) -> bool:
        return not self.violations()

    def validate(self) -> None:
        bad = self.violations()
        if bad:
            raise InvalidInputError("parameter constraints violated: " + "; ".join(bad))

    def skew_family(self) -> SkewFamily:
        return SkewFamily(self.family, self.gamma, self.tail)


@dataclass
class RecursionState:
    """State of the recursions at one time step plus the correlation target."""

    h: np.ndarray
    Q: np.ndarray
    R_t: np.ndarray
    u: np.ndarray
    R_bar: np.ndarray


@dataclass
class CovariancePath:
    """Conditional variances, correlations and log-density terms over the sample.

    ``corr_path`` columns are the strict upper triangle of ``R_t`` in row-major
    order: (1,2), (1,3), ..., (2,3), ...
    """

    h_path: np.ndarray
    corr_path: np.ndarray
    loglik_terms: np.ndarray
    q_path: np.ndarray

    def covariance(self, t: int) -> np.ndarray:
        """H_t = D_t R_t D_t, rebuilt from Q_t."""
        q = self.q_path[t]
        d = np.sqrt(np.diag(q))
        sd = np.sqrt(self.h_path[t])
        return q / np.outer(d, d) * np.outer(sd, sd)


def _check_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("non-finite input")


def garch_variance_step(omega, alpha, beta, y_prev, h_prev) -> float:
    """One GARCH(1,1) update: ``omega + alpha * y_prev**2 + beta * h_prev``."""
    _check_finite(omega, alpha, beta, y_prev, h_prev)
    if omega <= 0 or alpha < 0 or beta < 0 or h_prev <= 0:
        raise InvalidInputError("need omega > 0, alpha >= 0, beta >= 0, h_prev > 0")
    return omega + alpha * y_prev**2 + beta * h_prev


def dcc_q_step(a, b, R_bar, u_prev, Q_prev) -> np.ndarray:
    """One update of the DCC pseudo-correlation matrix Q."""
    R_bar = np.atleast_2d(np.asarray(R_bar, dtype=float))
    Q_prev = np.atleast_2d(np.asarray(Q_prev, dtype=float))
    u_prev = np.atleast_1d(np.asarray(u_prev, dtype=float))
    k = u_prev.size
    if R_bar.shape != (k, k) or Q_prev.shape != (k, k):
        raise InvalidInputError(f"dimension mismatch: u has length {k}, R_bar {R_bar.shape}, Q {Q_prev.shape}")
    _check_finite(a, b, R_bar, u_prev, Q_prev)
    if a < 0 or b < 0 or a + b >= 1:
        raise InvalidInputError("need a >= 0, b >= 0, a + b < 1")
    return (1.0 - a - b) * R_bar + a * np.outer(u_prev, u_prev) + b * Q_prev


def correlation_from_q(Q) -> np.ndarray:
    """Normalise Q to a correlation matrix, diag(Q)^-1/2 Q diag(Q)^-1/2."""
    Q = np.asarray(Q, dtype=float)
    d = np.diagonal(Q, axis1=-2, axis2=-1)
    if np.any(~(d > 0)):
        raise NumericalDomainError("Q has a non-positive diagonal entry")
    s = np.sqrt(d)
    R = Q / (s[..., :, None] * s[..., None, :])
    idx = np.arange(Q.shape[-1])
    R[..., idx, idx] = 1.0
    return R


def _variance_path(params: ParamVector, y: np.ndarray, h1: np.ndarray) -> np.ndarray:
    T, k = y.shape
    drive = np.empty((T, k))
    drive[0] = h1
    drive[1:] = params.omega + params.alpha * y[:-1] ** 2
    h = np.empty_like(drive)
    for i in range(k):
        h[:, i] = lfilter([1.0], [1.0, -params.beta[i]], drive[:, i])
    bad = ~(h > 0) | ~np.isfinite(h)
    if bad.any():
        t, i = np.argwhere(bad)[0]
        raise NumericalDomainError(f"conditional variance not positive at t={t}, series {i}")
    return h


def _sample_correlation(u: np.ndarray) -> np.ndarray:
    if u.shape[1] == 1:
        return np.ones((1, 1))
    return np.corrcoef(u, rowvar=False)


def initial_state(params: ParamVector, data) -> RecursionState:
    """Starting state used for estimation.

    ``h_1`` is the sample variance of each series, ``R_bar`` the sample correlation
    of the standardized returns produced by the univariate recursions of
    ``params``, and ``Q_1 = R_t = R_bar``.
    """
    y = as_returns(data).values
    h1 = np.var(y, axis=0, ddof=1)
    h = _variance_path(params, y, h1)
    u = y / np.sqrt(h)
    if not np.all(np.isfinite(u)):
        raise NumericalDomainError("standardized returns are not finite")
    R_bar = _sample_correlation(u)
    return RecursionState(h=h1, Q=R_bar.copy(), R_t=R_bar.copy(), u=u[0], R_bar=R_bar)


def _triu_pairs(k: int):
    return np.triu_indices(k, 1)


def run_recursions(params: ParamVector, data, init: RecursionState) -> CovariancePath:
    """
    Run the variance and correlation recursions over the whole sample.

    ``init`` holds the state at the first observation (``h_1``, ``Q_1``) and the
    correlation target ``R_bar``. Returns the paths and the per-observation
    log-density contributions ``-0.5 log|H_t| + log s(eps_t)``.

    Raises
    ------
    NumericalDomainError
        If a conditional variance is not positive or a correlation matrix is not
        positive definite.
    """
    y = as_returns(data, min_rows=1).values
    T, k = y.shape
    if params.k != k:
        raise InvalidInputError(f"params have k={params.k} but data has {k} series")
    h = _variance_path(params, y, np.asarray(init.h, dtype=float))
    u = y / np.sqrt(h)
    if not np.all(np.isfinite(u)):
        raise NumericalDomainError("standardized returns are not finite")

    if k == 1:
        Q = np.ones((T, 1, 1))
        eps = u
        log_det_r = np.zeros(T)
        corr = np.empty((T, 0))
    else:
        R_bar = np.asarray(init.R_bar, dtype=float)
        a, b = params.a, params.b
        drive = np.empty((T, k, k))
        drive[0] = init.Q
        drive[1:] = (1.0 - a - b) * R_bar + a * (u[:-1, :, None] * u[:-1, None, :])
        Q = lfilter([1.0], [1.0, -b], drive.reshape(T, k * k), axis=0).reshape(T, k, k)
        R = correlation_from_q(Q)
        iu = _triu_pairs(k)
        corr = R[:, iu[0], iu[1]]
        try:
            L = np.linalg.cholesky(R)
        except np.linalg.LinAlgError as exc:
            raise NumericalDomainError("conditional correlation matrix not positive definite") from exc
        diag_l = np.diagonal(L, axis1=1, axis2=2)
        log_det_r = 2.0 * np.sum(np.log(diag_l), axis=1)
        if k == 2:
            eps = np.empty_like(u)
            eps[:, 0] = u[:, 0]
            eps[:, 1] = (u[:, 1] - L[:, 1, 0] * u[:, 0]) / diag_l[:, 1]
        else:
            eps = np.linalg.solve(L, u[:, :, None])[:, :, 0]

    terms = -0.5 * (np.sum(np.log(h), axis=1) + log_det_r) + skew_log_density(
        params.skew_family(), eps
    )
    return CovariancePath(h_path=h, corr_path=corr, loglik_terms=terms, q_path=Q)


def log_likelihood(params: ParamVector, data) -> float:
    """Full-sample log-likelihood; ``-inf`` when the recursions break down numerically."""
    rm = as_returns(data)
    if params.k != rm.k:
        raise InvalidInputError(f"params have k={params.k} but data has {rm.k} series")
    with np.errstate(all="ignore"):
        try:
            init = initial_state(params, rm)
            total = float(np.sum(run_recursions(params, rm, init).loglik_terms))
        except (NumericalDomainError, InvalidInputError, np.linalg.LinAlgError, FloatingPointError):
            return -np.inf
    return total if np.isfinite(total) else -np.inf


def simulate_path(
    params: ParamVector,
    T: int,
    seed,
    R_bar=None,
    series_names: Optional[Sequence[str]] = None,
) -> ReturnsMatrix:
    """
    Simulate ``T`` observations from the model.

    The variance recursion starts at the stationary level
    ``omega / (1 - alpha - beta)`` and ``Q_1 = R_bar`` (identity by default).
    """
    params.validate()
    if T < 1:
        raise InvalidInputError("T must be at least 1")
    k = params.k
    R_bar = np.eye(k) if R_bar is None else np.asarray(R_bar, dtype=float)
    if R_bar.shape != (k, k) or not np.allclose(np.diag(R_bar), 1.0) or not np.allclose(R_bar, R_bar.T):
        raise InvalidInputError("R_bar must be a k x k correlation matrix")
    try:
        np.linalg.cholesky(R_bar)
    except np.linalg.LinAlgError as exc:
        raise InvalidInputError("R_bar must be positive definite") from exc

    eps = skew_sample(params.skew_family(), T, seed)
    y = np.empty((T, k))
    h = params.omega / (1.0 - params.alpha - params.beta)
    Q = R_bar.copy()
    for t in range(T):
        L = np.linalg.cholesky(correlation_from_q(Q)) if k > 1 else np.ones((1, 1))
        u = L @ eps[t]
        y[t] = np.sqrt(h) * u
        h = params.omega + params.alpha * y[t] ** 2 + params.beta * h
        if k > 1:
            Q = (1.0 - params.a - params.b) * R_bar + params.a * np.outer(u, u) + params.b * Q
    return ReturnsMatrix(y, list(series_names) if series_names else [])
