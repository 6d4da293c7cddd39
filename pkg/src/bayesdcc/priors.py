"""
Truncated-normal priors and the log-posterior.

Every parameter gets an independent normal prior truncated to its support.
The truncation normalisers depend only on hyper-parameters and are dropped, so
``log_prior`` is the sum of ``-(x - mu)^2 / (2 sigma^2)`` inside the support and
``-inf`` outside. The support also includes the joint stationarity constraints
``alpha_i + beta_i < 1`` and ``a + b < 1``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from bayesdcc.distributions import family_has_tail
from bayesdcc.errors import InvalidInputError
from bayesdcc.model import ParamVector, as_returns, log_likelihood, param_names

__all__ = ["PriorSpec", "default_priors", "log_prior", "log_posterior", "DccPosterior"]

_VECTOR_FIELDS = ("mu_omega", "sigma_omega", "mu_alpha", "sigma_alpha", "mu_beta",
                  "sigma_beta", "mu_gamma", "sigma_gamma")
_SCALAR_FIELDS = ("mu_a", "sigma_a", "mu_b", "sigma_b", "mu_tail", "sigma_tail")


@dataclass
class PriorSpec:
    """Hyper-parameters (location ``mu_*``, scale ``sigma_*``) for every parameter.

    Field names follow the package control list. ``mu_tail``/``sigma_tail`` are
    ``None`` for the skew-normal family.
    """

    k: int
    family: str
    mu_omega: np.ndarray
    sigma_omega: np.ndarray
    mu_alpha: np.ndarray
    sigma_alpha: np.ndarray
    mu_beta: np.ndarray
    sigma_beta: np.ndarray
    mu_a: float
    sigma_a: float
    mu_b: float
    sigma_b: float
    mu_gamma: np.ndarray
    sigma_gamma: np.ndarray
    mu_tail: Optional[float] = None
    sigma_tail: Optional[float] = None

    def __post_init__(self):
        for name in _VECTOR_FIELDS:
            v = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (self.k,)).copy()
            setattr(self, name, v)
        for name in _SCALAR_FIELDS:
            v = getattr(self, name)
            setattr(self, name, None if v is None else float(v))
        if family_has_tail(self.family):
            if self.mu_tail is None or self.sigma_tail is None:
                raise InvalidInputError(f"{self.family} priors need mu_tail and sigma_tail")
        else:
            self.mu_tail = self.sigma_tail = None
        scales = [getattr(self, n) for n in fields_of_kind("sigma")]
        for s in scales:
            if s is not None and (not np.all(np.isfinite(s)) or np.any(np.asarray(s) <= 0)):
                raise InvalidInputError("prior scales must be positive and finite")

    def locations(self) -> np.ndarray:
        """Prior locations in flat parameter order."""
        return self._flat("mu")

    def scales(self) -> np.ndarray:
        return self._flat("sigma")

    def _flat(self, kind: str) -> np.ndarray:
        parts = [getattr(self, f"{kind}_omega"), getattr(self, f"{kind}_alpha"),
                 getattr(self, f"{kind}_beta")]
        if self.k > 1:
            parts.append([getattr(self, f"{kind}_a"), getattr(self, f"{kind}_b")])
        parts.append(getattr(self, f"{kind}_gamma"))
        if family_has_tail(self.family):
            parts.append([getattr(self, f"{kind}_tail")])
        return np.concatenate([np.asarray(p, dtype=float) for p in parts])

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in _VECTOR_FIELDS:
            d[name] = np.asarray(d[name]).tolist()
        if not family_has_tail(self.family):
            d.pop("mu_tail")
            d.pop("sigma_tail")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PriorSpec":
        return cls(**d)


def fields_of_kind(kind: str) -> list[str]:
    return [f.name for f in fields(PriorSpec) if f.name.startswith(kind + "_")]


def default_priors(k: int, family: str = "skew-t", **overrides) -> PriorSpec:
    """
    Package default hyper-parameters, optionally overridden per entry.

    All locations are 0 except the tail (8); scales are 10 except gamma (1.25).
    Unknown override names raise InvalidInputError; ``None`` overrides are ignored.
    """
    if k < 1:
        raise InvalidInputError("k must be at least 1")
    spec = dict(
        mu_omega=np.zeros(k), sigma_omega=np.full(k, 10.0),
        mu_alpha=np.zeros(k), sigma_alpha=np.full(k, 10.0),
        mu_beta=np.zeros(k), sigma_beta=np.full(k, 10.0),
        mu_a=0.0, sigma_a=10.0, mu_b=0.0, sigma_b=10.0,
        mu_gamma=np.zeros(k), sigma_gamma=np.full(k, 1.25),
    )
    if family_has_tail(family):
        spec.update(mu_tail=8.0, sigma_tail=10.0)
    allowed = set(_VECTOR_FIELDS) | set(_SCALAR_FIELDS)
    for name, value in overrides.items():
        if name not in allowed:
            raise InvalidInputError(f"unknown prior hyper-parameter {name!r}")
        if value is not None:
            spec[name] = value
    return PriorSpec(k=k, family=family, **spec)


def _flat_in_support(x: np.ndarray, k: int, family: str) -> bool:
    if not np.all(np.isfinite(x)):
        return False
    omega, alpha, beta = x[:k], x[k:2 * k], x[2 * k:3 * k]
    if np.any(omega <= 0) or np.any(alpha < 0) or np.any(beta < 0) or np.any(alpha + beta >= 1):
        return False
    pos = 3 * k
    if k > 1:
        a, b = x[pos], x[pos + 1]
        if not (a > 0 and b > 0 and a + b < 1):
            return False
        pos += 2
    if np.any(x[pos:pos + k] <= 0):
        return False
    if family == "skew-t" and not x[-1] > 2:
        return False
    if family == "skew-GED" and not x[-1] > 0:
        return False
    return True


def _check_match(params: ParamVector, priors: PriorSpec) -> None:
    if params.k != priors.k or params.family != priors.family:
        raise InvalidInputError(
            f"prior is for k={priors.k}, {priors.family}; params are k={params.k}, {params.family}"
        )


def log_prior(params: ParamVector, priors: PriorSpec) -> float:
    """Sum of truncated-normal log-kernels; ``-inf`` outside the support."""
    _check_match(params, priors)
    x = params.to_array()
    if not _flat_in_support(x, params.k, params.family):
        return -np.inf
    z = (x - priors.locations()) / priors.scales()
    return float(-0.5 * np.dot(z, z))


def log_posterior(params: ParamVector, data, priors: PriorSpec) -> float:
    lp = log_prior(params, priors)
    if lp == -np.inf:
        return lp
    return lp + log_likelihood(params, data)


class DccPosterior:
    """
    Log-posterior over flat parameter vectors, as consumed by the samplers.

    Parameters
    ----------
    data : ReturnsMatrix or array_like
    priors : PriorSpec
        Also fixes ``k`` and the distribution family.
    """

    def __init__(self, data, priors: PriorSpec):
        self.data = as_returns(data)
        if self.data.k != priors.k:
            raise InvalidInputError(f"data has {self.data.k} series but priors are for k={priors.k}")
        self.priors = priors
        self.k = priors.k
        self.family = priors.family
        self.names = param_names(self.k, self.family)
        self._mu = priors.locations()
        self._sigma = priors.scales()

    @property
    def dim(self) -> int:
        return len(self.names)

    def unpack(self, x) -> ParamVector:
        return ParamVector.from_array(x, self.k, self.family)

    def in_support(self, x) -> bool:
        return _flat_in_support(np.asarray(x, dtype=float), self.k, self.family)

    def log_prior(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if not _flat_in_support(x, self.k, self.family):
            return -np.inf
        z = (x - self._mu) / self._sigma
        return float(-0.5 * np.dot(z, z))

    def __call__(self, x) -> float:
        lp = self.log_prior(x)
        if lp == -np.inf:
            return lp
        return lp + log_likelihood(self.unpack(x), self.data)
