"""
Random-walk Metropolis samplers for the DCC-GARCH posterior.

The default ("auto") route:

1. maximise the log-posterior with Nelder-Mead and take a central-difference
   Hessian at the mode;
2. if that works and ``-H`` is positive definite, run a one-block random-walk
   Metropolis with proposal covariance ``2.38^2 / p * (-H)^-1``;
3. otherwise run a one-parameter-at-a-time pilot whose proposal scales are
   doubled/halved to keep windowed acceptance in [0.20, 0.50], and use the
   scaled sample covariance of the pilot as the block proposal.

All samplers take a plain callable ``log_post(x) -> float`` over flat vectors;
``-inf`` means "outside the support" and is always rejected.
"""
from __future__ import annotations

import sys
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize

from bayesdcc.errors import InvalidInputError
from bayesdcc.model import ParamVector, as_returns
from bayesdcc.priors import DccPosterior, PriorSpec, default_priors

__all__ = [
    "SamplerConfig",
    "McmcChain",
    "ModeResult",
    "find_mode",
    "finite_difference_hessian",
    "block_proposal_from_hessian",
    "run_pilot",
    "run_block_sampler",
    "run_per_parameter_sampler",
    "sample",
    "fit",
]

LogDensity = Callable[[np.ndarray], float]
MODES = ("block", "per-parameter", "auto")


@dataclass
class SamplerConfig:
    """Sampler settings.

    ``mode`` mirrors the package's ``simAlg``: ``"block"`` needs
    ``proposal_chol`` (``cholCov``), ``"per-parameter"`` needs ``proposal_sds``
    (``sdSim``). In ``"auto"`` mode ``proposal_sds`` only seeds the pilot.
    ``scale`` multiplies the block proposal covariance; ``None`` means 2.38^2 / p.
    """

    n_sim: int = 10000
    mode: str = "auto"
    proposal_chol: Optional[np.ndarray] = None
    proposal_sds: Optional[np.ndarray] = None
    pilot_length: int = 2000
    adapt_interval: int = 100
    target_accept_low: float = 0.20
    target_accept_high: float = 0.50
    scale: Optional[float] = None
    seed: int = 0
    progress: bool = False

    def validate(self, p: Optional[int] = None) -> None:
        if int(self.n_sim) < 1:
            raise InvalidInputError("n_sim must be at least 1")
        if self.mode not in MODES:
            raise InvalidInputError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0 < self.target_accept_low < self.target_accept_high < 1:
            raise InvalidInputError("need 0 < target_accept_low < target_accept_high < 1")
        if self.pilot_length < 2 or self.adapt_interval < 1:
            raise InvalidInputError("pilot_length must be >= 2 and adapt_interval >= 1")
        if self.scale is not None and not self.scale > 0:
            raise InvalidInputError("scale must be positive")
        if self.mode == "block" and self.proposal_chol is None:
            raise InvalidInputError("mode='block' requires proposal_chol")
        if self.mode == "per-parameter" and self.proposal_sds is None:
            raise InvalidInputError("mode='per-parameter' requires proposal_sds")
        if self.proposal_chol is not None:
            _check_chol(self.proposal_chol, p)
        if self.proposal_sds is not None:
            sds = np.atleast_1d(np.asarray(self.proposal_sds, dtype=float))
            if not np.all(np.isfinite(sds)) or np.any(sds <= 0):
                raise InvalidInputError("proposal_sds must be positive")
            if p is not None and sds.shape != (p,):
                raise InvalidInputError(f"proposal_sds must have length {p}")

    def block_scale(self, p: int) -> float:
        return self.scale if self.scale is not None else 2.38**2 / p


@dataclass
class McmcChain:
    """Retained draws plus acceptance statistics and run metadata."""

    draws: np.ndarray
    param_names: list
    accept_rate: float | np.ndarray
    log_post: np.ndarray
    n_accepted: int | np.ndarray = 0
    phase_log: list = field(default_factory=list)
    elapsed: float = 0.0
    family: Optional[str] = None
    k: Optional[int] = None

    @property
    def n_sim(self) -> int:
        return self.draws.shape[0]


@dataclass
class ModeResult:
    x: np.ndarray
    log_post: float
    hessian: Optional[np.ndarray]
    converged: bool
    n_evals: int
    message: str = ""


def _check_chol(chol, p: Optional[int]) -> np.ndarray:
    chol = np.atleast_2d(np.asarray(chol, dtype=float))
    if chol.ndim != 2 or chol.shape[0] != chol.shape[1]:
        raise InvalidInputError("proposal_chol must be square")
    if p is not None and chol.shape != (p, p):
        raise InvalidInputError(f"proposal_chol must be {p} x {p}")
    if not np.all(np.isfinite(chol)) or np.any(np.triu(chol, 1) != 0) or np.any(np.diag(chol) < 0):
        raise InvalidInputError("proposal_chol must be lower triangular with non-negative diagonal")
    return chol


def _names(names: Optional[Sequence[str]], p: int) -> list:
    return list(names) if names is not None else [f"x{i + 1}" for i in range(p)]


def _rng(rng, seed) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng(seed)


def _report(config: SamplerConfig, phase: str, i: int, n: int) -> None:
    if config.progress and i % 100 == 0:
        print(f"[{phase}] iteration {i}/{n}", file=sys.stderr)


def finite_difference_hessian(f: LogDensity, x, rel_step=1e-4, min_step=1e-4, max_shrink=30):
    """
    Central-difference Hessian of ``f`` at ``x``.

    Steps are ``max(min_step, rel_step * |x_i|)`` and are halved (up to
    ``max_shrink`` times) whenever a stencil point falls where ``f`` is not
    finite, e.g. across a support boundary.

    Returns
    -------
    (H, ok) : (ndarray, bool)
        ``ok`` is False if some stencil could not be made finite.
    """
    x = np.asarray(x, dtype=float)
    p = x.size
    f0 = f(x)
    if not np.isfinite(f0):
        return np.full((p, p), np.nan), False
    h = np.maximum(min_step, rel_step * np.abs(x))
    H = np.empty((p, p))
    eye = np.eye(p)

    for i in range(p):
        for _ in range(max_shrink):
            fp, fm = f(x + h[i] * eye[i]), f(x - h[i] * eye[i])
            if np.isfinite(fp) and np.isfinite(fm):
                break
            h[i] /= 2
        else:
            return H, False
        H[i, i] = (fp - 2.0 * f0 + fm) / h[i] ** 2

    for i in range(p):
        for j in range(i + 1, p):
            hi, hj = h[i], h[j]
            for _ in range(max_shrink):
                di, dj = hi * eye[i], hj * eye[j]
                vals = (f(x + di + dj), f(x + di - dj), f(x - di + dj), f(x - di - dj))
                if all(np.isfinite(vals)):
                    break
                hi, hj = hi / 2, hj / 2
            else:
                return H, False
            H[i, j] = H[j, i] = (vals[0] - vals[1] - vals[2] + vals[3]) / (4.0 * hi * hj)
    return H, bool(np.all(np.isfinite(H)))


def _initial_simplex(objective, x, rel=0.1, floor=0.05) -> np.ndarray:
    """Simplex around ``x`` with edge ``rel * max(|x_i|, floor)``, kept inside the support.

    An edge that leaves the support is flipped, then halved, until the vertex is
    feasible. The floor stops the simplex collapsing when a coordinate sits near 0.
    """
    p = x.size
    sim = np.tile(x, (p + 1, 1))
    for i in range(p):
        step = rel * max(abs(x[i]), floor)
        for _ in range(40):
            v = x.copy()
            v[i] += step
            if np.isfinite(objective(v)):
                break
            v[i] = x[i] - step
            if np.isfinite(objective(v)):
                break
            step *= 0.5
        sim[i + 1] = v
    return sim


def find_mode(log_post: LogDensity, x0, max_evals: Optional[int] = None, rtol: float = 1e-8) -> ModeResult:
    """
    Maximise ``log_post`` from ``x0`` with Nelder-Mead, then take the Hessian.

    Each simplex is rebuilt around the incumbent with edges that do not shrink
    with the coordinate, so a run that stalled against a boundary can move away
    from it. The simplex is restarted from the incumbent until a restart no longer
    improves the objective by more than ``rtol`` (relative), within a total
    budget of ``500 * p`` evaluations by default. ``converged`` is False when
    the budget runs out or the Hessian has non-finite entries.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    p = x0.size
    f0 = log_post(x0)
    if not np.isfinite(f0):
        raise InvalidInputError("initial point is outside the support (log-posterior not finite)")
    budget = int(max_evals if max_evals is not None else 500 * p)

    def objective(x):
        v = log_post(x)
        return -v if np.isfinite(v) else np.inf

    best_x, best_f = x0, -f0
    used = 0
    converged = False
    message = ""
    while used < budget:
        res = minimize(
            objective,
            best_x,
            method="Nelder-Mead",
            options=dict(
                initial_simplex=_initial_simplex(objective, np.asarray(best_x, dtype=float)),
                maxfev=budget - used,
                xatol=np.inf,
                fatol=rtol * (abs(best_f) + rtol),
                adaptive=p > 4,
            ),
        )
        used += res.nfev
        message = res.message
        improvement = best_f - res.fun
        if res.fun < best_f:
            best_x, best_f = res.x, res.fun
        if not res.success:
            break
        if improvement <= rtol * (abs(best_f) + rtol):
            converged = True
            break

    H, ok = finite_difference_hessian(log_post, best_x)
    return ModeResult(
        x=np.asarray(best_x),
        log_post=-best_f,
        hessian=H if ok else None,
        converged=converged and ok,
        n_evals=used,
        message=str(message),
    )


def block_proposal_from_hessian(hessian, scale: Optional[float] = None) -> Optional[np.ndarray]:
    """
    Cholesky factor of ``scale * (-H)^-1``, or None if ``-H`` is not positive definite.

    ``scale`` defaults to 2.38^2 / p.
    """
    if hessian is None:
        return None
    H = np.atleast_2d(np.asarray(hessian, dtype=float))
    if not np.all(np.isfinite(H)):
        return None
    H = 0.5 * (H + H.T)
    p = H.shape[0]
    scale = 2.38**2 / p if scale is None else scale
    try:
        cf = cho_factor(-H, lower=True)
        cov = cho_solve(cf, np.eye(p))
        chol = np.linalg.cholesky(scale * 0.5 * (cov + cov.T))
    except np.linalg.LinAlgError:
        return None
    return chol if np.all(np.isfinite(chol)) else None


def _default_pilot_sds(x0: np.ndarray) -> np.ndarray:
    return 0.05 * np.maximum(np.abs(x0), 0.1)


def _pilot_proposal(draws: np.ndarray, scale: float) -> np.ndarray:
    p = draws.shape[1]
    tail = draws[draws.shape[0] // 2:]
    S = np.atleast_2d(np.cov(tail, rowvar=False))
    try:
        return np.linalg.cholesky(scale * S)
    except np.linalg.LinAlgError:
        pass
    ridge = 1e-8 * np.trace(S) / p
    if not ridge > 0:
        ridge = 1e-12
    for _ in range(20):
        try:
            return np.linalg.cholesky(scale * (S + ridge * np.eye(p)))
        except np.linalg.LinAlgError:
            ridge *= 10
    raise InvalidInputError("pilot covariance could not be factorised")


def _metropolis_within_gibbs(log_post, x0, sds, n, rng, config, phase, adapt):
    x = np.array(x0, dtype=float)
    p = x.size
    lp = log_post(x)
    if not np.isfinite(lp):
        raise InvalidInputError("log-posterior is not finite at the starting point")
    sds = np.array(sds, dtype=float)
    draws = np.empty((n, p))
    lps = np.empty(n)
    accepted = np.zeros(p, dtype=int)
    window = np.zeros(p, dtype=int)
    seg_acc = np.zeros(p, dtype=int)
    seg_len = np.zeros(p, dtype=int)
    log = []
    z = rng.standard_normal((n, p))
    log_u = np.log(rng.random((n, p)))
    interval = config.adapt_interval

    for it in range(n):
        for j in range(p):
            prop = x.copy()
            prop[j] += sds[j] * z[it, j]
            lpp = log_post(prop)
            if log_u[it, j] < lpp - lp:
                x, lp = prop, lpp
                accepted[j] += 1
                window[j] += 1
                seg_acc[j] += 1
        seg_len += 1
        draws[it] = x
        lps[it] = lp
        _report(config, phase, it + 1, n)
        if adapt and (it + 1) % interval == 0 and it + 1 < n:
            rate = window / interval
            up = rate > config.target_accept_high
            down = rate < config.target_accept_low
            log.append({"phase": phase, "iteration": it + 1, "window_accept": rate.tolist(),
                        "sds": sds.tolist()})
            sds[up] *= 2.0
            sds[down] /= 2.0
            changed = up | down
            seg_acc[changed] = 0
            seg_len[changed] = 0
            window[:] = 0
    return draws, lps, accepted, sds, seg_acc / seg_len, log


def run_pilot(
    log_post: LogDensity,
    x0,
    config: Optional[SamplerConfig] = None,
    names: Optional[Sequence[str]] = None,
    rng: Optional[np.random.Generator] = None,
):
    """
    One-parameter-at-a-time random-walk Metropolis with scale tuning.

    Every ``adapt_interval`` sweeps each proposal s.d. is doubled if its
    acceptance over the window exceeded ``target_accept_high`` and halved if it
    fell below ``target_accept_low``. Adaptation stops at the end of the pilot.

    Returns
    -------
    (chain, proposal_chol)
        ``chain.phase_log[-1]`` holds the final s.d.s and ``tuned_accept``: the
        acceptance rate of each parameter over the stretch since its last
        scale change. ``proposal_chol`` is the Cholesky factor of the scaled
        sample covariance of the second half of the pilot.
    """
    config = config or SamplerConfig()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    p = x0.size
    rng = _rng(rng, config.seed)
    sds = _default_pilot_sds(x0) if config.proposal_sds is None else config.proposal_sds
    start = time.perf_counter()
    draws, lps, accepted, sds, tuned, log = _metropolis_within_gibbs(
        log_post, x0, sds, config.pilot_length, rng, config, "pilot", adapt=True
    )
    chol = _pilot_proposal(draws, config.block_scale(p))
    log.append({"phase": "pilot", "iteration": config.pilot_length, "final_sds": sds.tolist(),
                "tuned_accept": tuned.tolist()})
    chain = McmcChain(
        draws=draws,
        param_names=_names(names, p),
        accept_rate=accepted / config.pilot_length,
        log_post=lps,
        n_accepted=accepted,
        phase_log=log,
        elapsed=time.perf_counter() - start,
    )
    return chain, chol


def run_per_parameter_sampler(
    log_post: LogDensity,
    x0,
    sds,
    config: Optional[SamplerConfig] = None,
    names: Optional[Sequence[str]] = None,
    rng: Optional[np.random.Generator] = None,
) -> McmcChain:
    """``n_sim`` sweeps of one-at-a-time random-walk Metropolis with fixed s.d.s."""
    config = config or SamplerConfig()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    rng = _rng(rng, config.seed)
    start = time.perf_counter()
    draws, lps, accepted, _, _, _ = _metropolis_within_gibbs(
        log_post, x0, sds, config.n_sim, rng, config, "per-parameter", adapt=False
    )
    return McmcChain(
        draws=draws,
        param_names=_names(names, x0.size),
        accept_rate=accepted / config.n_sim,
        log_post=lps,
        n_accepted=accepted,
        phase_log=[{"phase": "per-parameter", "sds": np.asarray(sds, dtype=float).tolist()}],
        elapsed=time.perf_counter() - start,
    )


def run_block_sampler(
    log_post: LogDensity,
    x0,
    proposal_chol,
    config: Optional[SamplerConfig] = None,
    names: Optional[Sequence[str]] = None,
    rng: Optional[np.random.Generator] = None,
) -> McmcChain:
    """
    One-block random-walk Metropolis: propose ``x + proposal_chol @ z``.

    ``accept_rate`` is exactly ``n_accepted / n_sim``.
    """
    config = config or SamplerConfig()
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    p = x.size
    chol = _check_chol(proposal_chol, p)
    rng = _rng(rng, config.seed)
    lp = log_post(x)
    if not np.isfinite(lp):
        raise InvalidInputError("log-posterior is not finite at the starting point")
    n = int(config.n_sim)
    start = time.perf_counter()
    steps = rng.standard_normal((n, p)) @ chol.T
    log_u = np.log(rng.random(n))
    draws = np.empty((n, p))
    lps = np.empty(n)
    accepted = 0
    for i in range(n):
        prop = x + steps[i]
        lpp = log_post(prop)
        if log_u[i] < lpp - lp:
            x, lp = prop, lpp
            accepted += 1
        draws[i] = x
        lps[i] = lp
        _report(config, "block", i + 1, n)
    return McmcChain(
        draws=draws,
        param_names=_names(names, p),
        accept_rate=accepted / n,
        log_post=lps,
        n_accepted=accepted,
        phase_log=[{"phase": "block", "proposal_chol": chol.tolist()}],
        elapsed=time.perf_counter() - start,
    )


def sample(
    log_post: LogDensity,
    x0,
    config: Optional[SamplerConfig] = None,
    names: Optional[Sequence[str]] = None,
) -> McmcChain:
    """Run the sampler selected by ``config.mode`` on an arbitrary log-density."""
    config = config or SamplerConfig()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    p = x0.size
    config.validate(p)
    if not np.isfinite(log_post(x0)):
        raise InvalidInputError("initial values are outside the support")
    pilot_rng, main_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(2))
    start = time.perf_counter()

    if config.mode == "block":
        chain = run_block_sampler(log_post, x0, config.proposal_chol, config, names, main_rng)
        chain.phase_log.insert(0, {"phase": "route", "route": "block (user proposal)"})
    elif config.mode == "per-parameter":
        chain = run_per_parameter_sampler(log_post, x0, config.proposal_sds, config, names, main_rng)
        chain.phase_log.insert(0, {"phase": "route", "route": "per-parameter (user s.d.s)"})
    else:
        mode = find_mode(log_post, x0)
        chol = block_proposal_from_hessian(mode.hessian, config.block_scale(p)) if mode.converged else None
        route = {"phase": "mode", "converged": mode.converged, "log_post": mode.log_post,
                 "n_evals": mode.n_evals, "x": mode.x.tolist(), "message": mode.message,
                 "hessian_pd": chol is not None}
        if chol is not None:
            chain = run_block_sampler(log_post, mode.x, chol, config, names, main_rng)
            chain.phase_log[:0] = [route, {"phase": "route", "route": "mode -> hessian -> block"}]
        else:
            start_x = mode.x if np.isfinite(mode.log_post) else x0
            pilot, chol = run_pilot(log_post, start_x, config, names, pilot_rng)
            chain = run_block_sampler(log_post, pilot.draws[-1], chol, config, names, main_rng)
            chain.phase_log[:0] = [route, {"phase": "route", "route": "mode -> pilot -> block"},
                                   *pilot.phase_log,
                                   {"phase": "pilot-summary", "accept_rate": pilot.accept_rate.tolist()}]
    chain.elapsed = time.perf_counter() - start
    return chain


def fit(
    data,
    priors: Optional[PriorSpec] = None,
    init: Optional[ParamVector] = None,
    config: Optional[SamplerConfig] = None,
    family: Optional[str] = None,
) -> McmcChain:
    """
    Bayesian estimation of a DCC-GARCH(1,1) model.

    Parameters
    ----------
    data : ReturnsMatrix or array_like, shape (T, k)
        Zero-mean returns, T >= 2.
    priors : PriorSpec, optional
        Defaults to ``default_priors(k, family)``.
    init : ParamVector, optional
        Starting values; defaults to ``ParamVector.default(k, family)``.
    config : SamplerConfig, optional
    family : str, optional
        ``"skew-normal"``, ``"skew-t"`` (default) or ``"skew-GED"``. Inferred from
        ``priors`` or ``init`` when omitted.
    """
    rm = as_returns(data)
    config = config or SamplerConfig()
    family = family or (priors.family if priors else None) or (init.family if init else None) or "skew-t"
    priors = priors or default_priors(rm.k, family)
    init = init or ParamVector.default(rm.k, family)
    for obj, what in ((priors, "priors"), (init, "init")):
        if obj.family != family or obj.k != rm.k:
            raise InvalidInputError(f"{what} are for k={obj.k}, {obj.family}; expected k={rm.k}, {family}")
    posterior = DccPosterior(rm, priors)
    config.validate(posterior.dim)
    init.validate()
    chain = sample(posterior, init.to_array(), config, posterior.names)
    chain.family = family
    chain.k = rm.k
    return chain
