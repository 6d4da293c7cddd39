import numpy as np
import pytest

from bayesdcc.diagnostics import effective_sample_size
from bayesdcc.errors import InvalidInputError
from bayesdcc.mcmc import (
    SamplerConfig,
    block_proposal_from_hessian,
    find_mode,
    fit,
    run_block_sampler,
    run_pilot,
    sample,
)
from bayesdcc.model import ParamVector, simulate_path
from bayesdcc.priors import DccPosterior, default_priors


def std_normal(x):
    x = np.asarray(x)
    return -0.5 * float(x @ x)


def quadratic(x):
    return -2.0 * (x[0] - 1.3) ** 2


class TestMode:
    def test_quadratic_toy(self):
        res = find_mode(quadratic, [0.0])
        assert res.converged
        assert res.x[0] == pytest.approx(1.3, abs=1e-6)
        assert res.hessian[0, 0] == pytest.approx(-4.0, abs=1e-3)

    def test_start_at_mode(self):
        res = find_mode(quadratic, [1.3])
        assert res.converged
        assert res.n_evals < 200
        assert res.x[0] == pytest.approx(1.3, abs=1e-6)

    def test_multivariate_hessian(self):
        A = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 3.0]])
        res = find_mode(lambda x: -0.5 * (x - 1) @ A @ (x - 1), np.zeros(3))
        assert res.converged
        np.testing.assert_allclose(res.x, 1.0, atol=1e-4)
        np.testing.assert_allclose(res.hessian, -A, atol=1e-3)

    def test_simplex_escapes_zero_coordinate(self):
        # scipy's default simplex would use a 2.5e-4 edge here
        res = find_mode(lambda x: -((x[0] - 0.5) ** 2) - (x[1] - 2.0) ** 2, [0.0, 0.0])
        np.testing.assert_allclose(res.x, [0.5, 2.0], atol=1e-4)

    def test_outside_support(self):
        with pytest.raises(InvalidInputError):
            find_mode(lambda x: -np.inf, [0.0])

    def test_boundary_hessian_steps_shrink(self):
        # density supported on x > 0 with the mode 5e-5 from the boundary
        f = lambda x: -0.5 * ((x[0] - 5e-5) / 1e-3) ** 2 if x[0] > 0 else -np.inf
        res = find_mode(f, [5e-5])
        assert res.hessian is not None
        assert res.hessian[0, 0] == pytest.approx(-1e6, rel=1e-3)

    # seed 4: from the default start the simplex settles on the alpha = 0 ridge,
    # where h is constant and (omega, beta) are not identified; a local maximiser
    # cannot leave it
    @pytest.mark.parametrize(
        "seed",
        [s if s != 4 else pytest.param(4, marks=pytest.mark.xfail(strict=True, reason="alpha = 0 ridge"))
         for s in range(10)],
    )
    def test_dcc_mode_beats_truth(self, seed):
        true = ParamVector([0.1], [0.1], [0.8], 0, 0, [1.0], None, "skew-normal")
        y = simulate_path(true, 200, seed=seed)
        post = DccPosterior(y, default_priors(1, "skew-normal"))
        res = find_mode(post, ParamVector.default(1, "skew-normal").to_array())
        assert res.log_post >= post(true.to_array())


class TestBlockProposal:
    def test_scale_rule(self):
        np.testing.assert_allclose(block_proposal_from_hessian(-np.eye(4)), 1.19 * np.eye(4), rtol=1e-14)

    def test_not_negative_definite(self):
        assert block_proposal_from_hessian(np.eye(3)) is None
        assert block_proposal_from_hessian(np.zeros((3, 3))) is None
        assert block_proposal_from_hessian(np.diag([-1.0, 1.0])) is None

    def test_symmetrised(self):
        H = np.array([[-2.0, 0.3], [0.1, -1.0]])
        L = block_proposal_from_hessian(H, scale=1.0)
        Hs = 0.5 * (H + H.T)
        np.testing.assert_allclose(L @ L.T, np.linalg.inv(-Hs), rtol=1e-12)


class TestPilot:
    def test_tuned_acceptance_in_band(self):
        chain, chol = run_pilot(std_normal, np.zeros(3), SamplerConfig(seed=1))
        tuned = np.array(chain.phase_log[-1]["tuned_accept"])
        assert np.all((tuned >= 0.20) & (tuned <= 0.50)), tuned
        assert np.allclose(chol, np.tril(chol)) and np.all(np.diag(chol) > 0)

    def test_always_accept_doubles(self):
        cfg = SamplerConfig(pilot_length=600, adapt_interval=100, proposal_sds=np.array([0.1, 1.0]), seed=0)
        chain, _ = run_pilot(lambda x: 0.0, np.zeros(2), cfg)
        sds = [np.array(e["sds"]) for e in chain.phase_log if "sds" in e]
        assert len(sds) == 5
        for i, s in enumerate(sds):
            np.testing.assert_allclose(s, np.array([0.1, 1.0]) * 2**i)
        np.testing.assert_allclose(chain.phase_log[-1]["final_sds"], np.array([0.1, 1.0]) * 2**5)

    def test_pilot_covariance(self):
        chain, chol = run_pilot(std_normal, np.zeros(3), SamplerConfig(pilot_length=5000, seed=2))
        S = np.cov(chain.draws[2500:], rowvar=False)
        assert np.max(np.abs(S - np.eye(3))) < 0.2
        np.testing.assert_allclose(chol @ chol.T, 2.38**2 / 3 * S, rtol=1e-10)

    def test_bad_start(self):
        with pytest.raises(InvalidInputError):
            run_pilot(lambda x: -np.inf, np.zeros(2))


def _reference_acceptance(p, n=4_000_000, seed=123):
    # stationary acceptance of RW-MH on N(0, I_p) with N(0, I_p) proposals
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    z = rng.standard_normal((n, p))
    delta = -0.5 * (np.sum((x + z) ** 2, axis=1) - np.sum(x**2, axis=1))
    return float(np.mean(np.minimum(1.0, np.exp(delta))))


class TestBlockSampler:
    def test_acceptance_matches_reference(self):
        chain = run_block_sampler(std_normal, np.zeros(2), np.eye(2), SamplerConfig(n_sim=100_000, seed=3))
        assert chain.accept_rate == pytest.approx(_reference_acceptance(2), abs=0.05)
        assert chain.accept_rate == chain.n_accepted / 100_000

    def test_zero_proposal(self):
        chain = run_block_sampler(std_normal, np.array([0.3, -0.2]), np.zeros((2, 2)), SamplerConfig(n_sim=50))
        assert chain.accept_rate == 1.0
        assert np.all(chain.draws == np.array([0.3, -0.2]))

    def test_moments(self):
        chain = run_block_sampler(std_normal, np.zeros(2), 1.7 * np.eye(2), SamplerConfig(n_sim=100_000, seed=4))
        for j in range(2):
            col = chain.draws[:, j]
            se = np.std(col) / np.sqrt(effective_sample_size(col))
            assert abs(col.mean()) < 3 * se
            assert np.var(col) == pytest.approx(1.0, rel=0.1)

    def test_support_never_violated(self):
        f = lambda x: -0.5 * float(x @ x) if np.all(x > 0) else -np.inf
        chain = run_block_sampler(f, np.ones(2), np.eye(2), SamplerConfig(n_sim=5000, seed=5))
        assert np.all(chain.draws > 0)

    def test_rejects_upper_triangular(self):
        with pytest.raises(InvalidInputError):
            run_block_sampler(std_normal, np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]))


class TestOrchestration:
    def test_auto_route_uses_hessian(self):
        chain = sample(std_normal, np.ones(3), SamplerConfig(n_sim=2000, seed=6))
        assert chain.phase_log[1]["route"] == "mode -> hessian -> block"

    def test_fallback_to_pilot_on_flat_mode(self):
        # flat top around the mode makes the Hessian zero there
        f = lambda x: -0.5 * float(np.sum(np.maximum(np.abs(x) - 1.0, 0.0) ** 2))
        chain = sample(f, np.zeros(2), SamplerConfig(n_sim=500, pilot_length=400, seed=7))
        assert chain.phase_log[1]["route"] == "mode -> pilot -> block"
        chol = np.array(next(e for e in chain.phase_log if e["phase"] == "block")["proposal_chol"])
        assert np.all(np.triu(chol, 1) == 0) and np.all(np.diag(chol) > 0)

    def test_block_requires_chol(self):
        with pytest.raises(InvalidInputError, match="proposal_chol"):
            sample(std_normal, np.zeros(2), SamplerConfig(mode="block"))
        with pytest.raises(InvalidInputError, match="proposal_sds"):
            sample(std_normal, np.zeros(2), SamplerConfig(mode="per-parameter"))

    def test_per_parameter_mode(self):
        chain = sample(std_normal, np.zeros(2), SamplerConfig(mode="per-parameter", proposal_sds=[2.0, 2.0],
                                                              n_sim=3000, seed=8))
        assert chain.accept_rate.shape == (2,)
        assert np.all((chain.accept_rate > 0.3) & (chain.accept_rate < 0.7))

    def test_reproducible(self):
        cfg = dict(n_sim=500, seed=9)
        a = sample(std_normal, np.ones(2), SamplerConfig(**cfg))
        b = sample(std_normal, np.ones(2), SamplerConfig(**cfg))
        assert np.array_equal(a.draws, b.draws)


class TestFit:
    def test_defaults_k3(self):
        p = ParamVector.default(3, "skew-t")
        np.testing.assert_array_equal(p.to_array(), [0.03] * 3 + [0.03] * 3 + [0.8] * 3 + [0.03, 0.8] + [1] * 3 + [8])

    def test_invalid_config_before_sampling(self):
        y = np.random.default_rng(0).normal(size=(50, 2))
        with pytest.raises(InvalidInputError):
            fit(y, config=SamplerConfig(mode="block"))
        with pytest.raises(InvalidInputError):
            fit(np.ones((1, 2)))
        with pytest.raises(InvalidInputError):
            fit(y, config=SamplerConfig(mode="block", proposal_chol=np.eye(3)))

    def test_small_fit_valid_and_reproducible(self):
        true = ParamVector([0.1, 0.2], [0.08, 0.05], [0.85, 0.9], 0.05, 0.9, [0.9, 1.1], 7.0, "skew-t")
        y = simulate_path(true, 300, seed=10)
        cfg = SamplerConfig(n_sim=400, seed=11)
        a = fit(y, config=cfg, family="skew-t")
        b = fit(y, config=SamplerConfig(n_sim=400, seed=11), family="skew-t")
        assert np.array_equal(a.draws, b.draws)
        assert a.param_names[-1] == "tail" and a.k == 2
        for row in a.draws:
            assert ParamVector.from_array(row, 2, "skew-t").is_valid()
