import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from megalab.density import (
    KL_MAX,
    SIGMA_MIN,
    DomainError,
    EstimateError,
    FitError,
    ShapeError,
    estimate_entropy,
    estimate_kl,
    fit_kde,
    log_density,
    resubstitution_entropy,
)

LOG_2PI = math.log(2 * math.pi)


def gaussian_mixture_logpdf(x, centers, weights, h):
    """Closed-form mixture of isotropic Gaussians, written out term by term."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    total = 0.0
    for c, w in zip(centers, weights):
        c = np.atleast_1d(np.asarray(c, dtype=float))
        sq = float(np.sum((x - c) ** 2))
        total += w * math.exp(-0.5 * sq / h**2) / (2 * math.pi * h**2) ** (len(x) / 2)
    return math.log(total)


def test_fit_single_sample_clamps_std():
    model = fit_kde([5.0])
    assert model.norm_mean[0] == 5.0
    assert model.norm_std[0] == SIGMA_MIN


def test_fit_four_corners():
    model = fit_kde([(0, 0), (2, 0), (0, 2), (2, 2)])
    np.testing.assert_allclose(model.norm_mean, [1.0, 1.0])
    np.testing.assert_allclose(model.norm_std, [1.0, 1.0])
    np.testing.assert_allclose(np.sort(model.fitted_points[:, 0]), [-1, -1, 1, 1])


def test_fit_symmetric_mean_is_zero():
    rng = np.random.default_rng(3)
    half = rng.normal(size=(200, 2))
    model = fit_kde(np.vstack([half, -half]))
    assert np.all(np.abs(model.norm_mean) < 1e-12)


def test_fit_errors():
    with pytest.raises(FitError):
        fit_kde([])
    with pytest.raises(ShapeError):
        fit_kde([[0.0, 1.0], [1.0]])
    with pytest.raises(FitError):
        fit_kde([[1.0]], bandwidth=0.0)


def test_fit_subsamples_to_cap():
    rng = np.random.default_rng(0)
    model = fit_kde(rng.normal(size=(500, 1)), sample_cap=100, rng=np.random.default_rng(1))
    assert model.num_fitted == 100
    assert len(model.fitted_points) <= 100


def test_counts_match_expanded_samples():
    pts = np.array([[0.0, 0.0], [1.0, 2.0], [3.0, 1.0]])
    counts = np.array([5, 1, 2])
    a = fit_kde(pts, counts=counts)
    b = fit_kde(np.repeat(pts, counts, axis=0))
    np.testing.assert_allclose(a.norm_mean, b.norm_mean, rtol=1e-12)
    np.testing.assert_allclose(a.norm_std, b.norm_std, rtol=1e-12)
    q = np.array([[0.5, 0.5], [2.0, 2.0]])
    np.testing.assert_allclose(log_density(a, q), log_density(b, q), rtol=1e-12)


def test_log_density_single_point_mode():
    model = fit_kde([0.0], bandwidth=1.0, normalize=False)
    assert abs(log_density(model, 0.0) - (-0.5 * LOG_2PI)) < 1e-12


def test_log_density_two_point_mixture():
    model = fit_kde([-1.0, 1.0], bandwidth=1.0, normalize=False)
    expected = -0.5 - 0.5 * LOG_2PI  # ln phi(1)
    assert abs(log_density(model, 0.0) - expected) < 1e-12
    assert abs(expected - (-1.4189385332046727)) < 1e-12


@pytest.mark.parametrize(
    "centers, query, h",
    [
        ([(0.0, 0.0), (1.0, 0.5), (1.0, 0.5), (-2.0, 1.0)], (0.3, -0.2), 0.7),
        ([(0.0,), (0.25,), (3.0,)], (0.1,), 0.1),
        ([(1.0, 1.0, 1.0), (0.0, 0.0, 0.0)], (0.5, 0.5, 0.4), 1.5),
    ],
)
def test_log_density_matches_closed_form(centers, query, h):
    model = fit_kde(centers, bandwidth=h, normalize=False)
    uniq, counts = np.unique(np.asarray(centers), axis=0, return_counts=True)
    expected = gaussian_mixture_logpdf(query, uniq, counts / counts.sum(), h)
    assert abs(log_density(model, np.asarray(query)) - expected) < 1e-12


def test_log_density_symmetry():
    model = fit_kde([-2.0, -0.5, 0.5, 2.0], bandwidth=0.4)
    for x in (0.1, 0.7, 1.9, 3.3):
        assert abs(log_density(model, x) - log_density(model, -x)) < 1e-12


def test_log_density_rejects_bad_input():
    model = fit_kde([(0.0, 0.0), (1.0, 1.0)])
    with pytest.raises(DomainError):
        log_density(model, (np.nan, 0.0))
    with pytest.raises(ShapeError):
        log_density(model, np.zeros((2, 3)))


def test_log_density_finite_far_away():
    model = fit_kde([(0.0, 0.0), (1.0, 1.0)], bandwidth=0.1)
    assert np.isfinite(log_density(model, (1e6, -1e6)))


@pytest.mark.parametrize("kernel", ["gaussian", "exponential"])
def test_density_integrates_to_one_1d(kernel):
    rng = np.random.default_rng(11)
    model = fit_kde(rng.normal(size=300), bandwidth=0.1, kernel=kernel)
    z = np.linspace(-10, 10, 100_000)
    dens = np.exp(model.log_density_normalized(z[:, None]))
    assert abs(np.trapezoid(dens, z) - 1.0) < 1e-3


def test_exponential_kernel_integrates_to_one_2d():
    model = fit_kde([(0.0, 0.0)], bandwidth=0.5, kernel="exponential", normalize=False)
    g = np.linspace(-15, 15, 1201)
    xx, yy = np.meshgrid(g, g)
    dens = np.exp(log_density(model, np.column_stack([xx.ravel(), yy.ravel()]))).reshape(xx.shape)
    assert abs(np.trapezoid(np.trapezoid(dens, g, axis=1), g) - 1.0) < 1e-3


def test_entropy_of_standard_gaussian():
    rng = np.random.default_rng(2024)
    model = fit_kde(rng.normal(size=5000), bandwidth=0.1)
    est = estimate_entropy(model, rng.normal(size=5000))
    assert abs(est - 0.5 * math.log(2 * math.pi * math.e)) < 0.15


def test_entropy_single_point():
    model = fit_kde([0.0], bandwidth=1.0, normalize=False)
    assert abs(estimate_entropy(model, [0.0]) - 0.5 * LOG_2PI) < 1e-12


def test_entropy_grows_with_bandwidth():
    data = np.random.default_rng(5).normal(size=(400, 2))
    narrow = estimate_entropy(fit_kde(data, bandwidth=0.1), data)
    wide = estimate_entropy(fit_kde(data, bandwidth=0.3), data)
    assert wide >= narrow


def test_entropy_empty_eval_set():
    with pytest.raises(EstimateError):
        estimate_entropy(fit_kde([0.0, 1.0]), [])


def test_entropy_permutation_invariant():
    rng = np.random.default_rng(8)
    data = rng.normal(size=(300, 2))
    model = fit_kde(data)
    evals = rng.normal(size=(200, 2))
    assert estimate_entropy(model, evals) == estimate_entropy(model, evals[rng.permutation(200)])


def test_resubstitution_entropy_equals_explicit_eval():
    pts = np.array([[0, 0], [0, 0], [1, 0], [3, 2]], dtype=float)
    model = fit_kde(pts, bandwidth=0.2)
    assert abs(resubstitution_entropy(model) - estimate_entropy(model, pts)) < 1e-12


def test_fit_is_deterministic_given_seed():
    data = np.random.default_rng(0).normal(size=(20_000, 2))
    q = np.random.default_rng(1).normal(size=(50, 2))
    a = fit_kde(data, rng=np.random.default_rng(7))
    b = fit_kde(data, rng=np.random.default_rng(7))
    np.testing.assert_array_equal(log_density(a, q), log_density(b, q))


def _ag_model():
    rng = np.random.default_rng(99)
    return fit_kde(rng.uniform(0, 4, size=(6000, 2)), bandwidth=0.1, rng=rng)


def test_kl_identical_distributions_is_zero():
    model = fit_kde([(0, 0), (1, 0), (0, 1), (2, 2)], bandwidth=0.1)
    rng = np.random.default_rng(0)
    raw = model.fitted_points * model.norm_std + model.norm_mean
    weights = np.exp(model.log_weights)

    def sampler(n):
        return raw[rng.choice(len(raw), size=n, p=weights)]

    def own_log_density(goals):
        return log_density(model, goals)

    assert estimate_kl(model, sampler, own_log_density, 500) == 0.0


def test_kl_disjoint_support_hits_clamp():
    model = _ag_model()
    rng = np.random.default_rng(1)
    far = lambda n: rng.uniform(100, 101, size=(n, 2))  # noqa: E731
    assert estimate_kl(model, far, lambda g: np.zeros(len(g)), 200) == KL_MAX


def test_kl_against_quadrature_oracle():
    model = _ag_model()
    lo, hi = 1.0, 2.0
    # uniform desired density on the sub-square, expressed in normalized coordinates
    log_dg = -math.log((hi - lo) ** 2 / np.prod(model.norm_std))

    rng = np.random.default_rng(2)
    est = estimate_kl(
        model,
        lambda n: rng.uniform(lo, hi, size=(n, 2)),
        lambda g: np.full(len(g), log_dg),
        4000,
    )
    # midpoint rule over a 200 x 200 grid of the sub-square
    m = 200
    centers = lo + (np.arange(m) + 0.5) * (hi - lo) / m
    xx, yy = np.meshgrid(centers, centers)
    log_ag = log_density(model, np.column_stack([xx.ravel(), yy.ravel()]))
    oracle = float(np.mean(log_dg - log_ag))
    assert abs(est - oracle) < 0.3


@settings(max_examples=40, deadline=None)
@given(
    shift=st.floats(-20, 20),
    spread=st.floats(0.01, 5),
    log_dg=st.floats(-30, 30),
)
def test_kl_always_clamped(shift, spread, log_dg):
    model = fit_kde(np.random.default_rng(0).normal(size=(200, 2)), bandwidth=0.1)
    rng = np.random.default_rng(1)
    kl = estimate_kl(
        model,
        lambda n: shift + spread * rng.normal(size=(n, 2)),
        lambda g: np.full(len(g), log_dg),
        50,
    )
    assert 0.0 <= kl <= KL_MAX
