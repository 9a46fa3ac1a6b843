import math

import numpy as np
import pytest
from scipy.special import ndtr

from tailagg import (
    approx_sum_pair,
    bivariate_lognormal,
    cond_mc_lognormal,
    cond_mc_terms,
    exact_comonotone_lognormal,
    exact_lognormal_single,
    iid_pair,
    lognormal,
    plain_mc,
    ratio_vs_asymptotic,
    weibull_type,
)
from tailagg.kernels import compiled_available
from tailagg.rare_event import EstimateResult

LN = lognormal(0.0, 1.0)


def phibar(z):
    return float(ndtr(-z))


# ---------------------------------------------------------------- exact formula


def test_exact_published_anchor_values():
    assert exact_comonotone_lognormal(0.0, 10.0).estimate == pytest.approx(0.0219, abs=1e-4)
    assert exact_comonotone_lognormal(0.0, 1000.0).estimate == pytest.approx(4.923859e-12, rel=1e-6)


def test_exact_boundary_is_one():
    assert exact_comonotone_lognormal(0.0, 2.0).estimate == 1.0
    assert exact_comonotone_lognormal(0.0, 0.5).estimate == 1.0
    assert exact_comonotone_lognormal(0.3, 2.0 * math.exp(0.3)).estimate == 1.0


def test_exact_formula_structure():
    # P(X + 1/X > x) needs the roots of t^2 - x t + 1, i.e. sqrt(x^2 - 4);
    # the sqrt(x^2 - 2) variant lands far from the tabulated anchor value.
    x = 10.0
    root4 = (x + math.sqrt(x * x - 4.0)) / 2.0
    good = phibar(math.log(root4)) + (1.0 - phibar(-math.log(root4)))
    assert exact_comonotone_lognormal(0.0, x).estimate == pytest.approx(good, rel=1e-12)
    assert good == pytest.approx(0.0219, abs=1e-4)

    rp = (x + math.sqrt(x * x - 2.0)) / 2.0
    rm = (x - math.sqrt(x * x - 2.0)) / 2.0
    bad = phibar(math.log(rp)) + (1.0 - phibar(math.log(rm)))
    assert bad == pytest.approx(0.01219, abs=1e-4)
    assert abs(bad - 0.0219) > 5e-3  # the variant cannot reproduce the anchor


def test_exact_two_sided_symmetry_identity():
    # 2 Phibar(log t+) equals the two-sided form Phibar(log t+) + Phi(log t-)
    for x in (3.0, 10.0, 100.0):
        tp = (x + math.sqrt(x * x - 4.0)) / 2.0
        tm = (x - math.sqrt(x * x - 4.0)) / 2.0
        two_sided = phibar(math.log(tp)) + (1.0 - phibar(math.log(tm)))
        assert exact_comonotone_lognormal(0.0, x).estimate == pytest.approx(two_sided, rel=1e-12)


def test_exact_nonzero_mu():
    # general countermonotone pair: X + exp(2 mu)/X with X lognormal(mu, 1)
    mu, x = 0.4, 12.0
    est = exact_comonotone_lognormal(mu, x)
    m = bivariate_lognormal(mu, 1.0, -1.0)
    s = m.sample(2 * 10**6, seed=6)
    emp = float(np.mean(s.sum(axis=1) > x))
    se = math.sqrt(emp * (1 - emp) / len(s))
    assert abs(emp - est.estimate) <= 3.0 * se


def test_exact_result_fields():
    r = exact_comonotone_lognormal(0.0, 30.0)
    assert r.method == "exact" and r.std_error == 0.0 and r.half_width95 == 0.0
    assert 0.0 <= r.estimate <= 1.0


# ---------------------------------------------------------------- plain MC


def test_plain_mc_threshold_zero_is_certain():
    r = plain_mc(iid_pair(LN), [1.0, 1.0], 0.0, 10_000, seed=1)
    assert r.estimate == 1.0 and r.std_error == 0.0


def test_plain_mc_countermonotone_matches_exact():
    r = plain_mc(bivariate_lognormal(0.0, 1.0, -1.0), [1.0, 1.0], 10.0, 400_000, seed=2)
    assert abs(r.estimate - 0.0219) <= 3.0 * r.half_width95 / 1.96 * 1.96 + 1e-4
    assert abs(r.estimate - exact_comonotone_lognormal(0.0, 10.0).estimate) <= 3.0 * r.std_error


def test_plain_mc_independent_pair_anchor():
    r = plain_mc(iid_pair(LN), [1.0, 1.0], 10.0, 10**6, seed=3)
    assert abs(r.estimate - 0.0338) <= 3.0 * r.std_error + 2e-4


def test_plain_mc_fields_and_determinism():
    r1 = plain_mc(iid_pair(LN), [1.0, 1.0], 5.0, 50_000, seed=4, workers=1)
    r2 = plain_mc(iid_pair(LN), [1.0, 1.0], 5.0, 50_000, seed=4, workers=3)
    assert r1 == r2
    assert r1.half_width95 == 1.96 * r1.std_error
    p = r1.estimate
    assert r1.std_error == pytest.approx(math.sqrt(p * (1 - p) / 50_000), rel=1e-12)
    with pytest.raises(ValueError):
        plain_mc(iid_pair(LN), [1.0], 5.0, 100, seed=1)


# ---------------------------------------------------------------- conditional MC


def test_cond_mc_threshold_zero_is_certain():
    r = cond_mc_lognormal(0.0, 1.0, 0.0, [1.0, 1.0], 0.0, 1000, seed=5)
    assert r.estimate == 1.0


def test_cond_mc_published_anchor_rho0_x100():
    est = cond_mc_lognormal(0.0, 1.0, 0.0, [1.0, 1.0], 100.0, 10**6, seed=42)
    approx = approx_sum_pair(LN, LN, 100.0, c=1.0)
    rv = ratio_vs_asymptotic(est, approx)
    assert abs(rv.ratio - 1.0927) <= 3.0 * math.hypot(rv.half_width, 0.0001)


def test_cond_mc_published_anchor_rho_neg09_x20():
    est = cond_mc_lognormal(0.0, 1.0, -0.9, [1.0, 1.0], 20.0, 10**6, seed=42)
    approx = approx_sum_pair(LN, LN, 20.0, c=1.0)
    rv = ratio_vs_asymptotic(est, approx)
    assert abs(rv.ratio - 1.0082) <= 3.0 * math.hypot(rv.half_width, 0.0064)


def test_cond_mc_agrees_with_plain_and_reduces_variance():
    n = 300_000
    rho, a, x = 0.4, [1.0, 1.5], 55.0
    cond = cond_mc_lognormal(0.0, 1.0, rho, a, x, n, seed=11)
    plain = plain_mc(bivariate_lognormal(0.0, 1.0, rho), a, x, n, seed=12)
    assert abs(cond.estimate - plain.estimate) <= 3.0 * math.hypot(cond.std_error, plain.std_error)
    assert plain.estimate < 1e-3
    assert cond.std_error < plain.std_error


def test_cond_mc_rejects_rho_endpoints():
    for rho in (-1.0, 1.0, -1.2, 1.5):
        with pytest.raises(ValueError):
            cond_mc_lognormal(0.0, 1.0, rho, [1.0, 1.0], 10.0, 100, seed=1)
    with pytest.raises(ValueError):
        cond_mc_terms([0.0] * 3, [1.0] * 3, -0.6, 10.0, 100, seed=1)  # not PD for d=3


def test_cond_mc_drops_zero_coefficients():
    r = cond_mc_lognormal(0.0, 1.0, 0.3, [0.0, 2.0], 10.0, 1000, seed=9)
    assert r.method == "exact" and r.std_error == 0.0
    assert r.estimate == pytest.approx(exact_lognormal_single(0.0, 1.0, 2.0, 10.0), rel=1e-14)
    r0 = cond_mc_lognormal(0.0, 1.0, 0.3, [0.0, 0.0], 10.0, 1000, seed=9)
    assert r0.estimate == 0.0
    with pytest.raises(ValueError):
        cond_mc_lognormal(0.0, 1.0, 0.3, [2.0], 10.0, 100, seed=1)


def test_cond_mc_three_terms_vs_plain():
    # equicorrelated triple via the general kernel against indicator MC
    rho, x = 0.25, 25.0
    cond = cond_mc_terms([0.0, 0.2, -0.1], [1.0, 1.0, 1.0], rho, x, 200_000, seed=13)
    corr = np.full((3, 3), rho)
    np.fill_diagonal(corr, 1.0)
    chol = np.linalg.cholesky(corr)
    rng = np.random.default_rng(14)
    z = rng.standard_normal((10**6, 3)) @ chol.T
    terms = np.exp(np.array([0.0, 0.2, -0.1]) + z)
    p = float(np.mean(terms.sum(axis=1) > x))
    se = math.sqrt(p * (1 - p) / 10**6)
    assert abs(cond.estimate - p) <= 3.0 * math.hypot(se, cond.std_error)


def test_cond_mc_determinism_and_worker_invariance():
    kw = dict(mu=0.0, sigma=1.0, rho=0.3, a=[1.0, 1.0], x=50.0, n=2 * 10**6, seed=11)
    r1 = cond_mc_lognormal(**kw, workers=1)
    r2 = cond_mc_lognormal(**kw, workers=4)
    r3 = cond_mc_lognormal(**kw, workers=1)
    assert r1.estimate == r2.estimate == r3.estimate
    assert r1.std_error == r2.std_error == r3.std_error


@pytest.mark.skipif(not compiled_available(), reason="compiled kernel not built")
def test_backends_agree():
    kw = dict(mu=0.0, sigma=1.0, rho=-0.5, a=[1.0, 2.0], x=30.0, n=10**5, seed=7)
    py = cond_mc_lognormal(**kw, backend="python")
    comp = cond_mc_lognormal(**kw)
    assert comp.estimate == pytest.approx(py.estimate, rel=1e-12)
    assert comp.std_error == pytest.approx(py.std_error, rel=1e-9)


def test_deep_tail_resolution():
    # the conditional route resolves 1e-14 probabilities with a tight CI
    est = cond_mc_lognormal(0.0, 1.0, 0.0, [1.0, 1.0], 2000.0, 10**6, seed=21)
    assert 1e-14 < est.estimate < 1e-13
    assert est.half_width95 / est.estimate < 0.05


# ---------------------------------------------------------------- ratio helper


def test_ratio_vs_asymptotic_identity_and_anchor():
    approx = approx_sum_pair(LN, LN, 10.0, c=1.0)
    est = EstimateResult(approx.value, 100, 0.0, 0.0, "exact", None)
    rv = ratio_vs_asymptotic(est, approx)
    assert rv.ratio == 1.0 and rv.half_width == 0.0

    exact = exact_comonotone_lognormal(0.0, 10.0)
    rv = ratio_vs_asymptotic(exact, approx)
    assert round(rv.ratio, 4) == 1.0272


def test_ratio_published_table_row_arithmetic():
    # the rho = 0.9 row at threshold 50 reproduces its printed ratio
    est = EstimateResult(5.2652e-4, 10**7, 0.0, 0.0, "cond_mc", 0)
    approx = approx_sum_pair(LN, LN, 50.0, c=1.0)
    assert round(ratio_vs_asymptotic(est, approx).ratio, 4) == pytest.approx(5.7527, abs=2e-4)


def test_ratio_rejects_nonpositive_approximation():
    est = EstimateResult(0.5, 10, 0.01, 0.0196, "plain_mc", 1)
    with pytest.raises(ValueError):
        ratio_vs_asymptotic(est, 0.0)


def test_estimate_result_moment_reduction():
    r = EstimateResult.from_moments(50.0, 30.0, 100, "cond_mc", 3)
    assert r.estimate == 0.5
    var = (30.0 - 100 * 0.25) / 99
    assert r.std_error == pytest.approx(math.sqrt(var / 100), rel=1e-12)
    assert r.half_width95 == 1.96 * r.std_error


# ---------------------------------------------------------------- weibull-type pair


def test_weibull_pair_sum_ratio_matches_quadrature():
    # numeric convolution oracle for P(X+Y > x)/(2 P(X > x)) at x = 50
    from scipy.integrate import quad

    alpha = 0.5
    sf = lambda t: math.exp(-(t**alpha))
    pdf = lambda t: alpha * t ** (alpha - 1.0) * math.exp(-(t**alpha))
    x = 50.0
    inner, _ = quad(lambda y: sf(x - y) * pdf(y), 0.0, x / 2.0, limit=400)
    oracle = (2.0 * inner + sf(x / 2.0) ** 2) / (2.0 * sf(x))
    assert oracle == pytest.approx(1.2080, abs=2e-3)

    r = plain_mc(iid_pair(weibull_type(alpha)), [1.0, 1.0], x, 10**6, seed=33)
    denom = 2.0 * sf(x)
    ratio = r.estimate / denom
    assert abs(ratio - oracle) <= 3.0 * r.std_error / denom
