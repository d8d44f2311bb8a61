import math

import numpy as np
import pytest

import otl


def test_quantile_map_recovers_affine_map():
    rng = np.random.default_rng(0)
    src = rng.standard_normal(4000)
    tgt = 1.0 + 2.0 * rng.standard_normal(4000)
    f = otl.fit_quantile_map(src, tgt)
    grid = np.linspace(-1.5, 1.5, 31)
    assert np.max(np.abs(f(grid) - (1.0 + 2.0 * grid))) < 0.2
    assert f(0.0) == pytest.approx(f(np.array([0.0]))[0])
    assert np.all(np.diff(f(np.linspace(-5, 5, 1001))) >= 0.0)


def test_sinkhorn_marginals_and_assignment():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((6, 2))
    b = rng.standard_normal((6, 2))
    cost = ((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)
    u = np.full(6, 1.0 / 6.0)
    res = otl.sinkhorn(cost, u, u, epsilon=0.01 * cost.mean(), tol=1e-10, max_iter=100000)
    assert res["converged"]
    assert res["log_domain"] is False
    plan = res["plan"]
    assert np.abs(plan.sum(axis=1) - u).sum() < 1e-9
    assert np.abs(plan.sum(axis=0) - u).sum() < 1e-9
    perm, total = otl.exact_assignment(cost)
    assert sorted(perm) == list(range(6))
    assert (plan * cost).sum() == pytest.approx(total / 6.0, rel=0.05)


def test_auroc_and_metrics():
    assert otl.auroc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == pytest.approx(0.75)
    m = otl.classification_metrics([0.9, 0.2, 0.7, 0.1], [1, 0, 0, 0], 0.5)
    assert m["tp"] == 1 and m["fp"] == 1
    assert m["precision"] == pytest.approx(0.5)
    assert otl.relative_improvement(0.72, 0.35) == pytest.approx(105.714285, rel=1e-6)
    assert otl.relative_improvement(0.5, 0.0) is None
    with pytest.raises(ValueError):
        otl.auroc([0.1, 0.2], [1, 1])


def test_gaussian_monge_map():
    s1 = np.array([[2.0, 0.3], [0.3, 1.0]])
    s2 = np.array([[1.0, -0.2], [-0.2, 0.5]])
    a, b = otl.gaussian_monge_map(np.zeros(2), s1, np.ones(2), s2)
    assert np.allclose(a @ s1 @ a.T, s2, atol=1e-10)
    assert np.allclose(b, np.ones(2))


def test_fit_transfer_with_affine_and_callable_source():
    rng = np.random.default_rng(2)
    xs = rng.standard_normal((400, 2))
    xt = rng.standard_normal((200, 2))
    w = np.array([1.0, 1.0]) / math.sqrt(2.0)
    yt = xt @ w + 0.1 * rng.standard_normal(200)

    affine = otl.AffineFunctional(w, 0.0)
    est = otl.fit_transfer(affine, xs, xt, yt, epsilon_scale=0.02)
    q = rng.standard_normal((50, 2))
    pred = est.predict(q)
    assert np.sqrt(np.mean((pred - q @ w) ** 2)) < 0.3

    est2 = otl.fit_transfer(lambda x: float(x @ w), xs, xt, yt, epsilon_scale=0.02)
    assert np.allclose(est2.predict(q), pred, atol=1e-9)

    direct = otl.fit_direct(xt, yt, p=1.0)
    assert direct.predict(q).shape == (50,)


def test_exponents():
    assert otl.theoretical_transfer_exponent(4, 1.0) == pytest.approx((1.0 / 3.0, False))
    assert otl.theoretical_transfer_exponent(2, 1.0) == (0.5, True)
    assert otl.theoretical_direct_exponent(4, 1.0) == pytest.approx(1.0 / 6.0)
    slope, _, r2 = otl.fit_loglog_slope([(m, m ** -0.5) for m in (100, 400, 1600)])
    assert slope == pytest.approx(-0.5)
    assert r2 == pytest.approx(1.0)


def test_run_rates_small_and_config_errors(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = {
        "seed": 3,
        "m_grid": [40, 80],
        "trials": 2,
        "m_source": 200,
        "n_eval": 200,
        "task": {"kind": "kinked", "dim": 2, "noise_sd": 0.2},
    }
    out = otl.run_rates(cfg)
    assert out["valid"] is True
    assert len(out["rows"]) == 2
    assert out == otl.run_rates(cfg)

    cls = otl.run_classification(dict(cfg, threshold=0.5))
    assert len(cls["rows"]) == 2

    with pytest.raises(otl.ConfigError):
        otl.run_rates(dict(cfg, m_grid=[100]))
