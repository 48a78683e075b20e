"""End-to-end smoke tests of the python bindings."""

import math

import numpy as np
import pytest

import eivreg


def test_tuning_values():
    mu, tau = eivreg.practical_tuning(0.05, 300, 10, 0.128)
    assert mu == pytest.approx(0.017010548857843383, abs=1e-15)
    assert tau == mu

    mu_t, tau_t = eivreg.theoretical_tuning(300, 10, 0.128, 0.45)
    assert mu_t == pytest.approx(0.1939019326064383, rel=1e-12)
    assert tau_t == pytest.approx(0.07756477019641177, rel=1e-12)
    assert eivreg.theoretical_tuning(300, 10, 0.128, 0.45, mode="estimated")[0] > mu_t


def test_dgp_shapes_and_determinism():
    theta = np.array([1.0, 0.5, 0.0, 0.0, 0.0, 0.0])
    y1, z1, x1 = eivreg.generate_dgp(theta, 0.128, 0.45, 0.25, seed=7, n=40)
    y2, z2, x2 = eivreg.generate_dgp(theta, 0.128, 0.45, 0.25, seed=7, n=40)
    assert y1.shape == (40,) and z1.shape == (40, 6) and x1.shape == (40, 6)
    assert np.array_equal(y1, y2) and np.array_equal(z1, z2) and np.array_equal(x1, x2)
    y3, _, _ = eivreg.generate_dgp(theta, 0.128, 0.45, 0.25, seed=8, n=40)
    assert not np.array_equal(y1, y3)


def test_estimators_agree_and_respect_constraints():
    theta = np.array([1.0, 0.5, 0.0, 0.0, 0.0, 0.0])
    y, z, x = eivreg.generate_dgp(theta, 0.128, 0.45, 0.25, seed=11, n=120)
    mu, tau = eivreg.practical_tuning(0.05, 120, 6, 0.128)
    d_hat = 0.45**2

    conic = eivreg.fit_conic(y, z, d_hat, lam=0.5, mu=mu, tau=tau)
    assert conic["residual_stat"] <= mu * conic["t_hat"] + tau + 1e-7
    assert np.linalg.norm(conic["theta_hat"]) <= conic["t_hat"] + 1e-7
    assert np.linalg.norm(conic["theta_hat"] - theta) < 0.6

    comp = eivreg.fit_compensated_mu(y, z, d_hat, mu=mu, tau=tau)
    oracle = eivreg.fixed_point_oracle(y, z, d_hat, mu=mu, tau=tau)
    assert np.max(np.abs(comp["theta_hat"] - oracle["theta_hat"])) < 1e-5
    assert comp["objective"] == pytest.approx(oracle["objective"], abs=1e-6)

    dz = eivreg.fit_dantzig(y, z, tau)
    dx = eivreg.fit_dantzig(y, x, tau)
    assert np.linalg.norm(dx["theta_hat"] - theta) < np.linalg.norm(dz["theta_hat"] - theta)

    plain = eivreg.fit_mu_selector(y, z, mu=mu, tau=tau)
    assert plain["t_hat"] == pytest.approx(np.abs(plain["theta_hat"]).sum(), abs=1e-6)


def test_sensitivities_identity():
    psi = np.eye(10)
    inf = eivreg.kappa_exact(psi, s=2, u=2.0, q="inf")
    assert inf["value"] == pytest.approx(1.0, abs=1e-8)
    l1 = eivreg.kappa_exact(psi, s=2, u=2.0, q="1")
    assert l1["value"] == pytest.approx(1.0 / 6.0, abs=1e-8)
    l2 = eivreg.kappa_local(np.eye(6), s=2, u=2.0, q="2", restarts=10, seed=1)
    assert l2["lower"] <= l2["upper"] + 1e-9
    assert l2["upper"] == pytest.approx(1.0 / math.sqrt(6.0), abs=1e-4)
    assert eivreg.coherence(psi) == 0.0


def test_minimax_instances():
    pack = eivreg.vg_packing(17, 2, seed=1)
    assert len(pack.codewords) == 16
    assert pack.min_pairwise_dist == 2
    gamma = eivreg.gamma_select(100, 17, 2, R=1.0)
    fam = eivreg.hypothesis_family(pack, R=1.0, gamma=gamma)
    assert fam.shape == (17, 17)
    assert np.allclose(np.linalg.norm(fam, axis=1), 1.0, atol=1e-12)

    sigma_mat = np.eye(4)
    t = np.array([1.0, 0.5, 0.0, 0.0])
    assert eivreg.kl_exact(sigma_mat, 0.3, 0.4, t, t) == 0.0
    assert eivreg.kl_exact(sigma_mat, 0.3, 0.4, t, t + 0.1) > 0.0


def test_run_simulation_and_errors():
    table = eivreg.simulate(
        {
            "n": 50,
            "p": 6,
            "replications": 2,
            "theta_star": [1.0, 0.5, 0.0, 0.0, 0.0, 0.0],
            "lambdas": [0.5],
            "estimators": ["conic", "dantzig_x"],
            "seed": 3,
        }
    )
    methods = [row["method"] for row in table["rows"]]
    assert methods == ["Conic", "DantzigX"]
    assert all(row["feasible"] == 2 for row in table["rows"])
    assert all(row["bias"] <= row["rmse"] + 1e-12 for row in table["rows"])

    with pytest.raises(eivreg.EivError):
        eivreg.simulate({"replication": 2})  # typo for "replications"
    with pytest.raises(eivreg.EivError):
        eivreg.kappa_exact(np.eye(3), s=0, u=1.0, q="inf")
