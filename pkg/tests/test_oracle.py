import numpy as np
import pytest

from liouville_pt import dm_pt, models, oracle
from liouville_pt.errors import ErrorFloor, TrackingLost
from liouville_pt.liouville import LindbladSpec, build_liouvillian, eig_biorthonormal, expectation, steady_state_exact

SM = models.SIGMA_MINUS
SPIN3 = models.SpinRingSpec(n_sites=3, delta_omega=0.5, epsilon=0.8, t_coupling=1.0)


def test_tls_without_drive_is_ground_state():
    out = oracle.tls_steady_analytic(0.3, 0.0, 1.0)
    assert out == {"sigma_minus": 0j, "pop_e": 0.0}


def test_tls_resonant_third():
    out = oracle.tls_steady_analytic(0.0, 0.5, 1.0)
    assert out["pop_e"] == pytest.approx(1 / 3)
    assert out["sigma_minus"] == pytest.approx(-1j / 3)


@pytest.mark.parametrize("dw,eps,gamma", [(0.0, 0.8, 1.0), (-1.3, 0.4, 0.7), (2.0, 1.5, 2.0)])
def test_tls_against_direct_solve(dw, eps, gamma):
    h = dw * SM.T @ SM + eps * (SM + SM.T)
    rho = steady_state_exact(build_liouvillian(LindbladSpec(h, [(SM, gamma)])))
    out = oracle.tls_steady_analytic(dw, eps, gamma)
    assert expectation(rho, SM) == pytest.approx(out["sigma_minus"], abs=1e-12)
    assert rho[1, 1].real == pytest.approx(out["pop_e"], abs=1e-12)


def test_tls_rejects_zero_decay():
    with pytest.raises(ValueError):
        oracle.tls_steady_analytic(0.0, 1.0, 0.0)


def test_exact_sweep_without_coupling_is_order_zero():
    spec = SPIN3.with_(t_coupling=0.0)
    model = models.SpinRingModel(spec)
    grid = [-1.0, 0.0, 1.5]
    res = oracle.exact_sweep(model, grid)
    assert res.method_tag == "exact" and res.metadata["sweep"] == "delta_omega_over_gamma"
    for x, v in zip(grid, res.array("sigma_minus_1")):
        assert v == pytest.approx(oracle.tls_steady_analytic(x, 0.8, 1.0)["sigma_minus"], abs=1e-10)


def test_exact_sweep_cap():
    with pytest.raises(ValueError):
        oracle.exact_sweep(models.SpinRingModel(SPIN3), [0.0], cap=10)


def test_sweep_result_validation():
    with pytest.raises(ValueError):
        oracle.SweepResult([0.0, 1.0], {"x": [1.0]}, "exact")
    with pytest.raises(ValueError):
        oracle.SweepResult([0.0], {"x": [1.0]}, "guess")


def test_tracking_starts_at_seed():
    split = models.spin_ring_split(SPIN3.with_(n_sites=2))
    pairs = eig_biorthonormal(split.l0)
    branch = oracle.track_eigenpair(split, pairs[0], [0.0, 0.01, 0.02])
    assert branch[0].value == pairs[0].value and branch[0].overlap == 1.0
    assert all(abs(p.value) < 1e-10 for p in branch)
    with pytest.raises(ValueError):
        oracle.track_eigenpair(split, pairs[0], [0.02, 0.01])
    with pytest.raises(TrackingLost):
        oracle.track_eigenpair(split, pairs[0], [0.5], min_overlap=1.01)


def test_loglog_slope():
    x = np.logspace(-2, -1, 6)
    assert oracle.loglog_slope(x, 3 * x**2.5) == pytest.approx(2.5)
    with pytest.raises(ValueError):
        oracle.loglog_slope(x, -x)


def test_noise_floor_for_exact_against_itself():
    split = models.spin_ring_split(SPIN3)
    ref = lambda a: dm_pt.assemble_truncated(dm_pt.pt_steady_state(split, 2), a, 2)  # noqa: E731
    with pytest.raises(ErrorFloor):
        oracle.convergence_slope(split, None, 2, np.logspace(-2, -1, 5), reference=ref)


def test_convergence_slope_needs_a_decade():
    split = models.spin_ring_split(SPIN3)
    with pytest.raises(ValueError):
        oracle.convergence_slope(split, None, 1, [0.01, 0.02, 0.03, 0.04, 0.05])
    with pytest.raises(ValueError):
        oracle.convergence_slope(split, None, 1, [0.01, 0.1])


@pytest.mark.parametrize("order", [1, 2])
def test_convergence_slope(order):
    split = models.spin_ring_split(SPIN3)
    alphas = np.logspace(-2, -1, 6)
    assert oracle.convergence_slope(split, None, order, alphas) == pytest.approx(order + 1, abs=0.3)
    obs = models.spin_ring_observables(3)["n_sigma_1"]
    assert oracle.convergence_slope(split, obs, order, alphas) == pytest.approx(order + 1, abs=0.3)


def test_linear_ring_has_two_resonances():
    # ring modes sit at dw + 2 kappa and dw - kappa (twice)
    grid = np.linspace(-25, 15, 4001)
    amp = np.array([abs(oracle.linear_ring_response(x, 1.0, 5.0, 0.1)[0]) for x in grid])
    peaks = grid[[i for i in range(1, len(grid) - 1) if amp[i] > amp[i - 1] and amp[i] >= amp[i + 1]]]
    np.testing.assert_allclose(sorted(peaks), [-10.0, 5.0], atol=0.02)


def test_linear_ring_self_consistency():
    alpha = oracle.linear_ring_response(0.3, 1.0, 10.0, 0.05)
    ring = np.ones((3, 3)) - np.eye(3)
    resid = (0.3 - 0.025j) * alpha + 10.0 * ring @ alpha + np.array([1.0, 0, 0])
    assert np.max(np.abs(resid)) < 1e-12
