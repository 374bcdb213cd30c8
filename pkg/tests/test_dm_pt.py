import numpy as np
import pytest

from liouville_pt import dm_pt, models
from liouville_pt import linalg as la
from liouville_pt.dm_pt import PTSplit
from liouville_pt.errors import Degenerate, InternalConsistencyError, NormalizationFailure
from liouville_pt.liouville import (
    HilbertSpace,
    LindbladSpec,
    SuperOp,
    build_liouvillian,
    degenerate_with,
    eig_biorthonormal,
    steady_state_exact,
)

SPEC = models.SpinRingSpec(n_sites=2, delta_omega=0.5, epsilon=0.8, t_coupling=1.0)


@pytest.fixture(scope="module")
def split():
    return models.spin_ring_split(SPEC)


def first_simple_mode(split):
    spectrum = eig_biorthonormal(split.l0)
    scale = split.l0.norm()
    for pair in spectrum[1:]:
        if degenerate_with(spectrum, pair.value, scale) == 1:
            return pair, spectrum
    raise AssertionError("no simple mode")


def test_zero_perturbation_gives_zero_corrections(split):
    zero = PTSplit(split.l0, split.l1.scaled(0.0), 1.0)
    series = dm_pt.pt_steady_state(zero, 3)
    for r in series.state_corrections[1:]:
        assert np.max(np.abs(r)) < 1e-14


def test_first_order_state_matches_finite_difference(split):
    h = 1e-5
    series = dm_pt.pt_steady_state(split, 1)
    plus = steady_state_exact(split.full(h))
    minus = steady_state_exact(split.full(-h))
    rho0, r1 = series.state_corrections
    # the normalized state moves along r1 minus its trace part
    np.testing.assert_allclose((plus - minus) / (2 * h), r1 - np.trace(r1) * rho0, atol=1e-6)


def test_eigenvalue_correction_matches_finite_difference(split):
    seed, spectrum = first_simple_mode(split)
    series = dm_pt.pt_eigenpair(split, seed, 2, spectrum=spectrum)
    h = 1e-5

    def nearest(alpha):
        vals = np.linalg.eigvals(split.full(alpha).matrix)
        return vals[np.argmin(np.abs(vals - seed.value))]

    fd1 = (nearest(h) - nearest(-h)) / (2 * h)
    assert abs(fd1 - series.eigvalue_corrections[1]) < 1e-6
    fd2 = (nearest(h) - 2 * seed.value + nearest(-h)) / (2 * h * h)
    assert abs(fd2 - series.eigvalue_corrections[2]) < 1e-3


def test_steady_state_eigenvalue_corrections_vanish(split):
    spectrum = eig_biorthonormal(split.l0)
    series = dm_pt.pt_eigenpair(split, spectrum[0], 4, spectrum=spectrum)
    assert max(abs(x) for x in series.eigvalue_corrections[1:]) < 1e-12


def test_corrections_are_hermitian_and_orthogonal_to_rho0(split):
    series = dm_pt.pt_steady_state(split, 4)
    rho0 = series.state_corrections[0]
    for r in series.state_corrections[1:]:
        assert la.hermitian_defect(r) == 0.0
        assert abs(la.hs_inner(rho0, r)) < 1e-12
    assert max(series.solvability) < 1e-8


def test_degenerate_seed_rejected():
    # four uncoupled identical sites: the first decaying mode is fourfold
    split = models.spin_ring_split(models.SpinRingSpec(n_sites=2))
    spectrum = eig_biorthonormal(split.l0)
    scale = split.l0.norm()
    degenerate = next(p for p in spectrum if degenerate_with(spectrum, p.value, scale) > 1)
    with pytest.raises(Degenerate):
        dm_pt.pt_eigenpair(split, degenerate, 1, spectrum=spectrum)


def test_non_trace_preserving_split_rejected(split):
    bad = SuperOp(np.eye(16, dtype=complex), split.l0.hilbert)
    with pytest.raises(InternalConsistencyError):
        PTSplit(split.l0, bad)


def test_assembled_state_has_unit_trace(split):
    series = dm_pt.pt_steady_state(split, 2)
    rho = dm_pt.assemble_truncated(series, 0.3)
    assert np.trace(rho) == pytest.approx(1.0)
    np.testing.assert_allclose(rho, rho.conj().T)


def test_vanishing_trace_raises():
    series = dm_pt.PTSeries(0, 1.0, 1, [0j, 0j], [np.diag([1.0, 0]), np.diag([-1.0, 0])])
    with pytest.raises(NormalizationFailure):
        dm_pt.assemble_truncated(series, 1.0)


def test_positivity_report():
    rep = dm_pt.positivity_report(np.eye(4) / 4)
    assert rep.min_eig == pytest.approx(0.25) and rep.positive
    assert not dm_pt.positivity_report(np.diag([1.1, -0.1])).positive


@pytest.mark.parametrize("method", ["svd", "bordered", "local"])
def test_pinv_methods_agree(split, method):
    ref = dm_pt.pt_steady_state(split, 3, method="svd")
    other = dm_pt.pt_steady_state(split, 3, method=method)
    for a, b in zip(ref.state_corrections, other.state_corrections):
        np.testing.assert_allclose(a, b, atol=1e-11)
    assert other.method == method


def test_pinv_methods_agree_for_excited_mode(split):
    seed, spectrum = first_simple_mode(split)
    a = dm_pt.pt_eigenpair(split, seed, 3, spectrum=spectrum, method="svd")
    b = dm_pt.pt_eigenpair(split, seed, 3, spectrum=spectrum, method="bordered")
    np.testing.assert_allclose(a.eigvalue_corrections, b.eigvalue_corrections, atol=1e-10)


def test_second_order_recursion_on_driven_qubit():
    # L0: decaying qubit, L1: resonant drive; compare the truncated series with the exact state
    sm = models.SIGMA_MINUS
    hs = HilbertSpace((2,))
    l0 = build_liouvillian(LindbladSpec(np.zeros((2, 2)), [(sm, 1.0)]), hs)
    l1 = build_liouvillian(LindbladSpec(sm + sm.T), hs)
    split = PTSplit(l0, l1)
    series = dm_pt.pt_steady_state(split, 2)
    errs = [la.trace_norm(dm_pt.assemble_truncated(series, a) - steady_state_exact(split.full(a))) for a in (0.01, 0.005)]
    assert errs[0] < 1e-4
    assert errs[0] / errs[1] == pytest.approx(8.0, rel=0.05)


def test_negative_order_rejected(split):
    with pytest.raises(ValueError):
        dm_pt.pt_steady_state(split, -1)
