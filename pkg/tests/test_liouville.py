import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liouville_pt import linalg as la
from liouville_pt import models
from liouville_pt.errors import DefectiveSpectrum, DimensionError, NonUniqueSteadyState
from liouville_pt.liouville import (
    HilbertSpace,
    KroneckerSumGenerator,
    LindbladSpec,
    SuperOp,
    build_liouvillian,
    commutator_superop,
    dissipator_superop,
    eig_biorthonormal,
    expectation,
    steady_state_exact,
    steady_state_iterative,
    trace_preservation_defect,
)

from conftest import random_complex, random_density

SM = models.SIGMA_MINUS


def random_lindblad(rng, d, channels=2):
    h = random_complex(rng, d)
    h = h + h.conj().T
    return LindbladSpec(h, [(random_complex(rng, d), float(rng.random() + 0.1)) for _ in range(channels)])


def test_dissipator_on_excited_state():
    rho = np.diag([0.0, 1.0]).astype(complex)
    out = dissipator_superop(SM).apply(rho)
    np.testing.assert_allclose(out, np.diag([1.0, -1.0]))


def test_dissipator_damps_coherence_at_half_rate():
    rho = np.array([[0, 1], [0, 0]], dtype=complex)
    np.testing.assert_allclose(dissipator_superop(SM).apply(rho), -0.5 * rho)


def test_commutator_matches_definition(rng):
    h = random_complex(rng, 3)
    rho = random_complex(rng, 3)
    np.testing.assert_allclose(commutator_superop(h).apply(rho), -1j * (h @ rho - rho @ h), atol=1e-12)


def test_dense_assembly_matches_kron_formula(rng):
    spec = random_lindblad(rng, 4)
    eye = np.eye(4)
    ref = -1j * (np.kron(eye, spec.hamiltonian) - np.kron(spec.hamiltonian.T, eye))
    for c, rate in spec.channels:
        cdc = c.conj().T @ c
        ref = ref + rate * (np.kron(c.conj(), c) - 0.5 * np.kron(eye, cdc) - 0.5 * np.kron(cdc.T, eye))
    np.testing.assert_allclose(build_liouvillian(spec).matrix, ref, atol=1e-12)
    sparse = build_liouvillian(spec, sparse=True).matrix.toarray()
    np.testing.assert_allclose(sparse, ref, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(d=st.integers(2, 5), seed=st.integers(0, 2**32 - 1))
def test_generator_preserves_trace_and_hermiticity(d, seed):
    rng = np.random.default_rng(seed)
    sop = build_liouvillian(random_lindblad(rng, d))
    assert trace_preservation_defect(sop) < 1e-12
    h = random_complex(rng, d)
    h = h + h.conj().T
    out = sop.apply(h)
    assert abs(np.trace(out)) < 1e-10 * sop.norm()
    np.testing.assert_allclose(out, out.conj().T, atol=1e-10)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        build_liouvillian(LindbladSpec(np.zeros((2, 2)), [(SM, -1.0)]))
    with pytest.raises(DimensionError):
        build_liouvillian(LindbladSpec(np.zeros((2, 2)), [(np.eye(3), 1.0)]))
    with pytest.raises(DimensionError):
        HilbertSpace((1, 2))


def test_decaying_qubit_spectrum():
    pairs = eig_biorthonormal(build_liouvillian(LindbladSpec(np.zeros((2, 2)), [(SM, 1.0)])))
    vals = sorted((p.value for p in pairs), key=lambda z: -z.real)
    np.testing.assert_allclose(vals, [0, -0.5, -0.5, -1.0], atol=1e-12)
    np.testing.assert_allclose(pairs[0].right, np.diag([1.0, 0.0]), atol=1e-12)


def test_driven_qubit_resonant_population():
    # eps = gamma/2, on resonance: p = eps^2/(gamma^2/4 + 2 eps^2) = 1/3
    sop = build_liouvillian(LindbladSpec(0.5 * (SM + SM.T), [(SM, 1.0)]))
    rho = steady_state_exact(sop)
    assert rho[1, 1].real == pytest.approx(1 / 3, abs=1e-12)
    assert np.trace(rho) == pytest.approx(1.0)


def test_bi_orthonormal_and_complete(rng):
    sop = build_liouvillian(random_lindblad(rng, 3))
    pairs = eig_biorthonormal(sop)
    gram = np.array([[la.hs_inner(p.left, q.right) for q in pairs] for p in pairs])
    np.testing.assert_allclose(gram, np.eye(9), atol=1e-9)
    recon = sum(np.outer(la.vec(p.right), la.vec(p.left).conj()) for p in pairs)
    np.testing.assert_allclose(recon, np.eye(9), atol=1e-9)
    assert pairs[0].value == 0
    assert np.trace(pairs[0].right) == pytest.approx(1.0)
    np.testing.assert_allclose(pairs[0].left, np.eye(3), atol=1e-9)


def test_spectrum_is_closed_under_conjugation(rng):
    vals = np.array([p.value for p in eig_biorthonormal(build_liouvillian(random_lindblad(rng, 3)))])
    for v in vals:
        assert np.min(np.abs(vals - np.conj(v))) < 1e-9


def test_sorting_rule(rng):
    vals = [p.value for p in eig_biorthonormal(build_liouvillian(random_lindblad(rng, 3)))]
    re = [v.real for v in vals]
    assert all(a >= b - 1e-9 for a, b in zip(re, re[1:]))


def test_defective_spectrum_raised():
    jordan = np.array([[0, 1], [0, 0]], dtype=complex)
    sop = SuperOp(np.kron(np.eye(2), jordan), HilbertSpace((4,)))
    with pytest.raises(DefectiveSpectrum):
        eig_biorthonormal(sop)


def test_non_unique_steady_state():
    # no dissipation: every diagonal state is stationary
    sop = build_liouvillian(LindbladSpec(np.diag([0.0, 1.0]).astype(complex)))
    with pytest.raises(NonUniqueSteadyState):
        steady_state_exact(sop)


def test_product_steady_state_of_uncoupled_ring():
    spec = models.SpinRingSpec(n_sites=3, delta_omega=0.3, epsilon=0.7, t_coupling=0.0)
    rho = steady_state_exact(models.spin_ring_liouvillian(spec))
    local = build_liouvillian(LindbladSpec(models._spin_local_hamiltonian(spec), [(SM, 1.0)]))
    r1 = steady_state_exact(local)
    np.testing.assert_allclose(rho, np.kron(np.kron(r1, r1), r1), atol=1e-12)


def test_expectation_examples():
    rho = np.diag([0.75, 0.25]).astype(complex)
    assert expectation(rho, SM.T @ SM) == pytest.approx(0.25)
    assert expectation(np.array([[0.5, 0.5], [0.5, 0.5]]), SM) == pytest.approx(0.5)
    with pytest.raises(DimensionError):
        expectation(rho, np.eye(3))


def test_kronecker_sum_generator_and_solver():
    split = models.spin_ring_split(models.SpinRingSpec(n_sites=3, delta_omega=0.5))
    gen = split.l0_local
    np.testing.assert_allclose(gen.to_superop().matrix, split.l0.matrix, atol=1e-12)
    rng = np.random.default_rng(3)
    f = random_complex(rng, 8)
    x = gen.shifted_solver(0.0).solve(la.vec(f))
    np.testing.assert_allclose(x, la.pinv(split.l0.matrix).matrix @ la.vec(f), atol=1e-10)
    np.testing.assert_allclose(gen.steady_state(), steady_state_exact(split.l0), atol=1e-12)


def test_kronecker_sum_rejects_wrong_shapes():
    with pytest.raises(DimensionError):
        KroneckerSumGenerator((2, 2), [np.eye(4)])
    with pytest.raises(DimensionError):
        KroneckerSumGenerator((2,), [np.eye(9)])


def test_iterative_matches_dense_steady_state():
    spec = models.QubitRingSpec(fock_cutoff=2, delta_omega=0.3)
    split, _ = models.qubit_ring_split(spec)
    full = models.qubit_ring_displaced_liouvillian(spec)
    dense = steady_state_exact(full)
    it = steady_state_iterative(full, split.l0_local)
    np.testing.assert_allclose(it, dense, atol=1e-11)


def test_random_state_helpers(rng):
    rho = random_density(rng, 4)
    assert la.min_eigenvalue_hermitian(rho) > 0
    assert la.trace_norm(rho) == pytest.approx(1.0)
