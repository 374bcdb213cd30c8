"""Benchmark open systems and their unperturbed/perturbation splits.

Spin ring: N driven two-level systems on a ring with flip-flop coupling
``t``; the unperturbed generator is the uncoupled ("atomic") limit and the
perturbation is ``-i[sum_n s+_n s-_{n+1} + h.c., .]`` counted in ``t``.
The ring sum runs over every site n with n+1 taken mod N, so for N = 2
the single bond appears twice.

Qubit ring: a three-resonator ring with hopping ``kappa``, resonator 1
driven with strength ``epsilon``, a qubit coupled to resonator 2 with
strength ``g``. The ring eigenmodes are displaced by their uncoupled
coherent amplitudes; the unperturbed generator keeps the displaced modes
and the qubit (with its effective drive) uncoupled and the perturbation is
the residual mode-qubit exchange counted in ``g``.

Energies are angular frequencies with hbar = 1; the basis state index 0 of
every two-level system is the ground state.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import linalg as la
from .dm_pt import PTSplit
from .liouville import (
    HilbertSpace,
    KroneckerSumGenerator,
    LindbladSpec,
    SuperOp,
    build_liouvillian,
    commutator_superop,
    embed,
    embed_sparse,
    expectation,
)

SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=np.complex128)
SIGMA_PLUS = SIGMA_MINUS.T.copy()
N_RES = 3


def destroy(n: int) -> np.ndarray:
    """Truncated annihilation operator with sqrt(k) matrix elements."""
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(np.complex128)


# ---------------------------------------------------------------- spin ring


@dataclass(frozen=True)
class SpinRingSpec:
    n_sites: int = 4
    delta_omega: float = 0.0
    epsilon: float = 0.8
    t_coupling: float = 0.4
    gamma: float = 1.0

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError("the spin ring needs at least two sites")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive for a unique steady state")

    def with_(self, **kw) -> "SpinRingSpec":
        return replace(self, **kw)


def _spin_local_hamiltonian(spec: SpinRingSpec) -> np.ndarray:
    return spec.delta_omega * SIGMA_PLUS @ SIGMA_MINUS + spec.epsilon * (SIGMA_PLUS + SIGMA_MINUS)


def spin_lowering_ops(n_sites: int) -> list[np.ndarray]:
    dims = [2] * n_sites
    return [embed(SIGMA_MINUS, dims, k) for k in range(n_sites)]


def spin_ring_coupling(n_sites: int) -> np.ndarray:
    sm = spin_lowering_ops(n_sites)
    h = np.zeros_like(sm[0])
    for n in range(n_sites):
        m = (n + 1) % n_sites
        h += sm[n].conj().T @ sm[m] + sm[n] @ sm[m].conj().T
    return h


def spin_ring_liouvillian(spec: SpinRingSpec) -> SuperOp:
    """Full generator built in one shot from the ring Hamiltonian."""
    dims = [2] * spec.n_sites
    sm = spin_lowering_ops(spec.n_sites)
    hloc = _spin_local_hamiltonian(spec)
    h = sum(embed(hloc, dims, k) for k in range(spec.n_sites)) + spec.t_coupling * spin_ring_coupling(spec.n_sites)
    return build_liouvillian(LindbladSpec(h, [(s, spec.gamma) for s in sm]), HilbertSpace(tuple(dims)))


def spin_ring_split(spec: SpinRingSpec) -> PTSplit:
    dims = (2,) * spec.n_sites
    hilbert = HilbertSpace(dims)
    local = build_liouvillian(LindbladSpec(_spin_local_hamiltonian(spec), [(SIGMA_MINUS, spec.gamma)])).matrix
    gen = KroneckerSumGenerator(dims, [local] * spec.n_sites)
    sm = spin_lowering_ops(spec.n_sites)
    h0 = sum(embed(_spin_local_hamiltonian(spec), dims, k) for k in range(spec.n_sites))
    l0 = build_liouvillian(LindbladSpec(h0, [(s, spec.gamma) for s in sm]), hilbert)
    l1 = commutator_superop(spin_ring_coupling(spec.n_sites), hilbert)
    return PTSplit(l0, l1, spec.t_coupling, gen)


def spin_ring_observables(n_sites: int) -> dict[str, np.ndarray]:
    s1 = spin_lowering_ops(n_sites)[0]
    return {"sigma_minus_1": s1, "n_sigma_1": s1.conj().T @ s1}


# ---------------------------------------------------------------- qubit ring


@dataclass(frozen=True)
class QubitRingSpec:
    fock_cutoff: int = 3
    delta_omega: float = 0.0
    epsilon: float = 1.0
    kappa: float = 10.0
    g: float = 0.5
    gamma_a: float = 0.05
    gamma_q: float = 0.05

    def __post_init__(self):
        if self.fock_cutoff < 2:
            raise ValueError("fock_cutoff must be at least 2")
        if not (self.gamma_a > 0 and self.gamma_q > 0):
            raise ValueError("gamma_a and gamma_q must be positive")

    def with_(self, **kw) -> "QubitRingSpec":
        return replace(self, **kw)

    @property
    def dims(self) -> tuple[int, ...]:
        return (2,) + (self.fock_cutoff,) * N_RES


@dataclass(frozen=True)
class DisplacedFrame:
    mode_amplitudes: np.ndarray
    site_amplitudes: np.ndarray
    eps_eff: complex


def mode_frequencies(spec: QubitRingSpec) -> np.ndarray:
    mu = np.arange(N_RES)
    return spec.delta_omega + 2.0 * spec.kappa * np.cos(2.0 * np.pi * mu / N_RES)


def displaced_amplitudes(spec: QubitRingSpec) -> DisplacedFrame:
    """Coherent amplitudes of the uncoupled ring eigenmodes and sites."""
    mu = np.arange(N_RES)
    w = mode_frequencies(spec)
    modes = (-spec.epsilon / np.sqrt(N_RES)) * np.exp(2j * np.pi * mu / N_RES) / (w - 0.5j * spec.gamma_a)
    n = np.arange(1, N_RES + 1)
    sites = np.exp(-2j * np.pi * np.outer(n, mu) / N_RES) @ modes / np.sqrt(N_RES)
    eps_eff = spec.g / np.sqrt(N_RES) * np.sum(modes * np.exp(-4j * np.pi * mu / N_RES))
    return DisplacedFrame(modes, sites, complex(eps_eff))


def _qubit_ring_ops(spec: QubitRingSpec, sparse: bool = False):
    dims = spec.dims
    emb = embed_sparse if sparse else embed
    sm = emb(SIGMA_MINUS, dims, 0)
    modes = [emb(destroy(spec.fock_cutoff), dims, 1 + mu) for mu in range(N_RES)]
    return sm, modes


def _qubit_ring_hamiltonians(spec: QubitRingSpec, frame: DisplacedFrame, sparse: bool = False):
    sm, modes = _qubit_ring_ops(spec, sparse)
    sp_ = sm.conj().T
    w = mode_frequencies(spec)
    h0 = sum(w[mu] * (modes[mu].conj().T @ modes[mu]) for mu in range(N_RES))
    h0 = h0 + spec.delta_omega * (sp_ @ sm) + frame.eps_eff * sp_ + np.conj(frame.eps_eff) * sm
    h1 = 0
    for mu in range(N_RES):
        term = np.exp(-4j * np.pi * mu / N_RES) * (modes[mu] @ sp_)
        h1 = h1 + term + term.conj().T
    h1 = h1 / np.sqrt(N_RES)
    return h0, h1, sm, modes


def _qubit_local_generators(spec: QubitRingSpec, frame: DisplacedFrame) -> KroneckerSumGenerator:
    hq = spec.delta_omega * SIGMA_PLUS @ SIGMA_MINUS + frame.eps_eff * SIGMA_PLUS + np.conj(frame.eps_eff) * SIGMA_MINUS
    locals_ = [build_liouvillian(LindbladSpec(hq, [(SIGMA_MINUS, spec.gamma_q)])).matrix]
    a = destroy(spec.fock_cutoff)
    for w in mode_frequencies(spec):
        locals_.append(build_liouvillian(LindbladSpec(w * a.conj().T @ a, [(a, spec.gamma_a)])).matrix)
    return KroneckerSumGenerator(spec.dims, locals_)


def qubit_ring_split(spec: QubitRingSpec, sparse: bool = False) -> tuple[PTSplit, DisplacedFrame]:
    """Displaced-frame split ``L = L0 + g L1``.

    ``sparse=True`` stores the superoperators as scipy.sparse matrices for
    cutoffs whose dense Liouvillian does not fit in memory.
    """
    frame = displaced_amplitudes(spec)
    hilbert = HilbertSpace(spec.dims)
    h0, h1, sm, modes = _qubit_ring_hamiltonians(spec, frame, sparse)
    channels = [(m, spec.gamma_a) for m in modes] + [(sm, spec.gamma_q)]
    l0 = build_liouvillian(LindbladSpec(h0, channels), hilbert, sparse=sparse)
    l1 = commutator_superop(h1, hilbert, sparse=sparse)
    return PTSplit(l0, l1, spec.g, _qubit_local_generators(spec, frame)), frame


def qubit_ring_displaced_liouvillian(spec: QubitRingSpec, sparse: bool = False) -> SuperOp:
    """Full displaced-frame generator assembled directly from H0 + g H1."""
    frame = displaced_amplitudes(spec)
    h0, h1, sm, modes = _qubit_ring_hamiltonians(spec, frame, sparse)
    channels = [(m, spec.gamma_a) for m in modes] + [(sm, spec.gamma_q)]
    return build_liouvillian(LindbladSpec(h0 + spec.g * h1, channels), HilbertSpace(spec.dims), sparse=sparse)


def qubit_ring_lab_liouvillian(spec: QubitRingSpec) -> SuperOp:
    """Lab-frame (undisplaced) generator on qubit x site1 x site2 x site3."""
    dims = spec.dims
    sm = embed(SIGMA_MINUS, dims, 0)
    a = [embed(destroy(spec.fock_cutoff), dims, 1 + n) for n in range(N_RES)]
    h = spec.delta_omega * sm.conj().T @ sm
    for n in range(N_RES):
        m = (n + 1) % N_RES
        h = h + spec.delta_omega * a[n].conj().T @ a[n]
        h = h + spec.kappa * (a[n].conj().T @ a[m] + a[n] @ a[m].conj().T)
    h = h + spec.epsilon * (a[0] + a[0].conj().T)
    h = h + spec.g * (a[1] @ sm.conj().T + a[1].conj().T @ sm)
    channels = [(x, spec.gamma_a) for x in a] + [(sm, spec.gamma_q)]
    return build_liouvillian(LindbladSpec(h, channels), HilbertSpace(dims))


def lab_site_operators(spec: QubitRingSpec) -> dict[str, np.ndarray]:
    """a_1, n_1 and sigma- on the lab-frame space of :func:`qubit_ring_lab_liouvillian`."""
    a1 = embed(destroy(spec.fock_cutoff), spec.dims, 1)
    sm = embed(SIGMA_MINUS, spec.dims, 0)
    return {"a_1": a1, "n_1": a1.conj().T @ a1, "sigma_minus": sm}


class QubitRingObservables:
    """Lab-frame site-1 observables evaluated from displaced-frame states."""

    def __init__(self, spec: QubitRingSpec):
        _, modes = _qubit_ring_ops(spec)
        mu = np.arange(N_RES)
        phases = np.exp(-2j * np.pi * mu / N_RES) / np.sqrt(N_RES)
        self.a1 = sum(phases[k] * modes[k] for k in range(N_RES))
        self.n1 = self.a1.conj().T @ self.a1
        self.sm = embed(SIGMA_MINUS, spec.dims, 0)

    def __call__(self, rho, frame: DisplacedFrame) -> dict[str, complex]:
        return lab_frame_observables(rho, frame, self)


def lab_frame_observables(rho_displaced, frame: DisplacedFrame, ops: QubitRingObservables | None = None) -> dict[str, complex]:
    """<a_1>, <n_1>, <sigma-> after undoing the displacement of the ring modes."""
    rho = np.asarray(rho_displaced)
    if ops is None:
        d = rho.shape[0]
        cutoff = int(round((d / 2) ** (1.0 / N_RES)))
        if 2 * cutoff**N_RES != d:
            raise la.DimensionError(f"dimension {d} is not 2 * cutoff**3")
        ops = QubitRingObservables(QubitRingSpec(fock_cutoff=cutoff))
    alpha1 = frame.site_amplitudes[0]
    a1p = expectation(rho, ops.a1)
    n1p = expectation(rho, ops.n1)
    n1 = n1p + np.conj(alpha1) * a1p + alpha1 * np.conj(a1p) + abs(alpha1) ** 2
    return {"a_1": a1p + alpha1, "n_1": complex(n1), "sigma_minus": expectation(rho, ops.sm)}


# ---------------------------------------------------------------- sweep adapters


class PointProblem:
    """Everything needed to evaluate one grid point.

    The split is built on first use and cached; ``generator()`` assembles
    the full Liouvillian independently of the split.
    """

    def __init__(self, spec, make_split, make_generator, observe, sparse: bool = False):
        self.spec = spec
        self.sparse = sparse
        self.observe = observe
        self._make_split = make_split
        self._make_generator = make_generator
        self._split = None

    def split(self) -> PTSplit:
        if self._split is None:
            self._split = self._make_split()
        return self._split

    def generator(self) -> SuperOp:
        return self._make_generator()


@dataclass(frozen=True)
class SpinRingModel:
    """Spin ring with parameters in units of the decay rate (gamma = 1)."""

    spec: SpinRingSpec = SpinRingSpec()
    name = "spin_ring"
    params = {"delta_omega_over_gamma": "delta_omega", "eps_over_gamma": "epsilon", "t_over_gamma": "t_coupling"}
    default_sweep = "delta_omega_over_gamma"
    observable_names = ("sigma_minus_1", "n_sigma_1")

    def at(self, param: str, value: float) -> "SpinRingModel":
        if param not in self.params:
            raise KeyError(f"spin_ring has no parameter {param!r}; choose from {sorted(self.params)}")
        return replace(self, spec=self.spec.with_(**{self.params[param]: float(value)}))

    @property
    def liouville_dim(self) -> int:
        return 4**self.spec.n_sites

    def prepare(self, sparse: bool = False) -> PointProblem:
        # the rings used here are small; ``sparse`` is accepted for symmetry
        spec = self.spec
        ops = spin_ring_observables(spec.n_sites)

        def observe(rho):
            return {name: expectation(rho, op) for name, op in ops.items()}

        return PointProblem(spec, lambda: spin_ring_split(spec), lambda: spin_ring_liouvillian(spec), observe)


@dataclass(frozen=True)
class QubitRingModel:
    """Qubit ring with parameters in units of the drive (epsilon = 1).

    States live in the displaced frame; ``observe`` returns lab-frame
    site-1 expectation values.
    """

    spec: QubitRingSpec = QubitRingSpec()
    name = "qubit_ring"
    params = {
        "delta_omega_over_eps": "delta_omega",
        "kappa_over_eps": "kappa",
        "g_over_eps": "g",
        "gamma_a_over_eps": "gamma_a",
        "gamma_q_over_eps": "gamma_q",
    }
    default_sweep = "delta_omega_over_eps"
    observable_names = ("a_1", "n_1", "sigma_minus")

    def at(self, param: str, value: float) -> "QubitRingModel":
        if param not in self.params:
            raise KeyError(f"qubit_ring has no parameter {param!r}; choose from {sorted(self.params)}")
        return replace(self, spec=self.spec.with_(**{self.params[param]: float(value)}))

    @property
    def liouville_dim(self) -> int:
        return (2 * self.spec.fock_cutoff**N_RES) ** 2

    def prepare(self, sparse: bool = False) -> PointProblem:
        spec = self.spec
        frame = displaced_amplitudes(spec)
        ops = _observables_for(spec)

        def make_split():
            return qubit_ring_split(spec, sparse=sparse)[0]

        def observe(rho):
            return lab_frame_observables(rho, frame, ops)

        return PointProblem(spec, make_split, lambda: qubit_ring_displaced_liouvillian(spec, sparse=sparse), observe, sparse)


def _observables_for(spec: QubitRingSpec) -> QubitRingObservables:
    # the operators depend on the cutoff only
    return _cached_observables(spec.fock_cutoff)


@lru_cache(maxsize=4)
def _cached_observables(cutoff: int) -> QubitRingObservables:
    return QubitRingObservables(QubitRingSpec(fock_cutoff=cutoff))


MODELS = {"spin_ring": SpinRingModel, "qubit_ring": QubitRingModel}
