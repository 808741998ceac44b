"""Symmetry-projected variational state: energy, gradient, metric, fidelity.

The circuit is an ordered string of eSWAP gates cycled through checkerboard
layers from a dimer start state.  Projected expectation values follow the
character-weighted group average P = (1/|G|) sum_g chi_g g, with the state
normalization N(theta) = <psi|P|psi>.

Gradient components use one descending sweep: with psi prepared once, the
prefix states and the back-propagated bra vectors are obtained by undoing
one gate at a time, so all N_p derivative overlaps cost O(N_p) gate kernels.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import engine
from .lattice import LayerDecomposition, SymmetryGroup
from .spectrum import HamiltonianSpec, apply_hamiltonian

_NORM_FLOOR = 1e-12


class AnsatzError(ValueError):
    """Raised on shape mismatches or a projector-annihilated state."""


@dataclass(frozen=True)
class Circuit:
    """Gate pairs grouped into layers, plus the dimer pairing of the input."""

    n_sites: int
    gates: tuple[tuple[int, int], ...]
    layer_sizes: tuple[int, ...]
    init_pairing: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if sum(self.layer_sizes) != len(self.gates):
            raise AnsatzError("layer sizes do not add up to the gate count")
        for i, j in self.gates:
            if not (0 <= i < self.n_sites and 0 <= j < self.n_sites) or i == j:
                raise AnsatzError(f"invalid gate pair ({i}, {j})")

    @property
    def n_params(self) -> int:
        return len(self.gates)

    @property
    def depth(self) -> int:
        return len(self.layer_sizes)

    @classmethod
    def from_layers(cls, n_sites: int, decomposition: LayerDecomposition,
                    depth: int, init_pairing) -> "Circuit":
        """Cycle through the decomposition layers `depth` times over."""
        layers = decomposition.layers
        if not layers:
            raise AnsatzError("empty layer decomposition")
        gates: list[tuple[int, int]] = []
        sizes: list[int] = []
        for d in range(depth):
            layer = layers[d % len(layers)]
            gates.extend(layer)
            sizes.append(len(layer))
        return cls(n_sites, tuple(gates), tuple(sizes), tuple(tuple(p) for p in init_pairing))


def check_theta(circuit: Circuit, theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (circuit.n_params,):
        raise AnsatzError(
            f"theta has shape {theta.shape}, circuit expects ({circuit.n_params},)"
        )
    return theta


class SymmetryProjector:
    """Character-weighted group average acting on state vectors.

    Index maps for each permutation are cached at construction, so repeated
    applications are pure gathers.
    """

    def __init__(self, group: SymmetryGroup):
        self.group = group
        self.characters = np.asarray(group.characters, dtype=np.complex128)
        self._scatter = [engine.permutation_index_map(g) for g in group.elements]
        # Gather form: (g v) = v[inv], with inv the argsort of the scatter map.
        self._gather = [np.argsort(m) for m in self._scatter]

    @classmethod
    def identity(cls, n_sites: int) -> "SymmetryProjector":
        return cls(SymmetryGroup.identity(n_sites))

    @property
    def order(self) -> int:
        return self.group.order

    @property
    def is_identity(self) -> bool:
        return self.group.order == 1

    def element_apply(self, state: np.ndarray, k: int) -> np.ndarray:
        return state[self._gather[k]]

    def gather_map(self, k: int) -> np.ndarray:
        return self._gather[k]

    def apply(self, state: np.ndarray) -> np.ndarray:
        """P|state> as a new vector."""
        if self.is_identity:
            return state.copy()
        out = np.zeros_like(state)
        for chi, gather in zip(self.characters, self._gather):
            out += chi * state[gather]
        out /= self.order
        return out


def prepare(circuit: Circuit, theta, pairing=None) -> np.ndarray:
    """Apply the gate string to the dimer start state; returns a fresh vector."""
    theta = check_theta(circuit, theta)
    pairs = circuit.init_pairing if pairing is None else pairing
    state = engine.dimer_state(pairs, circuit.n_sites)
    for (i, j), th in zip(circuit.gates, theta):
        engine.apply_eswap(state, i, j, th)
    return state


def derivative_state(circuit: Circuit, theta, k: int, pairing=None) -> np.ndarray:
    """|d_k psi> = (gates after k) . iP_k . (gates up to k) |dimer>; unit norm."""
    theta = check_theta(circuit, theta)
    if not 0 <= k < circuit.n_params:
        raise AnsatzError(f"derivative index {k} outside [0, {circuit.n_params})")
    pairs = circuit.init_pairing if pairing is None else pairing
    state = engine.dimer_state(pairs, circuit.n_sites)
    for g, ((i, j), th) in enumerate(zip(circuit.gates, theta)):
        engine.apply_eswap(state, i, j, th)
        if g == k:
            state = 1j * engine.apply_swap(state, i, j)
    return state


def _derivative_overlaps(circuit: Circuit, theta: np.ndarray, psi: np.ndarray,
                         bras: list[np.ndarray]) -> list[np.ndarray]:
    """s[b][k] = <bras[b] | d_k psi> for every parameter, by one descending sweep."""
    phi = psi.copy()
    chis = [b.copy() for b in bras]
    out = [np.zeros(circuit.n_params, dtype=np.complex128) for _ in bras]
    for k in range(circuit.n_params - 1, -1, -1):
        i, j = circuit.gates[k]
        for b, chi in enumerate(chis):
            out[b][k] = 1j * engine.swap_dot(chi, phi, i, j)
        th = theta[k]
        engine.apply_eswap(phi, i, j, -th)
        for chi in chis:
            engine.apply_eswap(chi, i, j, -th)
    return out


def derivative_stack(circuit: Circuit, theta, pairing=None) -> tuple[np.ndarray, np.ndarray]:
    """(psi, D) with D[k] = |d_k psi>, built by batched suffix application.

    Memory is N_p * 2^N complex; callers at large N should fall back to
    per-component derivative_state evaluation.
    """
    theta = check_theta(circuit, theta)
    pairs = circuit.init_pairing if pairing is None else pairing
    state = engine.dimer_state(pairs, circuit.n_sites)
    dim = len(state)
    stack = np.zeros((circuit.n_params, dim), dtype=np.complex128)
    for k, ((i, j), th) in enumerate(zip(circuit.gates, theta)):
        engine.apply_eswap(state, i, j, th)
        if k > 0:
            engine.apply_eswap_rows(stack[:k], i, j, th)
        stack[k] = 1j * engine.apply_swap(state, i, j)
    return state, stack


@dataclass
class GradientEstimate:
    forces: np.ndarray
    connection: np.ndarray
    var_single_shot: np.ndarray
    energy: float
    norm: float
    mode: str = "exact"
    n_shots: int | None = None
    shots_used: int = 0
    flags: list[str] = field(default_factory=list)


@dataclass
class MetricTensor:
    matrix: np.ndarray  # complex (N_p, N_p), Hermitian

    def regularized(self, beta: float) -> np.ndarray:
        """|Re G| + beta*I via symmetric eigendecomposition absolute value."""
        re = 0.5 * (self.matrix.real + self.matrix.real.T)
        vals, vecs = np.linalg.eigh(re)
        out = (vecs * np.abs(vals)) @ vecs.T
        out[np.diag_indices_from(out)] += beta
        return out


def _norm_and_energy(h: HamiltonianSpec, psi: np.ndarray, projector: SymmetryProjector):
    p_psi = projector.apply(psi)
    nrm = engine.inner(psi, p_psi).real
    if nrm < _NORM_FLOOR:
        raise AnsatzError(f"state annihilated by projector (norm {nrm:.3e})")
    hp = projector.apply(apply_hamiltonian(h, psi))
    energy = engine.inner(psi, hp).real / nrm
    return p_psi, hp, nrm, energy


def projected_energy(h: HamiltonianSpec, circuit: Circuit, theta,
                     projector: SymmetryProjector) -> tuple[float, float]:
    """(E(theta), N(theta)) with E = <psi|H P|psi> / N."""
    psi = prepare(circuit, theta)
    _, _, nrm, energy = _norm_and_energy(h, psi, projector)
    return energy, nrm


def exact_gradient(h: HamiltonianSpec, circuit: Circuit, theta,
                   projector: SymmetryProjector) -> GradientEstimate:
    """Forces f_k = 2 Re[<psi|H P|d_k psi>/N - A_k E], connection A_k = <psi|P|d_k psi>/N."""
    theta = check_theta(circuit, theta)
    psi = prepare(circuit, theta)
    p_psi, hp, nrm, energy = _norm_and_energy(h, psi, projector)
    s_h, s_n = _derivative_overlaps(circuit, theta, psi, [hp, p_psi])
    connection = s_n / nrm
    forces = 2.0 * (s_h / nrm - connection * energy).real
    return GradientEstimate(
        forces=forces,
        connection=connection,
        var_single_shot=np.zeros_like(forces),
        energy=energy,
        norm=nrm,
        mode="exact",
    )


def metric(circuit: Circuit, theta, projector: SymmetryProjector,
           derivatives: tuple[np.ndarray, np.ndarray] | None = None) -> MetricTensor:
    """G_ij = <d_i psi|P|d_j psi>/N - conj(A_i) A_j."""
    theta = check_theta(circuit, theta)
    if derivatives is None:
        psi, stack = derivative_stack(circuit, theta)
    else:
        psi, stack = derivatives
    p_psi = projector.apply(psi)
    nrm = engine.inner(psi, p_psi).real
    if nrm < _NORM_FLOOR:
        raise AnsatzError(f"state annihilated by projector (norm {nrm:.3e})")
    # A_k = <P psi | d_k psi> / N, and vdot conjugates the bra.
    conn = (stack @ p_psi.conj()) / nrm
    gram = np.zeros((circuit.n_params, circuit.n_params), dtype=np.complex128)
    if projector.is_identity:
        gram = stack.conj() @ stack.T
    else:
        for chi, gather in zip(projector.characters, [projector.gather_map(k)
                                                      for k in range(projector.order)]):
            gram += chi * (stack.conj() @ stack[:, gather].T)
        gram /= projector.order
    g = gram / nrm - np.outer(conn.conj(), conn)
    return MetricTensor(matrix=g)


def fidelity(circuit: Circuit, theta, projector: SymmetryProjector,
             ground: np.ndarray, psi: np.ndarray | None = None) -> float:
    """Squared overlap with the ground state (or summed over a degenerate manifold).

    With a nontrivial projector the overlap is taken against P|psi>/sqrt(N);
    `ground` may be a single vector or a (m, 2^N) stack of orthonormal states.
    """
    if psi is None:
        psi = prepare(circuit, theta)
    grounds = np.atleast_2d(ground)
    if projector.is_identity:
        amps = grounds.conj() @ psi
        return float((np.abs(amps) ** 2).sum())
    p_psi = projector.apply(psi)
    nrm = engine.inner(psi, p_psi).real
    if nrm < _NORM_FLOOR:
        raise AnsatzError(f"state annihilated by projector (norm {nrm:.3e})")
    amps = grounds.conj() @ p_psi
    return float((np.abs(amps) ** 2).sum() / nrm)


def overlaps(circuit: Circuit, theta, projector: SymmetryProjector,
             eigenstates: np.ndarray, psi: np.ndarray | None = None) -> np.ndarray:
    """Projected squared overlaps O_k with a stack of orthonormal eigenstates."""
    if psi is None:
        psi = prepare(circuit, theta)
    states = np.atleast_2d(eigenstates)
    if projector.is_identity:
        amps = states.conj() @ psi
        return np.abs(amps) ** 2
    p_psi = projector.apply(psi)
    nrm = engine.inner(psi, p_psi).real
    if nrm < _NORM_FLOOR:
        raise AnsatzError(f"state annihilated by projector (norm {nrm:.3e})")
    amps = states.conj() @ p_psi
    return np.abs(amps) ** 2 / nrm
