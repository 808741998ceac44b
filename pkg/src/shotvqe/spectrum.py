"""Exact-diagonalization oracle: Hamiltonian action, low-lying spectrum, gaps.

The Heisenberg coupling is applied through the two-site swap, S_i.S_j =
P_ij/2 - 1/4, so every matrix-vector product is a sum of index-pair kernels
over bonds.  Eigenpairs come from ARPACK's Lanczos (scipy eigsh) on a matrix-
free operator; symmetry sectors are selected by sandwiching the operator
between projector applications, which keeps memory at a few 2^N vectors.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import engine
from .lattice import BondSet

_GAP_RTOL = 1e-8  # degeneracy threshold, in units of |j1|


class SpectrumError(RuntimeError):
    """Raised on dimension mismatches or eigensolver failure."""


@dataclass(frozen=True)
class HamiltonianSpec:
    bonds: BondSet
    j1: float = 1.0
    j2: float = 0.0

    def __post_init__(self):
        if self.j1 == 0:
            raise SpectrumError("j1 must be nonzero; it sets the energy scale")

    @property
    def n_sites(self) -> int:
        return self.bonds.n_sites

    @cached_property
    def terms(self) -> tuple[tuple[int, int, float], ...]:
        out = [(i, j, self.j1) for i, j in self.bonds.j1_bonds]
        out += [(i, j, self.j2) for i, j in self.bonds.j2_bonds]
        return tuple((i, j, c) for i, j, c in out if c != 0.0)

    @cached_property
    def energy_bound(self) -> float:
        """Upper bound on the spectral radius: sum of 3/4 |J| per bond."""
        return 0.75 * sum(abs(c) for _, _, c in self.terms)


def apply_hamiltonian(h: HamiltonianSpec, state: np.ndarray) -> np.ndarray:
    """H|state> as a new vector."""
    n = engine.n_sites_of(state)
    if n != h.n_sites:
        raise SpectrumError(f"state has {n} sites, Hamiltonian has {h.n_sites}")
    shift = -0.25 * sum(c for _, _, c in h.terms)
    out = shift * state
    for i, j, c in h.terms:
        lo, hi, same = engine._pair_indices(n, i, j)
        half = 0.5 * c
        out[same] += half * state[same]
        out[lo] += half * state[hi]
        out[hi] += half * state[lo]
    return out


def total_spin_sq(state: np.ndarray) -> float:
    """<S^2> via the all-pairs swap sum; state must be normalized."""
    n = engine.n_sites_of(state)
    acc = 0.75 * n - 0.25 * n * (n - 1)
    for i in range(n):
        for j in range(i + 1, n):
            acc += engine.swap_dot(state, state, i, j).real
    return float(acc)


@dataclass
class SpectralData:
    eigenvalues: np.ndarray
    eigenstates: np.ndarray  # shape (k, 2^N), rows normalized
    spin_sq: np.ndarray
    residuals: np.ndarray
    sector_label: str = "none"

    def __post_init__(self):
        order = np.argsort(self.eigenvalues)
        self.eigenvalues = self.eigenvalues[order]
        self.eigenstates = self.eigenstates[order]
        self.spin_sq = self.spin_sq[order]
        self.residuals = self.residuals[order]

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    def gap(self, j1: float = 1.0) -> float:
        """Energy to the first level strictly above E0 (degeneracy-tolerant)."""
        e0 = self.eigenvalues[0]
        above = self.eigenvalues[self.eigenvalues > e0 + _GAP_RTOL * abs(j1)]
        if len(above) == 0:
            raise SpectrumError(
                "gap undetermined: all computed levels degenerate with the ground state"
            )
        return float(above[0] - e0)

    def ground_manifold(self, j1: float = 1.0) -> np.ndarray:
        sel = self.eigenvalues <= self.eigenvalues[0] + _GAP_RTOL * abs(j1)
        return self.eigenstates[sel]


def _sz_zero_indices(n: int) -> np.ndarray:
    idx = engine._arange(n)
    pop = np.zeros_like(idx)
    for b in range(n):
        pop += (idx >> b) & 1
    return idx[pop == n // 2]


def _sz_zero_csr(h: HamiltonianSpec) -> tuple[sp.csr_matrix, np.ndarray]:
    """Sparse H restricted to the half-filling (total-Sz = 0) index block."""
    n = h.n_sites
    block = _sz_zero_indices(n)
    pos = {int(v): p for p, v in enumerate(block)}
    dim = len(block)
    shift = -0.25 * sum(c for _, _, c in h.terms)
    diag = np.full(dim, shift)
    rows, cols, vals = [], [], []
    for i, j, c in h.terms:
        bi = (block >> i) & 1
        bj = (block >> j) & 1
        same = bi == bj
        diag[same] += 0.5 * c
        src = np.nonzero(~same)[0]
        m = (1 << i) | (1 << j)
        for p in src:
            q = pos[int(block[p] ^ m)]
            rows.append(p)
            cols.append(q)
            vals.append(0.5 * c)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    mat += sp.diags(diag)
    return mat.tocsr(), block


def _orthonormalize_degenerate(h: HamiltonianSpec, states: np.ndarray,
                               energies: np.ndarray,
                               cluster_tol: float = 1e-7):
    """QR-orthonormalize within degenerate clusters (ARPACK resolves
    degenerate subspaces only to solver tolerance)."""
    order = np.argsort(energies)
    states, energies = states[order], energies[order]
    start = 0
    for i in range(1, len(energies) + 1):
        if i == len(energies) or energies[i] - energies[start] > cluster_tol * max(1.0, abs(h.j1)):
            if i - start > 1:
                q, _ = np.linalg.qr(states[start:i].T)
                states[start:i] = q.T
            start = i
    energies = np.array([engine.inner(s, apply_hamiltonian(h, s)).real
                         for s in states])
    return states, energies


def lowest_k(h: HamiltonianSpec, k: int, sector=None, *, sz_zero: bool = False,
             maxiter: int | None = None) -> SpectralData:
    """Lowest-k eigenpairs, optionally restricted to a symmetry sector.

    sector is a projector (anything exposing .apply(vec) and .order); the
    restriction works by iterating on P(H - sigma)P with sigma above the
    spectral radius, so kernel states of P sit at zero and sector states
    below.  sz_zero=True additionally restricts to the half-filling block,
    which every dimer-rooted circuit state inhabits.
    Residual norms ||Hv - Ev|| are checked against 1e-8.
    """
    if k < 1:
        raise SpectrumError("k must be >= 1")
    n = h.n_sites
    dim = 1 << n

    if sz_zero:
        mat, block = _sz_zero_csr(h)
    else:
        mat, block = None, None

    sigma = h.energy_bound + 1.0

    def matvec(x):
        if block is not None:
            v = np.zeros(dim, dtype=np.complex128)
            v[block] = x
        else:
            v = np.asarray(x, dtype=np.complex128)
        if sector is not None:
            v = sector.apply(v)
        w = apply_hamiltonian(h, v) - sigma * v
        if sector is not None:
            w = sector.apply(w)
        return w[block] if block is not None else w

    op_dim = len(block) if block is not None else dim
    # Ask for extra pairs: Lanczos resolves degenerate multiplets only with
    # headroom, and projected runs additionally waste pairs on kernel states.
    extra = max(4, k // 4) + (4 if sector is not None else 0)
    ask = min(k + extra, op_dim - 2)
    if ask < k:
        ask = min(k, op_dim - 2)
    if ask < 1:
        raise SpectrumError(f"system too small for eigsh (dim {op_dim})")
    op = spla.LinearOperator((op_dim, op_dim), matvec=matvec, dtype=np.complex128)
    # Deterministic start vector, projected into the sector when one is set.
    v0 = np.random.default_rng(0x5eed).standard_normal(op_dim)
    v0 = v0 + 0.3 * np.roll(v0, 1)
    if sector is not None:
        full = np.zeros(dim, dtype=np.complex128)
        if block is not None:
            full[block] = v0
        else:
            full[:] = v0
        full = sector.apply(full)
        proj0 = full[block] if block is not None else full
        if np.linalg.norm(proj0) > 1e-9:
            v0 = proj0
    try:
        vals, vecs = spla.eigsh(op, k=ask, which="SA", maxiter=maxiter, v0=v0)
    except spla.ArpackNoConvergence as exc:
        if len(getattr(exc, "eigenvalues", [])) >= k:
            vals, vecs = exc.eigenvalues, exc.eigenvectors
        else:
            raise SpectrumError(f"Lanczos did not converge: {exc}") from exc

    states, energies = [], []
    for idx in np.argsort(vals):
        v = vecs[:, idx].astype(np.complex128)
        if block is not None:
            full = np.zeros(dim, dtype=np.complex128)
            full[block] = v
        else:
            full = v
        if sector is not None:
            proj = sector.apply(full)
            pn = np.linalg.norm(proj)
            if pn < 0.5:  # kernel-of-P artifact, not a sector state
                continue
            full = proj / pn
        nrm = np.linalg.norm(full)
        full /= nrm
        e = engine.inner(full, apply_hamiltonian(h, full)).real
        states.append(full)
        energies.append(e)
        if len(states) == k:
            break
    if len(states) < k:
        raise SpectrumError(
            f"only {len(states)} of {k} sector eigenpairs converged; "
            "request fewer states or a larger solve"
        )
    eigenstates = np.array(states)
    eigenvalues = np.array(energies)
    eigenstates, eigenvalues = _orthonormalize_degenerate(
        h, eigenstates, eigenvalues)
    residuals = np.array([
        np.linalg.norm(apply_hamiltonian(h, s) - e * s)
        for s, e in zip(eigenstates, eigenvalues)
    ])
    worst = residuals.max()
    if worst > 1e-8:
        raise SpectrumError(f"eigenpair residual {worst:.2e} above 1e-8")
    spin = np.array([total_spin_sq(s) for s in eigenstates])
    label = "none" if sector is None else getattr(getattr(sector, "group", None), "label", "sector")
    return SpectralData(eigenvalues, eigenstates, spin, residuals, sector_label=label)


def sector_gap(h: HamiltonianSpec, sector=None, *, sz_zero: bool = False) -> float:
    """Gap between the two lowest distinct levels of the (sector) spectrum."""
    k = 2
    while True:
        data = lowest_k(h, k, sector, sz_zero=sz_zero)
        try:
            return data.gap(h.j1)
        except SpectrumError:
            k += 2
            if k > 16:
                raise
