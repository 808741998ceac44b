"""State-vector kernels: dimer initialization, eSWAP gates, site permutations.

Amplitude layout: basis index bit k holds the spin of site k, bit value 0
meaning spin-up.  Under this layout every site permutation is an index
bit-permutation and every two-site gate touches index pairs differing in
exactly two bits, so no gate matrix is ever materialized.

Gates mutate the state in place.  Operations on distinct vectors are safe
concurrently; a single vector must not be mutated by two operations at once.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


class EngineError(ValueError):
    """Raised on malformed states, pairings, or permutations."""


@lru_cache(maxsize=32)
def _arange(n_sites: int) -> np.ndarray:
    return np.arange(1 << n_sites, dtype=np.int64)


@lru_cache(maxsize=256)
def _pair_indices(n_sites: int, i: int, j: int):
    """Index structure of the (i, j) swap: (lo, hi, same).

    lo/hi are partner indices whose bits i, j differ (bit i set on lo);
    same collects indices where the two bits agree (swap-invariant).
    """
    idx = _arange(n_sites)
    bi = (idx >> i) & 1
    bj = (idx >> j) & 1
    diff = bi != bj
    lo = idx[diff & (bi == 1)]
    hi = lo ^ ((1 << i) | (1 << j))
    same = idx[~diff]
    return lo, hi, same


def n_sites_of(state: np.ndarray) -> int:
    n = int(math.log2(len(state)))
    if 1 << n != len(state):
        raise EngineError(f"state length {len(state)} is not a power of two")
    return n


def _check_sites(n_sites: int, i: int, j: int) -> None:
    if i == j:
        raise EngineError(f"gate sites must differ, got ({i}, {j})")
    if not (0 <= i < n_sites and 0 <= j < n_sites):
        raise EngineError(f"sites ({i}, {j}) outside [0, {n_sites})")


def dimer_state(pairing, n_sites: int) -> np.ndarray:
    """Tensor product of two-site singlets over the given perfect matching.

    For a pair (a, b) the singlet carries amplitude +1/sqrt(2) on the basis
    index with bit a set and bit b clear, -1/sqrt(2) on the reverse.
    """
    pairs = [tuple(p) for p in pairing]
    sites = [s for p in pairs for s in p]
    if n_sites % 2 != 0:
        raise EngineError(f"dimer state needs an even site count, got {n_sites}")
    if sorted(sites) != list(range(n_sites)):
        raise EngineError("pairing is not a perfect matching of all sites")
    idx = _arange(n_sites)
    amp = np.ones(len(idx))
    valid = np.ones(len(idx), dtype=bool)
    for a, b in pairs:
        ba = (idx >> a) & 1
        bb = (idx >> b) & 1
        valid &= (ba ^ bb) == 1
        amp = np.where(ba == 1, amp, -amp)
    state = np.where(valid, amp, 0.0) * 2.0 ** (-len(pairs) / 2)
    return state.astype(np.complex128)


def apply_eswap(state: np.ndarray, i: int, j: int, theta: float) -> np.ndarray:
    """Apply exp(i*theta*P_ij) in place, P_ij the two-site swap; returns state."""
    n = n_sites_of(state)
    _check_sites(n, i, j)
    lo, hi, same = _pair_indices(n, i, j)
    c = math.cos(theta)
    s = math.sin(theta)
    state[same] *= complex(c, s)
    a = state[lo]
    b = state[hi]
    state[lo] = c * a + 1j * s * b
    state[hi] = c * b + 1j * s * a
    return state


def apply_eswap_rows(block: np.ndarray, i: int, j: int, theta: float) -> np.ndarray:
    """apply_eswap vectorized over the rows of a (m, 2^N) block, in place."""
    n = n_sites_of(block[0])
    _check_sites(n, i, j)
    lo, hi, same = _pair_indices(n, i, j)
    c = math.cos(theta)
    s = math.sin(theta)
    block[:, same] *= complex(c, s)
    a = block[:, lo]
    b = block[:, hi]
    block[:, lo] = c * a + 1j * s * b
    block[:, hi] = c * b + 1j * s * a
    return block


def apply_swap(state: np.ndarray, i: int, j: int) -> np.ndarray:
    """Return P_ij|state> as a new vector."""
    n = n_sites_of(state)
    _check_sites(n, i, j)
    lo, hi, same = _pair_indices(n, i, j)
    out = np.empty_like(state)
    out[same] = state[same]
    out[lo] = state[hi]
    out[hi] = state[lo]
    return out


def swap_dot(bra: np.ndarray, ket: np.ndarray, i: int, j: int) -> complex:
    """<bra|P_ij|ket> without materializing the swapped vector."""
    n = n_sites_of(bra)
    lo, hi, same = _pair_indices(n, i, j)
    return (
        np.vdot(bra[same], ket[same])
        + np.vdot(bra[lo], ket[hi])
        + np.vdot(bra[hi], ket[lo])
    )


@lru_cache(maxsize=512)
def permutation_index_map(perm: tuple) -> np.ndarray:
    """Map m with m[n] = index of basis state n after the site permutation.

    perm[i] is the image of site i; bit i of n moves to bit perm[i].
    """
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise EngineError("permutation is not a bijection on sites")
    idx = _arange(n)
    out = np.zeros_like(idx)
    for i in range(n):
        out |= ((idx >> i) & 1) << int(perm[i])
    return out


def apply_permutation(state: np.ndarray, perm) -> np.ndarray:
    """Relabel basis states |s> -> |g(s)>; returns a new vector."""
    n = n_sites_of(state)
    perm = np.asarray(perm, dtype=np.int64)
    if len(perm) != n:
        raise EngineError(f"permutation length {len(perm)} != site count {n}")
    m = permutation_index_map(tuple(perm.tolist()))
    out = np.empty_like(state)
    out[m] = state
    return out


def inner(u: np.ndarray, v: np.ndarray) -> complex:
    """<u|v>, conjugate-linear in the first argument."""
    if u.shape != v.shape:
        raise EngineError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return complex(np.vdot(u, v))


def norm(state: np.ndarray) -> float:
    return float(np.linalg.norm(state))
