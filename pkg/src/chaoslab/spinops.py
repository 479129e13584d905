"""Linear algebra primitives for spin-1/2 chains.

Conventions used throughout the package:

* Sites are numbered 1..L and site 1 is the leftmost tensor factor (the probe).
  In the computational basis index ``b`` site ``j`` is bit ``L - j``.
* ``|0>`` is spin up (sigma^z = +1), so ``N_up`` counts zero bits.
* Random numbers come from :class:`numpy.random.Philox` (counter-based),
  seeded explicitly by every stochastic routine.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from math import comb
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

MAX_PAULI_SITES = 14

PAULI_LABELS = ("0", "x", "y", "z")

_PAULI = {
    "0": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class SizeError(ValueError):
    """Requested operator exceeds the configured size limit."""


class SectorError(ValueError):
    """Invalid symmetry-sector specification."""


def pauli(label: str) -> np.ndarray:
    """Single-site Pauli matrix for label in {'0', 'x', 'y', 'z'}."""
    label = _normalize_label(label)
    return _PAULI[label].copy()


def _normalize_label(label) -> str:
    label = str(label).lower()
    if label in ("i", "id"):
        label = "0"
    if label not in _PAULI:
        raise ValueError(f"unknown Pauli label {label!r}")
    return label


def make_rng(seed) -> np.random.Generator:
    """Philox-backed generator; ``seed`` may be an int or a SeedSequence."""
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def kron(*ops: np.ndarray) -> np.ndarray:
    """Tensor product of the operands, leftmost factor most significant."""
    if not ops:
        raise ValueError("kron needs at least one operand")
    return reduce(np.kron, ops)


@dataclass(frozen=True)
class PauliString:
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(_normalize_label(a) for a in self.labels))

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        return cls(tuple(text))

    @property
    def L(self) -> int:
        return len(self.labels)

    @property
    def weight(self) -> int:
        return sum(a != "0" for a in self.labels)

    def __str__(self) -> str:
        return "".join(self.labels)


def pauli_action(labels: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(perm, phase)`` with ``sigma |b> = phase[b] |perm[b]>``.

    A Pauli string has exactly one nonzero per column, so the action is a
    bit-flip permutation together with a phase.
    """
    labels = [_normalize_label(a) for a in labels]
    L = len(labels)
    idx = np.arange(2**L, dtype=np.int64)
    perm = idx.copy()
    phase = np.ones(2**L, dtype=complex)
    for j, a in enumerate(labels):
        shift = L - 1 - j
        bit = (idx >> shift) & 1
        if a == "x":
            perm ^= 1 << shift
        elif a == "y":
            perm ^= 1 << shift
            phase *= np.where(bit == 0, 1j, -1j)
        elif a == "z":
            phase *= np.where(bit == 0, 1.0, -1.0)
    return perm, phase


def pauli_string_matrix(s, max_sites: int = MAX_PAULI_SITES) -> np.ndarray:
    """Dense matrix of a Pauli string (site 1 leftmost)."""
    labels = s.labels if isinstance(s, PauliString) else tuple(s)
    L = len(labels)
    if L > max_sites:
        raise SizeError(f"Pauli string on {L} sites exceeds limit {max_sites}")
    perm, phase = pauli_action(labels)
    out = np.zeros((2**L, 2**L), dtype=complex)
    out[perm, np.arange(2**L)] = phase
    return out


def pauli_string_sparse(labels: Sequence[str]) -> sp.csr_matrix:
    perm, phase = pauli_action(labels)
    n = perm.size
    return sp.csr_matrix((phase, (perm, np.arange(n))), shape=(n, n))


def site_operator(op: str, site: int, L: int) -> list[str]:
    """Labels for a single-site Pauli ``op`` on ``site`` (1-based)."""
    if not 1 <= site <= L:
        raise ValueError(f"site {site} outside 1..{L}")
    labels = ["0"] * L
    labels[site - 1] = op
    return labels


def partial_trace(rho: np.ndarray, L: int, traced_sites: Iterable[int]) -> np.ndarray:
    """Trace out ``traced_sites`` (1-based) of an L-qubit operator."""
    rho = np.asarray(rho)
    if rho.shape != (2**L, 2**L):
        raise ValueError(f"operator shape {rho.shape} does not match L={L}")
    traced = sorted(set(traced_sites))
    for s in traced:
        if not 1 <= s <= L:
            raise ValueError(f"invalid site index {s} for L={L}")
    kept = [s for s in range(1, L + 1) if s not in traced]
    t = rho.reshape([2] * (2 * L))
    # Trace from the highest site down so axis numbers stay valid.
    n = L
    for s in reversed(traced):
        t = np.trace(t, axis1=s - 1, axis2=n + s - 1)
        n -= 1
    d = 2 ** len(kept)
    return t.reshape(d, d)


def purity(rho: np.ndarray, atol: float = 1e-9) -> float:
    """Tr[rho^2] of a unit-trace Hermitian matrix."""
    rho = np.asarray(rho)
    tr = np.trace(rho)
    if abs(tr - 1) > atol:
        raise ValueError(f"density matrix trace {tr} is not 1")
    return float(np.real(np.vdot(rho.conj().T, rho)))


def haar_qubits(n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` Haar-random single-qubit kets, shape ``(n, 2)``."""
    z = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def product_ket(site_states: np.ndarray) -> np.ndarray:
    """Tensor product of per-site kets, ``(L, 2)`` -> ``(2**L,)``."""
    return reduce(np.kron, site_states)


def product_kets(site_states: np.ndarray) -> np.ndarray:
    """Batched :func:`product_ket`: ``(n, L, 2)`` -> ``(n, 2**L)``."""
    out = site_states[:, 0, :]
    for j in range(1, site_states.shape[1]):
        out = (out[:, :, None] * site_states[:, j, None, :]).reshape(out.shape[0], -1)
    return out


@dataclass(frozen=True, eq=False)
class ProductState:
    L: int
    sites: np.ndarray
    seed: object = None

    @property
    def amplitudes(self) -> np.ndarray:
        return product_ket(self.sites)

    def density_matrix(self) -> np.ndarray:
        psi = self.amplitudes
        return np.outer(psi, psi.conj())


def random_product_state(L: int, seed) -> ProductState:
    """Product of L independent Haar-random qubit states."""
    if L < 1:
        raise ValueError("L must be >= 1")
    rng = make_rng(seed)
    return ProductState(L=L, sites=haar_qubits(L, rng), seed=seed)


def reflection_permutation(L: int) -> np.ndarray:
    """Index map b -> R(b) for the site reflection i <-> L - i + 1."""
    idx = np.arange(2**L, dtype=np.int64)
    out = np.zeros_like(idx)
    for j in range(L):
        out |= ((idx >> j) & 1) << (L - 1 - j)
    return out


def popcount(idx: np.ndarray) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    count = np.zeros_like(idx)
    while np.any(idx):
        count += idx & 1
        idx = idx >> 1
    return count


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """Orthonormal basis of a symmetry sector, columns of a sparse matrix.

    ``kind`` is ``'full'``, ``'magnetization'`` (``label`` = N_up) or
    ``'parity'`` (``label`` = ``'even'``/``'odd'``).
    """

    L: int
    kind: str
    label: object
    vectors: sp.csc_matrix

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def dense(self) -> np.ndarray:
        return self.vectors.toarray()


def sector_basis(L: int, kind: str = "full", label=None) -> SectorBasis:
    """Build the basis for a magnetization, parity or full sector."""
    if L < 2:
        raise SectorError("sector bases need L >= 2")
    n = 2**L
    if kind == "full":
        return SectorBasis(L, "full", None, sp.identity(n, dtype=complex, format="csc"))
    if kind == "magnetization":
        n_up = int(label)
        if not 0 <= n_up <= L:
            raise SectorError(f"N_up={label} outside 0..{L}")
        states = np.flatnonzero(L - popcount(np.arange(n)) == n_up)
        vecs = sp.csc_matrix(
            (np.ones(states.size, dtype=complex), (states, np.arange(states.size))),
            shape=(n, states.size),
        )
        return SectorBasis(L, kind, n_up, vecs)
    if kind == "parity":
        if label not in ("even", "odd"):
            raise SectorError(f"parity label must be 'even' or 'odd', got {label!r}")
        refl = reflection_permutation(L)
        idx = np.arange(n)
        reps = idx[idx < refl]
        rows, cols, vals = [], [], []
        sign = 1.0 if label == "even" else -1.0
        inv = 1 / np.sqrt(2)
        col = 0
        if label == "even":
            for s in idx[idx == refl]:
                rows.append(s)
                cols.append(col)
                vals.append(1.0)
                col += 1
        for s in reps:
            rows += [s, refl[s]]
            cols += [col, col]
            vals += [inv, sign * inv]
            col += 1
        vecs = sp.csc_matrix(
            (np.asarray(vals, dtype=complex), (rows, cols)), shape=(n, col)
        )
        return SectorBasis(L, kind, label, vecs)
    raise SectorError(f"unknown sector kind {kind!r}")


def magnetization_dim(L: int, n_up: int) -> int:
    return comb(L, n_up)


def parity_dims(L: int) -> tuple[int, int]:
    """(even, odd) sector dimensions from palindrome counting."""
    pal = 2 ** ((L + 1) // 2)
    return (2**L + pal) // 2, (2**L - pal) // 2
