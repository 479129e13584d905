"""Spin-chain Hamiltonians: mixed-field Ising, random-field Heisenberg, XXZ with a defect.

All chains have open boundaries and the prefactors and signs are kept
exactly as in the model definitions (Pauli operators, no spin-1/2 rescaling):

    Ising:       sum_i (hx X_i + hz Z_i) - J sum_i Z_i Z_{i+1}
    Heisenberg:  1/4 sum_i S_i . S_{i+1} + 1/2 sum_i h_i Z_i,  h_i ~ U[-h, h]
    XXZ defect:  1/4 sum_i [Jxy (X_i X_{i+1} + Y_i Y_{i+1}) + Jz Z_i Z_{i+1}] + 1/2 eps Z_d
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .spinops import SectorBasis, make_rng, pauli_string_sparse, reflection_permutation


class SymmetryError(ValueError):
    """Hamiltonian does not leave the requested sector invariant."""


@dataclass(frozen=True)
class IsingParams:
    L: int
    hx: float = 1.0
    hz: float = 0.48
    J: float = 0.8

    def __post_init__(self):
        if self.L < 2:
            raise ValueError("L must be >= 2")
        if not all(np.isfinite([self.hx, self.hz, self.J])):
            raise ValueError("Ising parameters must be finite")


@dataclass(frozen=True)
class HeisenbergParams:
    L: int
    h: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.L < 2:
            raise ValueError("L must be >= 2")
        if self.h < 0:
            raise ValueError("disorder strength h must be >= 0")


def default_defect_site(L: int) -> int:
    """Defect site that breaks reflection symmetry (3 for L=7, 9 for L=18)."""
    if L == 7:
        return 3
    d = L // 2
    if 2 * d == L + 1:  # on the reflection axis
        d -= 1
    return max(d, 1)


@dataclass(frozen=True)
class XXZDefectParams:
    L: int
    Jxy: float = 1.0
    Jz: float = 1.0
    eps: float = 0.0
    d: int | None = None

    def __post_init__(self):
        if self.L < 2:
            raise ValueError("L must be >= 2")
        if self.d is None:
            object.__setattr__(self, "d", default_defect_site(self.L))
        if not 1 <= self.d <= self.L:
            raise ValueError(f"defect site {self.d} outside 1..{self.L}")


def _term(L: int, ops: dict[int, str]) -> sp.csr_matrix:
    labels = ["0"] * L
    for site, op in ops.items():
        labels[site - 1] = op
    return pauli_string_sparse(labels)


def _finish(H: sp.csr_matrix, sparse: bool, sector: SectorBasis | None):
    if sector is not None:
        return project_to_sector(H, sector)
    return H if sparse else H.toarray()


def build_mixed_field_ising(p: IsingParams, *, sparse=False, sector=None):
    L = p.L
    n = 2**L
    H = sp.csr_matrix((n, n), dtype=complex)
    for i in range(1, L + 1):
        if p.hx:
            H = H + p.hx * _term(L, {i: "x"})
        if p.hz:
            H = H + p.hz * _term(L, {i: "z"})
    for i in range(1, L):
        if p.J:
            H = H - p.J * _term(L, {i: "z", i + 1: "z"})
    return _finish(H.tocsr(), sparse, sector)


def random_fields(L: int, h: float, seed) -> np.ndarray:
    return make_rng(seed).uniform(-h, h, size=L)


def build_random_field_heisenberg(p: HeisenbergParams, *, sparse=False, sector=None):
    """Returns ``(H, fields)``; ``fields`` are the sampled h_i."""
    fields = random_fields(p.L, p.h, p.seed)
    H = _xxz_bonds(p.L, 1.0, 1.0)
    for i, hi in enumerate(fields, start=1):
        H = H + 0.5 * hi * _term(p.L, {i: "z"})
    return _finish(H.tocsr(), sparse, sector), fields


def _xxz_bonds(L: int, Jxy: float, Jz: float) -> sp.csr_matrix:
    n = 2**L
    H = sp.csr_matrix((n, n), dtype=complex)
    for i in range(1, L):
        if Jxy:
            H = H + 0.25 * Jxy * (_term(L, {i: "x", i + 1: "x"}) + _term(L, {i: "y", i + 1: "y"}))
        if Jz:
            H = H + 0.25 * Jz * _term(L, {i: "z", i + 1: "z"})
    return H


def build_xxz_defect(p: XXZDefectParams, *, sparse=False, sector=None):
    H = _xxz_bonds(p.L, p.Jxy, p.Jz)
    if p.eps:
        H = H + 0.5 * p.eps * _term(p.L, {p.d: "z"})
    return _finish(H.tocsr(), sparse, sector)


def reflection_operator(L: int) -> sp.csr_matrix:
    refl = reflection_permutation(L)
    n = refl.size
    return sp.csr_matrix((np.ones(n), (refl, np.arange(n))), shape=(n, n))


def magnetization_operator(L: int) -> sp.csr_matrix:
    n = 2**L
    M = sp.csr_matrix((n, n), dtype=complex)
    for i in range(1, L + 1):
        M = M + _term(L, {i: "z"})
    return M


def project_to_sector(H, B: SectorBasis, atol: float = 1e-10) -> np.ndarray:
    """Dense B^dag H B, after checking that H maps the sector into itself."""
    H = sp.csr_matrix(H) if not sp.issparse(H) else H.tocsr()
    V = B.vectors
    HV = H @ V
    block = (V.conj().T @ HV).toarray()
    residual = HV - V @ sp.csc_matrix(block)
    err = abs(residual).max() if residual.nnz else 0.0
    if err > atol:
        raise SymmetryError(
            f"Hamiltonian leaks out of the {B.kind} sector {B.label!r} (residual {err:.2e})"
        )
    return block


def build_model(model: str, params: dict, *, sparse=False, sector=None):
    """Dispatch by model name; Heisenberg fields are dropped from the return."""
    if model == "ising":
        return build_mixed_field_ising(IsingParams(**params), sparse=sparse, sector=sector)
    if model == "heisenberg":
        return build_random_field_heisenberg(HeisenbergParams(**params), sparse=sparse, sector=sector)[0]
    if model in ("xxz", "xxz_defect"):
        return build_xxz_defect(XXZDefectParams(**params), sparse=sparse, sector=sector)
    raise ValueError(f"unknown model {model!r}")
