"""Reduced single-qubit channels induced on a probe spin by global unitaries.

Choi matrices are unit-trace and ordered output (x) reference:

    D = (1/d) sum_ij E(|i><j|) (x) |i><j|

so that the trace over the output factor is I/d for a trace-preserving map.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .spectra import EigenDecomposition
from .spinops import PAULI_LABELS, ProductState, pauli

D_S = 2
PSD_TOL = 1e-10

_SIGMA = [pauli(a) for a in PAULI_LABELS]


class ChannelError(ValueError):
    """Choi matrix fails a CPTP check."""


@dataclass(frozen=True, eq=False)
class QubitChannel:
    choi: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.choi, dtype=complex)
        if c.shape != (4, 4):
            raise ChannelError(f"qubit Choi matrix must be 4x4, got {c.shape}")
        if np.max(np.abs(c - c.conj().T)) > 1e-10:
            raise ChannelError("Choi matrix is not Hermitian")
        if abs(np.trace(c) - 1) > 1e-10:
            raise ChannelError(f"Choi trace {np.trace(c).real:.3g} != 1")
        lam = np.linalg.eigvalsh(c).min()
        if lam < -PSD_TOL:
            raise ChannelError(f"Choi matrix not PSD (min eigenvalue {lam:.3g})")
        marginal = np.einsum("ajak->jk", c.reshape(2, 2, 2, 2))
        if np.max(np.abs(marginal - np.eye(2) / D_S)) > 1e-9:
            raise ChannelError("channel is not trace preserving")
        object.__setattr__(self, "choi", c)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        """Apply the channel through the Choi representation."""
        c = self.choi.reshape(2, 2, 2, 2)  # (out, ref, out', ref')
        return D_S * np.einsum("aibj,ij->ab", c, np.asarray(rho))

    @classmethod
    def from_kraus(cls, kraus) -> "QubitChannel":
        choi = np.zeros((4, 4), dtype=complex)
        for i in range(2):
            for j in range(2):
                eij = np.zeros((2, 2))
                eij[i, j] = 1
                out = sum(K @ eij @ K.conj().T for K in kraus)
                choi += np.kron(out, eij)
        return cls(choi / D_S)


def unitary_channel(U2: np.ndarray) -> QubitChannel:
    return QubitChannel.from_kraus([np.asarray(U2, dtype=complex)])


def identity_channel() -> QubitChannel:
    return unitary_channel(np.eye(2))


def depolarizing_channel(p: float = 1.0) -> QubitChannel:
    """rho -> (1 - p) rho + p I/2; ``p = 1`` is completely depolarizing."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    kraus = [np.sqrt(1 - 3 * p / 4) * _SIGMA[0]] + [np.sqrt(p / 4) * s for s in _SIGMA[1:]]
    return QubitChannel.from_kraus(kraus)


def amplitude_damping_channel(gamma: float) -> QubitChannel:
    """Decay |1> -> |0> with probability ``gamma``."""
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must lie in [0, 1]")
    K0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    K1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    return QubitChannel.from_kraus([K0, K1])


def propagator(eig: EigenDecomposition, t: float) -> np.ndarray:
    """U(t) = V exp(-i Lambda t) V^dag."""
    V = eig.eigenvectors
    if V is None:
        raise ValueError("propagator needs eigenvectors")
    return (V * np.exp(-1j * eig.eigenvalues * t)) @ V.conj().T


def probe_first(U: np.ndarray, probe_site: int = 1) -> np.ndarray:
    """Reorder the tensor factors of ``U`` so that ``probe_site`` comes first."""
    n = U.shape[0]
    L = n.bit_length() - 1
    if 2**L != n:
        raise ValueError(f"dimension {n} is not a power of two")
    if not 1 <= probe_site <= L:
        raise ValueError(f"probe site {probe_site} outside 1..{L}")
    if probe_site == 1:
        return U
    order = [probe_site - 1] + [k for k in range(L) if k != probe_site - 1]
    t = U.reshape([2] * (2 * L)).transpose(order + [L + k for k in order])
    return t.reshape(n, n)


def _env_density(env, d_env: int) -> np.ndarray:
    if isinstance(env, ProductState):
        env = env.amplitudes
    env = np.asarray(env, dtype=complex)
    if env.ndim == 1:
        env = np.outer(env, env.conj())
    if env.shape != (d_env, d_env):
        raise ValueError(f"environment has shape {env.shape}, expected {(d_env, d_env)}")
    if abs(np.trace(env) - 1) > 1e-10:
        raise ValueError("environment state is not unit trace")
    return env


def _env_ket(env, d_env: int) -> np.ndarray | None:
    if isinstance(env, ProductState):
        env = env.amplitudes
    env = np.asarray(env, dtype=complex)
    if env.ndim != 1:
        return None
    if env.shape != (d_env,):
        raise ValueError(f"environment ket has length {env.size}, expected {d_env}")
    if abs(np.vdot(env, env) - 1) > 1e-10:
        raise ValueError("environment state is not unit trace")
    return env


def apply_channel(U, rho_E, rho_S, probe_site: int = 1) -> np.ndarray:
    """Tr_E[U (rho_S (x) rho_E) U^dag] for the probe at ``probe_site``."""
    U = probe_first(np.asarray(U), probe_site)
    n = U.shape[0]
    rho_S = np.asarray(rho_S, dtype=complex)
    if rho_S.shape != (2, 2):
        raise ValueError("probe state must be 2x2")
    rho_E = _env_density(rho_E, n // 2)
    out = U @ np.kron(rho_S, rho_E) @ U.conj().T
    return np.einsum("aebe->ab", out.reshape(2, n // 2, 2, n // 2))


def basis_action(U, env, probe_site: int = 1) -> np.ndarray:
    """``out[i, j] = E(|i><j|)`` as a (2, 2, 2, 2) array."""
    U = probe_first(np.asarray(U), probe_site)
    n = U.shape[0]
    de = n // 2
    psi = _env_ket(env, de)
    if psi is not None:
        # U (|i> (x) psi) is column block i of U applied to psi
        phi = np.stack([U[:, i * de : (i + 1) * de] @ psi for i in range(2)])
        M = phi.reshape(2, 2, de)  # (input i, output a, env)
        return np.einsum("iae,jbe->ijab", M, M.conj())
    rho_E = _env_density(env, de)
    out = np.empty((2, 2, 2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            blk = U[:, i * de : (i + 1) * de] @ rho_E @ U[:, j * de : (j + 1) * de].conj().T
            out[i, j] = np.einsum("aebe->ab", blk.reshape(2, de, 2, de))
    return out


def choi_from_unitary(U, env, probe_site: int = 1) -> QubitChannel:
    """Choi matrix of the probe channel induced by ``U`` with environment ``env``.

    ``env`` may be a :class:`ProductState`, a ket or a density matrix on the
    remaining L - 1 sites (in their original order).
    """
    act = basis_action(U, env, probe_site)
    choi = np.einsum("ijab->aibj", act).reshape(4, 4) / D_S
    return QubitChannel(choi)


def choi_purity(c: QubitChannel) -> float:
    return float(np.real(np.vdot(c.choi, c.choi)))


def choi_purity_from_basis_action(act: np.ndarray) -> float:
    """(1/d^2) sum_kl Tr[E(|k><l|) E(|l><k|)]."""
    return float(np.real(np.einsum("klab,lkba->", act, act))) / D_S**2


def channel_output_identity(c: QubitChannel) -> np.ndarray:
    """E(I) = d Tr_ref[choi]."""
    return D_S * np.einsum("aibi->ab", c.choi.reshape(2, 2, 2, 2))


def unitality_term(c: QubitChannel) -> float:
    """Tr[E(I)^2]; equals d exactly for unital channels."""
    e = channel_output_identity(c)
    return float(np.real(np.vdot(e, e)))


def haar_averaged_output_purity(c: QubitChannel) -> float:
    return (unitality_term(c) + D_S**2 * choi_purity(c)) / (D_S * (D_S + 1))


def pauli_transfer_matrix(c: QubitChannel) -> np.ndarray:
    """R[mu, nu] = Tr[sigma_mu E(sigma_nu)] / 2 over (I, X, Y, Z)."""
    R = np.empty((4, 4))
    for nu, snu in enumerate(_SIGMA):
        out = c(snu)
        for mu, smu in enumerate(_SIGMA):
            R[mu, nu] = 0.5 * np.real(np.trace(smu @ out))
    return R


def bloch_volume(R: np.ndarray) -> float:
    """Determinant of the 3x3 Bloch block (signed volume factor)."""
    return float(np.linalg.det(np.asarray(R)[1:, 1:]))


def is_entanglement_breaking(c: QubitChannel, tol: float = PSD_TOL) -> bool:
    """PPT test on the 2x2 Choi matrix, exact for qubit channels."""
    pt = c.choi.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)
    return bool(np.linalg.eigvalsh(pt).min() >= -tol)


def write_ptm_csv(path, times, channels) -> None:
    """Columns: t, R00..R33, bloch_volume."""
    header = ["t"] + [f"R{m}{n}" for m in range(4) for n in range(4)] + ["bloch_volume"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, c in zip(times, channels):
            R = pauli_transfer_matrix(c)
            w.writerow([repr(float(t))] + [repr(float(x)) for x in R.ravel()] + [repr(bloch_volume(R))])
