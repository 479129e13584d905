"""Choi echo estimators and the averaged subsystem purity.

The Choi echo of the probe channel with a pure environment ``psi`` equals the
purity of ``rho_E(t) = Tr_S[U (I/2 (x) |psi><psi|) U^dag]``; it is also the
fidelity of the environment after forward evolution, local depolarization of
the probe and backward evolution. Several estimators of its average over
Haar-random product environments are provided:

* ``exact``       closed resummation of the weighted Pauli-string sum
* ``exact_pauli`` literal enumeration of the 4**(L-1) strings
* ``design``      average over the 6**(L-1) products of Pauli eigenstates
* ``mc``          Monte-Carlo over random product environments
* ``single_env``  one fixed environment state
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field

import numpy as np

from .channel import choi_from_unitary, choi_purity, probe_first, propagator
from .spectra import EigenDecomposition
from .spinops import ProductState, haar_qubits, make_rng, pauli, pauli_action, product_kets

D_S = 2
MAX_PAULI_SUM_SITES = 8
MAX_DESIGN_SITES = 5
MAX_CONTRACTED_SITES = 12

ESTIMATORS = ("exact", "exact_pauli", "design", "mc", "single_env")

# Single-qubit 2-design: the six Pauli eigenstates.
_S = 1 / np.sqrt(2)
PAULI_EIGENSTATES = np.array(
    [[1, 0], [0, 1], [_S, _S], [_S, -_S], [_S, 1j * _S], [_S, -1j * _S]], dtype=complex
)


class EchoError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EchoSeries:
    times: np.ndarray
    values: np.ndarray
    estimator: str
    std_error: np.ndarray | None = None
    seed: object = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise EchoError("times must be strictly ascending")
        if np.any(self.values < 1 / D_S**2 - 1e-9) or np.any(self.values > 1 + 1e-9):
            raise EchoError("echo values outside [1/4, 1]")

    def time_average(self) -> float:
        return time_average(self.times, self.values)


@dataclass(frozen=True, eq=False)
class PuritySeries:
    times: np.ndarray
    values: np.ndarray
    N: int
    seed: object = None

    def __post_init__(self):
        if np.any(self.values < 0.5 - 1e-9) or np.any(self.values > 1 + 1e-9):
            raise EchoError("qubit purity outside [1/2, 1]")


def time_grid(T: float, dt: float) -> np.ndarray:
    if T <= 0 or dt <= 0:
        raise ValueError("T and dt must be positive")
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * T:
        raise ValueError(f"T={T} is not a multiple of dt={dt}")
    return np.linspace(0.0, T, n + 1)


def time_average(times, values) -> float:
    """Trapezoidal (1/T) int_0^T values dt."""
    times = np.asarray(times, dtype=float)
    return float(np.trapezoid(values, times) / (times[-1] - times[0]))


def _n_sites(eig: EigenDecomposition) -> int:
    n = eig.dim
    L = n.bit_length() - 1
    if 2**L != n:
        raise EchoError(f"dimension {n} is not a power of two; pass a full-space decomposition")
    return L


def _probe_vectors(eig: EigenDecomposition, probe_site: int) -> np.ndarray:
    if eig.eigenvectors is None:
        raise EchoError("dynamics need eigenvectors")
    V = probe_first(eig.eigenvectors, probe_site) if probe_site != 1 else eig.eigenvectors
    return V.astype(complex)


def _as_times(t):
    arr = np.atleast_1d(np.asarray(t, dtype=float))
    return arr, np.ndim(t) == 0


# --------------------------------------------------------------------------
# single environment


def _env_ket(psi_E) -> np.ndarray:
    if isinstance(psi_E, ProductState):
        return psi_E.amplitudes
    psi = np.asarray(psi_E, dtype=complex)
    if psi.ndim != 1:
        raise EchoError("the echo identity needs a pure environment state (ket)")
    return psi


def echo_protocol(U: np.ndarray, psi_E) -> float:
    """Forward U, depolarize the probe, backward U^dag, overlap with psi_E."""
    psi = _env_ket(psi_E)
    n = U.shape[0]
    de = n // 2
    rho = np.kron(np.eye(2) / D_S, np.outer(psi, psi.conj()))
    rho = U @ rho @ U.conj().T
    rho_env = np.einsum("aeaf->ef", rho.reshape(2, de, 2, de))
    rho = U.conj().T @ np.kron(np.eye(2) / D_S, rho_env) @ U
    back = np.einsum("aeaf->ef", rho.reshape(2, de, 2, de))
    return float(np.real(psi.conj() @ back @ psi))


def env_purity(U: np.ndarray, psi_E) -> float:
    """Tr[rho_E(t)^2] with rho_E(t) = Tr_S[U (I/2 (x) |psi><psi|) U^dag]."""
    psi = _env_ket(psi_E)
    n = U.shape[0]
    de = n // 2
    phi = np.stack([U[:, :de] @ psi, U[:, de:] @ psi])  # (s, a*de + e)
    v = phi.reshape(4, de)
    G = v @ v.conj().T
    return float(np.sum(np.abs(G) ** 2)) / D_S**2


def choi_echo_single_env(eig, t: float, psi_E, probe_site: int = 1, verify: bool = False) -> float:
    """Choi echo for one pure environment.

    With ``verify=True`` the depolarizing protocol, the environment purity and
    the Choi-state purity are all evaluated and must agree to 1e-10.
    """
    U = probe_first(propagator(eig, t), probe_site)
    value = env_purity(U, psi_E)
    if verify:
        proto = echo_protocol(U, psi_E)
        direct = choi_purity(choi_from_unitary(U, _env_ket(psi_E)))
        if max(abs(proto - value), abs(direct - value)) > 1e-10:
            raise EchoError(
                f"echo paths disagree: protocol={proto!r} env={value!r} choi={direct!r}"
            )
    return value


def env_purities(eig, times, env_kets, probe_site: int = 1) -> np.ndarray:
    """Batched Choi echo, shape ``(len(times), n_env)``.

    ``env_kets`` has shape ``(n_env, 2**(L-1))``; the evolution is done in
    the eigenbasis so each time point costs one matrix product.
    """
    V = _probe_vectors(eig, probe_site)
    n = V.shape[0]
    de = n // 2
    kets = np.asarray(env_kets, dtype=complex).reshape(-1, de)
    M = kets.shape[0]
    X = np.zeros((2, de, 2, M), dtype=complex)
    X[0, :, 0, :] = kets.T
    X[1, :, 1, :] = kets.T
    C = V.conj().T @ X.reshape(n, 2 * M)
    out = np.empty((len(times), M))
    for k, t in enumerate(np.atleast_1d(times)):
        phi = V @ (np.exp(-1j * eig.eigenvalues * t)[:, None] * C)
        v = phi.reshape(2, de, 2, M).transpose(3, 2, 0, 1).reshape(M, 4, de)
        G = v @ v.conj().transpose(0, 2, 1)
        out[k] = np.sum(np.abs(G) ** 2, axis=(1, 2)) / D_S**2
    return out


# --------------------------------------------------------------------------
# Haar average over product environments


def _env_pauli_strings(L: int):
    for alpha in itertools.product("0xyz", repeat=L - 1):
        yield ("0",) + alpha, sum(a != "0" for a in alpha)


def _pauli_sum_at(U: np.ndarray, L: int) -> float:
    n = 2**L
    de = n // 2
    Ud = U.conj().T
    total = 0.0
    for labels, w in _env_pauli_strings(L):
        perm, phase = pauli_action(labels)
        sU = np.empty(Ud.shape, dtype=complex)
        sU[perm] = phase[:, None] * Ud
        X = U @ sU
        red = np.einsum("aeaf->ef", X.reshape(2, de, 2, de))
        total += np.sum(np.abs(red) ** 2) / 3.0**w
    return total / 4.0**L


def _subset_norms(Y: np.ndarray, K: int, m: int) -> np.ndarray:
    """sum over subsets A of the last ``m`` sites of ||Tr_A Y||_F^2, batched.

    ``Y`` has shape ``(b, K * 2**m, K * 2**m)``; the first factor of
    dimension ``K`` is never traced.
    """
    b = Y.shape[0]
    if m == 0:
        return np.einsum("bij,bij->b", Y.real, Y.real) + np.einsum("bij,bij->b", Y.imag, Y.imag)
    R = 2 ** (m - 1)
    Y7 = Y.reshape(b, K, 2, R, K, 2, R)
    traced = (Y7[:, :, 0, :, :, 0, :] + Y7[:, :, 1, :, :, 1, :]).reshape(b, K * R, K * R)
    return _subset_norms(Y, 2 * K, m - 1) + _subset_norms(traced, K, m - 1)


def _contracted_at(V, lam, times, L) -> np.ndarray:
    """Resummed weighted Pauli sum.

    Summing sigma_a Q sigma_a with weights 3**-w over the environment strings
    acts on each environment site as Y -> (2/3)(Y + Tr(Y) I), which leaves
    1/4 + 4**-L / 2 * sum_k Tr[Q_k N(Q_k)] with Q_k = U^dag sigma_k^(1) U.
    Expanding the product of local maps, Tr[Q N(Q)] is (2/3)**(L-1) times
    the sum of ||Tr_A Q||^2 over all subsets A of environment sites.
    """
    n = 2**L
    Vd = V.conj().T
    Vt = np.ascontiguousarray(V.T)
    sig = [Vd @ np.kron(pauli(k), np.eye(n // 2)) @ V for k in "xyz"]
    chunk = max(1, 2**22 // n**2)
    out = np.empty(len(times))
    for start in range(0, len(times), chunk):
        ts = times[start : start + chunk]
        ph = np.exp(1j * np.outer(ts, lam))  # (b, n)
        acc = np.zeros(len(ts))
        for s in sig:
            b = len(ts)
            Mt = (ph[:, :, None] * s * ph.conj()[:, None, :]).reshape(b * n, n)
            # Q_i = V M_i V^dag; only Tr[Q N(Q)] is needed and it is invariant
            # under transposing Q, so Q_i^T = (M_i V^dag)^T V^T is formed instead.
            A = (Mt @ Vd).reshape(b, n, n).transpose(0, 2, 1).reshape(b * n, n)
            Q = (A @ Vt).reshape(b, n, n)
            acc += _subset_norms(Q, 2, L - 1)
        out[start : start + len(ts)] = 0.25 + (2 / 3) ** (L - 1) * acc / (2 * 4.0**L)
    return out


def haar_choi_echo_exact(eig, t, probe_site: int = 1, method: str = "contracted",
                         max_sites: int | None = None):
    """Average Choi echo over Haar-random product environments, exactly.

    ``method='enumerate'`` sums the 4**(L-1) weighted Pauli strings one by one;
    ``method='contracted'`` evaluates the same sum in closed form.
    """
    L = _n_sites(eig)
    times, scalar = _as_times(t)
    if method == "enumerate":
        limit = MAX_PAULI_SUM_SITES if max_sites is None else max_sites
        if L > limit:
            raise EchoError(f"Pauli sum over 4**{L - 1} strings exceeds L<={limit}; use the 'mc' estimator")
        V = _probe_vectors(eig, probe_site)
        vals = np.array([
            _pauli_sum_at((V * np.exp(-1j * eig.eigenvalues * tt)) @ V.conj().T, L) for tt in times
        ])
    elif method == "contracted":
        limit = MAX_CONTRACTED_SITES if max_sites is None else max_sites
        if L > limit:
            raise EchoError(f"L={L} exceeds the exact-sum limit {limit}; use the 'mc' estimator")
        vals = _contracted_at(_probe_vectors(eig, probe_site), eig.eigenvalues, times, L)
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(vals[0]) if scalar else vals


def design_env_kets(L: int) -> np.ndarray:
    """All 6**(L-1) products of single-qubit Pauli eigenstates."""
    combos = np.array(list(itertools.product(range(6), repeat=L - 1)))
    return product_kets(PAULI_EIGENSTATES[combos])


def haar_choi_echo_design(eig, t, probe_site: int = 1):
    """Exact Haar average from the six-state 2-design on each environment site."""
    L = _n_sites(eig)
    if L > MAX_DESIGN_SITES:
        raise EchoError(f"design enumeration limited to L<={MAX_DESIGN_SITES}")
    times, scalar = _as_times(t)
    vals = env_purities(eig, times, design_env_kets(L), probe_site).mean(axis=1)
    return float(vals[0]) if scalar else vals


def random_env_kets(L: int, M: int, seed) -> np.ndarray:
    rng = make_rng(seed)
    sites = haar_qubits(M * (L - 1), rng).reshape(M, L - 1, 2)
    return product_kets(sites)


def haar_choi_echo_mc(eig, t, M: int, seed, probe_site: int = 1):
    """Sample mean and standard error over ``M`` random product environments."""
    if M < 2:
        raise ValueError("M must be >= 2")
    L = _n_sites(eig)
    times, scalar = _as_times(t)
    vals = env_purities(eig, times, random_env_kets(L, M, seed), probe_site)
    mean = vals.mean(axis=1)
    se = vals.std(axis=1, ddof=1) / np.sqrt(M)
    if scalar:
        return float(mean[0]), float(se[0])
    return mean, se


# --------------------------------------------------------------------------
# series and time averages


def choi_echo_series(eig, times, estimator: str = "exact", *, probe_site: int = 1,
                     M: int = 200, seed=0, psi_E=None) -> EchoSeries:
    times = np.asarray(times, dtype=float)
    se = None
    used_seed = None
    if estimator == "exact":
        vals = haar_choi_echo_exact(eig, times, probe_site)
    elif estimator == "exact_pauli":
        vals = haar_choi_echo_exact(eig, times, probe_site, method="enumerate")
    elif estimator == "design":
        vals = haar_choi_echo_design(eig, times, probe_site)
    elif estimator == "mc":
        vals, se = haar_choi_echo_mc(eig, times, M, seed, probe_site)
        used_seed = seed
    elif estimator == "single_env":
        if psi_E is None:
            psi_E = random_env_kets(_n_sites(eig), 1, seed)[0]
            used_seed = seed
        vals = env_purities(eig, times, _env_ket(psi_E)[None, :], probe_site)[:, 0]
    else:
        raise ValueError(f"unknown estimator {estimator!r}; choose from {ESTIMATORS}")
    meta = {"probe_site": probe_site}
    if estimator == "mc":
        meta["M"] = M
    return EchoSeries(times, np.asarray(vals), estimator, se, used_seed, meta)


def time_averaged_choi_echo(eig, T: float = 100.0, dt: float = 0.1, estimator: str = "exact",
                            **kwargs) -> float:
    """(1/T) int_0^T of the chosen echo estimator, trapezoidal on a grid of step dt."""
    return choi_echo_series(eig, time_grid(T, dt), estimator, **kwargs).time_average()


def averaged_subsystem_purity(eig, N: int = 50, T: float = 100.0, dt: float = 0.1, seed=0,
                              probe_site: int = 1):
    """Mean over N random product states of the time-averaged probe purity.

    Returns ``(P_bar, PuritySeries)``; the series holds the mean purity at
    each time.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    L = _n_sites(eig)
    V = _probe_vectors(eig, probe_site)
    n = V.shape[0]
    de = n // 2
    rng = make_rng(seed)
    kets = product_kets(haar_qubits(N * L, rng).reshape(N, L, 2))
    C = V.conj().T @ kets.T
    times = time_grid(T, dt)
    pur = np.empty((len(times), N))
    for k, t in enumerate(times):
        phi = (V @ (np.exp(-1j * eig.eigenvalues * t)[:, None] * C)).reshape(2, de, N)
        rho = np.einsum("aem,bem->mab", phi, phi.conj())
        pur[k] = np.real(np.einsum("mab,mba->m", rho, rho))
    series = PuritySeries(times, pur.mean(axis=1), N, seed)
    return time_average(times, series.values), series


def write_series_csv(path, series) -> None:
    """Columns: t, value, estimator, std_error, seed."""
    estimator = getattr(series, "estimator", "purity")
    se = getattr(series, "std_error", None)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "value", "estimator", "std_error", "seed"])
        for k, (t, v) in enumerate(zip(series.times, series.values)):
            w.writerow([
                repr(float(t)), repr(float(v)), estimator,
                "" if se is None else repr(float(se[k])),
                "" if series.seed is None else series.seed,
            ])
