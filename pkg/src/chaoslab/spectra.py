"""Eigendecomposition and level-spacing-ratio statistics."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.integrate import quad

from .spinops import make_rng


class SpectrumError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.eigenvalues.size


def eigh(H, *, vectors: bool = True, atol: float = 1e-12) -> EigenDecomposition:
    """Ascending eigendecomposition of a Hermitian matrix.

    With ``vectors=False`` only the spectrum is computed.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise SpectrumError(f"expected a square matrix, got shape {H.shape}")
    scale = max(1.0, float(np.max(np.abs(H)))) if H.size else 1.0
    if np.max(np.abs(H - H.conj().T), initial=0.0) > atol * scale:
        raise SpectrumError("matrix is not Hermitian")
    if np.iscomplexobj(H) and not np.any(H.imag):
        H = H.real  # real symmetric: real eigenvectors, cheaper products downstream
    if vectors:
        w, v = scipy.linalg.eigh(H)
        return EigenDecomposition(w, v)
    return EigenDecomposition(scipy.linalg.eigvalsh(H))


@dataclass(frozen=True, eq=False)
class SpectrumStatistics:
    ratios: np.ndarray
    mean_r: float
    n_levels_used: int
    trim_fraction: float
    n_degenerate: int = 0


def spacing_ratios(E, trim_fraction: float = 0.05) -> SpectrumStatistics:
    """Ratios min(s_n, s_{n-1}) / max(s_n, s_{n-1}) of consecutive spacings.

    ``floor(trim_fraction * N)`` levels are dropped from each spectral edge.
    Pairs whose larger spacing is below ``1e-12`` times the spectral range
    are degenerate; they are discarded and counted in ``n_degenerate``.
    """
    if not 0 <= trim_fraction < 0.5:
        raise SpectrumError("trim_fraction must lie in [0, 0.5)")
    E = np.sort(np.asarray(E, dtype=float))
    cut = int(np.floor(trim_fraction * E.size))
    if cut:
        E = E[cut:-cut]
    if E.size < 3:
        raise SpectrumError(f"need at least 3 levels after trimming, have {E.size}")
    s = np.diff(E)
    lo = np.minimum(s[1:], s[:-1])
    hi = np.maximum(s[1:], s[:-1])
    keep = hi >= 1e-12 * (E[-1] - E[0])
    if not np.any(keep):
        raise SpectrumError("all spacings are degenerate")
    r = lo[keep] / hi[keep]
    return SpectrumStatistics(
        ratios=r,
        mean_r=float(r.mean()),
        n_levels_used=int(E.size),
        trim_fraction=trim_fraction,
        n_degenerate=int((~keep).sum()),
    )


POISSON_MEAN_R = 2 * np.log(2) - 1
GOE_SURMISE_NORM = 27 / 4


def surmise_pdf(kind: str, r):
    """Ratio distribution on [0, 1] for Poisson or GOE spectra.

    The GOE form is the Wigner-like surmise folded onto [0, 1], normalized
    to unit integral there.
    """
    r = np.asarray(r, dtype=float)
    if np.any((r < 0) | (r > 1)):
        raise SpectrumError("ratio must lie in [0, 1]")
    kind = kind.lower()
    if kind == "poisson":
        out = 2.0 / (1.0 + r) ** 2
    elif kind == "goe":
        out = GOE_SURMISE_NORM * (r + r**2) / (1.0 + r + r**2) ** 2.5
    else:
        raise ValueError(f"unknown surmise kind {kind!r}")
    return out if out.ndim else float(out)


def histogram_vs_surmise(ratios, kind: str, n_bins: int = 20):
    """Density histogram of ``ratios`` on [0, 1] against a surmise.

    Returns ``(centers, empirical, surmise, l1)`` where ``l1`` is the
    bin-width weighted absolute difference.
    """
    ratios = np.asarray(ratios)
    if ratios.size < 100:
        raise SpectrumError("need at least 100 ratios for a histogram")
    empirical, edges = np.histogram(ratios, bins=n_bins, range=(0.0, 1.0), density=True)
    centers = 0.5 * (edges[1:] + edges[:-1])
    width = edges[1] - edges[0]
    surmise = np.array([quad(lambda x: surmise_pdf(kind, x), a, b)[0] for a, b in zip(edges[:-1], edges[1:])]) / width
    l1 = float(np.sum(np.abs(empirical - surmise)) * width)
    return centers, empirical, surmise, l1


def sample_goe_mean_r(dim: int, n_matrices: int, seed, trim_fraction: float = 0.0) -> float:
    """Mean ratio over GOE matrices (A + A^T)/2 with standard normal A."""
    if dim < 100:
        raise SpectrumError("dim must be >= 100")
    return float(sample_goe_ratios(dim, n_matrices, seed, trim_fraction).mean())


def sample_goe_ratios(dim: int, n_matrices: int, seed, trim_fraction: float = 0.0) -> np.ndarray:
    rng = make_rng(seed)
    out = []
    for _ in range(n_matrices):
        a = rng.standard_normal((dim, dim))
        out.append(spacing_ratios(scipy.linalg.eigvalsh((a + a.T) / 2), trim_fraction).ratios)
    return np.concatenate(out)


def poisson_ratios(n: int, seed) -> np.ndarray:
    """Ratios from ``n`` i.i.d. exponential spacings."""
    s = make_rng(seed).exponential(size=n + 1)
    return spacing_ratios(np.concatenate([[0.0], np.cumsum(s)]), 0.0).ratios


def write_histogram_csv(path, ratios, n_bins: int = 20) -> None:
    """Columns: bin_center, empirical, poisson, goe."""
    centers, emp, pois, _ = histogram_vs_surmise(ratios, "poisson", n_bins)
    _, _, goe, _ = histogram_vs_surmise(ratios, "goe", n_bins)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_center", "empirical", "poisson", "goe"])
        for row in zip(centers, emp, pois, goe):
            w.writerow([repr(float(x)) for x in row])
