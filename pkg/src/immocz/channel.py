"""
Multipath channel, AWGN and the Eb/N0 bookkeeping.

Channel taps are i.i.d. circularly-symmetric complex Gaussian with variance
1/L_ch each (flat power delay profile, unit energy in expectation).  Complex
Gaussians are drawn as ``(g.standard_normal(n) + 1j * g.standard_normal(n))``
scaled to the target variance, real part first, from a ``numpy.random.Generator``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import SystemParams
from .errors import ParameterError

SCHEMES = ("mocz", "im-mocz")
EBN0_CONVENTIONS = ("paper", "per-information-bit")


@dataclass(frozen=True)
class NoiseSpec:
    ebn0_db: float
    sigma2: float


def complex_normal(rng: np.random.Generator, size, variance: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples of the given variance."""
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return np.sqrt(variance / 2) * (re + 1j * im)


def sample_channel(params: SystemParams, rng: np.random.Generator, normalization: str = "expectation") -> np.ndarray:
    """
    Draw L_ch Rayleigh taps.

    ``normalization="per-realization"`` rescales each draw to unit energy
    instead of relying on the expectation.
    """
    taps = complex_normal(rng, params.L_ch, 1.0 / params.L_ch)
    if normalization == "expectation":
        return taps
    if normalization == "per-realization":
        return taps / np.linalg.norm(taps)
    raise ParameterError(f"unknown channel normalization {normalization!r}")


def convolve(x, h) -> np.ndarray:
    """Full linear convolution, i.e. the coefficients of X(z) H(z)."""
    return np.convolve(np.asarray(x, dtype=complex), np.asarray(h, dtype=complex))


def convolve_batch(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Row-wise full convolution of (T, K+1) with (T, L) arrays."""
    T, n = x.shape
    L = h.shape[1]
    y = np.zeros((T, n + L - 1), dtype=complex)
    for l in range(L):
        y[:, l : l + n] += x * h[:, l : l + 1]
    return y


def noise_variance(params: SystemParams, scheme: str, ebn0_db: float, convention: str = "paper") -> NoiseSpec:
    """
    Per-sample complex noise variance N0 for an Eb/N0 operating point.

    The transmit energy is N + L_ch for both schemes, so
    ``N0 = (N + L_ch) / (D * 10**(ebn0_db/10))`` with D = N for MOCZ and
    D = K for IM-MOCZ.  ``convention="per-information-bit"`` uses D = N
    for IM-MOCZ as well.
    """
    if scheme not in SCHEMES:
        raise ParameterError(f"unknown scheme {scheme!r}")
    if convention not in EBN0_CONVENTIONS:
        raise ParameterError(f"unknown Eb/N0 convention {convention!r}")
    if not np.isfinite(ebn0_db):
        raise ParameterError(f"Eb/N0 must be finite, got {ebn0_db}")
    if scheme == "mocz" or convention == "per-information-bit":
        bits = params.N
    else:
        bits = params.K
    sigma2 = params.energy / (bits * 10 ** (ebn0_db / 10))
    return NoiseSpec(float(ebn0_db), float(sigma2))


def add_awgn(y, spec: NoiseSpec | float, rng: np.random.Generator) -> np.ndarray:
    sigma2 = spec.sigma2 if isinstance(spec, NoiseSpec) else float(spec)
    if sigma2 < 0:
        raise ParameterError(f"noise variance must be >= 0, got {sigma2}")
    y = np.asarray(y, dtype=complex)
    noise = complex_normal(rng, y.shape, sigma2)
    if sigma2 == 0:
        return y.copy()
    return y + noise
