"""
IM-MOCZ codebooks and the transmit mapping.

A base MOCZ codebook places K conjugate-reciprocal zero pairs at the angles
2*pi*(k-1)/K, outer zero on radius R and inner zero on radius 1/R.  The
2**(N-K) index-modulation codebooks are rotations of the base one by

    theta_i = 2*pi*(i-1) / (K * 2**(N-K)),    i = 1, ..., 2**(N-K)

so that together they tile the circle uniformly.  The first N-K message bits
select the codebook (MSB first), the last K bits pick the outer (1) or inner
(0) member of each pair.

Polynomial coefficients are always stored in ascending power order, so that
``x[0]`` is the constant term and time-domain convolution is polynomial
multiplication.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import CodebookIndexError, DegenerateInputError, ParameterError

MAX_IMPLICIT_BITS = 24
DEFAULT_RADIUS = 1.1974


@dataclass(frozen=True)
class SystemParams:
    """Link parameters.

    N     : total message bits
    K     : bits carried explicitly by zeros (N-K select the codebook)
    L_ch  : number of channel taps
    R     : radius of the outer codebook zeros
    """

    N: int
    K: int
    L_ch: int
    R: float = DEFAULT_RADIUS

    def __post_init__(self):
        for name in ("N", "K", "L_ch"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ParameterError(f"{name} must be an integer, got {value!r}")
        if not 1 <= self.K <= self.N:
            raise ParameterError(f"need 1 <= K <= N, got N={self.N}, K={self.K}")
        if self.L_ch < 1:
            raise ParameterError(f"L_ch must be >= 1, got {self.L_ch}")
        if not (np.isfinite(self.R) and self.R > 1):
            raise ParameterError(f"R must be a finite number > 1, got {self.R}")
        if self.N - self.K > MAX_IMPLICIT_BITS:
            raise ParameterError(
                f"N-K = {self.N - self.K} implicit bits would need "
                f"2**{self.N - self.K} codebooks (limit 2**{MAX_IMPLICIT_BITS})"
            )

    @property
    def implicit_bits(self) -> int:
        return self.N - self.K

    @property
    def num_codebooks(self) -> int:
        return 1 << (self.N - self.K)

    @property
    def num_roots(self) -> int:
        """Degree of the received polynomial, K + L_ch - 1."""
        return self.K + self.L_ch - 1

    @property
    def energy(self) -> float:
        """Total transmit energy, N + L_ch."""
        return float(self.N + self.L_ch)


@dataclass(frozen=True)
class ZeroPair:
    outer: complex
    inner: complex

    @classmethod
    def from_outer(cls, outer: complex) -> "ZeroPair":
        outer = complex(outer)
        return cls(outer, 1 / outer.conjugate())


@dataclass(frozen=True)
class Codebook:
    """One rotated codebook; ``index`` is 1-based as in the literature."""

    index: int
    theta: float
    pairs: tuple[ZeroPair, ...]
    radius: float

    @property
    def K(self) -> int:
        return len(self.pairs)

    @cached_property
    def outer(self) -> np.ndarray:
        return np.array([p.outer for p in self.pairs], dtype=complex)

    @cached_property
    def inner(self) -> np.ndarray:
        return np.array([p.inner for p in self.pairs], dtype=complex)

    @cached_property
    def centers(self) -> np.ndarray:
        """Sector center angles in radians."""
        return self.theta + 2 * np.pi * np.arange(self.K) / self.K


@dataclass(frozen=True)
class CodebookSet:
    params: SystemParams
    books: tuple[Codebook, ...]

    def __len__(self) -> int:
        return len(self.books)

    def __iter__(self):
        return iter(self.books)

    def book(self, index: int) -> Codebook:
        """Codebook by its 1-based index."""
        if not 1 <= index <= len(self.books):
            raise CodebookIndexError(f"codebook index {index} outside [1, {len(self.books)}]")
        return self.books[index - 1]

    @cached_property
    def thetas(self) -> np.ndarray:
        return np.array([b.theta for b in self.books])

    @cached_property
    def outer(self) -> np.ndarray:
        """(B, K) outer zeros of every codebook."""
        return np.stack([b.outer for b in self.books])

    @cached_property
    def inner(self) -> np.ndarray:
        """(B, K) inner zeros of every codebook."""
        return np.stack([b.inner for b in self.books])


def codebook_phase(index: int, params: SystemParams) -> float:
    return 2 * np.pi * (index - 1) / (params.K * params.num_codebooks)


def build_codebook_set(params: SystemParams) -> CodebookSet:
    """Base codebook plus its 2**(N-K) - 1 rotations."""
    K = params.K
    base_angles = 2 * np.pi * np.arange(K) / K
    books = []
    for i in range(1, params.num_codebooks + 1):
        theta = codebook_phase(i, params)
        outer = params.R * np.exp(1j * (base_angles + theta))
        books.append(Codebook(i, theta, tuple(ZeroPair.from_outer(z) for z in outer), params.R))
    return CodebookSet(params, tuple(books))


def _as_bits(bits, length: int | None = None) -> np.ndarray:
    arr = np.asarray(bits)
    if arr.ndim != 1:
        raise ParameterError(f"bit vector must be one-dimensional, got shape {arr.shape}")
    if length is not None and arr.size != length:
        raise ParameterError(f"expected {length} bits, got {arr.size}")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ParameterError(f"bits must be 0 or 1, got {arr.tolist()}")
    return arr.astype(np.int8)


def index_to_bits(index: int, width: int) -> np.ndarray:
    """Binary expansion of ``index - 1``, most significant bit first."""
    if width < 0:
        raise ParameterError(f"width must be >= 0, got {width}")
    if not 1 <= index <= (1 << width):
        raise CodebookIndexError(f"codebook index {index} outside [1, {1 << width}]")
    shifts = np.arange(width - 1, -1, -1)
    return ((index - 1) >> shifts & 1).astype(np.int8)


def bits_to_index(bits, width: int | None = None) -> int:
    """Inverse of :func:`index_to_bits`."""
    arr = _as_bits(bits, width)
    value = 0
    for b in arr:
        value = (value << 1) | int(b)
    return value + 1


def select_zeros(explicit_bits, book: Codebook) -> np.ndarray:
    """Outer zero for a 1, inner zero for a 0, one per sector."""
    bits = _as_bits(explicit_bits, book.K)
    return np.where(bits == 1, book.outer, book.inner)


def zeros_to_coefficients(zeros) -> np.ndarray:
    """
    Expand prod_k (z - zeros[k]) into ascending-power coefficients.

    Each step multiplies the running polynomial by the first-order factor
    [-zero, 1]; the result is monic of degree len(zeros).
    """
    zeros = np.asarray(zeros, dtype=complex).ravel()
    if zeros.size > 1:
        gaps = np.abs(zeros[:, None] - zeros[None, :])
        np.fill_diagonal(gaps, np.inf)
        if np.min(gaps) == 0:
            warnings.warn("repeated zero in zeros_to_coefficients", RuntimeWarning, stacklevel=2)
    return _expand_batch(zeros[None, :])[0]


def _expand_batch(zeros: np.ndarray) -> np.ndarray:
    """(T, K) zeros -> (T, K+1) monic coefficients, ascending."""
    T, K = zeros.shape
    coeffs = np.zeros((T, K + 1), dtype=complex)
    coeffs[:, 0] = 1
    for k in range(K):
        z = zeros[:, k : k + 1]
        shifted = coeffs[:, : k + 1].copy()
        coeffs[:, 1 : k + 2] = shifted
        coeffs[:, 0] = 0
        coeffs[:, : k + 1] -= z * shifted
    return coeffs


def normalize_energy(x, params: SystemParams) -> np.ndarray:
    """Scale ``x`` by a positive real so that sum |x|^2 = N + L_ch."""
    x = np.asarray(x, dtype=complex)
    energy = np.sum(np.abs(x) ** 2)
    if energy == 0:
        raise DegenerateInputError("cannot normalize an all-zero coefficient vector")
    scale = np.sqrt(params.energy / energy)
    if scale == 1.0:
        return x.copy()
    return x * scale


def _normalize_batch(x: np.ndarray, params: SystemParams) -> np.ndarray:
    energy = np.sum(np.abs(x) ** 2, axis=1, keepdims=True)
    return x * np.sqrt(params.energy / energy)


def encode(message, cbs: CodebookSet) -> np.ndarray:
    """Message bits -> energy-normalized transmit coefficients (length K+1)."""
    p = cbs.params
    bits = _as_bits(message, p.N)
    book = cbs.book(bits_to_index(bits[: p.implicit_bits], p.implicit_bits))
    zeros = select_zeros(bits[p.implicit_bits :], book)
    return normalize_energy(zeros_to_coefficients(zeros), p)


def encode_batch(messages: np.ndarray, cbs: CodebookSet) -> np.ndarray:
    """Vectorized :func:`encode` over a (T, N) array of message bits."""
    p = cbs.params
    messages = np.asarray(messages)
    weights = 1 << np.arange(p.implicit_bits - 1, -1, -1)
    book_rows = messages[:, : p.implicit_bits] @ weights if p.implicit_bits else np.zeros(len(messages), int)
    explicit = messages[:, p.implicit_bits :] == 1
    zeros = np.where(explicit, cbs.outer[book_rows], cbs.inner[book_rows])
    return _normalize_batch(_expand_batch(zeros), p)


def demap_zeros_to_bits(is_outer, book: Codebook | None = None) -> np.ndarray:
    """
    Standard MOCZ demapping of one detected row: outer member -> 1, inner -> 0.

    ``is_outer`` holds one flag per sector.  The codebook is only used to
    check the row length.
    """
    flags = np.asarray(is_outer, dtype=bool).ravel()
    if book is not None and flags.size != book.K:
        raise ParameterError(f"expected {book.K} detected zeros, got {flags.size}")
    return flags.astype(np.int8)
