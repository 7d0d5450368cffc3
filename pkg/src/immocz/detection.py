"""
Receiver: root finding, RFMD / DiZeT penalties and majority-vote decoding.

For each candidate codebook i and sector k a detector returns the estimated
pair member (outer or inner) and a nonnegative penalty p[i, k].  Each sector
then votes for the codebook with the smallest penalty, and the codebook with
most votes gives the implicit bits; its row of estimates gives the explicit
bits.

All kernels below take a batch axis first so the Monte Carlo engine can push
thousands of received signals through at once; the single-signal functions
are thin wrappers over the same kernels and give bit-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codebook import Codebook, CodebookSet, ZeroPair, demap_zeros_to_bits, index_to_bits
from .errors import DegeneratePolynomialError, ParameterError, UndefinedAngleError

DETECTORS = ("rfmd", "dizet")
LEADING_COEFF_FLOOR = 1e-300
POLISH_STEPS = 2
TWO_PI = 2 * np.pi


# ---------------------------------------------------------------------------
# roots


@dataclass(frozen=True)
class RootSet:
    """Zeros of a received polynomial in canonical (angle, magnitude) order."""

    roots: np.ndarray
    leading_magnitude: float
    coeffs: np.ndarray

    @property
    def M(self) -> int:
        return len(self.roots)


def _canonical_order(roots: np.ndarray) -> np.ndarray:
    order = np.lexsort((np.abs(roots), np.angle(roots)), axis=-1)
    return np.take_along_axis(roots, order, axis=-1)


def _horner_with_derivative(Y: np.ndarray, z: np.ndarray):
    """Evaluate each row polynomial of ``Y`` and its derivative at ``z`` (T, M)."""
    value = np.zeros_like(z)
    deriv = np.zeros_like(z)
    for j in range(Y.shape[1] - 1, -1, -1):
        deriv = deriv * z + value
        value = value * z + Y[:, j : j + 1]
    return value, deriv


def _polish(Y: np.ndarray, roots: np.ndarray) -> np.ndarray:
    """
    Guarded Newton refinement of eigenvalue roots in extended precision.

    A step is kept only if it lowers |y(z)| and stays well inside the gap to
    the nearest other root, so clustered roots never merge.
    """
    M = roots.shape[1]
    if M == 1:
        return -Y[:, :1] / Y[:, 1:2]
    Yx = Y.astype(np.clongdouble)
    z = roots.astype(np.clongdouble)
    gaps = np.abs(roots[:, :, None] - roots[:, None, :])
    gaps[:, np.arange(M), np.arange(M)] = np.inf
    limit = 0.25 * gaps.min(axis=2)
    with np.errstate(all="ignore"):
        value, deriv = _horner_with_derivative(Yx, z)
        for _ in range(POLISH_STEPS):
            step = value / deriv
            cand = z - step
            cand_value, cand_deriv = _horner_with_derivative(Yx, cand)
            ok = np.isfinite(cand) & (np.abs(cand_value) < np.abs(value)) & (np.abs(step) < limit)
            z = np.where(ok, cand, z)
            value = np.where(ok, cand_value, value)
            deriv = np.where(ok, cand_deriv, deriv)
    return z.astype(complex)


def _roots_batch(Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Companion-matrix roots of each row of ``Y`` (ascending coefficients).

    Returns ``(roots, failed)``; rows whose leading coefficient vanished or
    whose eigenvalues are not finite are flagged and carry NaN roots.
    """
    T, n = Y.shape
    M = n - 1
    lead = Y[:, -1]
    scale = np.max(np.abs(Y), axis=1)
    failed = ~(np.abs(lead) > LEADING_COEFF_FLOOR * scale)
    if M == 0:
        return np.zeros((T, 0), dtype=complex), failed
    safe_lead = np.where(failed, 1.0, lead)
    comp = np.zeros((T, M, M), dtype=complex)
    comp[:, np.arange(1, M), np.arange(M - 1)] = 1
    comp[:, :, -1] = -Y[:, :-1] / safe_lead[:, None]
    comp[failed] = np.eye(M)
    with np.errstate(all="ignore"):
        roots = np.linalg.eigvals(comp)
    failed |= ~np.all(np.isfinite(roots), axis=1)
    roots = np.where(failed[:, None], 0, roots)
    good = ~failed
    if good.any():
        roots[good] = _polish(Y[good], roots[good])
    roots = _canonical_order(roots)
    roots[failed] = np.nan
    return roots, failed


def find_roots(y) -> RootSet:
    """Zeros of the polynomial with ascending coefficients ``y``."""
    y = np.asarray(y, dtype=complex).ravel()
    if y.size < 2:
        raise ParameterError("received signal needs at least two samples")
    roots, failed = _roots_batch(y[None, :])
    if failed[0]:
        raise DegeneratePolynomialError(
            f"leading coefficient {abs(y[-1]):.3e} vanished relative to max |y| = {np.max(np.abs(y)):.3e}"
        )
    return RootSet(roots[0], float(abs(y[-1])), y)


# ---------------------------------------------------------------------------
# sectors


def _sector_batch(roots: np.ndarray, thetas: np.ndarray, K: int) -> np.ndarray:
    """
    (T, M) roots, (B,) codebook phases -> (T, B, M) sector indices (0-based).

    Bins have width 2*pi/K and are centred on the codebook zero angles.  A
    root exactly on a boundary goes to the lower-index sector.
    """
    width = TWO_PI / K
    rel = np.mod(np.angle(roots)[:, None, :] - thetas[None, :, None], TWO_PI)
    sector = np.mod(np.ceil((rel - width / 2) / width), K).astype(np.intp)
    # the wrap-around boundary is shared by sector K-1 and sector 0
    sector[rel == TWO_PI - width / 2] = 0
    return sector


def sector_of(z: complex, book: Codebook) -> int:
    """1-based sector of ``book`` whose centre angle is nearest to arg(z)."""
    if z == 0:
        raise UndefinedAngleError("the origin has no sector")
    return int(_sector_batch(np.array([[z]], dtype=complex), np.array([book.theta]), book.K)[0, 0, 0]) + 1


# ---------------------------------------------------------------------------
# penalty kernels


def _distances(roots: np.ndarray, zeros: np.ndarray) -> np.ndarray:
    """(T, M) roots, (B, K) zeros -> (T, B, K, M) Euclidean distances."""
    return np.abs(roots[:, None, None, :] - zeros[None, :, :, None])


def _rfmd_kernel(roots, outer, inner, thetas):
    """Per-sector minimum distances; returns (d_out, d_in, empty), each (T, B, K)."""
    T, M = roots.shape
    B, K = outer.shape
    sectors = _sector_batch(roots, thetas, K)
    rows = np.arange(B)[None, :, None]
    # distance from each root to the pair of the sector it falls in
    near_out = np.abs(roots[:, None, :] - outer[rows, sectors])
    near_in = np.abs(roots[:, None, :] - inner[rows, sectors])
    d_out = np.full((T, B, K), np.inf)
    d_in = np.full((T, B, K), np.inf)
    for k in range(K):
        hit = sectors == k
        d_out[:, :, k] = np.where(hit, near_out, np.inf).min(axis=-1)
        d_in[:, :, k] = np.where(hit, near_in, np.inf).min(axis=-1)
    empty = np.isinf(d_out)
    if empty.any():
        t, b, k = np.nonzero(empty)
        d_out[t, b, k] = np.abs(roots[t] - outer[b, k][:, None]).min(axis=-1)
        d_in[t, b, k] = np.abs(roots[t] - inner[b, k][:, None]).min(axis=-1)
    return d_out, d_in, empty


def _product_last(a: np.ndarray) -> np.ndarray:
    # fixed left-to-right order so batched and per-book calls round alike
    out = a[..., 0].copy()
    for m in range(1, a.shape[-1]):
        out *= a[..., m]
    return out


def _dizet_kernel(roots, outer, inner, R):
    M = roots.shape[1]
    p_out = _product_last(_distances(roots, outer))
    p_in = R**M * _product_last(_distances(roots, inner))
    return p_out, p_in


def dizet_penalties(rootset: RootSet, pair: ZeroPair, R: float, M: int | None = None, route: str = "roots"):
    """
    Outer and inner DiZeT penalties of one zero pair.

        p_out = |prod_m (outer - r_m)|
        p_in  = R**M * |prod_m (inner - r_m)|

    ``route="evaluate"`` computes the same quantities as |Y(z)| / |y_M| by
    Horner evaluation of the received coefficients instead of the roots.
    """
    M = rootset.M if M is None else M
    if M != rootset.M:
        raise ParameterError(f"M={M} does not match {rootset.M} roots")
    if route == "roots":
        p_out, p_in = _dizet_kernel(
            rootset.roots[None, :], np.array([[pair.outer]]), np.array([[pair.inner]]), R
        )
        return float(p_out[0, 0, 0]), float(p_in[0, 0, 0])
    if route == "evaluate":
        poly = rootset.coeffs[::-1]
        lead = rootset.leading_magnitude
        p_out = abs(np.polyval(poly, pair.outer)) / lead
        p_in = R**M * abs(np.polyval(poly, pair.inner)) / lead
        return float(p_out), float(p_in)
    raise ParameterError(f"unknown DiZeT route {route!r}")


# ---------------------------------------------------------------------------
# per-codebook detectors


@dataclass
class ZeroEstimateMatrix:
    """Detected pair member per (codebook, sector): outer flag and value."""

    is_outer: np.ndarray
    values: np.ndarray

    def pattern(self) -> list[str]:
        """Rows as strings of 'o' (outer) / 'i' (inner)."""
        return ["".join("o" if f else "i" for f in row) for row in self.is_outer]


@dataclass
class DetectorRow:
    is_outer: np.ndarray
    values: np.ndarray
    penalties: np.ndarray
    empty_sectors: int = 0
    ties: int = 0


def _as_rootset(y) -> RootSet:
    return y if isinstance(y, RootSet) else find_roots(y)


def rfmd_detect(y, book: Codebook) -> DetectorRow:
    """Root-finding minimum-distance detection against one codebook.

    Per sector, the penalty is the smallest distance between a root in that
    sector and either member of the codebook pair.  A sector without roots
    falls back to all roots and is counted in ``empty_sectors``.
    """
    rs = _as_rootset(y)
    d_out, d_in, empty = _rfmd_kernel(rs.roots[None, :], book.outer[None, :], book.inner[None, :], np.array([book.theta]))
    d_out, d_in, empty = d_out[0, 0], d_in[0, 0], empty[0, 0]
    is_outer = d_out < d_in
    return DetectorRow(is_outer, np.where(is_outer, book.outer, book.inner), np.minimum(d_out, d_in), int(empty.sum()))


def _break_dizet_ties(p_out, p_in, rng) -> tuple[np.ndarray, int]:
    is_outer = p_out < p_in
    tied = np.argwhere(p_out == p_in)
    if len(tied) and rng is None:
        raise ParameterError("DiZeT tie needs a random generator")
    for idx in tied:
        is_outer[tuple(idx)] = rng.random() < 0.5
    return is_outer, len(tied)


def dizet_detect(y, book: Codebook, rng: np.random.Generator | None = None) -> DetectorRow:
    """Direct zero-testing detection against one codebook.

    Exact ties between the outer and inner penalty are settled by one fair
    coin from ``rng`` which picks the member (and its penalty) jointly.
    """
    rs = _as_rootset(y)
    p_out, p_in = _dizet_kernel(rs.roots[None, :], book.outer[None, :], book.inner[None, :], book.radius)
    p_out, p_in = p_out[0, 0], p_in[0, 0]
    is_outer, ties = _break_dizet_ties(p_out, p_in, rng)
    return DetectorRow(is_outer, np.where(is_outer, book.outer, book.inner), np.minimum(p_out, p_in), 0, ties)


@dataclass
class Diagnostics:
    detector_calls: int = 0
    empty_sectors: int = 0
    dizet_ties: int = 0


def build_matrices(y, cbs: CodebookSet, detector: str, rng: np.random.Generator | None = None):
    """Run one detector per codebook on a shared root set.

    Returns ``(A_hat, P, diagnostics)`` with P of shape (2**(N-K), K).
    """
    if detector not in DETECTORS:
        raise ParameterError(f"unknown detector {detector!r}")
    rs = _as_rootset(y)
    diag = Diagnostics()
    rows = []
    for book in cbs:
        row = rfmd_detect(rs, book) if detector == "rfmd" else dizet_detect(rs, book, rng)
        diag.detector_calls += 1
        diag.empty_sectors += row.empty_sectors
        diag.dizet_ties += row.ties
        rows.append(row)
    A_hat = ZeroEstimateMatrix(np.stack([r.is_outer for r in rows]), np.stack([r.values for r in rows]))
    P = np.stack([r.penalties for r in rows])
    return A_hat, P, diag


# ---------------------------------------------------------------------------
# voting and decoding


@dataclass(frozen=True)
class Vote:
    index: int
    votes: tuple[int, ...]
    sector_winners: tuple[int, ...]
    tie: bool


def _vote_counts(P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(T, B, K) penalties -> per-sector winners (T, K) and votes (T, B)."""
    T, B, K = P.shape
    winners = np.argmin(P, axis=1)
    votes = np.zeros((T, B), dtype=np.int64)
    np.add.at(votes, (np.arange(T)[:, None], winners), 1)
    return winners, votes


def _pick_winner(votes_row: np.ndarray, rng) -> tuple[int, bool]:
    tied = np.flatnonzero(votes_row == votes_row.max())
    if len(tied) == 1:
        return int(tied[0]), False
    if rng is None:
        raise ParameterError("vote tie needs a random generator")
    return int(tied[rng.integers(len(tied))]), True


def majority_vote(P, rng: np.random.Generator | None = None) -> Vote:
    """
    Sector-wise argmin followed by an argmax over vote counts.

    Equal penalties inside a sector go to the lowest codebook index; a tie
    in the vote count is broken uniformly at random with ``rng``.  Indices
    in the result are 1-based.
    """
    P = np.asarray(P, dtype=float)
    if P.ndim != 2:
        raise ParameterError(f"penalty matrix must be 2-D, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise ParameterError("penalty matrix has non-finite entries")
    winners, votes = _vote_counts(P[None])
    chosen, tie = _pick_winner(votes[0], rng)
    return Vote(chosen + 1, tuple(int(v) for v in votes[0]), tuple(int(w) + 1 for w in winners[0]), tie)


@dataclass(frozen=True)
class DetectionResult:
    """Decoder output.  Indices are 1-based; equality ignores diagnostics."""

    chosen_index: int
    votes: tuple[int, ...]
    tie_occurred: bool
    message: tuple[int, ...]
    sector_winners: tuple[int, ...]
    penalties: np.ndarray = field(compare=False, repr=False)
    estimates: ZeroEstimateMatrix = field(compare=False, repr=False)
    diagnostics: Diagnostics = field(compare=False, repr=False)

    @property
    def bits(self) -> str:
        return "".join(str(b) for b in self.message)


def decode(y, cbs: CodebookSet, detector: str, rng: np.random.Generator | None = None) -> DetectionResult:
    """Recover the N message bits from a received signal (or its RootSet)."""
    p = cbs.params
    rs = _as_rootset(y)
    if rs.M != p.num_roots:
        raise ParameterError(f"expected {p.num_roots} roots (K+L_ch-1), got {rs.M}")
    A_hat, P, diag = build_matrices(rs, cbs, detector, rng)
    vote = majority_vote(P, rng)
    implicit = index_to_bits(vote.index, p.implicit_bits)
    explicit = demap_zeros_to_bits(A_hat.is_outer[vote.index - 1], cbs.book(vote.index))
    message = tuple(int(b) for b in np.concatenate([implicit, explicit]))
    return DetectionResult(vote.index, vote.votes, vote.tie, message, vote.sector_winners, P, A_hat, diag)


# ---------------------------------------------------------------------------
# batched decoding for the simulator


@dataclass
class BatchDecision:
    messages: np.ndarray
    chosen: np.ndarray
    ties: np.ndarray
    empty_sectors: np.ndarray
    dizet_ties: np.ndarray
    failed: np.ndarray


def decode_batch(Y: np.ndarray, cbs: CodebookSet, detector: str, rngs) -> BatchDecision:
    """
    Decode a (T, K+L_ch) stack of received signals.

    ``rngs[t]`` is the generator of trial t; it is touched only when that
    trial hits a tie, in the same order as :func:`decode` would.
    """
    if detector not in DETECTORS:
        raise ParameterError(f"unknown detector {detector!r}")
    p = cbs.params
    T = Y.shape[0]
    roots, failed = _roots_batch(Y)
    roots = np.where(failed[:, None], 1.0, roots)

    empty_count = np.zeros(T, dtype=np.int64)
    tie_count = np.zeros(T, dtype=np.int64)
    if detector == "rfmd":
        first, second, empty = _rfmd_kernel(roots, cbs.outer, cbs.inner, cbs.thetas)
        is_outer = first < second
        empty_count = empty.sum(axis=(1, 2))
    else:
        first, second = _dizet_kernel(roots, cbs.outer, cbs.inner, p.R)
        is_outer = first < second
        for t in np.flatnonzero(np.any(first == second, axis=(1, 2)) & ~failed):
            is_outer[t], tie_count[t] = _break_dizet_ties(first[t], second[t], rngs[t])
    P = np.minimum(first, second)

    _, votes = _vote_counts(P)
    top = votes.max(axis=1, keepdims=True)
    chosen = np.argmax(votes, axis=1)
    tie = (votes == top).sum(axis=1) > 1
    for t in np.flatnonzero(tie & ~failed):
        chosen[t], _ = _pick_winner(votes[t], rngs[t])

    shifts = np.arange(p.implicit_bits - 1, -1, -1)
    implicit = (chosen[:, None] >> shifts[None, :]) & 1
    explicit = is_outer[np.arange(T), chosen]
    messages = np.concatenate([implicit, explicit], axis=1).astype(np.int8)
    return BatchDecision(messages, chosen + 1, tie & ~failed, empty_count, tie_count, failed)
