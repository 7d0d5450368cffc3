"""Index-modulated modulation on conjugate-reciprocal zeros (IM-MOCZ)."""

from .channel import add_awgn, convolve, noise_variance, sample_channel
from .codebook import (
    Codebook,
    CodebookSet,
    SystemParams,
    ZeroPair,
    bits_to_index,
    build_codebook_set,
    demap_zeros_to_bits,
    encode,
    index_to_bits,
    normalize_energy,
    select_zeros,
    zeros_to_coefficients,
)
from .detection import (
    DetectionResult,
    build_matrices,
    decode,
    dizet_detect,
    dizet_penalties,
    find_roots,
    majority_vote,
    rfmd_detect,
    sector_of,
)

__version__ = "0.1.0"
