"""Two-step information reconciliation for CV-QKD.

Stage 1 decodes short low-rate frames over the multidimensional virtual
channel and keeps only the highest-confidence fraction; stage 2 removes
the residual errors of the concatenated accepted bits with one long
high-rate syndrome exchange. The package also provides the secret-key-rate
calculus showing when the combined efficiency exceeds 1.
"""

from . import channel, cli, ldpc, multidim, protocol, skr, wire
from .channel import LinkParams, effective_snr, frame_rng, transmit
from .ldpc import LdpcCode, build_protograph, decode_bp, load_alist, save_alist
from .multidim import compute_llr, demap_sequence, map_sequence
from .protocol import (
    SelectionPolicy,
    SessionConfig,
    VirtualChannel,
    calibrate,
    run_session,
    select_frames,
    simulate_stage1,
)
from .skr import holevo_gaussian, mutual_info_awgn, plob, skr_single, skr_two_step

__version__ = "0.1.0"

__all__ = [
    "channel", "cli", "ldpc", "multidim", "protocol", "skr", "wire",
    "LinkParams", "effective_snr", "frame_rng", "transmit",
    "LdpcCode", "build_protograph", "decode_bp", "load_alist", "save_alist",
    "compute_llr", "demap_sequence", "map_sequence",
    "SelectionPolicy", "SessionConfig", "VirtualChannel",
    "calibrate", "run_session", "select_frames", "simulate_stage1",
    "holevo_gaussian", "mutual_info_awgn", "plob", "skr_single", "skr_two_step",
    "__version__",
]
