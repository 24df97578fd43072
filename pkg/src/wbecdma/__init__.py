"""Welch-bound-equality CDMA codebooks, Kronecker enlargement and ML detection."""

from .codebook import (
    CodeMatrix,
    InjectivityReport,
    TscReport,
    build_core,
    check_binary_injectivity,
    classify,
    hadamard,
    kp_bound,
    min_tsc_search,
    read_code,
    tsc,
    welch_bound,
    write_code,
)
from .decoders import (
    AMLDecoder,
    DecoderOutcome,
    DecoupledDecoder,
    IterativeDecoder,
    MLDecoder,
    choose_split,
    decode_aml,
    decode_decoupled,
    decode_iterative,
    decode_ml,
)
from .enlarge import Enlargement, enlarge, enlarge_hadamard, gram_structure_check, hadamard_enlargement
from .sim import BerPoint, SimConfig, run_point, run_sweep, write_csv

__version__ = "0.1.0"
