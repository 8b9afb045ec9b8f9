"""Compressed key -> row tables: per-column compressed static functions with
optional Bloom prefilters and greedy row permutation."""
from .bloom import BloomFilter, PrefilterDecision, build_bloom, decide, query_bloom
from .codec import CanonicalCode, FrequencyTable, build_code, entropy
from .csf import CsfColumn, build_csf, query_csf
from .errors import *  # noqa: F401,F403
from .fileformat import deserialize, load, save, serialize
from .gf2 import BitVector, LinearSystem, add_key_equations, solve, xor_lookup
from .hashing import Fingerprint, SpotTriple, fingerprint
from .permute import column_entropy_sum, permute_rows
from .table import BuildConfig, CaramelTable, ColumnStore, MatrixInput, build, query, query_row

__version__ = "0.1.0"
