"""Python surface for the sega toolkit's core operations."""

from sega._core import (
    WkvParams,
    attention_contrast,
    classify,
    determinism,
    dose_response,
    effective_attention,
    extract_code_blocks,
    kl_divergence,
    normalize,
    random_wkv,
    scan_markers,
    welch_t,
    wkv_forward,
)

__all__ = [
    "WkvParams",
    "attention_contrast",
    "classify",
    "determinism",
    "dose_response",
    "effective_attention",
    "extract_code_blocks",
    "kl_divergence",
    "normalize",
    "random_wkv",
    "scan_markers",
    "welch_t",
    "wkv_forward",
]
