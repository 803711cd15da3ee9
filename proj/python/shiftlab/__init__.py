"""Orbit construction and auditing for nested subshifts of finite type."""

from ._shiftlab import (  # noqa: F401
    audit,
    certify_separation,
    construct,
    count_words,
    entropy_estimate,
    periodic_decomposition,
    resume,
    shadow,
    template_json,
    typical_count,
)

__all__ = [
    "audit",
    "certify_separation",
    "construct",
    "count_words",
    "entropy_estimate",
    "periodic_decomposition",
    "resume",
    "shadow",
    "template_json",
    "typical_count",
]
