"""
Value validation helpers for campaign configuration and domain records.
"""

import math
import re
from typing import Any, Iterable, List, Optional, Sequence

# Accepted spellings of detector names on the command line and in configs
DETECTOR_ALIASES = {
    "asd": "ASD",
    "amf": "AMF",
    "amf_known": "AMF_KNOWN",
    "amfknown": "AMF_KNOWN",
    "hetero": "HETERO_GLRT",
    "hetero_glrt": "HETERO_GLRT",
}

LIST_SPLIT_PATTERN = re.compile(r'[,\s]+')


def is_number(value: Any) -> bool:
    """
    Check if the value is a finite real number (bools excluded).

    Args:
        value: The value to check

    Returns:
        True if a finite int or float, False otherwise
    """
    if isinstance(value, bool):
        return False
    if isinstance(value, (int, float)):
        return math.isfinite(value)
    return False


def is_positive_int(value: Any) -> bool:
    """Check if the value is an integer ≥ 1."""
    return isinstance(value, int) and not isinstance(value, bool) and value >= 1


def is_positive_number(value: Any) -> bool:
    """Check if the value is a finite number > 0."""
    return is_number(value) and value > 0


def is_non_negative_number(value: Any) -> bool:
    """Check if the value is a finite number ≥ 0."""
    return is_number(value) and value >= 0


def is_seed(value: Any) -> bool:
    """Check if the value is an unsigned 64-bit integer."""
    return (
        isinstance(value, int)
        and not isinstance(value, bool)
        and 0 <= value <= 2**64 - 1
    )


def normalize_detector_name(name: str) -> Optional[str]:
    """
    Map a user-facing detector name to its canonical identifier.

    Args:
        name: Detector name such as 'amf', 'AMF_KNOWN' or 'hetero'

    Returns:
        Canonical identifier ('ASD', 'AMF', 'AMF_KNOWN', 'HETERO_GLRT'),
        or None if the name is unknown
    """
    if not isinstance(name, str):
        return None
    key = name.strip().lower().replace("-", "_")
    return DETECTOR_ALIASES.get(key)


def split_list(text: str) -> List[str]:
    """
    Split a comma or whitespace separated list from a command-line flag.

    Args:
        text: e.g. 'amf,asd, hetero'

    Returns:
        Non-empty items in order
    """
    return [item for item in LIST_SPLIT_PATTERN.split(text or "") if item]


def find_unknown(keys: Iterable[str], allowed: Sequence[str]) -> List[str]:
    """Return the keys that are not in the allowed set, sorted."""
    allowed_set = set(allowed)
    return sorted(k for k in keys if k not in allowed_set)
