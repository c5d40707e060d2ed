import re

from fractions import Fraction
from typing import List, Union

from shrinklab.cogs.models.exceptions import UsageError
from shrinklab.cogs.models.program import WinnerRestriction

# Compile patterns upon load for performance
RANGE_PATTERN = re.compile(r'^\s*(\d+)\s*\.\.\s*(\d+)\s*$')
TOP_K_PATTERN = re.compile(r'^\s*top:(\d+)\s*$')
RATIONAL_PATTERN = re.compile(r'^\s*(-?\d+)\s*/\s*(\d+)\s*$')

def parse_int_list(string: str, field: str = "d") -> List[int]:
    """Converts "4..128" into every integer of the inclusive range and "8,64" into a list."""
    match = RANGE_PATTERN.match(string)
    if match:
        lo, hi = int(match.group(1)), int(match.group(2))
        if hi < lo:
            raise UsageError(f"range {string} is empty", field)
        return list(range(lo, hi + 1))
    try:
        values = [int(part) for part in string.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"{string} is neither a range nor a list of integers", field)
    if not values:
        raise UsageError("at least one value is required", field)
    return values

def parse_float_list(string: str, field: str = "eps") -> List[float]:
    """Converts "1e-6,0.01" into a list of floats."""
    try:
        values = [float(part) for part in string.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"{string} is not a list of numbers", field)
    if not values:
        raise UsageError("at least one value is required", field)
    return values

def parse_winners(string: str) -> WinnerRestriction:
    """Converts "all" or "top:K" into a winner restriction."""
    if string.strip() == "all":
        return WinnerRestriction.everyone()
    match = TOP_K_PATTERN.match(string)
    if not match or int(match.group(1)) < 1:
        raise UsageError(f"{string} is neither 'all' nor 'top:K' with K >= 1", "winners")
    return WinnerRestriction.top(int(match.group(1)))

def parse_scalar(string: str, field: str = "z") -> Union[float, Fraction]:
    """Converts "3/2" into an exact Fraction and anything else into a float."""
    match = RATIONAL_PATTERN.match(string)
    if match:
        if int(match.group(2)) == 0:
            raise UsageError("denominator must not be zero", field)
        return Fraction(int(match.group(1)), int(match.group(2)))
    try:
        return float(string)
    except ValueError:
        raise UsageError(f"{string} is not a number", field)

def format_significant(value: float, digits: int) -> str:
    """Formats a float to the given number of significant digits."""
    return f"{value:.{digits}g}"
