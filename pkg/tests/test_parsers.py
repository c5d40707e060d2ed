from fractions import Fraction

import pytest

from shrinklab.cogs.models.exceptions import UsageError
from shrinklab.cogs.utils.parsers import format_significant, parse_float_list, parse_int_list, parse_scalar, parse_winners

def test_int_lists_and_ranges():
    assert parse_int_list("4..7") == [4, 5, 6, 7]
    assert parse_int_list("8, 64,1024") == [8, 64, 1024]
    for bad in ("9..4", "a,b", ""):
        with pytest.raises(UsageError):
            parse_int_list(bad)

def test_float_lists():
    assert parse_float_list("1e-6,0.01") == [1e-6, 0.01]
    with pytest.raises(UsageError) as e:
        parse_float_list("x")
    assert e.value.field == "eps"

def test_winners():
    assert str(parse_winners("all")) == "all"
    assert parse_winners("top:2").k == 2
    for bad in ("top:0", "top", "some"):
        with pytest.raises(UsageError):
            parse_winners(bad)

def test_scalars():
    assert parse_scalar("3/2") == Fraction(3, 2)
    assert isinstance(parse_scalar("1.5"), float)
    with pytest.raises(UsageError):
        parse_scalar("1/0")
    with pytest.raises(UsageError):
        parse_scalar("e")

def test_significant_digits():
    assert format_significant(0.7310585786300049, 4) == "0.7311"
    assert format_significant(8.0, 12) == "8"
