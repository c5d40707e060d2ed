from fractions import Fraction
from typing import Tuple, Union
from typing_extensions import TypeAlias

Scalar: TypeAlias = Union[float, Fraction]
Profile: TypeAlias = Tuple[int, ...]
