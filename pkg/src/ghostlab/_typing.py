from typing import Tuple, TypeVar

T = TypeVar("T")

WaveVectorLike = Tuple[int, int]
ComplexPair = Tuple[complex, complex]
