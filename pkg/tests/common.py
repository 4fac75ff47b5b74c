"""
Helpers shared by the tests
"""
import math


def standard_error(variance: float, size: int) -> float:
    """Standard error of a sample mean"""
    return math.sqrt(variance / size)


def coupled_square_error(p: float, q: float, n: int, size: int) -> float:
    """
    Standard error of the mean of D^2, D the centred difference of a coupled pair

    D is a sum of n i.i.d. terms 2 (B - d) with B ~ Ber(d), d = |p - q|.
    """
    d = abs(p - q)
    second = 4 * d * (1 - d)
    fourth = 16 * d * (1 - d) * (1 - 3 * d + 3 * d * d)
    variance = n * fourth + (2 * n * n - 3 * n) * second * second
    return math.sqrt(variance / size)
