"""Working precisions and the escalation ladder.

Certification starts at float64 (53 significand bits) and, on failure,
escalates through arbitrary-precision levels. The unit roundoff of a level
with b significand bits is u = 2**-b; every ladder value keeps u exactly
representable as a float64 (the smallest, 2**-512, is far above the
subnormal range).
"""

from dataclasses import dataclass
from fractions import Fraction

LADDER_BITS = (53, 128, 256, 512)
DEFAULT_MAX_BITS = LADDER_BITS[-1]


@dataclass(frozen=True, order=True)
class PrecisionLevel:
    """A working precision, identified by its significand width in bits."""

    significand_bits: int

    def __post_init__(self):
        if self.significand_bits < LADDER_BITS[0]:
            raise ValueError(
                f"precision must be at least {LADDER_BITS[0]} bits, "
                f"got {self.significand_bits}"
            )

    @property
    def unit_roundoff(self):
        """u = 2**-bits as an exact float."""
        return 2.0 ** -self.significand_bits

    @property
    def unit_roundoff_exact(self):
        """u = 2**-bits as an exact Fraction."""
        return Fraction(1, 2 ** self.significand_bits)

    @property
    def is_float64(self):
        return self.significand_bits == 53

    def inflation_factor(self):
        """u**(-1/4) = 2**(bits/4), the residual overestimation allowance."""
        return 2.0 ** (self.significand_bits / 4.0)

    def zero_residual_floor(self):
        """4u, the inflation radius floor coefficient."""
        return 4.0 * self.unit_roundoff


def ladder(max_bits=DEFAULT_MAX_BITS):
    """Precision levels to try in order, capped at max_bits.

    The 53-bit base level is always included; max_bits below it is rejected.
    """
    if max_bits < LADDER_BITS[0]:
        raise ValueError(
            f"max-bits must be at least {LADDER_BITS[0]}, got {max_bits}"
        )
    return [PrecisionLevel(b) for b in LADDER_BITS if b <= max_bits]
