"""Moments of modular-form coefficients in progressions to prime-power moduli."""

from .modarith import PrimePowerModulus

__version__ = "0.1.0"

__all__ = ["PrimePowerModulus", "__version__"]
