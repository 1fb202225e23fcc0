"""Exception types shared across the package."""


class PackConvError(Exception):
    """Base class for every error raised by this package."""


class Infeasible(PackConvError):
    """No packing geometry satisfies the multiplier and quantization limits."""


class Overflow(PackConvError):
    """A packed word, product, or accumulation does not fit its register."""


class RangeError(PackConvError):
    """A value lies outside the range implied by its declared bit width."""


class ShapeError(PackConvError):
    """Sequence or tensor dimensions are inconsistent with the operation."""
