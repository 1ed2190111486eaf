"""Exception types raised by the recovery routines."""


class DimensionError(ValueError):
    """Tensor, factor or support dimensions do not line up."""


class SizeGuardError(MemoryError):
    """An explicit Kronecker matrix would exceed the configured entry budget.

    Callers should fall back to the tensor (mode-product) path.
    """

    def __init__(self, entries, limit):
        self.entries = int(entries)
        self.limit = int(limit)
        super().__init__(
            f"Kronecker operator would hold {self.entries:.3g} entries, "
            f"above the guard of {self.limit:.3g}; use the tensor path"
        )


class NumericalError(FloatingPointError):
    """An iterate became non-finite (usually a step size that is too large)."""
