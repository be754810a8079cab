"""Exception types shared across the toolkit."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class InvalidModelError(ValueError):
    """Model parameters make the density ill-defined (e.g. negative Frank energy)."""


class UnderResolvedError(ValueError):
    """Adjacent line-field samples are too far apart in angle to compare signs."""

    def __init__(self, edge, dot):
        self.edge = edge
        self.dot = dot
        super().__init__(f"under-resolved edge {edge}: |n_i . n_j| = {abs(dot):.3g}")
