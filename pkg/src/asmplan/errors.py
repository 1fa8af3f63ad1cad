"""Exception types shared across the package."""


class StructureError(ValueError):
    """A structure definition violates an invariant (raised with location)."""


class InvalidActionError(ValueError):
    """An action was applied in a state where it is not available."""


class PositiveRewardError(ValueError):
    """A reward model produced a positive value where non-positivity is required."""


class InfeasibleError(RuntimeError):
    """No complete disassembly exists under the current constraints/blocks."""


class CapExceededError(RuntimeError):
    """A size cap was exceeded (expansion width, oracle width, Q-table width)."""
