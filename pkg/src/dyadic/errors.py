"""Exceptions raised by the toolkit.

Each one subclasses the builtin a caller would naturally catch, so
``except ValueError`` keeps working for code that does not know about them.
"""


class ScaleOverflowError(ValueError):
    def __init__(self, j: int, max_scale: int, what: str = "scale"):
        super().__init__(
            f"{what} {j} exceeds the configured maximum {max_scale}.\n"
            f"SOLUTION: Lower the scale or raise DYADIC_MAX_SCALE (memory grows as 2^j bits)."
        )
        self.j = j
        self.max_scale = max_scale


class DomainError(ValueError):
    pass


class InvalidParameterError(ValueError):
    pass


class UndefinedDimensionError(ArithmeticError):
    pass


class LadderTooShortError(ValueError):
    pass


class IncompatibleLadderError(ValueError):
    pass


class ConstructionError(RuntimeError):
    def __init__(self, generation: int, parent: int, target: int, found: int):
        super().__init__(
            f"Generation {generation}: parent ball #{parent} holds only {found} disjoint "
            f"candidates, {target} required.\n"
            f"SOLUTION: Start the schedule at a deeper rung or raise the synthesized depth."
        )
        self.generation = generation
        self.parent = parent
        self.target = target
        self.found = found


class ScenarioError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line = line
        self.column = column
