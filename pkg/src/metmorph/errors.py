"""Exception taxonomy shared across the pipeline.

Exit-code mapping lives in the CLI: SchemaError -> 2, NumericalError -> 3,
OS/file errors -> 4.
"""


class MetmorphError(Exception):
    """Base class for all pipeline errors."""


class SchemaError(MetmorphError):
    """Input artifact does not conform to the declared format/vocabulary."""


class NumericalError(MetmorphError):
    """A numerical routine received invalid values or failed to produce a result."""


class ConvergenceError(NumericalError):
    """Iterative solver exhausted its budget.

    Carries the last iterate so callers can inspect or salvage it.
    """

    def __init__(self, message, *, coefficients=None, intercept=None, sweeps=None):
        super().__init__(message)
        self.coefficients = coefficients
        self.intercept = intercept
        self.sweeps = sweeps


class CellBoundsError(SchemaError):
    """A cell's bounding box falls outside its tile."""

    def __init__(self, tile_id, instance_id, bbox, shape):
        super().__init__(
            f"cell {instance_id} in tile {tile_id}: bbox {bbox} exceeds tile of shape {shape}"
        )
        self.tile_id = tile_id
        self.instance_id = instance_id
