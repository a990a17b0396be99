"""Exception and warning classes shared across the package."""


class AttrensError(Exception):
    """Base class for all package errors."""


class ValidationError(AttrensError):
    """Input data violates a structural contract (shapes, finiteness, ids)."""


class UnknownMethod(ValidationError):
    pass


class EmptyData(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class NonFiniteInput(ValidationError):
    pass


class StrategyError(AttrensError):
    """A strategy-specific precondition failed."""


class DegenerateSpread(StrategyError):
    """A spread statistic is below the epsilon threshold; normalization would divide by ~0."""

    def __init__(self, method, statistic, value):
        self.method = method
        self.statistic = statistic
        self.value = value
        super().__init__(
            f"method {method!r}: {statistic} = {value:.3e} is too small to normalize by"
        )


class MissingEvidence(StrategyError):
    pass


class MissingMasks(StrategyError):
    pass


class TooFewInstances(StrategyError):
    pass


class SingularSystem(StrategyError):
    pass


class DimensionMismatch(ValidationError):
    pass


class BudgetExceeded(StrategyError):
    pass


class AllZeroAttribution(AttrensError):
    pass


class NonPositiveInitialScore(AttrensError):
    pass


class SingleClassModel(AttrensError):
    pass


class OracleFailure(AttrensError):
    pass


class OracleConfigError(AttrensError):
    """A selected metric needs an oracle that was not configured."""


class NpyFormatError(ValidationError):
    """Base class for array-file format errors."""


class BadMagic(NpyFormatError):
    pass


class UnsupportedVersion(NpyFormatError):
    pass


class UnsupportedDtype(NpyFormatError):
    pass


class FortranOrderUnsupported(NpyFormatError):
    pass


class TruncatedPayload(NpyFormatError):
    pass


class IoFailure(AttrensError):
    pass


class ManifestSchemaError(ValidationError):
    """Manifest JSON violates the schema; message carries a JSON-pointer-style path."""

    def __init__(self, pointer, message):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}")


class CancellationWarning(UserWarning):
    """Averaging cancelled a large fraction of attribution mass."""


class EmptyMaskWarning(UserWarning):
    pass


class TieBreakWarning(UserWarning):
    """A degenerate argmax/ordering was resolved by first-index tie-break."""
