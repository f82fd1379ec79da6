"""Exception hierarchy shared across the package."""


class MolError(ValueError):
    """Base class for every molecule-level failure."""


class InvalidMolecule(MolError):
    pass


class ValenceViolation(InvalidMolecule):
    pass


class KekulizationFailure(InvalidMolecule):
    pass


class SizeLimitExceeded(InvalidMolecule):
    pass


class SmilesSyntaxError(MolError):
    """Malformed SMILES text. ``offset`` is the 0-based byte offset of the problem."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class UnsupportedFeature(MolError):
    pass


class MultipleComponents(UnsupportedFeature):
    """Dot-disconnected input; only single molecules are accepted."""


class NoFreeValence(MolError):
    pass


class EmptyFingerprint(ValueError):
    pass


class EmptyPopulation(ValueError):
    pass


class EmptyReference(ValueError):
    pass


class EmptyHistory(ValueError):
    pass


class BudgetExhausted(RuntimeError):
    pass


class OracleError(RuntimeError):
    """An oracle failed to produce a usable score (timeout, bad reply, crash)."""
