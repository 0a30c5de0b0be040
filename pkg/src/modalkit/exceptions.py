"""Exception and warning classes raised across the package."""


class ShapeError(ValueError):
    """Array dimensions are inconsistent with each other or with grid metadata."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class DegenerateInputError(ValueError):
    """Input carries no information to normalise against (e.g. all zeros)."""


class ConjugatePairingError(ArithmeticError):
    """A reconstruction of real data kept a significant imaginary part."""


class NumericalConsistencyError(ArithmeticError):
    """An identity that must hold to round-off failed to hold."""


class RankDeficiencyWarning(UserWarning):
    """A Gram matrix was numerically singular; a truncated pseudo-inverse was used."""


class NonUniquenessWarning(UserWarning):
    """Repeated eigenvalues make the returned modes one choice among many."""


class ValidityWarning(UserWarning):
    """A result was produced but an assumption behind it is weak."""
