"""Exception types raised by maclab.

Validation failures (bad scenarios, malformed constellations, out-of-range
labels) derive from :class:`ValidationError`; numerical failures that occur
with well-formed inputs (encoder collapse) derive from
:class:`NumericalError`.  The CLI maps the former to exit code 2 and the
latter to exit code 3.
"""


class MaclabError(Exception):
    """Base class for all maclab errors."""


class ValidationError(MaclabError, ValueError):
    """Malformed or inconsistent inputs."""


class NumericalError(MaclabError, ArithmeticError):
    """Numerical failure on structurally valid inputs."""


class AlphaSumMismatch(ValidationError):
    """Power-ratio vector does not sum to the user count."""


class NonPositiveAlpha(ValidationError):
    """A power ratio is zero or negative."""


class LengthMismatch(ValidationError):
    """bits and alpha vectors disagree in length."""


class ZeroBits(ValidationError):
    """A user is assigned fewer than one bit per symbol."""


class DegenerateConstellation(ValidationError):
    """All points identical; no usable symbol set after centering."""


class TooFewPoints(ValidationError):
    """An operation needing at least two points received fewer."""


class LabelOutOfRange(ValidationError):
    """A joint label index falls outside [0, M)."""


class ModelScenarioMismatch(ValidationError):
    """A trained model was applied to a different scenario."""


class MissingSnrForRateObjective(ValidationError):
    """Rate-objective rotation search invoked without an SNR."""


class UnsupportedOrder(ValidationError):
    """Constellation order outside the supported set for this method."""


class CollapsedEncoder(NumericalError):
    """Encoder output carries (near-)zero power; the symbol set collapsed."""
