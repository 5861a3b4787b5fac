"""Exception hierarchy shared by all modules."""


class VdwError(Exception):
    """Base class for all library errors."""


class OrderOutOfRange(VdwError, ValueError):
    pass


class NonFiniteArgument(VdwError, ValueError):
    pass


class ZeroArgument(VdwError, ValueError):
    pass


class NonFiniteIntegrand(VdwError, ArithmeticError):
    pass


class PoleSpacingTooSmall(VdwError, ValueError):
    pass


class ExtrapolationDiverged(VdwError, ArithmeticError):
    pass


class NearResonance(VdwError, ValueError):
    """A real evaluation frequency sits on top of a transition frequency."""

    def __init__(self, pole, detune, message=None):
        self.pole = pole
        self.detune = detune
        super().__init__(
            message
            or f"frequency within {detune:.3g} of transition pole {pole:.6g}"
        )


class PlasmonResonance(VdwError, ValueError):
    """|eps + 2| is too small for the Clausius-Mossotti factor."""


class CoincidentPoints(VdwError, ValueError):
    pass


class ZeroFrequency(VdwError, ValueError):
    pass


class InsideSphere(VdwError, ValueError):
    pass


class DenominatorUnderflow(VdwError, ArithmeticError):
    pass


class UnconvergedQuadrature(VdwError, ArithmeticError):
    """Carries the best available estimate in ``result``."""

    def __init__(self, result, message="quadrature did not converge"):
        self.result = result
        super().__init__(f"{message}: value={result.value!r}, err={result.error_estimate:.3g}")


class ConfigInvalid(VdwError, ValueError):
    pass
