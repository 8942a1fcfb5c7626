"""Exception hierarchy.

Every error raised by the library derives from :class:`CosymError` so callers
(the report runner in particular) can trap library failures without catching
programming errors.
"""


class CosymError(Exception):
    """Base class for all library errors."""


class ShapeMismatch(CosymError):
    pass


class FrameTooSmall(CosymError):
    pass


class StepTooLarge(CosymError):
    pass


class EtaVanishes(CosymError):
    def __init__(self, point):
        self.point = point
        super().__init__(f"eta vanishes at {list(point)}")


class NotClosed(CosymError):
    def __init__(self, form, residual):
        self.form = form
        self.residual = residual
        super().__init__(f"{form} is not closed (residual {residual:.3e})")


class SingularFlat(CosymError):
    pass


class NotBasic(CosymError):
    pass


class NoSolution(CosymError):
    pass


class NotSymplectomorphism(CosymError):
    def __init__(self, residual):
        self.residual = residual
        super().__init__(f"phi does not preserve omega_S (pullback residual {residual:.3e})")


class OddBaseDim(CosymError):
    pass


class NotInLevelSet(CosymError):
    def __init__(self, point, value):
        self.point = point
        self.value = value
        super().__init__(f"point {list(point)} is off the zero level (value {value:.3e})")


class ParamNotImmersion(CosymError):
    def __init__(self, point):
        self.point = point
        super().__init__(f"parametrization is not an immersion at {list(point)}")


class OutOfRange(CosymError):
    pass


class NoAction(CosymError):
    pass


class NoMomentMap(CosymError):
    pass


class NotClassified(CosymError):
    pass


class EmptyImage(CosymError):
    pass


class NotRegularValue(CosymError):
    pass


class SliceNotTransverse(CosymError):
    pass


class NoFoliation(CosymError):
    pass


class FlowLeftChart(CosymError):
    pass


class NotSubmersionGroupoidShape(CosymError):
    pass


class OriginNotFixed(CosymError):
    pass


class ParseError(CosymError):
    def __init__(self, line, message):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}")


class UnknownScenario(CosymError):
    pass


class UnknownCheck(CosymError):
    pass
