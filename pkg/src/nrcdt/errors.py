"""Exception hierarchy shared by every module of the package."""


class NrcdtError(Exception):
    """Base class for all errors raised by :mod:`nrcdt`."""


class ZeroMass(NrcdtError, ValueError):
    """All weights of a measure (or all pixels of an image) are zero."""


class DimensionMismatch(NrcdtError, ValueError):
    pass


class NonFinite(NrcdtError, ValueError):
    pass


class OutOfRange(NrcdtError, ValueError):
    pass


class SingularMatrix(NrcdtError, ValueError):
    pass


class DegenerateProjection(NrcdtError, ValueError):
    """A projected curve has (numerically) vanishing standard deviation."""

    def __init__(self, theta, std):
        self.theta = float(theta)
        self.std = float(std)
        super().__init__(
            f"projection at angle {self.theta:.6g} rad has std {self.std:.3g}; "
            "the measure is (numerically) supported on a line"
        )


class CollinearSupport(NrcdtError, ValueError):
    pass


class InvalidConfig(NrcdtError, ValueError):
    pass


class ParseError(NrcdtError, ValueError):
    def __init__(self, location, message):
        self.location = str(location)
        super().__init__(f"{self.location}: {message}")


class MissingFile(NrcdtError, FileNotFoundError):
    pass


class UnsupportedFormat(NrcdtError, ValueError):
    pass


class SingleClass(NrcdtError, ValueError):
    pass


class EmptyReferences(NrcdtError, ValueError):
    pass


class TooFewItems(NrcdtError, ValueError):
    pass


class InvalidK(NrcdtError, ValueError):
    pass
