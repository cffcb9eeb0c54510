"""Exception types shared across the package."""


class MacppError(Exception):
    """Base class for all package errors."""


class InvalidWindow(MacppError, ValueError):
    pass


class DegenerateInput(MacppError, ValueError):
    """Raised when a point set cannot span a two-dimensional hull."""


class ParseError(MacppError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OutOfWindow(MacppError, ValueError):
    def __init__(self, rows):
        self.rows = list(rows)
        shown = ", ".join(str(r) for r in self.rows[:10])
        more = "" if len(self.rows) <= 10 else f" (+{len(self.rows) - 10} more)"
        super().__init__(f"{len(self.rows)} point(s) outside the window at line(s) {shown}{more}")


class UnknownTaxon(MacppError, KeyError):
    def __str__(self):
        return f"unknown taxon {self.args[0]!r}"


class GraphError(MacppError, ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class CycleError(GraphError):
    pass


class NonPositiveBandwidth(MacppError, ValueError):
    pass


class ZeroSamples(MacppError, ValueError):
    pass


class RoleError(MacppError, ValueError):
    pass


class ZeroIntensityAtDataPoint(MacppError, ArithmeticError):
    def __init__(self, taxon, index):
        self.taxon = taxon
        self.index = index
        super().__init__(f"offspring point {index} of taxon {taxon!r} has zero intensity")


class InitializationError(MacppError, ArithmeticError):
    pass


class TooFewPoints(MacppError, ValueError):
    pass


class ConfigError(MacppError, ValueError):
    pass
