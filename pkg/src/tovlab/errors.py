"""Exception types shared across the package.

Every failure mode that callers are expected to catch gets its own class so
the CLI can map them onto stable exit codes (see cli.EXIT_*).
"""


class TovlabError(Exception):
    """Base class for all package-specific errors."""


class DomainError(TovlabError, ValueError):
    """Argument outside the validated domain (density above cap, kappa <= 0, ...)."""


class EosModelError(TovlabError, ValueError):
    """Equation of state violates a structural assumption (non-monotone table, ...)."""


class QuadratureError(TovlabError, RuntimeError):
    """An adaptive quadrature failed to converge to the requested tolerance."""


class IntegrationError(TovlabError, RuntimeError):
    """ODE integration failed: no surface found, step-size collapse, ..."""


class HorizonError(IntegrationError):
    """2m/r approached 1 during integration.

    Under the structural EOS assumptions this cannot happen (Buchdahl bound),
    so it flags an inconsistent EOS or an implementation bug.
    """


class DegenerateCurveError(TovlabError, RuntimeError):
    """Family-curve classification hit a genuinely ambiguous point.

    Raised e.g. when a mass extremum and a ratio extremum coincide within the
    derivative noise floor, which the underlying theory excludes for isolated
    critical points.
    """


class ConsistencyError(TovlabError, RuntimeError):
    """A redundant internal cross-check failed (asymmetry, count mismatch...)."""


class ConfigError(TovlabError, ValueError):
    """Malformed configuration file or override."""
