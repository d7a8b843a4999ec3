"""Exception types shared across modules."""


class ReachError(Exception):
    """Base class for analysis failures."""


class CertificateError(ReachError):
    """An error bound could not be certified under strict settings."""


class EtaInfeasibleError(ReachError):
    """No Taylor order satisfies the remainder condition; reduce the time step."""


class InputError(ReachError, ValueError):
    """Malformed model, scenario or file."""
