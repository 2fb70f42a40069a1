"""Exception types shared across the library."""


class RefineryError(Exception):
    """Base class for all library errors."""


class InvalidLattice(RefineryError):
    """Generator matrix is not square or not invertible."""


class InvalidDilation(RefineryError):
    """Dilation does not map the lattice into itself."""


class NotExpansive(InvalidDilation):
    """Dilation has an eigenvalue on or inside the unit circle."""


class InvalidDigits(RefineryError):
    """Digit set is not a complete residue system for the dilation."""


class InvalidMask(RefineryError):
    """Mask support/coefficient data is inconsistent."""


class NotInTile(RefineryError):
    """Point admits no digit expansion at the requested depth."""


class BudgetExceeded(RefineryError):
    """Requested enumeration exceeds the configured size cap."""


class IllConditioned(RefineryError):
    """A numerical rank or cluster decision is ambiguous at the working tolerance."""


class DegenerateEigenvalue(RefineryError):
    """Eigenvalue 1 is absent or not simple, so point values are undefined."""


class ZeroEigenvalue(RefineryError):
    """Operation is undefined at eigenvalue zero."""


class WindowError(RefineryError):
    """Index window does not provide the containment the operation needs."""


class WindowTooSmall(WindowError):
    """Window misses lattice points the operation needs covered."""


class NoTestPoints(RefineryError):
    """No usable interior test points remain at the requested depth."""


class SingularBasis(RefineryError):
    """Stacked basis matrix is numerically singular."""


class InvalidProblem(RefineryError):
    """Problem description failed schema validation."""
