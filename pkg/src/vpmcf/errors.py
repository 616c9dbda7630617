"""Exception types shared across the package."""


class AxisTouched(RuntimeError):
    """The graph radius R + rho reached (numerically) zero somewhere.

    Raised before curvature formulas blow up; the radial-graph description
    of the surface is no longer valid.
    """


class Blowup(RuntimeError):
    """The height function left the trust region of the graph flow."""


class OutsideChart(ValueError):
    """Cylinder parameters outside the local chart (negative radicand)."""


class NewtonDiverged(RuntimeError):
    """A Newton iteration failed to converge; the message carries the last residual."""


class SingularJacobian(RuntimeError):
    """A Newton linear solve hit a (numerically) singular Jacobian."""


class NonPositiveGap(ValueError):
    """Spectral gap requested at or below the critical radius."""


class InsufficientData(ValueError):
    """Not enough (or unusable) samples for a requested fit."""
