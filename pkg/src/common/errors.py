class RspError(ValueError):
    """Base class for all errors raised by the toolkit."""


class BlochNormError(RspError):
    """Bloch vector longer than 1 + tol."""


class DensityOperatorError(RspError):
    """Density operator input that is not Hermitian, not normalized or not positive."""


class ScheduleDivergenceError(RspError):
    """An uncapped feedback schedule was evaluated where it diverges."""


class DomainError(RspError):
    """A parameter lies outside the domain of an operation."""


class StepSizeError(RspError):
    """An SME step left the state space by more than the positivity tolerance."""


class NonphysicalStateError(RspError):
    """A deterministic path left the Bloch ball."""

    def __init__(self, scenario, t, length):
        self.scenario = scenario
        self.t = t
        self.length = length
        super().__init__(
            f"Nonphysical state in scenario '{scenario}' at t={t:.6g}: "
            f"|b|={length:.12g} exceeds 1 (delay too large for the perturbative FBME?)"
        )


class BracketError(RspError):
    """Root bracket without a sign change."""


class UnreachableTargetError(RspError):
    """Target value at or above the steady state of a curve."""


class ConfigError(RspError):
    """Invalid run configuration."""
