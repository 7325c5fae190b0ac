"""Exception types shared across the package."""


class ContractError(ValueError):
    """An argument violates a documented precondition (shape, range, kind)."""


class DomainError(ArithmeticError):
    """A math function was evaluated outside its domain."""


class NonFiniteError(FloatingPointError):
    """An operation produced NaN or Inf."""


class UnsupportedInverseError(ContractError):
    """The requested transform has no inverse (e.g. a magnitude spectrum)."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class DatasetError(OSError):
    """An input image could not be read or decoded."""


class TrainingDiverged(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, step: int, seed: int, detail: str = ""):
        self.step = step
        self.seed = seed
        msg = f"non-finite loss at step {step} (batch index {step}, seed {seed})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
