""" Exceptions raised by romes_closure """


class RomesError(Exception):
    """Base class for every error raised by this package"""


class ContractError(RomesError, ValueError):
    """Input violates a documented precondition (dimensions, domain, ranges)"""


class SolverError(RomesError, RuntimeError):
    def __init__(self, message, iteration=None):
        if iteration is not None:
            message = f'{message} (iteration {iteration})'
        super().__init__(message)
        self.iteration = iteration


class RankError(RomesError, ValueError):
    def __init__(self, message, rank=None):
        super().__init__(message)
        self.rank = rank


class DegenerateDesignError(RomesError, ValueError):
    """Regression design or normalizing denominator is degenerate"""


class SelectionError(RomesError, RuntimeError):
    """No hyperparameter candidate could be evaluated"""


class NumericalGuardError(RomesError, FloatingPointError):
    """A loss received a zero (or negative) predicted variance"""


class StageError(RomesError):
    def __init__(self, stage, cause, step=None):
        where = f'stage `{stage}`' if step is None else f'stage `{stage}` (step {step})'
        super().__init__(f'{where} failed: {cause}')
        self.stage = stage
        self.step = step
        self.cause = cause


class ConfigError(RomesError, ValueError):
    def __init__(self, message, field=None):
        if field is not None:
            message = f'{message} [field: {field}]'
        super().__init__(message)
        self.field = field
