"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function or parameter space."""


class ConfigurationError(ValueError):
    """A model or experiment configuration is internally inconsistent."""


class ContractError(ValueError):
    """A posterior was passed to a criterion it was not built for."""


class DegenerateKernelError(ValueError):
    """Every node of a grid kernel evaluated to -inf."""


class UnsupportedFunctionalError(ValueError):
    """A closed-form posterior has no analytic expectation for the functional."""


class DataError(ValueError):
    """Input data could not be parsed or validated."""
