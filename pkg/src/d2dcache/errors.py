"""Exception hierarchy for d2dcache."""


class D2DCacheError(Exception):
    """Base class for all package errors."""


class ConfigError(D2DCacheError, ValueError):
    """Invalid parameters or configuration.

    ``field`` and ``line`` are filled in when the error originates from a
    config file so the CLI can point at the offending entry.
    """

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)


class DomainError(ConfigError):
    """A parameter lies outside its mathematical domain."""


class DivisibilityError(DomainError):
    """The popular-file offset (k-1)*m0/k is not an integer for some k."""


class UnstableError(D2DCacheError):
    """Traffic intensity of a cluster reached or exceeded one."""

    def __init__(self, rho, cluster=None):
        self.rho = rho
        self.cluster = cluster
        where = "" if cluster is None else f" in cluster {cluster}"
        super().__init__(f"unstable queue{where}: rho = {rho:.6g} >= 1")


class CapacityError(D2DCacheError, ValueError):
    """Adding a file would exceed the cluster's cache capacity."""


class AlreadyCachedError(D2DCacheError, ValueError):
    """The (cluster, file) element is already part of the placement."""


class BudgetError(D2DCacheError):
    """Exhaustive enumeration would exceed the candidate budget."""


class PropertyViolation(D2DCacheError, AssertionError):
    """A structural property check found a counterexample.

    The witnessing sets are kept on ``witness`` as a dict.
    """

    def __init__(self, message, witness=None):
        self.witness = witness or {}
        super().__init__(message)
