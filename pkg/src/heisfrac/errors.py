"""Exception types shared across the package."""


class ContractError(ValueError):
    """A precondition on arguments (dimension, range, sign) was violated."""


class SingularityError(ArithmeticError):
    """A kernel was evaluated on its singular set."""


class SamplingError(ValueError):
    """A pointwise function produced a non-finite value on a grid."""


class SupportError(ValueError):
    """A dilated test function no longer fits inside the computational box."""


class GridTooLargeError(ValueError):
    """The brute-force oracle refuses grids whose enumeration cost is excessive."""


class ConfigError(ValueError):
    """A configuration file is missing a key or holds an unparsable value."""
