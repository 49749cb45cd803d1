"""Exception hierarchy shared across the package.

The CLI maps InputError to exit code 2 and NumericalError to exit code 3.
"""


class ProtoselectError(Exception):
    pass


class InputError(ProtoselectError):
    """Bad user input: malformed files, invalid specs, out-of-range options."""


class NumericalError(ProtoselectError):
    """Numerical failure: non-convergence, rank deficiency, pivot underflow."""
