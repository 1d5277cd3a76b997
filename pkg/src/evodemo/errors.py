"""Shared exception types.

``ConfigurationError`` covers anything a user can fix by editing inputs
(config files, layouts, policy files); ``ContractViolationError`` marks a call
that broke an operation's precondition and is a bug in the caller.
"""


class ContractViolationError(ValueError):
    """An operation was invoked outside its documented contract."""


class ConfigurationError(ValueError):
    """A run configuration, layout, or resource file is invalid."""


class PolicyFormatError(ConfigurationError):
    """A policy file does not match the documented on-disk format."""
