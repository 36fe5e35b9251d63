'''
Exceptions raised by the corrkit library.

Library functions raise these; only cli_functions translates them into
process exit codes.
'''


class CorrkitError(Exception):
    '''Base class for all corrkit errors.'''


class InvalidStateError(CorrkitError):
    '''A state, operation or file violates its invariants.'''


class DimensionMismatchError(CorrkitError):
    '''An operation does not fit the factorization it is applied to.'''


class UnsupportedRegimeError(CorrkitError):
    '''A monotone has no exact evaluation for this input.'''


class ConstructionError(CorrkitError):
    '''Parameters are invalid (e.g. a dimension condition fails or q < 0).'''


class ConfigError(CorrkitError):
    '''A run configuration is incomplete or has unknown keys.'''
