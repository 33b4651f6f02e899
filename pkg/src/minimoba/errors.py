"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError/usage -> 1,
DataError -> 2, NumericError -> 3.
"""


class MiniMobaError(Exception):
    pass


class ConfigError(MiniMobaError):
    pass


class InvalidLineupError(ConfigError):
    pass


class GameOverError(MiniMobaError):
    pass


class NotFoundError(MiniMobaError):
    pass


class ShapeError(MiniMobaError):
    pass


class DataError(MiniMobaError):
    pass


class NumericError(MiniMobaError):
    pass
