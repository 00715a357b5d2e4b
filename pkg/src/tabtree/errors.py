"""Exception hierarchy for tabtree."""


class TabTreeError(Exception):
    """Base class for every error raised by this package."""


class RegistryError(TabTreeError):
    """Unknown or malformed transformation category."""


class CycleError(RegistryError):
    """Family tree recursion exceeded the depth guard."""

    def __init__(self, chain):
        self.chain = list(chain)
        super().__init__(
            "family tree recursion exceeded max depth along chain: "
            + " -> ".join(self.chain)
        )


class FitError(TabTreeError):
    """A transform could not derive a basis from the train data."""


class ParamError(TabTreeError):
    """An invalid parameter value was passed to a transform."""


class ContractError(TabTreeError):
    """A call violated a documented precondition."""


class InversionError(TabTreeError):
    """Returned columns could not be mapped back to a source column."""


class ConfigError(TabTreeError):
    """Invalid pipeline configuration or config file."""


class PipelineParseError(TabTreeError):
    """Serialized pipeline bytes could not be decoded."""

    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} (at byte offset {offset})")
