# app/exceptions.py

class ProviderError(RuntimeError):
    """A prior provider could not produce a valid distribution."""


class ProviderNotAdaptableError(ProviderError):
    def __init__(self, kind: str):
        super().__init__(f"provider not adaptable: {kind}")


class ConfigError(ValueError):
    """Raised with every problem found in a config file, one per line."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in problems))
