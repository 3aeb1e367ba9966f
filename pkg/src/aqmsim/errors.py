class ConfigError(ValueError):
    """Invalid scenario or discipline setting; `key` names the offender."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
