# functions.py
from typing import Any


class NestedDict(dict):
    """Dictionary of dictionaries addressed with dotted keys (`labeler.lambda`)."""

    def set_dotted(self, dotted: str, value: Any) -> None:
        """
        Set a value at a dotted path, creating intermediate dictionaries as needed.
        """
        parts = dotted.split(".")
        node = self
        for part in parts[:-1]:
            child = node.get(part)
            if not isinstance(child, dict):
                child = node[part] = NestedDict()
            node = child
        node[parts[-1]] = value

    def to_plain(self) -> dict:
        return {k: NestedDict(v).to_plain() if isinstance(v, dict) else v for k, v in self.items()}
