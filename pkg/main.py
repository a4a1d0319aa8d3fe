# main.py
import sys
from typing import List, Optional

from controllers.main import ControllerMain


class CastMatchApplication:
    def __init__(self, argv: Optional[List[str]] = None):
        self.argv = sys.argv[1:] if argv is None else argv
        self.controller = ControllerMain()

    def exec(self) -> int:
        return self.controller.run(self.argv)


if __name__ == "__main__":
    app = CastMatchApplication()
    sys.exit(app.exec())
