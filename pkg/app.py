from __future__ import annotations

import sys

from channel_boxes.cli import main


if __name__ == "__main__":
    sys.exit(main())
