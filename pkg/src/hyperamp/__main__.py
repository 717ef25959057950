"""Module entry point: ``python -m hyperamp``."""

import sys

from hyperamp.cli import main

sys.exit(main())
