"""Entry point for ``python -m kfino``."""
import sys

from kfino.cli import main

sys.exit(main())
