"""Allow ``python -m banddensity``."""
import sys

from banddensity.cli import main

if __name__ == "__main__":
    sys.exit(main())
