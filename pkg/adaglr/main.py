"""Main entry point for the adaglr command-line tool."""

import sys
from adaglr.application import main

if __name__ == "__main__":
    sys.exit(main())
