"""Allow ``python -m randhorizon``."""

from .cli import main

main()
