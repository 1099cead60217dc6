"""Run the command-line interface with `python -m src`."""

from src.cli import main

raise SystemExit(main())
