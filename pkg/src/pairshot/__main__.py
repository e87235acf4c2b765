"""Run the command-line interface via ``python -m pairshot``."""

from pairshot.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
