"""Run the experiment CLI with ``python -m vertexlab``."""

from .cli import main

raise SystemExit(main())
