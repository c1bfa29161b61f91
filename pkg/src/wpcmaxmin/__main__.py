"""``python -m wpcmaxmin`` entry point."""
from .cli import main

raise SystemExit(main())
