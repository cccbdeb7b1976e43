"""Allow running as `python -m vibrosheet`."""  # pragma: no cover

from __future__ import annotations  # pragma: no cover

from vibrosheet.cli import cli  # pragma: no cover

cli()  # pragma: no cover
