"""Sweep progress callback factories for human and agent output modes."""

from __future__ import annotations

import json
import sys
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from collections.abc import Callable


def make_agent_progress_callback() -> Callable[[int, int, bool], None]:
    """Return a callback that emits one compact JSON line per completed point to stderr."""

    def callback(done: int, total: int, failed: bool) -> None:
        msg = {"progress": {"done": done, "total": total, "failed": failed}}
        print(json.dumps(msg, separators=(",", ":")), file=sys.stderr)

    return callback


def make_human_progress_callback() -> Callable[[int, int, bool], None]:
    """Return a callback that drives a Rich progress bar on stderr."""
    state: dict[str, Any] = {}

    def callback(done: int, total: int, failed: bool) -> None:
        try:
            if "progress" not in state:
                from rich.console import Console
                from rich.progress import (
                    BarColumn,
                    MofNCompleteColumn,
                    Progress,
                    TextColumn,
                    TimeRemainingColumn,
                )

                progress = Progress(
                    TextColumn("[bold]Sweeping"),
                    BarColumn(),
                    MofNCompleteColumn(),
                    TextColumn("{task.fields[failures]} failed"),
                    TimeRemainingColumn(),
                    console=Console(stderr=True),
                    transient=True,
                )
                progress.start()
                state["progress"] = progress
                state["task"] = progress.add_task("sweep", total=total, failures=0)
                state["failures"] = 0
            if failed:
                state["failures"] += 1
            state["progress"].update(state["task"], completed=done, failures=state["failures"])
            if done >= total:
                state["progress"].stop()
        except Exception:
            # Fallback: plain stderr if Rich fails
            print(f"{done}/{total} points{' (failed)' if failed else ''}", file=sys.stderr)

    return callback
