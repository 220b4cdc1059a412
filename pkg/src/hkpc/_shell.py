"""Shell command templates with ``{name}`` placeholders."""

from __future__ import annotations

import os
import shlex
import subprocess

TMPDIR_ENV = "HKPC_TMPDIR"


def tmpdir() -> str | None:
    """Parent directory for temporary files (``$HKPC_TMPDIR`` or the system default)."""
    return os.environ.get(TMPDIR_ENV) or None


def fill_template(template: str, paths: dict[str, str]) -> str:
    # Plain replacement, not str.format: commands may contain other braces.
    command = template
    for name, path in paths.items():
        command = command.replace("{" + name + "}", shlex.quote(str(path)))
    return command


def run_shell(command: str, timeout: float | None = None) -> tuple[int, str]:
    """Run ``command`` through the shell; return ``(returncode, stderr text)``.

    A timeout is reported as return code -1.
    """
    try:
        proc = subprocess.run(command, shell=True, capture_output=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        return -1, f"timed out after {timeout}s"
    return proc.returncode, proc.stderr.decode("utf-8", "replace").strip()
