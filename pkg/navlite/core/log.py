"""
Logging do NAVLITE via rich
"""

import logging

from rich.console import Console
from rich.logging import RichHandler

console = Console(stderr=True)

_configured = False


def setup_logging(level: int = logging.INFO) -> None:
    """Configura o logger raiz do pacote uma unica vez"""
    global _configured
    root = logging.getLogger("navlite")
    root.setLevel(level)
    if not _configured:
        handler = RichHandler(console=console, show_path=False, rich_tracebacks=False)
        handler.setFormatter(logging.Formatter("%(message)s"))
        root.addHandler(handler)
        _configured = True


def get_logger(name: str) -> logging.Logger:
    """Logger filho de navlite"""
    if not name.startswith("navlite"):
        name = f"navlite.{name}"
    return logging.getLogger(name)
