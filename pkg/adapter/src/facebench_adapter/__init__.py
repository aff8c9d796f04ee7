"""Reference detector adapter for the facebench batch file protocol."""

from .main import adapter_main

__all__ = ["adapter_main"]
