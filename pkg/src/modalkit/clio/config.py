"""Run configuration and the flat ``key=value`` config-file format."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

from ..exceptions import DomainError

METHODS = ("delta", "dft", "pod", "dmd", "mpod")
THREADS_ENV = "MODALKIT_THREADS"


def thread_limit() -> int:
    """Worker cap from ``MODALKIT_THREADS`` (default: CPU count)."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise DomainError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise DomainError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1


def parse_config_file(path) -> Dict[str, str]:
    """Read ``key = value`` lines; ``#`` starts a comment. Keys use CLI flag
    spelling with or without leading dashes, hyphens or underscores."""
    out: Dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


@dataclass
class RunConfig:
    method: str = "pod"
    bands: Optional[str] = None
    fir_order: int = 211
    bank_mode: str = "fir"
    n_modes: int = 10
    remove_mean: bool = False
    output: Path = field(default_factory=lambda: Path("modalkit_out"))
    rank: Optional[int] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.fir_order < 1 or self.fir_order % 2 == 0:
            raise DomainError(f"fir_order must be odd and positive, got {self.fir_order}")
        if self.n_modes < 1:
            raise DomainError("n_modes must be positive")
        if self.method == "mpod" and self.bands is not None:
            from ..mpod import FrequencySplitting
            FrequencySplitting.parse(self.bands)
        self.output = Path(self.output)
