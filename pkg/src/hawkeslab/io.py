"""File formats: events-v1 text files, CSV tables and JSON fit records.

events-v1 is one decimal timestamp per line (up to 9 fractional digits)
with ``#key=value`` header lines.  Two dialects are read:

* wall-clock files declare ``#session=HH:MM-HH:MM`` (and optionally
  ``#calendar=weekdays|all``); timestamps are seconds with day boundaries
  every 86400 s, and ingestion filters to sessions and concatenates them.
* files written by this package carry explicit ``#bounds=start:end``
  session intervals on the concatenated clock and are read back verbatim.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import EventSeries
from .errors import ConfigError, DataError

__all__ = [
    "read_events_v1",
    "write_events_v1",
    "parse_session_header",
    "write_csv",
    "read_config_file",
    "write_config_file",
]

_KNOWN_HEADERS = {"resolution", "session", "calendar", "bounds"}


def parse_session_header(text: str) -> tuple[float, float]:
    """'09:30-16:15' -> (start, end) in seconds of day."""
    try:
        lo, hi = text.split("-")
        parts = []
        for tok in (lo, hi):
            h, m = tok.strip().split(":")
            parts.append(3600.0 * int(h) + 60.0 * int(m))
        start, end = parts
    except ValueError:
        raise ConfigError(f"malformed session header {text!r}") from None
    if not 0 <= start < end <= 86400.0:
        raise ConfigError(f"session window {text!r} out of range")
    return start, end


def read_events_v1(path) -> tuple[np.ndarray, dict]:
    """Raw timestamps and parsed headers; validates line syntax."""
    headers: dict = {"bounds": []}
    stamps = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "=" not in line:
                    raise DataError(f"{path}:{lineno}: malformed header line")
                key, value = line[1:].split("=", 1)
                key = key.strip()
                if key not in _KNOWN_HEADERS:
                    raise ConfigError(f"{path}:{lineno}: unknown header {key!r}")
                if key == "bounds":
                    try:
                        a, b = (float(x) for x in value.split(":"))
                    except ValueError:
                        raise DataError(
                            f"{path}:{lineno}: malformed bounds") from None
                    headers["bounds"].append((a, b))
                else:
                    headers[key] = value.strip()
                continue
            try:
                stamps.append(float(line))
            except ValueError:
                raise DataError(
                    f"{path}:{lineno}: cannot parse timestamp {line!r}") from None
    return np.asarray(stamps, dtype=np.float64), headers


def write_events_v1(path, series: EventSeries) -> None:
    """Write a series on its concatenated clock with explicit bounds."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(f"#resolution={series.resolution!r}\n")
        for a, b in series.session_bounds:
            fh.write(f"#bounds={a!r}:{b!r}\n")
        for t in series.timestamps:
            fh.write(f"{t:.9f}\n")


def write_csv(path, columns: dict) -> None:
    """Write named columns of equal length."""
    names = list(columns)
    arrays = [np.asarray(columns[k]) for k in names]
    n = len(arrays[0])
    if any(len(a) != n for a in arrays):
        raise DataError("csv columns must have equal length")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(n):
            writer.writerow([repr(a[i]) if isinstance(a[i], float) else a[i]
                             for a in arrays])


def read_config_file(path) -> dict[str, str]:
    """Flat 'key = value' text config; '#' starts a comment."""
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def write_config_file(path, cfg: dict) -> None:
    with open(path, "w") as fh:
        for key, value in cfg.items():
            fh.write(f"{key} = {value}\n")


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x)}")
