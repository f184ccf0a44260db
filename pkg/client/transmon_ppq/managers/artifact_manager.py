"""Result file writer."""
from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from ..settings import RunConfig, dump_config

log = logging.getLogger(__name__)

CONFIG_ECHO = "config.json"


def _plain(value: Any) -> Any:
    """Convert numpy scalars and arrays to JSON-ready values."""
    if isinstance(value, dict):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value


class ArtifactManager:
    """Writes CSV tables and JSON results into one output directory.

    Every JSON result embeds the resolved config and the device content
    hash. No timestamps are written, so reruns produce identical files.
    """

    def __init__(self, output_dir: str | Path, config: RunConfig):
        """Initialize artifact manager.

        Args:
            output_dir: Directory receiving all files; created if missing.
            config: Resolved run config echoed next to the results.
        """
        self.output_dir = Path(output_dir)
        self.config = config

    @property
    def device_hash(self) -> str:
        return self.config.device.content_hash()

    def _path(self, name: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir / name

    def provenance(self) -> dict[str, Any]:
        return {
            "device_hash": self.device_hash,
            "config": self.config.model_dump(mode="json"),
        }

    def echo_config(self) -> Path:
        path = self._path(CONFIG_ECHO)
        path.write_text(dump_config(self.config), encoding="utf-8")
        return path

    def write_json(self, name: str, payload: dict[str, Any]) -> Path:
        """Write payload plus provenance as key-ordered JSON."""
        data = dict(_plain(payload))
        data["provenance"] = self.provenance()
        path = self._path(name)
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        log.info(f"Wrote {path}")
        return path

    def write_csv(
            self,
            name: str,
            rows: Iterable[dict[str, Any]],
            columns: Optional[Sequence[str]] = None
    ) -> Path:
        """Write rows as CSV; columns default to the first row's keys."""
        rows = [_plain(row) for row in rows]
        if columns is None:
            columns = list(rows[0]) if rows else []
        path = self._path(name)
        with path.open("w", newline="", encoding="utf-8") as stream:
            writer = csv.DictWriter(stream, fieldnames=list(columns), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        log.info(f"Wrote {path} ({len(rows)} rows)")
        return path
