import time
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Optional

from loguru import logger

from data.image_io import file_sha256, write_json
from data.models import RunManifest


class RunManager:
    """Tracks one CLI run and writes its manifest

    Attributes:
        manifest (RunManifest): Manifest being filled in
    """

    def __init__(self, subcommand: str, config: Optional[Dict] = None, seed: Optional[int] = None):
        self.manifest = RunManifest(subcommand=subcommand, config=dict(config or {}), seed=seed)
        self._started = time.perf_counter()

    def add_input(self, name: str, path) -> None:
        """Record a named input path"""
        self.manifest.inputs[name] = str(path)

    def add_output(self, name: str, path) -> None:
        """Record a named output path; its hash is taken when the run finishes"""
        self.manifest.outputs[name] = str(path)

    def record_timing(self, name: str, value) -> None:
        """Store a named timing (seconds, or a list of seconds)"""
        self.manifest.timings[name] = value

    @contextmanager
    def timed(self, name: str):
        """Time the enclosed block under `name`"""
        started = time.perf_counter()
        try:
            yield
        finally:
            self.record_timing(name, time.perf_counter() - started)

    def finish(self, manifest_path) -> RunManifest:
        """Hash every output, stamp the wall clock and write the manifest

        Args:
            manifest_path: Destination JSON file

        Returns:
            RunManifest: The completed manifest
        """
        for name, path in self.manifest.outputs.items():
            if Path(path).is_file():
                self.manifest.artifact_hashes[name] = file_sha256(path)
            else:
                logger.warning(f"Output '{name}' was not written: {path}")
        self.manifest.wall_clock = time.perf_counter() - self._started
        write_json(self.manifest.to_dict(), manifest_path)
        logger.info(f"Manifest written to {manifest_path}")
        return self.manifest
