"""
manifest.py
-----------

Manifesto da execução (``manifest.json``): comando, argumentos, arquivos de
configuração, sementes, versão, horários UTC e o sha256 de cada arquivo gerado.
"""

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Union

from pydantic import BaseModel, Field


class FileEntry(BaseModel):
    path: str
    sha256: str
    bytes: int


class RunManifest(BaseModel):
    command: str
    argv: List[str] = Field(default_factory=list)
    config_paths: List[str] = Field(default_factory=list)
    seeds: Dict[str, int] = Field(default_factory=dict)
    version: str
    started_at: str
    finished_at: str = ""
    files: List[FileEntry] = Field(default_factory=list)


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def sha256_file(path: Union[str, Path], chunk: int = 1 << 20) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(chunk), b""):
            digest.update(block)
    return digest.hexdigest()


def write_manifest(run_dir: Path, manifest: RunManifest, outputs: List[Path]) -> Path:
    run_dir = Path(run_dir)
    manifest.files = [
        FileEntry(path=str(p.relative_to(run_dir) if p.is_relative_to(run_dir) else p), sha256=sha256_file(p), bytes=p.stat().st_size)
        for p in outputs
        if p.exists()
    ]
    manifest.finished_at = utc_now()
    path = run_dir / "manifest.json"
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest.model_dump(), f, indent=2)
    return path
