"""Writing report files and the run manifest."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .config import _hashable, config_hash

MANIFEST = "manifest.json"


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def manifest(cfg, files, version) -> str:
    """Manifest text: config hash, master seed, tool version and a SHA-256 per output file.

    Nothing time- or host-dependent is recorded, so reruns give the same bytes.
    """
    doc = {
        "tool": "pqdlab",
        "version": version,
        "kind": cfg["experiment"]["kind"],
        "master_seed": cfg["experiment"]["master_seed"],
        "config_sha256": config_hash(cfg),
        "config": _hashable(cfg),
        "files": {name: sha256_text(text) for name, text in sorted(files.items())},
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_reports(out_dir, cfg, files, version):
    """Write ``files`` and the manifest under ``out_dir``; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in sorted(files.items()):
        p = out / name
        # newline="" keeps the CSV \r\n terminators intact on every platform
        with open(p, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        written.append(p)
    p = out / MANIFEST
    p.write_text(manifest(cfg, files, version), encoding="utf-8")
    written.append(p)
    return written
