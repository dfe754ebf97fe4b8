"""
Report generation: metric tables, run manifests and text summaries.
"""

import hashlib
import json
import math
import os
import platform
import tempfile
from dataclasses import asdict
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence

from .. import __version__


def sha256_file(path: str, chunk_size: int = 1 << 20) -> str:
    """Hex SHA-256 of a file's content."""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(chunk_size), b''):
            digest.update(chunk)
    return digest.hexdigest()


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.9g}"
    return str(value).replace('\t', ' ').replace('\n', ' ')


def _atomic_write(path: str, text: str) -> None:
    """Write text to a temporary file in the target directory, then rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix='.tmp_', suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, 'w', encoding='utf-8') as f:
            f.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


class ReportGenerator:
    """Generate tables, manifests and summaries for toolkit runs."""

    def __init__(self, output_directory: str = "./output"):
        """Initialize report generator with output directory."""
        self.output_directory = output_directory
        os.makedirs(output_directory, exist_ok=True)

    def write_table(self, rows: Sequence[Any], output_path: str,
                    headers: Optional[List[str]] = None) -> str:
        """
        Write rows as a tab-separated table with a header row, one record per line.

        Rows may be dictionaries or dataclass instances.
        """
        full_path = os.path.join(self.output_directory, output_path)

        records = [asdict(row) if hasattr(row, '__dataclass_fields__') else dict(row) for row in rows]
        if headers is None:
            headers = list(records[0].keys()) if records else []

        lines = ['\t'.join(headers)]
        for record in records:
            lines.append('\t'.join(_format_value(record.get(h, '')) for h in headers))

        with open(full_path, 'w', encoding='utf-8', newline='\n') as f:
            f.write('\n'.join(lines) + '\n')
        return full_path

    def write_manifest(self, output_path: str, command: str, config: Dict[str, Any],
                       inputs: Sequence[str] = (), outputs: Sequence[str] = (),
                       extra: Optional[Dict[str, Any]] = None) -> str:
        """
        Write a JSON run manifest atomically.

        The manifest echoes the configuration and records the SHA-256 of every
        input and output file, so a run can be repeated and checked.
        """
        full_path = os.path.join(self.output_directory, output_path)

        def describe(paths: Sequence[str]) -> List[Dict[str, Any]]:
            described = []
            for path in paths:
                entry = {'path': os.path.relpath(path, self.output_directory)
                         if os.path.abspath(path).startswith(os.path.abspath(self.output_directory))
                         else path}
                if os.path.isfile(path):
                    entry['sha256'] = sha256_file(path)
                    entry['bytes'] = os.path.getsize(path)
                described.append(entry)
            return described

        manifest = {
            'command': command,
            'software_version': __version__,
            'python_version': platform.python_version(),
            'created': datetime.now().isoformat(timespec='seconds'),
            'config': config,
            'inputs': describe(inputs),
            'outputs': describe(outputs),
        }
        if extra:
            manifest['results'] = extra

        _atomic_write(full_path, json.dumps(manifest, indent=2, ensure_ascii=False, default=str) + '\n')
        return full_path

    def write_summary(self, output_path: str, title: str, metrics: Dict[str, Any]) -> str:
        """Write a human-readable summary of named metrics."""
        full_path = os.path.join(self.output_directory, output_path)

        with open(full_path, 'w', encoding='utf-8') as f:
            f.write(f"{title}\n")
            f.write("=" * len(title) + "\n\n")
            f.write(f"Generated: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}\n\n")

            if not metrics:
                f.write("No results to report.\n")
                return full_path

            width = max(len(name) for name in metrics)
            for name, value in metrics.items():
                f.write(f"{name.ljust(width)}  {_format_value(value)}\n")

        return full_path
