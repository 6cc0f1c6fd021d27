import csv
import enum
import io
import json
from typing import List

import numpy as np

from cvqed.common.errors import ConfigError


def to_jsonable(value):
    """Converts numpy scalars and arrays, complex numbers and enums to plain JSON values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, enum.Enum):
        return value.value
    return value


class ReportWriter:
    """Base class for report writers."""

    extension = ""

    def format_rows(self, rows: List[dict]) -> str:
        """Formats a table given as a list of flat dicts sharing their keys."""
        raise NotImplementedError

    def format_document(self, document: dict) -> str:
        """Formats a nested report."""
        raise NotImplementedError


class JsonWriter(ReportWriter):
    extension = "json"

    def format_rows(self, rows):
        return self.format_document({"rows": rows})

    def format_document(self, document):
        # Sorted keys and repr floats keep reports byte-identical across runs.
        return json.dumps(to_jsonable(document), indent=2, sort_keys=True) + "\n"


class CsvWriter(ReportWriter):
    extension = "csv"

    def format_rows(self, rows):
        buffer = io.StringIO()
        if not rows:
            return ""
        writer = csv.DictWriter(buffer, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(v) for k, v in row.items()})
        return buffer.getvalue()

    def format_document(self, document):
        rows = [{"key": key, "value": _cell(value)} for key, value in sorted(_flatten(document).items())]
        return self.format_rows(rows)


class TextWriter(ReportWriter):
    extension = "txt"

    def format_rows(self, rows):
        if not rows:
            return ""
        columns = list(rows[0].keys())
        cells = [[_cell(row.get(c)) for c in columns] for row in rows]
        widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(columns)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
        for r in cells:
            lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
        return "\n".join(lines) + "\n"

    def format_document(self, document):
        flat = _flatten(document)
        width = max((len(k) for k in flat), default=0)
        return "".join(f"{k.ljust(width)}  {_cell(v)}\n" for k, v in sorted(flat.items()))


def _cell(value) -> str:
    value = to_jsonable(value)
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True)
    return str(value)


def _flatten(document: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in to_jsonable(document).items():
        name = f"{prefix}{key}"
        if isinstance(value, dict) and value:
            flat.update(_flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


WRITERS = {
    "text": TextWriter(),
    "csv": CsvWriter(),
    "json": JsonWriter(),
}


def get_writer(fmt: str) -> ReportWriter:
    writer = WRITERS.get(fmt)
    if writer is None:
        raise ConfigError(f"Unknown output format '{fmt}'; choose from {sorted(WRITERS)}")
    return writer
