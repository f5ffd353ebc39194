import csv
import io
import math
from typing import Any, Dict, List, Optional, Sequence

from utils.files import write_json, write_text


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def render_csv(rows: Sequence[Dict[str, Any]], fields: Sequence[str]) -> str:
    """CSV text with a header row; floats at 9 significant digits."""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(fields), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({f: _cell(row.get(f)) for f in fields})
    return buffer.getvalue()


def export_csv(path: Optional[str], rows: Sequence[Dict[str, Any]], fields: Sequence[str]) -> str:
    """Write rows to path (when given) and return the CSV text."""
    text = render_csv(rows, fields)
    if path:
        write_text(path, text)
    return text


def export_json(path: str, data: Any) -> None:
    write_json(path, _jsonable(data))


def export_markdown(
    path: str, title: str, rows: List[Dict[str, Any]], fields: Sequence[str]
) -> None:
    lines = [f"# {title}", ""]
    lines.append("| " + " | ".join(fields) + " |")
    lines.append("|" + "---|" * len(fields))
    for row in rows:
        lines.append("| " + " | ".join(_cell(row.get(f)) for f in fields) + " |")
    lines.append("")
    write_text(path, "\n".join(lines))
