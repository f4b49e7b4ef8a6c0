import csv
import io
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple

TIMESTAMP_FIELD = "generated_at"


def read_value_weight_csv(path: str) -> Tuple[List[float], List[float]]:
    """Read one value[,weight] pair per line; weight defaults to 1."""
    file_path = Path(path)
    if not file_path.is_file():
        raise ValueError(f"values file not found: {path}")

    values: List[float] = []
    weights: List[float] = []
    with file_path.open(newline="") as handle:
        for line_no, row in enumerate(csv.reader(handle), start=1):
            cells = [cell.strip() for cell in row if cell.strip()]
            if not cells or cells[0].startswith("#"):
                continue
            if len(cells) > 2:
                raise ValueError(f"{path}:{line_no}: expected value[,weight], got {len(cells)} fields")
            try:
                values.append(float(cells[0]))
                weights.append(float(cells[1]) if len(cells) == 2 else 1.0)
            except ValueError:
                raise ValueError(f"{path}:{line_no}: field 'value' or 'weight' is not a number") from None
    return values, weights


def read_json(path: str) -> Dict[str, Any]:
    file_path = Path(path)
    if not file_path.is_file():
        raise ValueError(f"config file not found: {path}")
    try:
        payload = json.loads(file_path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(payload, dict):
        raise ValueError(f"{path}: expected a JSON object")
    return payload


def stamp(report: Dict[str, Any]) -> Dict[str, Any]:
    """Attach the UTC timestamp; it is the only field allowed to differ between identical runs."""
    return {**report, TIMESTAMP_FIELD: datetime.now(timezone.utc).isoformat()}


def dumps_report(report: Dict[str, Any]) -> str:
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _atomic_write(path: str, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=str(target.parent), prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, target)
    except Exception:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def write_json_atomic(path: str, report: Dict[str, Any]) -> None:
    _atomic_write(path, dumps_report(report))


def write_csv_atomic(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    _atomic_write(path, buffer.getvalue())


def _flat_value(value: Any) -> Any:
    if value is None or isinstance(value, (str, int, float, bool)):
        return value
    return json.dumps(value, sort_keys=True)


def write_report_atomic(path: str, report: Dict[str, Any], fmt: str = "json") -> None:
    """JSON as on stdout, or one field,value row per top-level key (nested values as JSON)."""
    if fmt == "json":
        write_json_atomic(path, report)
    elif fmt == "csv":
        write_csv_atomic(path, ["field", "value"], ((key, _flat_value(report[key])) for key in sorted(report)))
    else:
        raise ValueError(f"format: expected json or csv, got {fmt}")
