"""Report documents: metadata + rows, written as CSV or JSON."""
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field


def format_value(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.17g}"
    if hasattr(x, "item"):  # numpy scalars
        return format_value(x.item())
    return str(x)


def _json_value(x):
    if hasattr(x, "item"):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return format_value(x)
    return x


@dataclass
class ReportDocument:
    subcommand: str
    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def data_csv(self):
        lines = [",".join(self.columns)]
        lines += [",".join(format_value(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def to_csv(self):
        head = "".join(f"# {k}: {format_value(v)}\n" for k, v in self.metadata.items())
        return head + self.data_csv()

    def to_json(self):
        doc = {
            "metadata": {k: _json_value(v) for k, v in self.metadata.items()},
            "columns": list(self.columns),
            "rows": [[_json_value(v) for v in row] for row in self.rows],
        }
        return json.dumps(doc, indent=2) + "\n"

    def render(self, fmt="csv"):
        return self.to_json() if fmt == "json" else self.to_csv()


def write_atomic(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename; ``-`` is stdout."""
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
