"""Deterministic CSV/JSON emission and wall-clock unit conversions."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from decimal import Decimal
from pathlib import Path
from typing import Iterable, Sequence

REFERENCE_RATES_HZ = (10_000, 1_000)


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def csv_text(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([v if isinstance(v, (int, str)) else fmt_float(v) for v in row])
    return buf.getvalue()


def write_atomic(path: str | os.PathLike, text: str) -> Path:
    """Write UTF-8 text through a temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def seconds(tf_norm: float | str | Decimal, rate_hz: float | int) -> Decimal:
    """t_f in seconds from t_f*Omega/2pi at Omega/2pi = rate_hz, in exact decimal arithmetic."""
    return Decimal(str(tf_norm)) / Decimal(str(rate_hz))


def human_duration(s: Decimal) -> str:
    if s < Decimal("1e-3"):
        v, unit = s * Decimal(10) ** 6, "µs"
    elif s < 1:
        v, unit = s * Decimal(10) ** 3, "ms"
    else:
        v, unit = s, "s"
    v = v.normalize()
    text = format(v, "f")
    return f"{text} {unit}"


def human_rate(hz: float | int) -> str:
    hz = Decimal(str(hz))
    if hz >= 1000:
        return f"{format((hz / 1000).normalize(), 'f')} kHz"
    return f"{format(hz.normalize(), 'f')} Hz"


def conversions(tf_norm, rates: Sequence[float] = REFERENCE_RATES_HZ) -> dict:
    out = {}
    for r in rates:
        s = seconds(tf_norm, r)
        out[human_rate(r)] = {"seconds": float(s), "text": human_duration(s)}
    return out
