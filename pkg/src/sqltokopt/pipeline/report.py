"""Report rendering in json, csv and text-table form."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Dict, List, Sequence, Union

from sqltokopt.metrics import DeltaReport, StrategyReport, round_half_up

FORMATS = ("json", "csv", "text-table")
EXTENSIONS = {"json": "json", "csv": "csv", "text-table": "txt"}

REPORT_COLUMNS = ("Strategy", "AvgInTokens", "AvgOutTokens", "VSR%", "EM%", "SM%", "CodeBLEU%", "TE")
DELTA_COLUMNS = ("Strategy", "dAvgInTokens%", "dAvgOutTokens%", "dVSR(pp)", "dEM(pp)", "dSM(pp)", "dCodeBLEU(pp)",
                 "dTE%")

_REPORT_FIELDS = ("avg_in_tokens", "avg_out_tokens", "vsr_pct", "em_pct", "sm_pct", "codebleu_pct", "te")
_DELTA_FIELDS = ("d_in_pct", "d_out_pct", "d_vsr_pp", "d_em_pp", "d_sm_pp", "d_codebleu_pp", "d_te_pct")


def report_rows(reports: Sequence[StrategyReport]) -> List[Dict[str, object]]:
    return [
        dict(zip(REPORT_COLUMNS, [r.strategy.label] + [round_half_up(getattr(r, f), 2) for f in _REPORT_FIELDS]))
        for r in reports
    ]


def delta_rows(deltas: Sequence[DeltaReport]) -> List[Dict[str, object]]:
    return [
        dict(zip(DELTA_COLUMNS, [d.strategy.label] + [round_half_up(getattr(d, f), 2) for f in _DELTA_FIELDS]))
        for d in deltas
    ]


def _fmt(value: object, signed: bool = False) -> str:
    if isinstance(value, str):
        return value
    text = f"{value:+.2f}" if signed else f"{value:.2f}"
    return "0.00" if text in ("-0.00", "+0.00") else text


def render(rows: List[Dict[str, object]], columns: Sequence[str], fmt: str, signed: bool = False) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c], signed) for c in columns])
        return buf.getvalue()
    if fmt == "text-table":
        cells = [list(columns)] + [[_fmt(row[c], signed) for c in columns] for row in rows]
        widths = [max(len(r[i]) for r in cells) for i in range(len(columns))]
        lines = []
        for n, r in enumerate(cells):
            parts = [r[0].ljust(widths[0])] + [v.rjust(w) for v, w in zip(r[1:], widths[1:])]
            lines.append("  ".join(parts).rstrip())
            if n == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")


def emit_report(
    reports: Sequence[StrategyReport],
    deltas: Sequence[DeltaReport],
    fmt: str,
    directory: Union[str, Path],
) -> List[Path]:
    """Write ``strategies.<ext>`` and, when deltas exist, ``deltas.<ext>``."""
    if not reports:
        raise ValueError("no report rows")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ext = EXTENSIONS.get(fmt)
    if ext is None:
        raise ValueError(f"unknown format {fmt!r}")
    written = []
    path = directory / f"strategies.{ext}"
    path.write_text(render(report_rows(reports), REPORT_COLUMNS, fmt), encoding="utf-8")
    written.append(path)
    if deltas:
        path = directory / f"deltas.{ext}"
        path.write_text(render(delta_rows(deltas), DELTA_COLUMNS, fmt, signed=True), encoding="utf-8")
        written.append(path)
    return written
