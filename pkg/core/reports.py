"""CSV, JSON and xlsx emission of run artefacts, and archival into the database."""
import csv
import json
import logging
from pathlib import Path

from openpyxl import Workbook
from openpyxl.styles import Alignment, Font, PatternFill
from openpyxl.utils import get_column_letter

logger = logging.getLogger(__name__)

METRICS_COLUMNS = ("cycle", "train", "validate", "test", "weights")
PRUNE_COLUMNS = ("threshold", "removed_percent", "connections", "test_accuracy", "error")

PERCENT_COLUMNS = {"train", "validate", "test", "test_accuracy", "error", "removed_percent", "relative_size"}


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.4f}"
    return value


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(column)) for column in columns])
    logger.info("wrote %s (%d rows)", path, len(rows))
    return path


def write_metrics_csv(path, history) -> Path:
    return write_csv(path, METRICS_COLUMNS, [metrics.to_dict() for metrics in history])


def write_prune_csv(path, results) -> Path:
    return write_csv(path, PRUNE_COLUMNS, [result.to_dict() for result in results])


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("wrote %s", path)
    return path


def _autofit(ws, min_w=9, max_w=60):
    for col_idx in range(1, ws.max_column + 1):
        letter = get_column_letter(col_idx)
        max_len = 0
        for cell in ws[letter]:
            if cell.value is None:
                continue
            max_len = max(max_len, len(str(cell.value)[:200]))
            cell.alignment = Alignment(wrap_text=False, vertical="center")
        ws.column_dimensions[letter].width = max(min_w, min(int(max_len * 1.15), max_w))


def write_workbook(path, title: str, sheets: dict, summary: dict | None = None) -> Path:
    """One sheet per ``{name: (columns, rows)}`` entry, styled header, frozen and filtered.

    ``summary`` key/value pairs go to a leading sheet under ``title``.
    """
    header_fill = PatternFill(start_color="366092", end_color="366092", fill_type="solid")
    header_font = Font(bold=True, color="FFFFFF")
    center_align = Alignment(horizontal="center", vertical="center")

    wb = Workbook()
    ws = wb.active
    ws.title = "Resumo"
    ws.append([title.upper()])
    ws["A1"].font = Font(bold=True, size=14)
    for key, value in (summary or {}).items():
        ws.append([key, value if isinstance(value, (int, float, str)) or value is None else json.dumps(value, sort_keys=True)])
    _autofit(ws)

    for name, (columns, rows) in sheets.items():
        sheet = wb.create_sheet(name[:31])
        sheet.append(list(columns))
        for col in range(1, len(columns) + 1):
            cell = sheet.cell(row=1, column=col)
            cell.fill = header_fill
            cell.font = header_font
            cell.alignment = center_align
        for row in rows:
            sheet.append([row.get(column) for column in columns])
        for col, column in enumerate(columns, start=1):
            if column not in PERCENT_COLUMNS:
                continue
            for cells in sheet.iter_cols(min_col=col, max_col=col, min_row=2, max_row=sheet.max_row):
                for c in cells:
                    c.number_format = "0.00"
        if rows:
            sheet.auto_filter.ref = f"A1:{get_column_letter(len(columns))}{sheet.max_row}"
        sheet.freeze_panes = "A2"
        _autofit(sheet)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    wb.save(path)
    logger.info("wrote %s", path)
    return path


def record_run(command, network, config: dict, result=None, history=None, prune_results=(), retrained=False):
    """Archives one command run; returns the saved TrainingRun."""
    from .models import CycleRecord, PruneRecord, TrainingRun

    history = list(history if history is not None else (result.history if result else []))
    peak = result.peak if result else None
    run = TrainingRun.objects.create(
        command=command,
        network_kind=str(network.name),
        seed=int(config.get("seed", 0)),
        config=config,
        stopping_reason=str(result.stopping_reason) if result and result.stopping_reason else "",
        final_weights=network.weight_count,
        peak_validation=peak.validate if peak else None,
        test_at_peak=peak.test if peak else None,
    )
    CycleRecord.objects.bulk_create([
        CycleRecord(run=run, cycle=m.cycle, train=m.train, validate=m.validate, test=m.test, weights=m.weights)
        for m in history
    ])
    PruneRecord.objects.bulk_create([
        PruneRecord(
            run=run,
            threshold=r.threshold,
            removed_fraction=r.removed_fraction,
            remaining_weights=r.remaining_weights,
            test_accuracy=r.test_accuracy,
            retrained=r.retrained,
        )
        for r in prune_results
    ])
    logger.info("archived run %s", run)
    return run
