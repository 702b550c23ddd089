"""CSV emission for result tables."""

import csv
import io
import math
import sys

HEADER = ("scenario", "method", "snr_db", "block", "metric", "value", "n_trials", "stderr")


class EmptyResultError(ValueError):
    pass


def _num(x):
    # repr keeps full double precision; nan and inf stay readable
    return repr(float(x))


def sort_key(row):
    return (row.method, row.snr_db, -1 if row.block is None else row.block, row.metric)


def format_rows(rows):
    """CSV text for ``rows`` in deterministic order (method, snr, block, metric)."""
    rows = sorted(rows, key=sort_key)
    if not rows:
        raise EmptyResultError("result table is empty")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for r in rows:
        writer.writerow([
            r.scenario, r.method, _num(r.snr_db), "" if r.block is None else int(r.block),
            r.metric, _num(r.value), int(r.n_trials), _num(r.stderr),
        ])
    return buf.getvalue()


def thin_for_plot(rows, max_points=500):
    """Keep at most about ``max_points`` blocks per (method, snr, metric) series.

    Run-level summaries (no block) are dropped.
    """
    series = {}
    for r in rows:
        if r.block is not None:
            series.setdefault((r.method, r.snr_db, r.metric), []).append(r)
    out = []
    for items in series.values():
        items.sort(key=lambda r: r.block)
        stride = max(1, math.ceil(len(items) / max_points))
        keep = items[::stride]
        if keep[-1] is not items[-1]:
            keep.append(items[-1])
        out.extend(keep)
    return out


def emit_results(rows, out=None, plot_path=None, max_points=500):
    """Write the table to ``out`` (a path, a file object, or stdout when None).

    ``plot_path`` additionally receives a thinned copy of the per-block series.
    """
    text = format_rows(rows)
    if out is None:
        sys.stdout.write(text)
    elif hasattr(out, "write"):
        out.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    if plot_path is not None:
        thinned = thin_for_plot(rows, max_points)
        if not thinned:
            raise EmptyResultError("no per-block series to thin for plotting")
        with open(plot_path, "w", newline="") as fh:
            fh.write(format_rows(thinned))
    return text


def read_results(path_or_text):
    """Parse a result CSV back into a list of dicts with typed values."""
    if "\n" in path_or_text:
        text = path_or_text
    else:
        with open(path_or_text) as fh:
            text = fh.read()
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != HEADER:
        raise ValueError(f"unexpected header {reader.fieldnames}")
    rows = []
    for d in reader:
        d["snr_db"] = float(d["snr_db"])
        d["block"] = int(d["block"]) if d["block"] else None
        d["value"] = float(d["value"])
        d["n_trials"] = int(d["n_trials"])
        d["stderr"] = float(d["stderr"])
        rows.append(d)
    return rows
