"""Result aggregation for search batches: solved/invalid percentages and the
hard-set medians, joined across methods the way the comparison tables are
laid out (an expression is hard iff no joined method solved it)."""

from __future__ import annotations

import json
import math
import statistics


def _median(values):
    values = [v for v in values if v is not None and math.isfinite(v)]
    return statistics.median(values) if values else None


def summarize(rows: list[dict]) -> dict:
    """Single-method summary; hard here means unsolved by this method."""
    return join_summary({rows[0]["method"] if rows else "": rows})["methods"].popitem()[1]


def join_summary(rows_by_method: dict[str, list[dict]]) -> dict:
    """Join per-method result rows over a shared holdout.

    Targets are matched by expression text.  The hard set contains targets
    solved by none of the joined methods; per-method medians of dg_train,
    dg_int, dg_ext and dp are computed over that shared hard set.
    """
    targets: dict[str, dict[str, dict]] = {}
    for method, rows in rows_by_method.items():
        for row in rows:
            targets.setdefault(row["target"], {})[method] = row

    hard = {t for t, per_method in targets.items()
            if not any(r.get("status") == "solved" for r in per_method.values())}

    methods = {}
    for method, rows in rows_by_method.items():
        n = len(rows)
        solved = sum(1 for r in rows if r.get("status") == "solved")
        invalid = sum(1 for r in rows if r.get("status") == "invalid")
        hard_rows = [r for r in rows if r["target"] in hard]
        methods[method] = {
            "count": n,
            "solved_percent": 100.0 * solved / n if n else 0.0,
            "invalid_percent": 100.0 * invalid / n if n else 0.0,
            "hard": {
                "count": len(hard_rows),
                "dg_train_median": _median([r.get("dg_train") for r in hard_rows]),
                "dg_int_median": _median([r.get("dg_int") for r in hard_rows]),
                "dg_ext_median": _median([r.get("dg_ext") for r in hard_rows]),
                "dp_median": _median([r.get("dp") for r in hard_rows]),
            },
        }
    return {
        "targets": len(targets),
        "hard_percent": 100.0 * len(hard) / len(targets) if targets else 0.0,
        "methods": methods,
    }


def read_results_jsonl(path) -> list[dict]:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows
