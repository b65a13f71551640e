"""
FTN Toeplitz Toolkit — Report Generator
Writes experiment tables as CSV with a JSON metadata sidecar and prints
console summaries.
"""

import json
import logging
import os
from datetime import datetime
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
import scipy
from rich.console import Console
from rich.table import Table

from config import CSV_FLOAT_FORMAT, OUTPUT_DIR, RNG_ALGORITHM, TOOLKIT_VERSION

logger = logging.getLogger(__name__)


def library_versions() -> Dict[str, str]:
    return {
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "toolkit": TOOLKIT_VERSION,
    }


class ReportGenerator:
    """Writes result tables for one experiment run into an output directory."""

    def __init__(self, out_dir: str = OUTPUT_DIR, console: Optional[Console] = None):
        self.out_dir = out_dir
        self.console = console or Console()
        self.written: List[str] = []
        os.makedirs(self.out_dir, exist_ok=True)

    def write_table(self, name: str, df: pd.DataFrame, echo: Dict[str, Any],
                    extra_meta: Optional[Dict[str, Any]] = None) -> str:
        """
        Save `df` as <name>.csv and the run metadata as <name>.meta.json.

        The CSV carries no timestamps, so identical inputs give identical bytes.
        """
        path = os.path.join(self.out_dir, f"{name}.csv")
        df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")

        params = echo.get("params", {})
        meta = {
            "table": name,
            "kind": echo.get("kind"),
            "config": echo,
            "seed": echo.get("seed"),
            "rng": RNG_ALGORITHM if echo.get("seed") is not None else None,
            "energy_convention": params.get("energy_convention"),
            "normalization": params.get("normalization") or None,
            "columns": list(df.columns),
            "rows": int(len(df)),
            "versions": library_versions(),
            "generated_at": datetime.now().isoformat(timespec="seconds"),
        }
        if extra_meta:
            meta.update(extra_meta)
        with open(os.path.join(self.out_dir, f"{name}.meta.json"), "w", newline="\n") as f:
            json.dump(meta, f, indent=2, default=str)

        self.written.append(path)
        logger.info(f"Saved {path} ({len(df)} rows)")
        return path

    def print_summary(self, title: str, rows: List[Dict[str, Any]]):
        """Render rows (dicts sharing the same keys) as a console table."""
        if not rows:
            logger.info(f"{title}: nothing to show")
            return
        table = Table(title=title, show_lines=False)
        columns = list(rows[0].keys())
        for col in columns:
            table.add_column(col, justify="left" if col in ("claim", "status", "target") else "right")
        for row in rows:
            table.add_row(*[_cell(row.get(col)) for col in columns])
        self.console.print(table)

    def print_footer(self):
        self.console.print(f"  Results saved to: {self.out_dir}/  ({len(self.written)} tables)")


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{value:.6g}"
    if value is None:
        return ""
    return str(value)
