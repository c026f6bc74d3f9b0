from __future__ import annotations

import csv
import json
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Any, Optional

from loguru import logger

from .types import EsPoint, EsResult, QosEstimate

ES_SURFACE_FIELDS = ["n0", "m0", "p_a1", "p_a2", "objective", "eps_q", "gamma_th"]
EVAL_REALIZATION_FIELDS = ["source", "instance", "realization", "p_vio"]
EVAL_SUMMARY_FIELDS = ["source", "p_vio", "std_error", "units", "trials", "gain"]
EVAL_CDF_FIELDS = ["source", "p_vio", "cdf"]
LOSS_FIELDS = ["iteration", "loss"]
QOS_LINK_FIELDS = ["link", "p_k"]
ANALYZE_SURFACE_FIELDS = ["density", *ES_SURFACE_FIELDS]
ANALYZE_SUMMARY_FIELDS = ["density", "es_n0", "es_m0", "es_objective", "krep_n", "krep_objective", "norep_objective"]


def es_row(point: EsPoint) -> dict[str, Any]:
    return {field: getattr(point, field) for field in ES_SURFACE_FIELDS}


class ResultWriter:
    """
    Writes the output files of one run into a directory.

    Attributes:
        - `directory (Path)`: Where every file goes, created on first write.
        - `meta (dict[str, Any])`: Provenance written into every file, at least `config_hash` and `seed`.

    CSV files start with one `# key=value` line per `meta` entry, followed by the header row and the
    data rows. Summary values may follow as `# key=value` footer lines. JSON files carry `meta` as
    their first key. Floats are written in their shortest round-trip form, so identical runs give
    byte-identical files.
    """

    def __init__(self, directory: Path, meta: Mapping[str, Any]) -> None:
        self.directory = directory
        self.meta = dict(meta)

    def _path(self, name: str) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        return self.directory / name

    def write_csv(
        self,
        name: str,
        fieldnames: list[str],
        rows: Iterable[Mapping[str, Any]],
        footer: Optional[Mapping[str, Any]] = None,
    ) -> Path:
        path = self._path(name)
        with path.open("w", encoding="utf-8", newline="") as file:
            for key, value in self.meta.items():
                file.write(f"# {key}={value}\n")
            writer = csv.DictWriter(file, fieldnames=fieldnames, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow(row)
            for key, value in (footer or {}).items():
                file.write(f"# {key}={value}\n")
        logger.debug(f"Wrote {path}")
        return path

    def write_json(self, name: str, data: Mapping[str, Any]) -> Path:
        path = self._path(name)
        path.write_text(json.dumps({"meta": self.meta, **data}, indent=2) + "\n", encoding="utf-8")
        logger.debug(f"Wrote {path}")
        return path

    def write_es(self, result: EsResult, prefix: str = "es") -> list[Path]:
        """`<prefix>-surface.csv` with every (N0, M0) cell and `<prefix>-optimum.json`"""
        best = next(p for p in result.surface if (p.n0, p.m0) == (result.n0, result.m0))
        surface = self.write_csv(
            f"{prefix}-surface.csv",
            ES_SURFACE_FIELDS,
            (es_row(p) for p in result.surface),
        )
        optimum = self.write_json(
            f"{prefix}-optimum.json",
            {"optimum": es_row(best)},
        )
        return [surface, optimum]

    def write_estimate(self, estimate: QosEstimate, stem: str) -> list[Path]:
        """
        `<stem>.csv` with one `link, p_k` row per measured link and a `p_vio`, `trials`, `seed`
        footer, plus the same numbers in `<stem>.json`
        """
        rows = [{"link": int(link), "p_k": float(p)} for link, p in zip(estimate.links, estimate.p_k)]
        totals = {"p_vio": estimate.p_vio, "trials": estimate.trials, "seed": estimate.seed}
        table = self.write_csv(f"{stem}.csv", QOS_LINK_FIELDS, rows, footer=totals)
        twin = self.write_json(
            f"{stem}.json",
            {"estimate": {"links": [r["link"] for r in rows], "p_k": [r["p_k"] for r in rows], **totals}},
        )
        return [table, twin]


def read_csv(path: Path) -> tuple[dict[str, str], list[dict[str, str]]]:
    """
    Read a CSV written by `ResultWriter.write_csv`.

    Returns the `# key=value` lines (header and footer) and the data rows.
    """
    meta: dict[str, str] = {}
    body: list[str] = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            meta[key] = value
        else:
            body.append(line)
    return meta, list(csv.DictReader(body))
