"""File formats: newline-delimited databases, CSV exports, manifests.

All writers are deterministic (sorted JSON keys, shortest round-trip
float formatting, fixed newlines) so reruns with the same seed produce
byte-identical files.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .exceptions import IngestionError
from .measures import BehaviourPoint
from .search import ArchiveEntry, SearchIndividual
from .substrates import Genotype, SubstrateBase


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def dump_json(path: str, payload: dict):
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_json(path: str) -> dict:
    if not os.path.exists(path):
        raise IngestionError(f"file not found: {path}")
    with open(path) as fh:
        return json.load(fh)


def format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: str, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_cell(v) for v in row) + "\n")


def read_csv(path: str):
    """Parse a CSV written by write_csv into (header, list of string rows)."""
    if not os.path.exists(path):
        raise IngestionError(f"file not found: {path}")
    with open(path) as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines:
        raise IngestionError(f"{path}: file is empty")
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


# -- search databases ---------------------------------------------------


def save_database(path: str, individuals: list[SearchIndividual]):
    with open(path, "w") as fh:
        for ind in individuals:
            record = {
                "run_id": ind.run_id,
                "generation": ind.generation,
                "genes": [float(g) for g in ind.genotype.genes],
                "kr": int(ind.behaviour.kr),
                "gr": int(ind.behaviour.gr),
                "mc": float(ind.behaviour.mc),
                "degenerate": bool(ind.behaviour.degenerate),
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_database(path: str, substrate: SubstrateBase) -> list[SearchIndividual]:
    if not os.path.exists(path):
        raise IngestionError(f"database file not found: {path}")
    individuals = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                individuals.append(
                    SearchIndividual(
                        genotype=Genotype(np.asarray(rec["genes"], dtype=float), substrate),
                        behaviour=BehaviourPoint(
                            int(rec["kr"]), int(rec["gr"]), float(rec["mc"]), bool(rec.get("degenerate", False))
                        ),
                        generation=int(rec["generation"]),
                        run_id=int(rec["run_id"]),
                    )
                )
            except (ValueError, KeyError) as exc:
                raise IngestionError(f"{path}:{lineno}: bad database record ({exc})") from None
    return individuals


def load_behaviours(path: str):
    """Behaviour points of a database without reconstructing genotypes.

    Returns (points (n, 3), generations (n,), run_ids (n,)).
    """
    if not os.path.exists(path):
        raise IngestionError(f"database file not found: {path}")
    points, gens, runs = [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                points.append((float(rec["kr"]), float(rec["gr"]), float(rec["mc"])))
                gens.append(int(rec["generation"]))
                runs.append(int(rec["run_id"]))
            except (ValueError, KeyError) as exc:
                raise IngestionError(f"{path}:{lineno}: bad database record ({exc})") from None
    return (
        np.asarray(points, dtype=float).reshape(len(points), 3),
        np.asarray(gens, dtype=int),
        np.asarray(runs, dtype=int),
    )


def save_archive_log(path: str, entries: list[ArchiveEntry]):
    with open(path, "w") as fh:
        for e in entries:
            record = {
                "generation": e.generation,
                "kr": int(e.behaviour.kr),
                "gr": int(e.behaviour.gr),
                "mc": float(e.behaviour.mc),
                "novelty": None if e.novelty is None else float(e.novelty),
                "rho_min": None if e.rho_min is None else float(e.rho_min),
                "seeded": bool(e.seeded),
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_archive_log(path: str) -> list[ArchiveEntry]:
    if not os.path.exists(path):
        raise IngestionError(f"archive log not found: {path}")
    entries = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                entries.append(
                    ArchiveEntry(
                        behaviour=BehaviourPoint(int(rec["kr"]), int(rec["gr"]), float(rec["mc"])),
                        generation=int(rec["generation"]),
                        novelty=rec["novelty"],
                        rho_min=rec["rho_min"],
                        seeded=bool(rec["seeded"]),
                    )
                )
            except (ValueError, KeyError) as exc:
                raise IngestionError(f"{path}:{lineno}: bad archive record ({exc})") from None
    return entries


# -- (behaviour, NMSE) pair files ----------------------------------------

PAIRS_HEADER = ("run_id", "generation", "kr", "gr", "mc", "nmse")


def save_pairs(path: str, rows):
    """Rows of (run_id, generation, kr, gr, mc, nmse)."""
    write_csv(path, PAIRS_HEADER, rows)


def load_pairs(path: str):
    """Returns (X (n, 3) behaviours, y (n,) NMSE values)."""
    header, rows = read_csv(path)
    if tuple(header) != PAIRS_HEADER:
        raise IngestionError(f"{path}: expected header {','.join(PAIRS_HEADER)}, got {','.join(header)}")
    if not rows:
        return np.empty((0, 3)), np.empty(0)
    try:
        data = np.asarray([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise IngestionError(f"{path}: unparseable pair row ({exc})") from None
    return data[:, 2:5], data[:, 5]
