"""Multitype point patterns and their CSV form (header ``taxon,x,y``)."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import OutOfWindow, ParseError, UnknownTaxon
from .geometry import Window

HEADER = ["taxon", "x", "y"]


@dataclass(frozen=True)
class TaxonId:
    index: int  # 1-based
    name: str


@dataclass(frozen=True, eq=False)
class MultitypePattern:
    """Labelled points in a window.

    ``taxa`` fixes the registered labels (and their 1-based indices);
    ``labels[k]`` is the 0-based position in ``taxa`` of point ``k``.
    """

    window: Window
    taxa: tuple[str, ...]
    coords: np.ndarray
    labels: np.ndarray
    _by_taxon: dict = field(init=False, repr=False)

    def __post_init__(self):
        taxa = tuple(str(t) for t in self.taxa)
        if any(not t for t in taxa):
            raise ValueError("taxon names must be nonempty")
        if len(set(taxa)) != len(taxa):
            raise ValueError("taxon names must be unique")
        coords = np.asarray(self.coords, dtype=float).reshape(-1, 2)
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if len(coords) != len(labels):
            raise ValueError("coords and labels differ in length")
        if len(labels) and (labels.min() < 0 or labels.max() >= len(taxa)):
            raise ValueError("label index outside registered taxa")
        if len(coords) and not np.all(self.window.contains(coords)):
            raise OutOfWindow(np.flatnonzero(~self.window.contains(coords)).tolist())
        coords.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "taxa", taxa)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_by_taxon", {t: i for i, t in enumerate(taxa)})

    @classmethod
    def from_groups(cls, window: Window, groups: dict, taxa=None) -> "MultitypePattern":
        """Build from ``{taxon: (n, 2) array}``; ``taxa`` may register extra empty labels."""
        names = list(taxa) if taxa is not None else list(groups)
        for t in groups:
            if t not in names:
                raise UnknownTaxon(t)
        coords, labels = [], []
        for i, t in enumerate(names):
            pts = np.asarray(groups.get(t, np.empty((0, 2))), dtype=float).reshape(-1, 2)
            coords.append(pts)
            labels.append(np.full(len(pts), i))
        return cls(window, tuple(names), np.vstack(coords), np.concatenate(labels))

    @property
    def taxon_ids(self) -> list[TaxonId]:
        return [TaxonId(i + 1, t) for i, t in enumerate(self.taxa)]

    def __len__(self):
        return len(self.labels)

    def _index(self, taxon) -> int:
        if isinstance(taxon, TaxonId):
            taxon = taxon.name
        try:
            return self._by_taxon[taxon]
        except KeyError:
            raise UnknownTaxon(taxon) from None

    def count(self, taxon) -> int:
        return int(np.count_nonzero(self.labels == self._index(taxon)))

    def counts(self) -> dict[str, int]:
        n = np.bincount(self.labels, minlength=len(self.taxa))
        return {t: int(k) for t, k in zip(self.taxa, n)}

    def points(self, taxon) -> np.ndarray:
        return self.coords[self.labels == self._index(taxon)]

    def relabel(self, mapping: dict) -> "MultitypePattern":
        return MultitypePattern(self.window, tuple(mapping.get(t, t) for t in self.taxa),
                                self.coords, self.labels)

    def __eq__(self, other):
        if not isinstance(other, MultitypePattern):
            return NotImplemented
        return (self.window == other.window and self.taxa == other.taxa
                and np.array_equal(self.coords, other.coords)
                and np.array_equal(self.labels, other.labels))

    __hash__ = None


def count(pattern: MultitypePattern, taxon) -> int:
    return pattern.count(taxon)


def read_pattern_csv(path, window: Window, taxa=None, clip: bool = False):
    """Read a ``taxon,x,y`` file.

    Returns ``(pattern, n_dropped)``. Out-of-window rows raise ``OutOfWindow``
    unless ``clip`` is set, in which case they are dropped and counted. When
    ``taxa`` is given, any other label raises ``UnknownTaxon``; otherwise taxa
    are registered in order of first appearance.
    """
    names = list(taxa) if taxa is not None else []
    known = set(names)
    rows, bad_lines, dropped = [], [], 0
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != HEADER:
            raise ParseError(f"expected header {','.join(HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}", line=lineno)
            name = row[0].strip()
            if not name:
                raise ParseError("empty taxon label", line=lineno)
            try:
                x, y = float(row[1]), float(row[2])
            except ValueError:
                raise ParseError(f"non-numeric coordinate in {row!r}", line=lineno) from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ParseError("non-finite coordinate", line=lineno)
            if name not in known:
                if taxa is not None:
                    raise UnknownTaxon(name)
                names.append(name)
                known.add(name)
            if not window.contains((x, y)):
                if clip:
                    dropped += 1
                    continue
                bad_lines.append(lineno)
                continue
            rows.append((name, x, y))
    if bad_lines:
        raise OutOfWindow(bad_lines)
    index = {t: i for i, t in enumerate(names)}
    coords = np.array([(x, y) for _, x, y in rows], dtype=float).reshape(-1, 2)
    labels = np.array([index[t] for t, _, _ in rows], dtype=np.int64)
    return MultitypePattern(window, tuple(names), coords, labels), dropped


def write_pattern_csv(pattern: MultitypePattern, path) -> Path:
    # repr() gives the shortest string that round-trips exactly
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for (x, y), lab in zip(pattern.coords.tolist(), pattern.labels.tolist()):
            w.writerow([pattern.taxa[lab], repr(x), repr(y)])
    return path
