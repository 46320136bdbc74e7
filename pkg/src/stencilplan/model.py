"""Domain model for overlap-aware stencil planning.

A stencil holds *characters*: reusable layout patterns surrounded by blank
margins.  Wafer regions are written in parallel; a region's writing time is
the shot count of everything it prints, where a character prepared on the
stencil costs one shot per repeat and an unprepared one costs its full
rectangle-decomposition shot count.  This module provides the candidate /
instance types, the writing-time evaluator, placement feasibility checking,
instance and placement file I/O, and a synthetic benchmark generator.

All lengths are integer micrometers so geometric comparisons are exact.
Everything here is a pure function of its inputs; instances are treated as
immutable after construction.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class InstanceError(ValueError):
    """Base class for instance construction / I/O failures."""


class InstanceFormatError(InstanceError):
    """Raised when an instance or placement file cannot be parsed."""


class InstanceValidationError(InstanceError):
    """Raised when a structurally valid file violates a model invariant."""


class GenerationError(InstanceError):
    """Raised when generator parameters cannot produce a valid instance."""


@dataclass(frozen=True)
class CharacterCandidate:
    """One stencil-character candidate.

    ``pw``/``ph`` are the pattern extents, ``sl``/``sr``/``st``/``sb`` the
    blank margins on each side, ``n`` the shot count when written as plain
    rectangles, and ``t[c]`` the repeat count on wafer region ``c``.
    """

    id: int
    pw: int
    ph: int
    sl: int
    sr: int
    st: int
    sb: int
    n: int
    t: tuple[int, ...]

    @property
    def w(self) -> int:
        """Total width, blanks included."""
        return self.sl + self.pw + self.sr

    @property
    def h(self) -> int:
        """Total height, blanks included."""
        return self.sb + self.ph + self.st

    @property
    def s(self) -> int:
        """Symmetric horizontal slack: ceil of the blank average."""
        return (self.sl + self.sr + 1) // 2

    def reduction(self, region: int) -> int:
        """Shot-count reduction on ``region`` if this candidate is prepared."""
        return self.t[region] * (self.n - 1)


@dataclass
class Instance:
    """A candidate set plus the stencil outline it must fit.

    ``mode`` is ``"1d"`` (row-structured stencil with ``rows`` rows of height
    ``row_height``) or ``"2d"`` (free placement).  ``regions`` is the number
    of parallel wafer regions.
    """

    candidates: list[CharacterCandidate]
    width: int
    height: int
    mode: str
    regions: int
    rows: int = 0
    row_height: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.mode not in ("1d", "2d"):
            raise InstanceValidationError(f"mode must be '1d' or '2d', got {self.mode!r}")
        if self.width <= 0 or self.height <= 0:
            raise InstanceValidationError("stencil dimensions must be > 0")
        if self.regions < 1:
            raise InstanceValidationError("regions ≥ 1")
        seen: set[int] = set()
        for c in self.candidates:
            if c.id in seen:
                raise InstanceValidationError(f"duplicate candidate id {c.id}")
            seen.add(c.id)
            if c.n < 1:
                raise InstanceValidationError(f"vsb_shots ≥ 1 violated by candidate {c.id}")
            if min(c.sl, c.sr, c.st, c.sb) < 0:
                raise InstanceValidationError(f"blanks ≥ 0 violated by candidate {c.id}")
            if c.pw <= 0 or c.ph <= 0:
                raise InstanceValidationError(f"pattern extents > 0 violated by candidate {c.id}")
            if len(c.t) != self.regions:
                raise InstanceValidationError(
                    f"usage vector of candidate {c.id} has length {len(c.t)}, expected {self.regions}")
            if any(u < 0 for u in c.t):
                raise InstanceValidationError(f"usage ≥ 0 violated by candidate {c.id}")
        if self.mode == "1d":
            if self.rows < 1 or self.row_height <= 0:
                raise InstanceValidationError("1d instance needs rows ≥ 1 and row_height > 0")
            if self.rows * self.row_height > self.height:
                raise InstanceValidationError("rows · row_height ≤ stencil height violated")
            for c in self.candidates:
                if c.h > self.row_height:
                    raise InstanceValidationError(
                        f"candidate {c.id} height {c.h} exceeds row_height {self.row_height}")

    # Derived lookups, built lazily and cached; treat the instance as
    # immutable once constructed.
    @property
    def by_id(self) -> dict[int, CharacterCandidate]:
        cache = self.__dict__.get("_by_id")
        if cache is None:
            cache = {c.id: c for c in self.candidates}
            self.__dict__["_by_id"] = cache
        return cache

    @property
    def reductions(self) -> np.ndarray:
        """(n, regions) int64 matrix of per-region shot reductions."""
        cache = self.__dict__.get("_reductions")
        if cache is None:
            cache = np.array([[u * (c.n - 1) for u in c.t] for c in self.candidates],
                             dtype=np.int64).reshape(len(self.candidates), self.regions)
            self.__dict__["_reductions"] = cache
        return cache

    @property
    def vsb_times(self) -> np.ndarray:
        """Per-region writing time with no characters prepared."""
        cache = self.__dict__.get("_vsb")
        if cache is None:
            cache = np.zeros(self.regions, dtype=np.int64)
            for c in self.candidates:
                cache += np.array(c.t, dtype=np.int64) * c.n
            self.__dict__["_vsb"] = cache
        return cache


@dataclass(frozen=True)
class WritingTimeReport:
    """Per-region writing times for one stencil selection."""

    per_region: tuple[int, ...]
    t_total: int
    t_vsb: tuple[int, ...]
    selected: tuple[int, ...]
    sum_shots: int

    def to_dict(self, runtime_ms: float | None = None) -> dict:
        d = {
            "t_total": self.t_total,
            "t_per_region": list(self.per_region),
            "t_vsb": list(self.t_vsb),
            "sum_shots": self.sum_shots,
            "selected": list(self.selected),
        }
        if runtime_ms is not None:
            d["runtime_ms"] = runtime_ms
        return d


def evaluate(instance: Instance, selected_ids: Iterable[int]) -> WritingTimeReport:
    """Writing-time report for preparing exactly ``selected_ids`` on the stencil.

    Per region c: T_c = T_c^VSB − Σ_{i selected} t_ic·(n_i − 1); the system
    time is the maximum over regions.
    """
    selected = set(selected_ids)
    unknown = selected - instance.by_id.keys()
    if unknown:
        raise InstanceError(f"unknown candidate id {min(unknown)}")
    t = instance.vsb_times.copy()
    if selected:
        ids = [i for i, c in enumerate(instance.candidates) if c.id in selected]
        t -= instance.reductions[ids].sum(axis=0)
    per_region = tuple(int(v) for v in t)
    return WritingTimeReport(
        per_region=per_region,
        t_total=max(per_region) if per_region else 0,
        t_vsb=tuple(int(v) for v in instance.vsb_times),
        selected=tuple(sorted(selected)),
        sum_shots=int(sum(per_region)),
    )


@dataclass
class Placement1D:
    """Row layout: per row an ordered list of (candidate id, x of blank box)."""

    rows: list[list[tuple[int, int]]]


@dataclass
class Placement2D:
    """Free layout: (id, x, y) blank-box corners plus a sequence pair."""

    placed: list[tuple[int, int, int]]
    seq_pair: tuple[tuple[int, ...], tuple[int, ...]]


@dataclass(frozen=True)
class Violation:
    kind: str
    ids: tuple[int, ...]
    message: str


@dataclass
class PlacementCheck:
    feasible: bool
    violations: list[Violation] = field(default_factory=list)


def _check_ids(instance: Instance, ids: list[int], out: list[Violation]) -> None:
    seen: set[int] = set()
    for i in ids:
        if i not in instance.by_id:
            out.append(Violation("unknown-id", (i,), f"candidate {i} not in instance"))
        if i in seen:
            out.append(Violation("duplicate-id", (i,), f"candidate {i} placed twice"))
        seen.add(i)


def _validate_1d(instance: Instance, placement: Placement1D) -> PlacementCheck:
    out: list[Violation] = []
    if len(placement.rows) > instance.rows:
        out.append(Violation("row-count", (), f"{len(placement.rows)} rows > {instance.rows}"))
    _check_ids(instance, [i for row in placement.rows for i, _ in row], out)
    if out:
        return PlacementCheck(False, out)
    for row in placement.rows:
        if not row:
            continue
        cands = [instance.by_id[i] for i, _ in row]
        xs = [x for _, x in row]
        for (a, xa), (b, xb) in zip(zip(cands, xs), zip(cands[1:], xs[1:])):
            if xb < xa:
                out.append(Violation("row-order", (a.id, b.id), "x must be non-decreasing"))
            # pattern gap ≥ max of facing blanks  <=>  x_b - x_a ≥ w_a - min(sr_a, sl_b)
            if xb - xa < a.w - min(a.sr, b.sl):
                out.append(Violation("overlap", (a.id, b.id),
                                     f"gap {xb - xa} < {a.w - min(a.sr, b.sl)}"))
        first, xf = cands[0], xs[0]
        last, xl = cands[-1], xs[-1]
        if xf + first.sl < 0:
            out.append(Violation("outline-left", (first.id,), "pattern starts before 0"))
        if xl + last.w - last.sr > instance.width:
            out.append(Violation("outline-right", (last.id,), "pattern ends past stencil width"))
    return PlacementCheck(not out, out)


def _pair_separated(a: CharacterCandidate, xa: int, ya: int,
                    b: CharacterCandidate, xb: int, yb: int) -> bool:
    # a left of b, b left of a, a below b, or b below a; pattern gap must
    # cover the larger of the two facing blanks.
    if (xb + b.sl) - (xa + a.w - a.sr) >= max(a.sr, b.sl):
        return True
    if (xa + a.sl) - (xb + b.w - b.sr) >= max(b.sr, a.sl):
        return True
    if (yb + b.sb) - (ya + a.h - a.st) >= max(a.st, b.sb):
        return True
    if (ya + a.sb) - (yb + b.h - b.st) >= max(b.st, a.sb):
        return True
    return False


def _validate_2d(instance: Instance, placement: Placement2D) -> PlacementCheck:
    out: list[Violation] = []
    ids = [i for i, _, _ in placement.placed]
    _check_ids(instance, ids, out)
    for perm in placement.seq_pair:
        if sorted(perm) != sorted(ids):
            out.append(Violation("seq-pair", (), "permutations must contain exactly the placed ids"))
            break
    if out:
        return PlacementCheck(False, out)
    blocks = [(instance.by_id[i], x, y) for i, x, y in placement.placed]
    for c, x, y in blocks:
        if x + c.sl < 0 or y + c.sb < 0 or x + c.w - c.sr > instance.width \
                or y + c.h - c.st > instance.height:
            out.append(Violation("outline", (c.id,), "pattern outside stencil"))
    for i in range(len(blocks)):
        a, xa, ya = blocks[i]
        for j in range(i + 1, len(blocks)):
            b, xb, yb = blocks[j]
            if not _pair_separated(a, xa, ya, b, xb, yb):
                out.append(Violation("overlap", (a.id, b.id), "no axis separates the patterns"))
    return PlacementCheck(not out, out)


def validate_placement(instance: Instance, placement) -> PlacementCheck:
    """Feasibility verdict for a placement; infeasibility is a verdict, not an error."""
    if isinstance(placement, Placement1D):
        if instance.mode != "1d":
            raise InstanceError("placement mode 1d does not match instance mode " + instance.mode)
        return _validate_1d(instance, placement)
    if isinstance(placement, Placement2D):
        if instance.mode != "2d":
            raise InstanceError("placement mode 2d does not match instance mode " + instance.mode)
        return _validate_2d(instance, placement)
    raise InstanceError(f"unsupported placement type {type(placement).__name__}")


# ---------------------------------------------------------------------------
# Instance / placement / report files (self-describing JSON, UTF-8).

FORMAT_VERSION = 1


def _require(doc: dict, key: str, path: str):
    if key not in doc:
        raise InstanceFormatError(f"missing field '{key}' in {path}")
    return doc[key]


def instance_to_dict(instance: Instance) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "mode": instance.mode,
        "stencil": {
            "w": instance.width,
            "h": instance.height,
            "rows": instance.rows if instance.mode == "1d" else None,
            "row_height": instance.row_height if instance.mode == "1d" else None,
        },
        "regions": instance.regions,
        "candidates": [
            {"id": c.id, "pw": c.pw, "ph": c.ph, "sl": c.sl, "sr": c.sr,
             "st": c.st, "sb": c.sb, "n": c.n, "t": list(c.t)}
            for c in instance.candidates
        ],
        "seed": instance.seed,
    }


def instance_from_dict(doc: dict) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance document must be a JSON object")
    version = _require(doc, "format_version", "instance")
    if version != FORMAT_VERSION:
        raise InstanceFormatError(f"unsupported format_version {version}")
    mode = _require(doc, "mode", "instance")
    stencil = _require(doc, "stencil", "instance")
    cands = []
    for idx, entry in enumerate(_require(doc, "candidates", "instance")):
        path = f"candidates[{idx}]"
        cands.append(CharacterCandidate(
            id=int(_require(entry, "id", path)),
            pw=int(_require(entry, "pw", path)),
            ph=int(_require(entry, "ph", path)),
            sl=int(_require(entry, "sl", path)),
            sr=int(_require(entry, "sr", path)),
            st=int(_require(entry, "st", path)),
            sb=int(_require(entry, "sb", path)),
            n=int(_require(entry, "n", path)),
            t=tuple(int(u) for u in _require(entry, "t", path)),
        ))
    return Instance(
        candidates=cands,
        width=int(_require(stencil, "w", "stencil")),
        height=int(_require(stencil, "h", "stencil")),
        mode=mode,
        regions=int(_require(doc, "regions", "instance")),
        rows=int(stencil.get("rows") or 0),
        row_height=int(stencil.get("row_height") or 0),
        seed=int(doc.get("seed", 0)),
    )


def save_instance(instance: Instance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(instance), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_instance(path: str) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"{path}: line {exc.lineno} col {exc.colno}: {exc.msg}") from exc
    return instance_from_dict(doc)


def placement_to_dict(placement) -> dict:
    if isinstance(placement, Placement1D):
        return {"format_version": FORMAT_VERSION, "mode": "1d",
                "rows": [[[i, x] for i, x in row] for row in placement.rows]}
    if isinstance(placement, Placement2D):
        return {"format_version": FORMAT_VERSION, "mode": "2d",
                "placed": [[i, x, y] for i, x, y in placement.placed],
                "seq_pair": [list(placement.seq_pair[0]), list(placement.seq_pair[1])]}
    raise InstanceError(f"unsupported placement type {type(placement).__name__}")


def placement_from_dict(doc: dict):
    mode = _require(doc, "mode", "placement")
    if mode == "1d":
        return Placement1D(rows=[[(int(i), int(x)) for i, x in row]
                                 for row in _require(doc, "rows", "placement")])
    if mode == "2d":
        pair = _require(doc, "seq_pair", "placement")
        return Placement2D(
            placed=[(int(i), int(x), int(y)) for i, x, y in _require(doc, "placed", "placement")],
            seq_pair=(tuple(int(i) for i in pair[0]), tuple(int(i) for i in pair[1])),
        )
    raise InstanceFormatError(f"unsupported placement mode {mode!r}")


def save_placement(placement, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(placement_to_dict(placement), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_placement(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"{path}: line {exc.lineno} col {exc.colno}: {exc.msg}") from exc
    return placement_from_dict(doc)


# ---------------------------------------------------------------------------
# Synthetic benchmark generator.

@dataclass
class GeneratorSpec:
    """Parameters for the synthetic instance generator.

    Defaults follow the published benchmark statistics: ~40 µm nominal
    character size, blank margins of a few µm per side, usage counts up to a
    few hundred repeats with a 20% chance a candidate is unused in a region.
    """

    mode: str = "1d"
    count: int = 1000
    width: int = 1000
    height: int = 1000
    regions: int = 10
    row_height: int = 40
    width_range: tuple[int, int] = (30, 50)
    height_range: tuple[int, int] = (30, 40)
    blank_range: tuple[int, int] = (2, 10)
    shots_range: tuple[int, int] = (5, 30)
    usage_max: int = 400
    zero_usage_prob: float = 0.2
    region_skew: float = 0.0

    @classmethod
    def preset(cls, name: str, mode: str = "1d", regions: int = 10) -> "GeneratorSpec":
        if name == "small":
            return cls(mode=mode, count=1000, width=1000, height=1000, regions=regions,
                       height_range=(30, 40) if mode == "1d" else (30, 50))
        if name == "large":
            return cls(mode=mode, count=4000, width=2000, height=2000, regions=regions,
                       height_range=(30, 40) if mode == "1d" else (30, 50))
        raise GenerationError(f"unknown preset {name!r}")


def generate_instance(spec: GeneratorSpec, seed: int) -> Instance:
    """Deterministic synthetic instance for (spec, seed).

    ``region_skew`` > 0 draws a per-region usage scale in
    [1 − skew, 1] so regions differ in layout density, which the benchmarks
    visibly do; 0 keeps all regions identically distributed.
    """
    if spec.count < 0:
        raise GenerationError("count ≥ 0")
    if spec.mode not in ("1d", "2d"):
        raise GenerationError(f"mode must be '1d' or '2d', got {spec.mode!r}")
    if spec.width <= 0 or spec.height <= 0 or spec.regions < 1:
        raise GenerationError("stencil dimensions and regions must be positive")
    lo_w, hi_w = spec.width_range
    lo_b, hi_b = spec.blank_range
    if lo_b < 0 or lo_w <= 2 * hi_b:
        raise GenerationError("width_range must exceed two blank margins")
    rng = random.Random(seed)
    # Per-region usage scale: drawn before candidates so candidate draws are
    # unaffected when region_skew == 0.
    scales = [1.0 - spec.region_skew * rng.random() if spec.region_skew > 0 else 1.0
              for _ in range(spec.regions)]
    cands: list[CharacterCandidate] = []
    for cid in range(spec.count):
        w = rng.randint(lo_w, hi_w)
        sl = rng.randint(lo_b, hi_b)
        sr = rng.randint(lo_b, hi_b)
        if spec.mode == "1d":
            h = rng.randint(*spec.height_range)
            st = sb = 0
            ph = h
            if h > spec.row_height:
                raise GenerationError(
                    f"row_height {spec.row_height} < candidate height {h}; no row can host it")
        else:
            h = rng.randint(*spec.height_range)
            st = rng.randint(lo_b, hi_b)
            sb = rng.randint(lo_b, hi_b)
            ph = h - st - sb
            if ph <= 0:
                raise GenerationError("height_range must exceed two blank margins")
        shots = rng.randint(*spec.shots_range)
        usage = []
        for c in range(spec.regions):
            if rng.random() < spec.zero_usage_prob:
                usage.append(0)
            else:
                usage.append(int(rng.randint(0, spec.usage_max) * scales[c]))
        cands.append(CharacterCandidate(id=cid, pw=w - sl - sr, ph=ph, sl=sl, sr=sr,
                                        st=st, sb=sb, n=shots, t=tuple(usage)))
    rows = spec.height // spec.row_height if spec.mode == "1d" else 0
    if spec.mode == "1d" and rows < 1:
        raise GenerationError("stencil height below one row")
    return Instance(candidates=cands, width=spec.width, height=spec.height, mode=spec.mode,
                    regions=spec.regions, rows=rows,
                    row_height=spec.row_height if spec.mode == "1d" else 0, seed=seed)
