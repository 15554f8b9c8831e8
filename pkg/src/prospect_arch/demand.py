"""Prospect-agent demand curves.

Two trader types respond to the daily log-return ``y``:

* ``D1(y)`` -- excess-demand *rate*, a piecewise polynomial;
* ``D2(y)`` -- cumulative demand, given through its slope ``D2'(y)``, a pair of
  stretched exponentials joined at a centre, and anchored by ``D2(anchor) = 0``.

``D2`` is tabulated once at construction on a fixed 4001-node grid over
``[-0.2, 0.2]`` (8-point Gauss-Legendre per cell) and looked up afterwards: the
table value at the node below ``y`` plus a Gauss-Legendre integral over the
remaining partial cell.
"""

from __future__ import annotations

import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._errors import DomainError, RangeError

__all__ = [
    "PiecewisePoly",
    "StretchedExpPair",
    "DemandCurve",
    "equity_preset",
    "fx_preset",
    "eval_d1",
    "eval_d2_slope",
    "eval_d2",
    "continuity_report",
    "read_curve_file",
    "write_curve_file",
]

TABLE_LO = -0.2
TABLE_HI = 0.2
TABLE_POINTS = 4001

# 8-point Gauss-Legendre rule on [-1, 1], used to integrate from a grid node to y.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _as_finite(y):
    arr = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("yield must be finite")
    return arr


def _scalar_or_array(arr, template):
    return float(arr) if np.ndim(template) == 0 else arr


@dataclass(frozen=True)
class PiecewisePoly:
    """Polynomial pieces on half-open intervals ``[b_k, b_{k+1})``.

    ``segments[0]`` covers ``y < breakpoints[0]`` and ``segments[-1]`` covers
    ``y >= breakpoints[-1]``. Coefficients are constant-first.
    """

    breakpoints: tuple[float, ...]
    segments: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        segs = tuple(tuple(float(c) for c in seg) for seg in self.segments)
        if any(b1 <= b0 for b0, b1 in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly ascending")
        if len(segs) != len(bps) + 1:
            raise ValueError(f"expected {len(bps) + 1} segments, got {len(segs)}")
        if any(len(seg) == 0 for seg in segs):
            raise ValueError("every segment needs at least one coefficient")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "segments", segs)

    def segment_index(self, y):
        return np.searchsorted(self.breakpoints, y, side="right")

    def __call__(self, y):
        arr = _as_finite(y)
        idx = self.segment_index(arr)
        out = np.empty(arr.shape, dtype=float)
        for k, seg in enumerate(self.segments):
            mask = idx == k
            if np.any(mask):
                # polyval wants highest degree first
                out[mask] = np.polyval(seg[::-1], arr[mask])
        return _scalar_or_array(out, y)

    def derivative(self) -> PiecewisePoly:
        segs = []
        for seg in self.segments:
            d = tuple(k * c for k, c in enumerate(seg))[1:]
            segs.append(d or (0.0,))
        return PiecewisePoly(self.breakpoints, tuple(segs))


@dataclass(frozen=True)
class StretchedExpPair:
    """``amp * exp(-rate * |y - center| ** pow)`` with separate left/right rates.

    The left branch covers ``y <= center``.
    """

    center: float
    amp: float
    left_rate: float
    left_pow: float
    right_rate: float
    right_pow: float

    def __post_init__(self):
        for name in ("amp", "left_rate", "left_pow", "right_rate", "right_pow"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be positive, got {val!r}")
        if not math.isfinite(self.center):
            raise ValueError("center must be finite")

    def __call__(self, y):
        arr = _as_finite(y)
        dist = np.abs(arr - self.center)
        left = arr <= self.center
        rate = np.where(left, self.left_rate, self.right_rate)
        pw = np.where(left, self.left_pow, self.right_pow)
        out = self.amp * np.exp(-rate * dist**pw)
        return _scalar_or_array(out, y)


@dataclass(frozen=True, eq=False)
class DemandCurve:
    """Excess-demand rate ``D1`` plus cumulative demand ``D2`` via its slope.

    Parameters
    ----------
    d1 : PiecewisePoly
    d2_slope : StretchedExpPair
    d2_anchor : float
        Yield at which ``D2`` is zero.
    name : str, optional
    """

    d1: PiecewisePoly
    d2_slope: StretchedExpPair
    d2_anchor: float
    name: str = "custom"
    d2_table: tuple[np.ndarray, np.ndarray] = field(init=False, repr=False)

    def __post_init__(self):
        if not (TABLE_LO <= self.d2_anchor <= TABLE_HI):
            raise ValueError(f"anchor {self.d2_anchor} outside table range [{TABLE_LO}, {TABLE_HI}]")
        grid = np.linspace(TABLE_LO, TABLE_HI, TABLE_POINTS)
        step = grid[1] - grid[0]
        f = self.d2_slope
        mids = grid[:-1] + 0.5 * step
        cells = 0.5 * step * (f(mids[:, None] + 0.5 * step * _GL_X) @ _GL_W)
        cum = np.concatenate(([0.0], np.cumsum(cells)))
        grid.setflags(write=False)
        object.__setattr__(self, "d2_table", (grid, cum))
        offset = self._lookup(np.asarray(self.d2_anchor))
        table = cum - offset
        table.setflags(write=False)
        object.__setattr__(self, "d2_table", (grid, table))

    def _lookup(self, arr):
        grid, table = self.d2_table
        step = grid[1] - grid[0]
        k = np.clip(np.floor((arr - TABLE_LO) / step).astype(int), 0, len(grid) - 2)
        left = grid[k]
        half = 0.5 * (arr - left)
        mid = left + half
        # Gauss-Legendre from the node below y up to y; nodes shift with y.
        nodes = mid[..., None] + half[..., None] * _GL_X
        partial = half * (self.d2_slope(nodes) @ _GL_W)
        return table[k] + partial

    def d1_rate(self, y):
        return self.d1(y)

    def slope(self, y):
        return self.d2_slope(y)

    def cumulative(self, y):
        arr = _as_finite(y)
        if np.any((arr < TABLE_LO) | (arr > TABLE_HI)):
            raise RangeError(f"D2 table covers [{TABLE_LO}, {TABLE_HI}]; got {y!r}")
        return _scalar_or_array(self._lookup(arr), y)


def eval_d1(curve: DemandCurve, y):
    """Excess-demand rate ``D1(y)`` (shares per unit time)."""
    return curve.d1(y)


def eval_d2_slope(curve: DemandCurve, y):
    """Cumulative-demand slope ``D2'(y)``; strictly positive."""
    return curve.d2_slope(y)


def eval_d2(curve: DemandCurve, y):
    """Cumulative demand ``D2(y)``; raises :class:`RangeError` off the table."""
    return curve.cumulative(y)


def continuity_report(poly: PiecewisePoly) -> list[dict]:
    """Left/right limits at every breakpoint.

    The published coefficient tables are not exactly continuous, so this is
    reported rather than repaired.
    """
    rows = []
    for k, b in enumerate(poly.breakpoints):
        left = float(np.polyval(poly.segments[k][::-1], b))
        right = float(np.polyval(poly.segments[k + 1][::-1], b))
        rows.append({"breakpoint": b, "left": left, "right": right, "jump": right - left})
    return rows


def equity_preset() -> DemandCurve:
    d1 = PiecewisePoly(
        breakpoints=(-0.0286, 0.0, 0.0648),
        segments=(
            (-352.1, -504.0),
            (0.0, 2.63e4, 5.12e5),
            (0.0, 3.5e4, -4.5e5, 1.44e6),
            (435.46, 1.85e4, -2.66e5, 9.38e5),
        ),
    )
    slope = StretchedExpPair(
        center=0.008, amp=110.0, left_rate=150.0, left_pow=1.5, right_rate=40.0, right_pow=1.3
    )
    return DemandCurve(d1, slope, d2_anchor=0.008, name="equity")


def fx_preset() -> DemandCurve:
    d1 = PiecewisePoly(
        breakpoints=(0.0,),
        segments=(
            (5.381, 4.039e4, 2.169e6, 2.802e7),
            (-3.27, 3.391e4, -1.056e6, 7.935e6),
        ),
    )
    slope = StretchedExpPair(
        center=-0.002, amp=220.0, left_rate=250.0, left_pow=1.36, right_rate=100.0, right_pow=1.35
    )
    return DemandCurve(d1, slope, d2_anchor=-0.002, name="fx")


# -- plain-text curve files --------------------------------------------------

_SECTION = re.compile(r"^\[(\w+)\]$")
_SLOPE_KEYS = ("center", "amp", "left_rate", "left_pow", "right_rate", "right_pow", "anchor")


def _numbers(text, lineno):
    try:
        return [float(tok) for tok in re.split(r"[,\s]+", text.strip()) if tok]
    except ValueError:
        raise ValueError(f"line {lineno}: expected decimal numbers, got {text!r}") from None


def read_curve_file(source) -> DemandCurve:
    """Parse a curve file (see ``docs/curve_format.md``).

    ``source`` is a path or an open text stream.
    """
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
        name = Path(source).stem
    else:
        text = source.read()
        name = "custom"

    section = None
    breakpoints = None
    segments = []
    slope = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            section = m.group(1).lower()
            if section not in ("d1", "d2slope"):
                raise ValueError(f"line {lineno}: unknown section [{m.group(1)}]")
            continue
        if section is None:
            raise ValueError(f"line {lineno}: content before any section header")
        if section == "d1":
            if line.lower().startswith("breakpoints"):
                _, _, rest = line.partition("=")
                breakpoints = _numbers(rest, lineno)
            else:
                segments.append(_numbers(line, lineno))
        else:
            key, sep, value = line.partition("=")
            key = key.strip().lower()
            if not sep or key not in _SLOPE_KEYS:
                raise ValueError(f"line {lineno}: expected one of {', '.join(_SLOPE_KEYS)} = value")
            vals = _numbers(value, lineno)
            if len(vals) != 1:
                raise ValueError(f"line {lineno}: {key} takes exactly one number")
            slope[key] = vals[0]

    if breakpoints is None:
        raise ValueError("[d1] section needs a 'breakpoints =' line")
    missing = [k for k in _SLOPE_KEYS if k != "anchor" and k not in slope]
    if missing:
        raise ValueError(f"[d2slope] missing {', '.join(missing)}")
    anchor = slope.pop("anchor", slope["center"])
    return DemandCurve(
        PiecewisePoly(tuple(breakpoints), tuple(tuple(s) for s in segments)),
        StretchedExpPair(**slope),
        d2_anchor=anchor,
        name=name,
    )


def write_curve_file(curve: DemandCurve, sink=None) -> str:
    """Serialise ``curve``; returns the text and writes it to ``sink`` if given."""
    buf = io.StringIO()
    buf.write(f"# demand curve: {curve.name}\n[d1]\n")
    buf.write("breakpoints = " + ", ".join(repr(b) for b in curve.d1.breakpoints) + "\n")
    for seg in curve.d1.segments:
        buf.write(", ".join(repr(c) for c in seg) + "\n")
    buf.write("\n[d2slope]\n")
    s = curve.d2_slope
    for key in _SLOPE_KEYS[:-1]:
        buf.write(f"{key} = {getattr(s, key)!r}\n")
    buf.write(f"anchor = {curve.d2_anchor!r}\n")
    text = buf.getvalue()
    if sink is not None:
        if isinstance(sink, (str, Path)):
            Path(sink).write_text(text, encoding="utf-8")
        else:
            sink.write(text)
    return text
