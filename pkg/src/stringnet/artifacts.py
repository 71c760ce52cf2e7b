"""Run artifacts: trajectory and event logs, run metrics, SVG plots, cluster CSV I/O.

Every writer is byte-deterministic: numbers in CSV go through ``%.9g``, JSON is
written with sorted keys, and SVG coordinates are rounded to fixed decimals.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .engine import Phase, World

TRAJECTORY_COLUMNS = ("t", "agent_id", "class", "x", "y", "vx", "vy", "phase", "group_id", "swarm_id")


def fmt(x: float) -> str:
    return "%.9g" % x


# ---------------------------------------------------------------------------
# simulation logs
# ---------------------------------------------------------------------------


def write_trajectory_csv(world: World, path: str | Path) -> None:
    """One row per agent per recorded tick; attackers first, ids are per-class indices."""
    n_a, n_d = world.cfg.n_a, world.cfg.n_d
    aid = [str(i) for i in range(n_a)]
    did = [str(j) for j in range(n_d)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(TRAJECTORY_COLUMNS) + "\n")
        for t, ra, va, rd, vd, aphase, agid, asid, dphase, dgid, dsid, _ in world.history:
            ts = fmt(t)
            lines = []
            for cls, ids, r, v, ph, gid, sid in (("attacker", aid, ra, va, aphase, agid, asid),
                                                  ("defender", did, rd, vd, dphase, dgid, dsid)):
                for i in range(len(ids)):
                    lines.append(f"{ts},{ids[i]},{cls},{fmt(r[i, 0])},{fmt(r[i, 1])},{fmt(v[i, 0])},"
                                 f"{fmt(v[i, 1])},{Phase(int(ph[i])).label},{int(gid[i])},{int(sid[i])}\n")
            fh.write("".join(lines))


def write_events(world: World, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for e in world.events:
            fh.write(json.dumps(e.to_json(), sort_keys=True) + "\n")


@dataclass
class RunMetrics:
    status: str
    herd_success: bool
    time_to_gather: float | None
    time_to_enclose_per_group: dict[str, float] = field(default_factory=dict)
    time_to_herd_per_group: dict[str, float] = field(default_factory=dict)
    split_event_count: int = 0
    breach_count: int = 0
    max_string_stretch: float = 0.0  # longest established string / r_s_max over all ticks
    max_closed_string_stretch: float = 0.0
    closed_nets: int = 0
    herd_complete: int = 0
    containment_violations: int = 0
    final_time: float = 0.0

    def to_json(self) -> dict:
        return asdict(self)


def run_metrics(world: World, status: str) -> RunMetrics:
    """Summarise a finished run from its event log and statistics.

    ``time_to_gather`` is when the first open net is tied on the gathering
    line; a group's enclose time is when its closed net is tied and its herd
    time when it reaches its safe area.
    """
    gather = None
    enclose: dict[str, float] = {}
    herd: dict[str, float] = {}
    for e in world.events:
        if e.kind == "net established" and e.data.get("net") == "open" and gather is None:
            gather = round(e.t, 6)
        elif e.kind == "net established" and e.data.get("net") == "closed":
            enclose[str(e.data["group"])] = round(e.t, 6)
        elif e.kind == "herd complete":
            herd[str(e.data["group"])] = round(e.t, 6)
    s = world.stats
    return RunMetrics(
        status=status,
        herd_success=status == "success",
        time_to_gather=gather,
        time_to_enclose_per_group=enclose,
        time_to_herd_per_group=herd,
        split_event_count=s.splits,
        breach_count=s.breaches,
        max_string_stretch=round(s.max_stretch, 9),
        max_closed_string_stretch=round(s.max_closed_stretch, 9),
        closed_nets=s.closed_nets,
        herd_complete=s.herd_complete,
        containment_violations=s.containment_violations,
        final_time=round(world.t, 6),
    )


def write_json(obj: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------


def _n(x: float) -> str:
    s = f"{x:.2f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


class _Frame:
    """World-to-pixel map with y pointing up."""

    def __init__(self, lo, hi, width: float, height: float, pad: float = 30.0):
        span = np.maximum(np.asarray(hi, float) - np.asarray(lo, float), 1e-9)
        self.scale = min((width - 2 * pad) / span[0], (height - 2 * pad) / span[1])
        self.lo = np.asarray(lo, float)
        self.pad, self.height = pad, height

    def xy(self, p) -> tuple[str, str]:
        x = self.pad + (p[0] - self.lo[0]) * self.scale
        y = self.height - self.pad - (p[1] - self.lo[1]) * self.scale
        return _n(x), _n(y)

    def len(self, d: float) -> str:
        return _n(d * self.scale)


def _polyline(frame: _Frame, pts, color: str, width: float = 1.0, opacity: float = 1.0) -> str:
    coords = " ".join(",".join(frame.xy(p)) for p in pts)
    return (f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="{width}" '
            f'stroke-opacity="{opacity}"/>')


def trajectory_svg(world: World, width: int = 900, height: int = 700, every: int = 20) -> str:
    """Attacker paths in red, defender paths in blue, areas as disks and final strings in black.

    String edges are drawn at the final tick and at each closed-net establishment.
    """
    cfg = world.cfg
    hist = world.history
    ra = np.array([h[1] for h in hist[::every]] + [hist[-1][1]])
    rd = np.array([h[3] for h in hist[::every]] + [hist[-1][3]])
    pts = [ra.reshape(-1, 2), rd.reshape(-1, 2)]
    for d in (cfg.protected, *cfg.safe_areas):
        pts.append(np.array([d.center - d.radius, d.center + d.radius]))
    allp = np.vstack(pts)
    frame = _Frame(allp.min(axis=0), allp.max(axis=0), width, height)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    for d, color in [(cfg.protected, "#f4b6b6")] + [(s, "#b9e4b9") for s in cfg.safe_areas]:
        x, y = frame.xy(d.center)
        out.append(f'<circle cx="{x}" cy="{y}" r="{frame.len(d.radius)}" fill="{color}" stroke="#555"/>')
    for i in range(cfg.n_a):
        out.append(_polyline(frame, ra[:, i], "#d62728", 0.8, 0.8))
    for j in range(cfg.n_d):
        out.append(_polyline(frame, rd[:, j], "#1f77b4", 0.8, 0.8))
    snapshots = [len(hist) - 1]
    for e in world.events:
        if e.kind == "net established" and e.data.get("net") == "closed":
            # the closing string is in the log entry after the event's tick
            k = next((n for n, h in enumerate(hist) if h[0] > e.t + 0.5 * cfg.dt), None)
            if k is not None:
                snapshots.append(k)
    for k in sorted(set(snapshots)):
        h = hist[k]
        for a, b in h[11]:
            (x1, y1), (x2, y2) = frame.xy(h[3][a]), frame.xy(h[3][b])
            out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="black" stroke-width="1.2"/>')
    final = hist[-1]
    for p in final[1]:
        x, y = frame.xy(p)
        out.append(f'<circle cx="{x}" cy="{y}" r="2" fill="#d62728"/>')
    for p in final[3]:
        x, y = frame.xy(p)
        out.append(f'<circle cx="{x}" cy="{y}" r="2" fill="#1f77b4"/>')
    out.append(f'<text x="10" y="18" font-family="sans-serif" font-size="13">t = {final[0]:.2f} s, '
               f'attackers red, defenders blue, strings black</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def bench_svg(rows, width: int = 900, height: int = 380) -> str:
    """Two panels against the swarm count: median runtimes (log scale) and median cost gap."""
    by_n: dict[int, list] = {}
    for r in rows:
        by_n.setdefault(r.n_swarms, []).append(r)
    ns = sorted(by_n)
    med = {n: (float(np.median([r.exact_time_s for r in by_n[n]])),
               float(np.median([r.hier_time_s for r in by_n[n]])),
               float(np.median([r.gap_percent for r in by_n[n]]))) for n in ns}
    timed = bool(ns) and all(math.isfinite(med[n][0]) and math.isfinite(med[n][1]) for n in ns)
    pw = width / 2
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           '<text x="20" y="20" font-family="sans-serif" font-size="13">median run time [s] vs number of swarms</text>',
           f'<text x="{_n(pw + 20)}" y="20" font-family="sans-serif" font-size="13">'
           'median cost gap [%] vs number of swarms</text>']
    if not ns:
        out.append('<text x="20" y="60" font-family="sans-serif" font-size="13">no instances</text>')
        return "\n".join(out + ["</svg>"]) + "\n"
    x_lo, x_hi = ns[0] - 0.5, ns[-1] + 0.5

    def panel(ox: float, series, y_lo: float, y_hi: float, colors, labels):
        frame = _Frame((x_lo, y_lo), (x_hi, y_hi), pw, height - 20, pad=40)
        parts = [f'<g transform="translate({_n(ox)},20)">',
                 f'<rect x="40" y="40" width="{_n(pw - 80)}" height="{_n(height - 100)}" fill="none" stroke="#888"/>']
        for n in ns:
            x, _ = frame.xy((n, y_lo))
            parts.append(f'<text x="{x}" y="{_n(height - 45)}" font-family="sans-serif" font-size="10" '
                         f'text-anchor="middle">{n}</text>')
        for vals, color, label, k in zip(series, colors, labels, range(len(series))):
            parts.append(_polyline(frame, list(zip(ns, vals)), color, 1.5))
            parts.append(f'<text x="50" y="{55 + 14 * k}" font-family="sans-serif" font-size="11" '
                         f'fill="{color}">{label}</text>')
        parts.append(f'<text x="4" y="45" font-family="sans-serif" font-size="10">{y_hi:.3g}</text>')
        parts.append(f'<text x="4" y="{_n(height - 60)}" font-family="sans-serif" font-size="10">{y_lo:.3g}</text>')
        parts.append("</g>")
        return parts

    if timed:
        logs = [[math.log10(max(med[n][i], 1e-7)) for n in ns] for i in (0, 1)]
        lo, hi = min(min(v) for v in logs), max(max(v) for v in logs)
        out += panel(0, logs, lo - 0.1, hi + 0.1, ("#d62728", "#1f77b4"),
                     ("exact (log10 s)", "hierarchical (log10 s)"))
    else:
        out.append('<text x="40" y="80" font-family="sans-serif" font-size="12">'
                   'timing disabled (run with --timing)</text>')
    gaps = [med[n][2] for n in ns]
    out += panel(pw, [gaps], 0.0, max(max(gaps), 1.0) * 1.1, ("#2ca02c",), ("hierarchical gap",))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_bench_csv(rows, path: str | Path) -> None:
    from .bench import BENCH_COLUMNS
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(BENCH_COLUMNS) + "\n")
        for r in rows:
            fh.write(f"{r.instance_id},{r.n_swarms},{fmt(r.exact_cost)},{fmt(r.exact_time_s)},"
                     f"{fmt(r.hier_cost)},{fmt(r.hier_time_s)},{fmt(r.gap_percent)}\n")


# ---------------------------------------------------------------------------
# cluster CSV
# ---------------------------------------------------------------------------

CLUSTER_INPUT_COLUMNS = ("id", "r_x", "r_y", "v_x", "v_y")


class InputError(ValueError):
    pass


def read_cluster_csv(text: str) -> tuple[list[str], np.ndarray]:
    """Parse ``id,r_x,r_y,v_x,v_y`` rows; a header line is optional.

    Raises :class:`InputError` naming the 1-based line of the first bad row.
    """
    ids: list[str] = []
    rows: list[list[float]] = []
    for lineno, rec in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not rec or all(not c.strip() for c in rec):
            continue
        cells = [c.strip() for c in rec]
        if lineno == 1 and tuple(c.lower() for c in cells) == CLUSTER_INPUT_COLUMNS:
            continue
        if len(cells) != 5:
            raise InputError(f"line {lineno}: expected 5 fields, got {len(cells)}")
        try:
            vals = [float(c) for c in cells[1:]]
        except ValueError:
            raise InputError(f"line {lineno}: non-numeric field in {','.join(cells)}") from None
        if not all(math.isfinite(v) for v in vals):
            raise InputError(f"line {lineno}: non-finite value")
        ids.append(cells[0])
        rows.append(vals)
    return ids, np.array(rows, float).reshape(-1, 4)


def cluster_csv(ids, labels) -> str:
    return "id,cluster_id\n" + "".join(f"{i},{int(k)}\n" for i, k in zip(ids, labels))
