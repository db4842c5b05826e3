"""Self-contained SVG rendering: frequency traces and ellipsoid projections.

No plotting dependency; the files are written directly so report output
renders anywhere.
"""

import numpy as np
import scipy.linalg

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 62, 18, 24, 44


class _Frame:
    """Affine map from data coordinates to the SVG viewport."""

    def __init__(self, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0

    def x(self, v):
        return _ML + (v - self.x0) / (self.x1 - self.x0) * (_W - _ML - _MR)

    def y(self, v):
        return _H - _MB - (v - self.y0) / (self.y1 - self.y0) * (_H - _MT - _MB)


def _ticks(lo, hi, count=5):
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / count
    mag = 10.0 ** np.floor(np.log10(raw))
    step = min((s for s in (1, 2, 5, 10) if s * mag >= raw), default=10) * mag
    first = np.ceil(lo / step) * step
    return list(np.arange(first, hi + step / 2, step))


def _axes(fr, xlabel, ylabel):
    parts = []
    ax_y = fr.y(fr.y0)
    parts.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="#444"/>')
    parts.append(f'<line x1="{_ML}" y1="{ax_y:.1f}" x2="{_W - _MR}" y2="{ax_y:.1f}" stroke="#444"/>')
    for t in _ticks(fr.x0, fr.x1):
        px = fr.x(t)
        parts.append(f'<line x1="{px:.1f}" y1="{_H - _MB}" x2="{px:.1f}" y2="{_H - _MB + 4}" stroke="#444"/>')
        parts.append(f'<text x="{px:.1f}" y="{_H - _MB + 16}" font-size="11" text-anchor="middle">{t:g}</text>')
    for t in _ticks(fr.y0, fr.y1):
        py = fr.y(t)
        parts.append(f'<line x1="{_ML - 4}" y1="{py:.1f}" x2="{_ML}" y2="{py:.1f}" stroke="#444"/>')
        parts.append(f'<text x="{_ML - 7}" y="{py + 4:.1f}" font-size="11" text-anchor="end">{t:g}</text>')
    parts.append(f'<text x="{(_ML + _W - _MR) / 2:.1f}" y="{_H - 8}" font-size="12" text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="16" y="{(_MT + _H - _MB) / 2:.1f}" font-size="12" text-anchor="middle" '
                 f'transform="rotate(-90 16 {(_MT + _H - _MB) / 2:.1f})">{ylabel}</text>')
    return parts


def _polyline(fr, xs, ys, color, width=1.4, dash=None):
    pts = " ".join(f"{fr.x(a):.2f},{fr.y(b):.2f}" for a, b in zip(xs, ys))
    d = f' stroke-dasharray="{dash}"' if dash else ""
    return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"{d}/>'


def _document(body, title):
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}"><rect width="{_W}" height="{_H}" fill="white"/>'
            f'<text x="{_W / 2:.0f}" y="16" font-size="13" text-anchor="middle">{title}</text>')
    return head + "".join(body) + "</svg>"


def plot_frequency(traj, path, title="frequency deviation", limit=None):
    """df(t) line plot with optional safety limit guides."""
    t = np.asarray(traj.times)
    f = np.asarray(traj.frequency)
    lo, hi = float(np.min(f)), float(np.max(f))
    if limit is not None:
        lo, hi = min(lo, -limit), max(hi, limit)
    pad = 0.08 * (hi - lo + 1e-12)
    fr = _Frame((float(t[0]), float(t[-1])), (lo - pad, hi + pad))
    body = _axes(fr, "time [s]", "df [Hz]")
    if limit is not None:
        for sign in (1.0, -1.0):
            body.append(_polyline(fr, [t[0], t[-1]], [sign * limit] * 2,
                                  "#c0392b", 1.0, "5,4"))
    body.append(_polyline(fr, t, f, "#2363a8"))
    with open(path, "w") as fh:
        fh.write(_document(body, title))
    return path


def plot_setpoints(traj, path, title="applied setpoints"):
    u = np.asarray(traj.u)
    t = np.asarray(traj.controller_times if traj.controller_times is not None
                   else traj.times)[: u.shape[0]]
    lo, hi = float(np.min(u)), float(np.max(u))
    pad = 0.08 * (hi - lo + 1e-12)
    fr = _Frame((float(t[0]), float(t[-1])), (lo - pad, hi + pad))
    body = _axes(fr, "time [s]", "u [pu]")
    palette = ["#2363a8", "#c0392b", "#1e8449", "#8e44ad", "#b7950b", "#148f77"]
    for j in range(u.shape[1]):
        body.append(_polyline(fr, t, u[:, j], palette[j % len(palette)]))
    with open(path, "w") as fh:
        fh.write(_document(body, title))
    return path


def ellipse_boundary(W, pair, samples=256):
    """Boundary of the coordinate-projected ellipsoid via its 2x2 submatrix.

    The shadow of {x'W^-1 x <= 1} under projection onto coordinates (i, j)
    is exactly the ellipse with shape W[[i,j]][:,[i,j]].
    """
    i, j = pair
    W2 = np.array([[W[i, i], W[i, j]], [W[j, i], W[j, j]]])
    L = scipy.linalg.cholesky(0.5 * (W2 + W2.T), lower=True)
    th = np.linspace(0.0, 2.0 * np.pi, samples)
    return (L @ np.vstack([np.cos(th), np.sin(th)])).T


def plot_projection(W, path, pair=(0, 1), points=None, unsafe=None,
                    labels=("df [Hz]", "dP_G_1 [pu]"), title="reachable set projection",
                    max_points=2500):
    """Projected invariant ellipsoid, optional sampled states, unsafe shading.

    Unsafe half-spaces supported only along the projected axes; others are
    skipped (their shadow covers the whole plane).
    """
    bnd = ellipse_boundary(W, pair)
    xs = [bnd[:, 0]]
    ys = [bnd[:, 1]]
    if points is not None and len(points):
        pts = np.asarray(points)[:, pair]
        if pts.shape[0] > max_points:
            stride = pts.shape[0] // max_points + 1
            pts = pts[::stride]
        xs.append(pts[:, 0])
        ys.append(pts[:, 1])
    allx = np.concatenate(xs)
    ally = np.concatenate(ys)
    span_x = float(np.max(np.abs(allx))) * 1.25 + 1e-9
    span_y = float(np.max(np.abs(ally))) * 1.25 + 1e-9

    guides = []
    if unsafe is not None:
        for h in unsafe.halfspaces:
            support = np.nonzero(h.c)[0]
            if len(support) == 1 and support[0] == pair[0]:
                edge = h.g / h.c[support[0]]
                span_x = max(span_x, abs(edge) * 1.15)
                guides.append((0, edge))
            elif len(support) == 1 and support[0] == pair[1]:
                edge = h.g / h.c[support[0]]
                span_y = max(span_y, abs(edge) * 1.15)
                guides.append((1, edge))

    fr = _Frame((-span_x, span_x), (-span_y, span_y))
    body = _axes(fr, labels[0], labels[1])
    for axis, edge in guides:
        if axis == 0:
            x_lo = fr.x(edge) if edge >= 0 else _ML
            x_hi = _W - _MR if edge >= 0 else fr.x(edge)
            body.append(f'<rect x="{x_lo:.1f}" y="{_MT}" width="{max(x_hi - x_lo, 0):.1f}" '
                        f'height="{_H - _MT - _MB}" fill="#c0392b" fill-opacity="0.12"/>')
        else:
            y_top = _MT if edge >= 0 else fr.y(edge)
            y_bot = fr.y(edge) if edge >= 0 else _H - _MB
            body.append(f'<rect x="{_ML}" y="{y_top:.1f}" width="{_W - _ML - _MR}" '
                        f'height="{max(y_bot - y_top, 0):.1f}" fill="#c0392b" fill-opacity="0.12"/>')
    if points is not None and len(points):
        pts = np.asarray(points)[:, pair]
        if pts.shape[0] > max_points:
            stride = pts.shape[0] // max_points + 1
            pts = pts[::stride]
        dots = "".join(f'<circle cx="{fr.x(p):.2f}" cy="{fr.y(q):.2f}" r="1.3" '
                       f'fill="#7f8c8d" fill-opacity="0.55"/>' for p, q in pts)
        body.append(dots)
    body.append(_polyline(fr, bnd[:, 0], bnd[:, 1], "#1e8449", 1.8))
    with open(path, "w") as fh:
        fh.write(_document(body, title))
    return path
