"""Minimal SVG scene writer for instance/diagram plots (output only)."""

import numpy as np


class Scene:
    def __init__(self):
        self.items = []
        self.xs = []
        self.ys = []

    def _track(self, xs, ys):
        self.xs.extend(xs)
        self.ys.extend(ys)

    def polyline(self, pts, color, width=1.0, dash=None):
        self._track([p[0] for p in pts], [p[1] for p in pts])
        self.items.append(("pl", pts, color, width, dash))

    def curve(self, c, color, width=1.0, dash=None, samples=64):
        r = c.row
        ts = np.linspace(r[7], r[8], samples if c.kind else 2)
        xs = r[1] + ts * (r[3] + ts * r[5])
        ys = r[2] + ts * (r[4] + ts * r[6])
        self.polyline(list(zip(xs, ys)), color, width, dash)

    def point(self, p, color, radius=2.0):
        self._track([p[0]], [p[1]])
        self.items.append(("pt", p, color, radius))

    def star(self, p, color, radius=5.0):
        self._track([p[0]], [p[1]])
        self.items.append(("star", p, color, radius))

    def text(self, s):
        self.items.append(("text", s))

    def write(self, path, size=800):
        if not self.xs:
            self.xs = [0.0, 1.0]
            self.ys = [0.0, 1.0]
        xlo, xhi = min(self.xs), max(self.xs)
        ylo, yhi = min(self.ys), max(self.ys)
        span = max(xhi - xlo, yhi - ylo, 1e-9)
        pad = 0.05 * span
        xlo -= pad
        ylo -= pad
        span += 2 * pad
        scale = size / span

        def tx(p):
            return ((p[0] - xlo) * scale, size - (p[1] - ylo) * scale)

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" '
               f'height="{size}" viewBox="0 0 {size} {size}">']
        ty = 16
        for item in self.items:
            if item[0] == "pl":
                _, pts, color, width, dash = item
                d = " ".join(f"{x:.2f},{y:.2f}" for x, y in map(tx, pts))
                extra = f' stroke-dasharray="{dash}"' if dash else ""
                out.append(f'<polyline points="{d}" fill="none" '
                           f'stroke="{color}" stroke-width="{width}"{extra}/>')
            elif item[0] == "pt":
                _, p, color, r = item
                x, y = tx(p)
                out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r}" '
                           f'fill="{color}"/>')
            elif item[0] == "star":
                _, p, color, r = item
                x, y = tx(p)
                out.append(
                    f'<path d="M {x - r:.2f} {y:.2f} L {x + r:.2f} {y:.2f} '
                    f'M {x:.2f} {y - r:.2f} L {x:.2f} {y + r:.2f} '
                    f'M {x - 0.7 * r:.2f} {y - 0.7 * r:.2f} L {x + 0.7 * r:.2f} {y + 0.7 * r:.2f} '
                    f'M {x - 0.7 * r:.2f} {y + 0.7 * r:.2f} L {x + 0.7 * r:.2f} {y - 0.7 * r:.2f}" '
                    f'stroke="{color}" stroke-width="2" fill="none"/>')
            elif item[0] == "text":
                out.append(f'<text x="8" y="{ty}" font-size="13" '
                           f'font-family="monospace">{item[1]}</text>')
                ty += 16
        out.append("</svg>")
        with open(path, "w") as fh:
            fh.write("\n".join(out))
