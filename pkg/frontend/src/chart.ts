/**
 * Minimal SVG line-chart renderer: stacked panels over one shared x axis.
 *
 * No plotting dependency — the output is an SVG string assembled by hand,
 * which keeps reruns byte-deterministic (same inputs, same file).  NaN in a
 * series' y values breaks the polyline, which is how missing time-of-day
 * bins show up as gaps instead of interpolated bridges.
 */

export interface Series {
  label: string;
  x: number[];
  y: number[];
  color: string;
  width?: number;
  dash?: string;
  opacity?: number;
}

export interface RefLine {
  value: number;
  label: string;
  color?: string;
  dash?: string;
}

export interface Panel {
  yLabel: string;
  series: Series[];
  refLines?: RefLine[];
  yMin?: number;
  yMax?: number;
}

export interface FigureOpts {
  title: string;
  subtitle?: string;
  xLabel: string;
  panels: Panel[];
  width?: number;
  panelHeight?: number;
  xMin?: number;
  xMax?: number;
  xTicks?: number[];
  xTickFormat?: (v: number) => string;
}

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function niceTicks(min: number, max: number, count: number): number[] {
  const range = max - min || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const nice = [1, 2, 5, 10].map((m) => m * mag);
  const step = nice.find((n) => n >= rough) ?? rough;
  const start = Math.ceil(min / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= max + step * 0.01; v += step) ticks.push(v);
  return ticks;
}

export function fmtNum(v: number): string {
  if (Number.isInteger(v)) return String(v);
  return String(parseFloat(v.toFixed(4)));
}

/** Split a series into finite runs; NaN/Infinity act as gap markers. */
function segments(xs: number[], ys: number[]): Array<Array<[number, number]>> {
  const out: Array<Array<[number, number]>> = [];
  let current: Array<[number, number]> = [];
  for (let i = 0; i < xs.length; i++) {
    const x = xs[i]!;
    const y = ys[i]!;
    if (Number.isFinite(x) && Number.isFinite(y)) {
      current.push([x, y]);
    } else if (current.length > 0) {
      out.push(current);
      current = [];
    }
  }
  if (current.length > 0) out.push(current);
  return out;
}

const ML = 62; // left margin: room for y tick labels
const MR = 16;
const TITLE_H = 30;
const PANEL_GAP = 12;
const XAXIS_H = 34;

export function renderFigure(opts: FigureOpts): string {
  const W = opts.width ?? 720;
  const PH = opts.panelHeight ?? 150;
  const panels = opts.panels;
  if (panels.length === 0) throw new Error("figure needs at least one panel");
  const pw = W - ML - MR;

  // shared x domain across panels
  const allX = panels.flatMap((p) => p.series.flatMap((s) => s.x)).filter(Number.isFinite);
  const xMin = opts.xMin ?? (allX.length ? Math.min(...allX) : 0);
  const xMax = opts.xMax ?? (allX.length ? Math.max(...allX) : 1);
  const xOf = (v: number) => ML + ((v - xMin) / (xMax - xMin || 1)) * pw;
  const xTicks = opts.xTicks ?? niceTicks(xMin, xMax, 8);
  const xFmt = opts.xTickFormat ?? fmtNum;

  const H = TITLE_H + panels.length * PH + (panels.length - 1) * PANEL_GAP + XAXIS_H;

  let s = `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${W} ${H}" font-family="Helvetica, Arial, sans-serif">\n`;
  s += `<rect width="${W}" height="${H}" fill="#fff"/>\n`;
  s += `<text x="${ML}" y="14" font-size="11" font-weight="600" fill="#222">${esc(opts.title)}</text>\n`;
  if (opts.subtitle) {
    s += `<text x="${ML}" y="25" font-size="8" fill="#888">${esc(opts.subtitle)}</text>\n`;
  }
  s += `<defs>\n`;
  panels.forEach((_, pi) => {
    const top = TITLE_H + pi * (PH + PANEL_GAP);
    s += `<clipPath id="clip${pi}"><rect x="${ML}" y="${top}" width="${pw}" height="${PH}"/></clipPath>\n`;
  });
  s += `</defs>\n`;

  panels.forEach((panel, pi) => {
    const top = TITLE_H + pi * (PH + PANEL_GAP);
    const bottom = top + PH;
    const clip = `clip-path="url(#clip${pi})"`;

    // y domain: data plus reference lines, padded
    const ys = panel.series.flatMap((sr) => sr.y).filter(Number.isFinite);
    const refs = (panel.refLines ?? []).map((r) => r.value);
    let lo = panel.yMin ?? Math.min(...(ys.length ? ys : [0]), ...refs);
    let hi = panel.yMax ?? Math.max(...(ys.length ? ys : [1]), ...refs);
    if (lo === hi) {
      lo -= 0.5;
      hi += 0.5;
    }
    const pad = (hi - lo) * 0.06;
    if (panel.yMin === undefined) lo -= pad;
    if (panel.yMax === undefined) hi += pad;
    const yOf = (v: number) => bottom - ((v - lo) / (hi - lo)) * PH;

    // grid + y ticks
    const yTicks = niceTicks(lo, hi, 4);
    for (const v of yTicks) {
      const y = yOf(v).toFixed(1);
      s += `<line x1="${ML}" y1="${y}" x2="${ML + pw}" y2="${y}" stroke="#eee" stroke-width="0.5"/>\n`;
      s += `<line x1="${ML - 3}" y1="${y}" x2="${ML}" y2="${y}" stroke="#333" stroke-width="0.5"/>\n`;
      s += `<text x="${ML - 5}" y="${(yOf(v) + 2.5).toFixed(1)}" text-anchor="end" font-size="7" fill="#555">${esc(fmtNum(v))}</text>\n`;
    }

    // reference lines
    for (const rl of panel.refLines ?? []) {
      const y = yOf(rl.value).toFixed(1);
      s += `<line ${clip} x1="${ML}" y1="${y}" x2="${ML + pw}" y2="${y}" stroke="${rl.color ?? "#c1121f"}" stroke-width="1" stroke-dasharray="${rl.dash ?? "6,3"}"/>\n`;
    }

    // data series (gap-aware)
    for (const sr of panel.series) {
      for (const seg of segments(sr.x, sr.y)) {
        if (seg.length === 1) {
          const [x, y] = seg[0]!;
          s += `<circle ${clip} cx="${xOf(x).toFixed(1)}" cy="${yOf(y).toFixed(1)}" r="1.2" fill="${sr.color}" opacity="${sr.opacity ?? 1}"/>\n`;
          continue;
        }
        const pts = seg
          .map(([x, y]) => `${xOf(x).toFixed(1)},${yOf(y).toFixed(1)}`)
          .join(" ");
        s += `<polyline ${clip} fill="none" stroke="${sr.color}" stroke-width="${sr.width ?? 1}" opacity="${sr.opacity ?? 1}" ${sr.dash ? `stroke-dasharray="${sr.dash}" ` : ""}points="${pts}"/>\n`;
      }
    }

    // frame
    s += `<line x1="${ML}" y1="${top}" x2="${ML}" y2="${bottom}" stroke="#333" stroke-width="0.7"/>\n`;
    s += `<line x1="${ML}" y1="${bottom}" x2="${ML + pw}" y2="${bottom}" stroke="#333" stroke-width="0.7"/>\n`;

    // y label
    const cy = top + PH / 2;
    s += `<text x="12" y="${cy}" text-anchor="middle" font-size="8" fill="#444" transform="rotate(-90,12,${cy})">${esc(panel.yLabel)}</text>\n`;

    // legend (series + reference lines), top-right of the panel
    const entries = [
      ...panel.series.map((sr) => ({
        label: sr.label,
        color: sr.color,
        dash: sr.dash,
        width: sr.width ?? 1,
        opacity: sr.opacity ?? 1,
      })),
      ...(panel.refLines ?? []).map((rl) => ({
        label: rl.label,
        color: rl.color ?? "#c1121f",
        dash: rl.dash ?? "6,3",
        width: 1,
        opacity: 1,
      })),
    ];
    if (entries.length > 0) {
      const legendW = Math.max(...entries.map((e) => e.label.length)) * 4.3 + 26;
      const legendH = entries.length * 10 + 5;
      const lx = ML + pw - legendW - 4;
      const ly = top + 4;
      s += `<rect x="${lx}" y="${ly}" width="${legendW}" height="${legendH}" rx="2" fill="white" fill-opacity="0.85" stroke="#ddd" stroke-width="0.4"/>\n`;
      entries.forEach((e, ei) => {
        const ey = ly + 8 + ei * 10;
        s += `<line x1="${lx + 4}" y1="${ey}" x2="${lx + 18}" y2="${ey}" stroke="${e.color}" stroke-width="${Math.min(e.width, 1.5)}" ${e.dash ? `stroke-dasharray="${e.dash}" ` : ""}opacity="${e.opacity}"/>\n`;
        s += `<text x="${lx + 22}" y="${ey + 2.5}" font-size="6.5" fill="#444">${esc(e.label)}</text>\n`;
      });
    }
  });

  // shared x axis under the last panel
  const axisY = TITLE_H + panels.length * PH + (panels.length - 1) * PANEL_GAP;
  for (const t of xTicks) {
    if (t < xMin - 1e-9 || t > xMax + 1e-9) continue;
    const x = xOf(t).toFixed(1);
    s += `<line x1="${x}" y1="${axisY}" x2="${x}" y2="${axisY + 3}" stroke="#333" stroke-width="0.5"/>\n`;
    s += `<text x="${x}" y="${axisY + 12}" text-anchor="middle" font-size="7" fill="#555">${esc(xFmt(t))}</text>\n`;
  }
  s += `<text x="${ML + pw / 2}" y="${H - 6}" text-anchor="middle" font-size="8.5" fill="#444">${esc(opts.xLabel)}</text>\n`;

  s += `</svg>\n`;
  return s;
}
