/**
 * The three figure kinds built from the simulator's CSV artifacts.
 *
 * Each builder is a pure function from parsed rows to an SVG string plus
 * the exact data series that were drawn, so callers (and tests) can verify
 * that identical inputs produce identical series without scraping SVG.
 */

import { renderFigure, Series } from "./chart.js";
import { ProfileRow, SchemaError, TraceRow } from "./csv.js";

export interface LabeledTrace {
  label: string;
  rows: TraceRow[];
}

export interface Figure {
  svg: string;
  /** what was drawn: label -> [x values, y values] */
  series: Array<{ label: string; x: number[]; y: number[] }>;
}

const PALETTE = ["#4361ee", "#e63946", "#2d6a4f"];

/**
 * Overlaid relative-voltage traces (up to three scenarios) with the
 * tolerance band drawn as two dashed lines.  Traces of different lengths
 * are simply drawn over their own tick ranges.
 */
export function voltageCompare(
  traces: LabeledTrace[],
  band: [number, number]
): Figure {
  if (traces.length < 1 || traces.length > 3) {
    throw new SchemaError(
      `voltage_compare takes 1 to 3 traces, got ${traces.length}`
    );
  }
  const [lo, hi] = band;
  if (!(lo < hi)) {
    throw new SchemaError(`band must be low,high with low < high, got ${lo},${hi}`);
  }
  const series: Series[] = traces.map((t, i) => ({
    label: t.label,
    x: t.rows.map((r) => r.tick),
    y: t.rows.map((r) => r.relVoltage),
    color: PALETTE[i % PALETTE.length]!,
    width: i === 0 ? 1.1 : 0.9,
    opacity: i === 0 ? 1 : 0.85,
  }));
  const svg = renderFigure({
    title: "Relative bus voltage under competing control policies",
    subtitle: traces.map((t) => `${t.label}: ${t.rows.length} ticks`).join("  ·  "),
    xLabel: "Tick",
    panels: [
      {
        yLabel: "Bus voltage / nominal",
        series,
        refLines: [
          { value: hi, label: `band high (${hi})`, color: "#999", dash: "4,3" },
          { value: lo, label: `band low (${lo})`, color: "#999", dash: "4,3" },
        ],
      },
    ],
  });
  return { svg, series: series.map(({ label, x, y }) => ({ label, x, y })) };
}

/**
 * Three stacked panels for the price-event comparison: relative voltage
 * without the voltage check, with it, and the market price that drove both.
 * The dashed limit line marks the admissible drop in both voltage panels.
 */
export function pricePanels(
  noVeto: LabeledTrace,
  veto: LabeledTrace,
  limit: number
): Figure {
  for (const t of [noVeto, veto]) {
    if (t.rows.every((r) => r.price === null)) {
      throw new SchemaError(
        `${t.label}: column price: empty on every row — this trace was run ` +
          `without a market and cannot drive a price figure`
      );
    }
  }
  // shared voltage scale so the two panels are directly comparable
  const volts = [...noVeto.rows, ...veto.rows].map((r) => r.relVoltage);
  const vLo = Math.min(...volts, limit) - 0.01;
  const vHi = Math.max(...volts) + 0.01;

  const panels = [noVeto, veto].map((t, i) => ({
    yLabel: `${t.label} rel voltage`,
    series: [
      {
        label: t.label,
        x: t.rows.map((r) => r.tick),
        y: t.rows.map((r) => r.relVoltage),
        color: PALETTE[i]!,
        width: 1,
      },
    ],
    refLines: [
      { value: limit, label: `limit ${fmtLimit(limit)}`, dash: "6,3" },
    ],
    yMin: vLo,
    yMax: vHi,
  }));
  const priceSeries: Series = {
    label: "market price",
    x: noVeto.rows.filter((r) => r.price !== null).map((r) => r.tick),
    y: noVeto.rows.filter((r) => r.price !== null).map((r) => r.price as number),
    color: "#6a4c93",
    width: 1,
  };
  const svg = renderFigure({
    title: "Price-driven demand with and without the local voltage check",
    subtitle: `dashed limit at ${fmtLimit(limit)} of nominal`,
    xLabel: "Tick",
    panels: [
      ...panels,
      { yLabel: "price", series: [priceSeries] },
    ],
  });
  const drawn = [
    ...panels.map((p) => p.series[0]!),
    priceSeries,
  ];
  return { svg, series: drawn.map(({ label, x, y }) => ({ label, x, y })) };
}

function fmtLimit(limit: number): string {
  return String(parseFloat(limit.toFixed(6)));
}

/**
 * Mean value per time-of-day bin over a 24 h axis.  Bins absent from the
 * profile break the line (a gap), they are never interpolated across.
 */
export function profileFigure(rows: ProfileRow[]): Figure {
  if (rows.length === 0) {
    throw new SchemaError("profile: no populated bins to plot");
  }
  const sorted = [...rows].sort((a, b) => a.binStartSeconds - b.binStartSeconds);
  // infer bin width from the closest populated neighbours
  let binWidth = Infinity;
  for (let i = 1; i < sorted.length; i++) {
    const d = sorted[i]!.binStartSeconds - sorted[i - 1]!.binStartSeconds;
    if (d > 0 && d < binWidth) binWidth = d;
  }
  const x: number[] = [];
  const y: number[] = [];
  sorted.forEach((r, i) => {
    if (
      i > 0 &&
      Number.isFinite(binWidth) &&
      r.binStartSeconds - sorted[i - 1]!.binStartSeconds > binWidth * 1.5
    ) {
      x.push(NaN); // missing bins -> gap in the line
      y.push(NaN);
    }
    x.push(r.binStartSeconds / 3600);
    y.push(r.mean);
  });
  const series: Series = {
    label: "mean per bin",
    x,
    y,
    color: PALETTE[0]!,
    width: 1,
  };
  const populated = sorted.length;
  const svg = renderFigure({
    title: "Time-of-day profile",
    subtitle: `${populated} populated bins`,
    xLabel: "Hour of day",
    xMin: 0,
    xMax: 24,
    xTicks: [0, 3, 6, 9, 12, 15, 18, 21, 24],
    panels: [{ yLabel: "mean", series: [series] }],
  });
  return { svg, series: [{ label: series.label, x, y }] };
}
