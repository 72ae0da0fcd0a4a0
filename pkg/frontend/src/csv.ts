/**
 * Strict readers for the simulator's documented CSV artifacts.
 *
 * Two schemas exist:
 *
 *   trace.csv    tick,bus_voltage,rel_voltage,n_flexible_on,price,
 *                n_postponed,n_vetoed,n_forced
 *                (price cells are empty when the scenario has no market)
 *
 *   profile.csv  bin_start_seconds,mean,std,count
 *                (one row per populated time-of-day bin; missing bins are
 *                simply absent)
 *
 * Anything that deviates — wrong header, extra column, unparsable cell —
 * raises a SchemaError naming the offending column and line so the CLI can
 * report it and exit nonzero.
 */

export class SchemaError extends Error {}

export interface TraceRow {
  tick: number;
  busVoltage: number;
  relVoltage: number;
  nFlexibleOn: number;
  /** null on runs without a market (fridge scenarios). */
  price: number | null;
  nPostponed: number;
  nVetoed: number;
  nForced: number;
}

export interface ProfileRow {
  binStartSeconds: number;
  mean: number;
  std: number;
  count: number;
}

export const TRACE_HEADER = [
  "tick",
  "bus_voltage",
  "rel_voltage",
  "n_flexible_on",
  "price",
  "n_postponed",
  "n_vetoed",
  "n_forced",
] as const;

export const PROFILE_HEADER = [
  "bin_start_seconds",
  "mean",
  "std",
  "count",
] as const;

function splitLines(text: string): string[] {
  const lines = text.split("\n");
  if (lines.length > 0 && lines[lines.length - 1] === "") lines.pop();
  return lines;
}

function checkHeader(
  got: string[],
  want: readonly string[],
  source: string
): void {
  for (let i = 0; i < Math.max(got.length, want.length); i++) {
    if (got[i] !== want[i]) {
      throw new SchemaError(
        `${source}: header column ${i + 1} is ${JSON.stringify(
          got[i] ?? "(missing)"
        )}, expected ${JSON.stringify(want[i] ?? "(nothing)")}`
      );
    }
  }
}

function num(cell: string, column: string, line: number, source: string): number {
  const v = Number(cell);
  if (cell.trim() === "" || !Number.isFinite(v)) {
    throw new SchemaError(
      `${source}: line ${line}: column ${column}: cannot parse ${JSON.stringify(
        cell
      )} as a number`
    );
  }
  return v;
}

export function parseTraceCsv(text: string, source = "trace"): TraceRow[] {
  const lines = splitLines(text);
  if (lines.length === 0) {
    throw new SchemaError(`${source}: file is empty`);
  }
  checkHeader(lines[0]!.split(","), TRACE_HEADER, source);
  const rows: TraceRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i]!.split(",");
    if (cells.length !== TRACE_HEADER.length) {
      throw new SchemaError(
        `${source}: line ${i + 1}: expected ${TRACE_HEADER.length} cells, got ${cells.length}`
      );
    }
    const lineNo = i + 1;
    rows.push({
      tick: num(cells[0]!, "tick", lineNo, source),
      busVoltage: num(cells[1]!, "bus_voltage", lineNo, source),
      relVoltage: num(cells[2]!, "rel_voltage", lineNo, source),
      nFlexibleOn: num(cells[3]!, "n_flexible_on", lineNo, source),
      price: cells[4] === "" ? null : num(cells[4]!, "price", lineNo, source),
      nPostponed: num(cells[5]!, "n_postponed", lineNo, source),
      nVetoed: num(cells[6]!, "n_vetoed", lineNo, source),
      nForced: num(cells[7]!, "n_forced", lineNo, source),
    });
  }
  return rows;
}

export function parseProfileCsv(text: string, source = "profile"): ProfileRow[] {
  const lines = splitLines(text);
  if (lines.length === 0) {
    throw new SchemaError(`${source}: file is empty`);
  }
  checkHeader(lines[0]!.split(","), PROFILE_HEADER, source);
  const rows: ProfileRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i]!.split(",");
    if (cells.length !== PROFILE_HEADER.length) {
      throw new SchemaError(
        `${source}: line ${i + 1}: expected ${PROFILE_HEADER.length} cells, got ${cells.length}`
      );
    }
    const lineNo = i + 1;
    rows.push({
      binStartSeconds: num(cells[0]!, "bin_start_seconds", lineNo, source),
      mean: num(cells[1]!, "mean", lineNo, source),
      std: num(cells[2]!, "std", lineNo, source),
      count: num(cells[3]!, "count", lineNo, source),
    });
  }
  return rows;
}
