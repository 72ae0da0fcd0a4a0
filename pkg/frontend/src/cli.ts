#!/usr/bin/env node
/**
 * Figure renderer for simulator CSV artifacts.
 *
 *   gridpulse-figures voltage_compare --trace a.csv [--trace b.csv [--trace c.csv]]
 *                     [--label NAME ...] [--band 0.98,1.02] --out fig.svg
 *   gridpulse-figures price_panels --no-veto a.csv --veto b.csv
 *                     [--limit 0.95] --out fig.svg
 *   gridpulse-figures profile --input profile.csv --out fig.svg
 *
 * Exit codes: 0 success; 1 usage or schema error (message names the
 * offending column); 2 I/O failure (missing input, unwritable output).
 */

import { readFileSync, writeFileSync } from "node:fs";
import { basename } from "node:path";
import { pathToFileURL } from "node:url";

import { parseProfileCsv, parseTraceCsv, SchemaError } from "./csv.js";
import { pricePanels, profileFigure, voltageCompare, LabeledTrace } from "./figures.js";

export const EXIT_OK = 0;
export const EXIT_USAGE = 1;
export const EXIT_IO = 2;

class UsageError extends Error {}

interface Parsed {
  flags: Map<string, string[]>;
}

function parseFlags(argv: string[], known: string[]): Parsed {
  const flags = new Map<string, string[]>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i]!;
    if (!arg.startsWith("--")) {
      throw new UsageError(`unexpected argument ${JSON.stringify(arg)}`);
    }
    const name = arg.slice(2);
    if (!known.includes(name)) {
      throw new UsageError(`unknown option --${name}`);
    }
    const value = argv[i + 1];
    if (value === undefined || value.startsWith("--")) {
      throw new UsageError(`option --${name} needs a value`);
    }
    i++;
    const bucket = flags.get(name) ?? [];
    bucket.push(value);
    flags.set(name, bucket);
  }
  return { flags };
}

function one(p: Parsed, name: string): string {
  const values = p.flags.get(name);
  if (!values || values.length === 0) {
    throw new UsageError(`missing required option --${name}`);
  }
  if (values.length > 1) {
    throw new UsageError(`option --${name} given ${values.length} times`);
  }
  return values[0]!;
}

function maybe(p: Parsed, name: string, fallback: string): string {
  const values = p.flags.get(name);
  if (!values) return fallback;
  if (values.length > 1) {
    throw new UsageError(`option --${name} given ${values.length} times`);
  }
  return values[0]!;
}

function loadTrace(path: string, label?: string): LabeledTrace {
  const text = readFileSync(path, "utf-8");
  return {
    label: label ?? basename(path).replace(/\.[^.]*$/, ""),
    rows: parseTraceCsv(text, path),
  };
}

function parseBand(text: string): [number, number] {
  const parts = text.split(",").map(Number);
  if (parts.length !== 2 || parts.some((v) => !Number.isFinite(v))) {
    throw new UsageError(`--band must be LOW,HIGH, got ${JSON.stringify(text)}`);
  }
  return [parts[0]!, parts[1]!];
}

function cmdVoltageCompare(argv: string[]): number {
  const p = parseFlags(argv, ["trace", "label", "band", "out"]);
  const paths = p.flags.get("trace") ?? [];
  if (paths.length === 0) throw new UsageError("missing required option --trace");
  const labels = p.flags.get("label") ?? [];
  if (labels.length > paths.length) {
    throw new UsageError(`${labels.length} labels for ${paths.length} traces`);
  }
  const out = one(p, "out");
  const band = parseBand(maybe(p, "band", "0.98,1.02"));
  const traces = paths.map((path, i) => loadTrace(path, labels[i]));
  const figure = voltageCompare(traces, band);
  writeFileSync(out, figure.svg);
  console.log(out);
  return EXIT_OK;
}

function cmdPricePanels(argv: string[]): number {
  const p = parseFlags(argv, ["no-veto", "veto", "limit", "out"]);
  const noVetoPath = one(p, "no-veto");
  const vetoPath = one(p, "veto");
  const out = one(p, "out");
  const limit = Number(maybe(p, "limit", "0.95"));
  if (!Number.isFinite(limit)) {
    throw new UsageError("--limit must be a number");
  }
  const figure = pricePanels(
    loadTrace(noVetoPath, "no veto"),
    loadTrace(vetoPath, "veto"),
    limit
  );
  writeFileSync(out, figure.svg);
  console.log(out);
  return EXIT_OK;
}

function cmdProfile(argv: string[]): number {
  const p = parseFlags(argv, ["input", "out"]);
  const input = one(p, "input");
  const out = one(p, "out");
  const rows = parseProfileCsv(readFileSync(input, "utf-8"), input);
  const figure = profileFigure(rows);
  writeFileSync(out, figure.svg);
  console.log(out);
  return EXIT_OK;
}

const USAGE =
  "usage: gridpulse-figures {voltage_compare|price_panels|profile} [options]";

export function main(argv: string[]): number {
  const [kind, ...rest] = argv;
  try {
    switch (kind) {
      case "voltage_compare":
        return cmdVoltageCompare(rest);
      case "price_panels":
        return cmdPricePanels(rest);
      case "profile":
        return cmdProfile(rest);
      case undefined:
      case "-h":
      case "--help":
        console.log(USAGE);
        return kind === undefined ? EXIT_USAGE : EXIT_OK;
      default:
        throw new UsageError(`unknown figure kind ${JSON.stringify(kind)}`);
    }
  } catch (err) {
    if (err instanceof UsageError || err instanceof SchemaError) {
      console.error(`error: ${err.message}`);
      return EXIT_USAGE;
    }
    if (err instanceof Error && "code" in err) {
      console.error(`error: ${err.message}`);
      return EXIT_IO;
    }
    throw err;
  }
}

const invokedDirectly =
  typeof process.argv[1] === "string" &&
  import.meta.url === pathToFileURL(process.argv[1]).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
