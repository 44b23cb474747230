import { readFileSync } from "node:fs";

export interface Table {
  columns: string[];
  rows: number[][];
}

export function parseCsv(path: string): Table {
  const text = readFileSync(path, "utf8");
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length < 2) throw new Error(`${path}: empty table`);
  const columns = lines[0].split(",");
  const rows: number[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== columns.length) {
      throw new Error(
        `${path}:${i + 1}: expected ${columns.length} cells, got ${parts.length}`,
      );
    }
    const row = parts.map(Number);
    const bad = row.findIndex((v) => !Number.isFinite(v));
    if (bad >= 0) {
      throw new Error(
        `${path}:${i + 1}: cell ${columns[bad]} is not a finite number: ${parts[bad]}`,
      );
    }
    rows.push(row);
  }
  return { columns, rows };
}

export function column(table: Table, name: string): number[] {
  const i = table.columns.indexOf(name);
  if (i < 0) throw new Error(`missing column ${name} (have: ${table.columns.join(",")})`);
  return table.rows.map((r) => r[i]);
}

export function hasColumn(table: Table, name: string): boolean {
  return table.columns.includes(name);
}
