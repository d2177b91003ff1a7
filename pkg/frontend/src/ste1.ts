/**
 * STE-1 export format: the CSV contract between the annotation tool and
 * the ingestion pipeline.
 *
 * Layout: a header block (#STE-1 version line, #frame_rate, and either
 * #range,pixel,<w>,<h> or #range,pitch for calibrated sessions), then a
 * column header and one row per annotation in frame order:
 *
 *   frame,seconds,event_type,team,px,py,x,y
 *
 * Calibrated exports carry pitch meters in x,y; uncalibrated exports
 * leave them empty so the pipeline can rescale the pixel coordinates
 * later. Export -> parse -> export is byte-stable.
 */

import { Point } from "./homography.js";
import { AnnotationSession } from "./session.js";

export const STE1_VERSION = "STE-1";

export class FormatError extends Error {}

function formatNumber(value: number, decimals: number): string {
  return value.toFixed(decimals);
}

function csvEscape(value: string): string {
  if (/[",\n]/.test(value)) {
    return '"' + value.replace(/"/g, '""') + '"';
  }
  return value;
}

export function exportCsv(session: AnnotationSession): string {
  const lines: string[] = [`#${STE1_VERSION}`, `#frame_rate,${session.frameRate}`];
  if (session.calibration) {
    lines.push("#range,pitch");
  } else {
    lines.push(`#range,pixel,${session.pixelRange.width},${session.pixelRange.height}`);
  }
  lines.push("frame,seconds,event_type,team,px,py,x,y");
  for (const a of session.list()) {
    const cells = [
      String(a.frame),
      formatNumber(a.seconds, 6),
      csvEscape(a.eventType),
      csvEscape(a.team),
      formatNumber(a.pixel.x, 1),
      formatNumber(a.pixel.y, 1),
      a.pitch ? formatNumber(a.pitch.x, 2) : "",
      a.pitch ? formatNumber(a.pitch.y, 2) : "",
    ];
    lines.push(cells.join(","));
  }
  return lines.join("\n") + "\n";
}

export interface ParsedSte1 {
  frameRate: number;
  calibrated: boolean;
  pixelRange: { width: number; height: number } | null;
  rows: {
    frame: number;
    seconds: number;
    eventType: string;
    team: string;
    pixel: Point;
    pitch: Point | null;
  }[];
}

function splitCsvLine(line: string): string[] {
  const cells: string[] = [];
  let current = "";
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i];
    if (quoted) {
      if (ch === '"' && line[i + 1] === '"') {
        current += '"';
        i++;
      } else if (ch === '"') {
        quoted = false;
      } else {
        current += ch;
      }
    } else if (ch === '"') {
      quoted = true;
    } else if (ch === ",") {
      cells.push(current);
      current = "";
    } else {
      current += ch;
    }
  }
  cells.push(current);
  return cells;
}

export function parseSte1(text: string): ParsedSte1 {
  const lines = text.split(/\r?\n/);
  if (lines.length === 0 || lines[0].trim() !== `#${STE1_VERSION}`) {
    throw new FormatError(
      `expected #${STE1_VERSION} version header, found ${JSON.stringify(lines[0] ?? "")}`
    );
  }
  let frameRate: number | null = null;
  let calibrated = false;
  let pixelRange: { width: number; height: number } | null = null;
  let bodyStart = 1;
  for (let i = 1; i < lines.length; i++) {
    if (!lines[i].startsWith("#")) {
      bodyStart = i;
      break;
    }
    const parts = lines[i].slice(1).split(",");
    if (parts[0] === "frame_rate") {
      frameRate = Number(parts[1]);
    } else if (parts[0] === "range" && parts[1] === "pitch") {
      calibrated = true;
    } else if (parts[0] === "range" && parts[1] === "pixel") {
      pixelRange = { width: Number(parts[2]), height: Number(parts[3]) };
    } else {
      throw new FormatError(`unknown header line ${lines[i]}`);
    }
  }
  if (frameRate === null || !isFinite(frameRate) || frameRate <= 0) {
    throw new FormatError("missing or invalid #frame_rate header");
  }
  if (!calibrated && pixelRange === null) {
    throw new FormatError("missing #range header");
  }

  const rows: ParsedSte1["rows"] = [];
  for (let i = bodyStart + 1; i < lines.length; i++) {
    if (!lines[i].trim()) continue;
    const cells = splitCsvLine(lines[i]);
    if (cells.length !== 8) {
      throw new FormatError(`row ${i} has ${cells.length} cells, expected 8`);
    }
    const pitch =
      cells[6] !== "" && cells[7] !== ""
        ? { x: Number(cells[6]), y: Number(cells[7]) }
        : null;
    rows.push({
      frame: Number(cells[0]),
      seconds: Number(cells[1]),
      eventType: cells[2],
      team: cells[3],
      pixel: { x: Number(cells[4]), y: Number(cells[5]) },
      pitch,
    });
  }
  rows.sort((a, b) => a.frame - b.frame);
  return { frameRate, calibrated, pixelRange, rows };
}
