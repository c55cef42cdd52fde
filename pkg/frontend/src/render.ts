/**
 * SVG rendering for study items. Pure string builders so the exact same
 * markup can be asserted in tests and injected into the page; two equal
 * inputs always produce byte-identical markup.
 */

export const PX_PER_UNIT = 12;
export const LINE_HEIGHT = 24;
export const LINE_MAX_VALUE = 20;

export const SHAPE_CANVAS = 25;
export const SHAPE_SCALE = 6;

const GROUPS: ReadonlyArray<readonly [string, readonly string[]]> = [
  ["size", ["small", "medium", "large"]],
  ["color", ["red", "blue", "green"]],
  ["shape", ["square", "circle"]],
  ["border", ["solid", "none"]],
];
const GROUP_OFFSETS = [0, 3, 6, 8] as const;
const PROPERTY_DIM = 10;
const RADII = [4, 8, 11] as const;
const FILLS = ["rgb(255,0,0)", "rgb(0,0,255)", "rgb(0,255,0)"] as const;

export interface ShapeProperties {
  size: number;
  color: number;
  shape: number;
  border: number;
}

/** Recover the four property indices from a 10-entry 0/1 vector. */
export function parsePropertyVector(vector: readonly number[]): ShapeProperties {
  if (vector.length !== PROPERTY_DIM) {
    throw new Error(
      `property vector must have ${PROPERTY_DIM} entries, got ${vector.length}`,
    );
  }
  const out: number[] = [];
  for (let g = 0; g < GROUPS.length; g++) {
    const [name, values] = GROUPS[g]!;
    const off = GROUP_OFFSETS[g]!;
    let hot = -1;
    for (let i = 0; i < values.length; i++) {
      const v = vector[off + i]!;
      if (v !== 0 && v !== 1) {
        throw new Error(`property vector entries must be 0 or 1, got ${v}`);
      }
      if (v === 1) {
        if (hot >= 0) throw new Error(`more than one ${name} value is set`);
        hot = i;
      }
    }
    if (hot < 0) throw new Error(`no ${name} value is set`);
    out.push(hot);
  }
  return { size: out[0]!, color: out[1]!, shape: out[2]!, border: out[3]! };
}

/**
 * A horizontal line whose pixel length is directly proportional to the
 * value: a length-20 line is exactly five times as long on screen as a
 * length-4 line.
 */
export function renderLine(value: number): string {
  if (!Number.isFinite(value) || value < 0) {
    throw new Error(`line length must be a finite non-negative number, got ${value}`);
  }
  const px = value * PX_PER_UNIT;
  const width = LINE_MAX_VALUE * PX_PER_UNIT;
  const y = LINE_HEIGHT / 2;
  return (
    `<svg class="stimulus-line" width="${width}" height="${LINE_HEIGHT}" ` +
    `viewBox="0 0 ${width} ${LINE_HEIGHT}" data-value="${value}">` +
    `<line x1="0" y1="${y}" x2="${px}" y2="${y}" ` +
    `stroke="currentColor" stroke-width="4" stroke-linecap="round"/>` +
    `</svg>`
  );
}

/** Pixel length of the stroke inside `renderLine(value)`. */
export function linePixelLength(value: number): number {
  return value * PX_PER_UNIT;
}

/**
 * A shape image built from a full property vector: colored square or
 * circle in one of three sizes, with or without a black outline, on a
 * white 25x25 canvas scaled up for the screen.
 */
export function renderShape(vector: readonly number[]): string {
  const props = parsePropertyVector(vector);
  const r = RADII[props.size]!;
  const fill = FILLS[props.color]!;
  const center = SHAPE_CANVAS / 2;
  const stroke =
    props.border === 0 ? ` stroke="black" stroke-width="1"` : ` stroke="none"`;
  let figure: string;
  if (props.shape === 0) {
    const side = 2 * r + 1;
    const corner = center - side / 2;
    figure =
      `<rect x="${corner}" y="${corner}" width="${side}" height="${side}" ` +
      `fill="${fill}"${stroke}/>`;
  } else {
    figure =
      `<circle cx="${center}" cy="${center}" r="${r + 0.5}" ` +
      `fill="${fill}"${stroke}/>`;
  }
  const px = SHAPE_CANVAS * SHAPE_SCALE;
  return (
    `<svg class="stimulus-shape" width="${px}" height="${px}" ` +
    `viewBox="0 0 ${SHAPE_CANVAS} ${SHAPE_CANVAS}">` +
    `<rect x="0" y="0" width="${SHAPE_CANVAS}" height="${SHAPE_CANVAS}" fill="white"/>` +
    figure +
    `</svg>`
  );
}

/** Render one example as served: a number for lines, a vector for shapes. */
export function renderExample(
  task: "bimodal" | "boolean",
  example: number | number[],
): string {
  if (task === "bimodal") {
    if (typeof example !== "number") {
      throw new Error("bimodal examples are plain line lengths");
    }
    return renderLine(example);
  }
  if (!Array.isArray(example)) {
    throw new Error("boolean examples are property vectors");
  }
  return renderShape(example);
}
