import { describe, expect, it } from "vitest";

import {
  linePixelLength,
  parsePropertyVector,
  renderExample,
  renderLine,
  renderShape,
} from "../src/render.js";

function vec(size: number, color: number, shape: number, border: number): number[] {
  const v = new Array(10).fill(0);
  v[size] = 1;
  v[3 + color] = 1;
  v[6 + shape] = 1;
  v[8 + border] = 1;
  return v;
}

describe("line rendering", () => {
  it("draws length strictly proportionally to the value", () => {
    expect(linePixelLength(20)).toBe(5 * linePixelLength(4));
    expect(linePixelLength(0)).toBe(0);
    const markup = renderLine(20);
    expect(markup).toContain(`x2="${linePixelLength(20)}"`);
  });

  it("produces identical markup for identical values", () => {
    expect(renderLine(7.25)).toBe(renderLine(7.25));
    expect(renderLine(7.25)).not.toBe(renderLine(7.26));
  });

  it("rejects junk values", () => {
    expect(() => renderLine(-1)).toThrow(/non-negative/);
    expect(() => renderLine(Number.NaN)).toThrow(/finite/);
  });
});

describe("shape rendering", () => {
  it("reads the four property groups back out of a vector", () => {
    expect(parsePropertyVector(vec(2, 1, 0, 1))).toEqual({
      size: 2,
      color: 1,
      shape: 0,
      border: 1,
    });
  });

  it("rejects vectors that are not one-hot per group", () => {
    const twoSizes = vec(0, 0, 0, 0);
    twoSizes[1] = 1;
    expect(() => parsePropertyVector(twoSizes)).toThrow(/more than one size/);
    const noColor = vec(0, 0, 0, 0);
    noColor[3] = 0;
    expect(() => parsePropertyVector(noColor)).toThrow(/no color/);
    expect(() => parsePropertyVector([1, 0, 0])).toThrow(/10 entries/);
  });

  it("renders identical vectors to identical markup", () => {
    expect(renderShape(vec(1, 2, 1, 0))).toBe(renderShape(vec(1, 2, 1, 0)));
  });

  it("changes the drawing when any property changes", () => {
    const base = renderShape(vec(1, 1, 0, 0));
    expect(renderShape(vec(2, 1, 0, 0))).not.toBe(base);
    expect(renderShape(vec(1, 2, 0, 0))).not.toBe(base);
    expect(renderShape(vec(1, 1, 1, 0))).not.toBe(base);
    expect(renderShape(vec(1, 1, 0, 1))).not.toBe(base);
  });

  it("draws the asked-for figure", () => {
    const redSquare = renderShape(vec(0, 0, 0, 0));
    expect(redSquare).toContain("<rect");
    expect(redSquare).toContain("rgb(255,0,0)");
    expect(redSquare).toContain('stroke="black"');
    const greenCircle = renderShape(vec(2, 2, 1, 1));
    expect(greenCircle).toContain("<circle");
    expect(greenCircle).toContain("rgb(0,255,0)");
    expect(greenCircle).toContain('stroke="none"');
  });

  it("scales the figure with the size property", () => {
    const small = renderShape(vec(0, 0, 1, 1));
    const large = renderShape(vec(2, 0, 1, 1));
    expect(small).toContain('r="4.5"');
    expect(large).toContain('r="11.5"');
  });
});

describe("example dispatch", () => {
  it("routes numbers to lines and vectors to shapes", () => {
    expect(renderExample("bimodal", 3)).toContain("stimulus-line");
    expect(renderExample("boolean", vec(0, 0, 0, 0))).toContain("stimulus-shape");
    expect(() => renderExample("bimodal", vec(0, 0, 0, 0))).toThrow(/line length/);
    expect(() => renderExample("boolean", 3)).toThrow(/property vector/);
  });
});
