import { describe, expect, it } from 'vitest';

import { colorForCell } from '../src/colors.js';

describe('colorForCell', () => {
  it('maps all ten cell values to the legend colors', () => {
    const mapping = Object.fromEntries(
      Array.from({ length: 10 }, (_, v) => [v, colorForCell(v)]),
    );
    expect(mapping).toMatchInlineSnapshot(`
      {
        "0": "#000000",
        "1": "#0000FF",
        "2": "#FF0000",
        "3": "#008000",
        "4": "#FFFF00",
        "5": "#808080",
        "6": "#FF00FF",
        "7": "#FFA500",
        "8": "#008080",
        "9": "#8B4513",
      }
    `);
  });

  it('renders value 6 as fuchsia #FF00FF', () => {
    expect(colorForCell(6)).toBe('#FF00FF');
  });

  it('rejects out-of-range values', () => {
    expect(() => colorForCell(10)).toThrow();
    expect(() => colorForCell(-1)).toThrow();
    expect(() => colorForCell(1.5)).toThrow();
  });
});
