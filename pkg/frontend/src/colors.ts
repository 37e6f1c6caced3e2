/**
 * Cell-value to display-color mapping. Index 0 is black through 9 brown;
 * value 6 is named "fuschia" upstream and renders as fuchsia #FF00FF.
 */
const PALETTE: readonly string[] = [
  '#000000', // 0 black
  '#0000FF', // 1 blue
  '#FF0000', // 2 red
  '#008000', // 3 green
  '#FFFF00', // 4 yellow
  '#808080', // 5 grey
  '#FF00FF', // 6 fuchsia
  '#FFA500', // 7 orange
  '#008080', // 8 teal
  '#8B4513', // 9 brown
];

export function colorForCell(value: number): string {
  if (!Number.isInteger(value) || value < 0 || value > 9) {
    throw new Error(`cell value out of range: ${value}`);
  }
  return PALETTE[value];
}
