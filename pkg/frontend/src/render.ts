import { colorForCell } from './colors.js';
import { TaskValue, TrainExample } from './types.js';

function isGrid(value: TaskValue): value is number[][] {
  return Array.isArray(value) && Array.isArray(value[0]);
}

/** Colored table for grids, monospace block for strings and int lists. */
export function renderValue(doc: Document, value: TaskValue): HTMLElement {
  if (isGrid(value)) {
    const table = doc.createElement('table');
    table.className = 'grid';
    for (const row of value) {
      const tr = doc.createElement('tr');
      for (const cell of row) {
        const td = doc.createElement('td');
        td.style.backgroundColor = colorForCell(cell);
        td.title = String(cell);
        tr.appendChild(td);
      }
      table.appendChild(tr);
    }
    return table;
  }
  const pre = doc.createElement('pre');
  pre.className = 'value';
  pre.textContent =
    typeof value === 'string' ? JSON.stringify(value) : `[${value.join(', ')}]`;
  return pre;
}

export function renderExample(doc: Document, ex: TrainExample, index: number): HTMLElement {
  const wrap = doc.createElement('div');
  wrap.className = 'example';
  const label = doc.createElement('div');
  label.className = 'example-label';
  label.textContent = `Example ${index + 1}`;
  wrap.appendChild(label);
  const pair = doc.createElement('div');
  pair.className = 'example-pair';
  pair.appendChild(renderValue(doc, ex.input));
  const arrow = doc.createElement('span');
  arrow.className = 'arrow';
  arrow.textContent = '→';
  pair.appendChild(arrow);
  pair.appendChild(renderValue(doc, ex.output));
  wrap.appendChild(pair);
  return wrap;
}
