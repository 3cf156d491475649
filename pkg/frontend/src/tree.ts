/** Render a canonical plan document as a nested HTML tree with highlights. */

import type { Highlights } from './matches';
import type { PlanDoc } from './types';

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

export function renderPlanTree(doc: PlanDoc, highlights?: Highlights): string {
  const ops = new Map(doc.operators.map((op) => [op.op_num, op]));
  const objects = new Map(doc.base_objects.map((obj) => [obj.name, obj]));
  const children = new Map<number, (number | string)[]>();
  const consumedOps = new Set<number>();
  for (const stream of [...doc.streams].sort((a, b) =>
    a.parent === b.parent ? a.ordinal - b.ordinal : a.parent - b.parent,
  )) {
    const list = children.get(stream.parent) ?? [];
    list.push(stream.child);
    children.set(stream.parent, list);
    if (typeof stream.child === 'number') consumedOps.add(stream.child);
  }
  const roots = doc.operators
    .map((op) => op.op_num)
    .filter((num) => !consumedOps.has(num));

  const renderOperator = (num: number): string => {
    const op = ops.get(num);
    if (!op) return `<li class="plan-node error">missing operator #${num}</li>`;
    const hit = highlights?.operators.has(num) ? ' highlight' : '';
    const mods = op.modifiers.join('');
    const label = `${mods}${op.op_type}(#${op.op_num})`;
    const kids = (children.get(num) ?? [])
      .map((child) =>
        typeof child === 'number' ? renderOperator(child) : renderBaseObject(child),
      )
      .join('');
    return (
      `<li class="plan-node operator${hit}" data-op="${op.op_num}">` +
      `<span class="node-label">${escapeHtml(label)}</span>` +
      `<span class="node-meta">card ${escapeHtml(op.cardinality)}` +
      ` · cost ${escapeHtml(op.total_cost)} · io ${escapeHtml(op.io_cost)}</span>` +
      (kids ? `<ul>${kids}</ul>` : '') +
      '</li>'
    );
  };

  const renderBaseObject = (name: string): string => {
    const obj = objects.get(name);
    const hit = highlights?.baseObjects.has(name) ? ' highlight' : '';
    const correlation = obj?.correlation ? ` ${obj.correlation}` : '';
    const card = obj ? `card ${obj.cardinality}` : '';
    return (
      `<li class="plan-node base-object${hit}" data-object="${escapeHtml(name)}">` +
      `<span class="node-label">${escapeHtml(name + correlation)}</span>` +
      `<span class="node-meta">${escapeHtml(card)}</span>` +
      '</li>'
    );
  };

  const body = roots.map(renderOperator).join('');
  return `<ul class="plan-tree" data-plan="${escapeHtml(doc.plan_id)}">${body}</ul>`;
}
