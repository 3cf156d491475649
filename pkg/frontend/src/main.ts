/** DOM wiring for the pattern builder. All analysis comes from the service;
 * this file only moves state between widgets and the modules in src/. */

import { ApiClient } from './api';
import {
  BuilderState,
  COMPARISON_SIGNS,
  JOIN_TYPES,
  WILDCARDS,
  type Leg,
  type RelKind,
} from './builder';
import { emptyForm, formProblems, submitEntry } from './kbform';
import { MatchBrowser } from './matches';
import { renderPlanTree } from './tree';
import type { ComparisonSign, PlanDoc, SearchExport } from './types';

const OPERATOR_TYPES = [
  ...WILDCARDS,
  ...JOIN_TYPES,
  'TBSCAN',
  'IXSCAN',
  'FETCH',
  'SORT',
  'GRPBY',
  'TEMP',
  'IXSCAN|TBSCAN',
];

const api = new ApiClient('');
const builder = new BuilderState();
let workloadId: string | null = null;
let browser: MatchBrowser | null = null;
let kbForm = emptyForm();
const planDocs = new Map<string, PlanDoc>();

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing #${id}`);
  return found as T;
}

function option(value: string, label = value): string {
  return `<option value="${value}">${label}</option>`;
}

// ---------------------------------------------------------------- builder

function renderNodeList(): void {
  const aliases = builder.aliases();
  el('node-list').innerHTML = builder
    .nodeIds()
    .map((id) => {
      const node = builder.node(id);
      const selected = id === builder.selectedNodeId ? ' selected' : '';
      const rels = node.relations
        .map((r) => `${r.kind === 'IMMEDIATE' ? '' : '…'}${r.leg}→${r.targetId}`)
        .join(' ');
      return (
        `<div class="node-card${selected}" data-node="${id}">` +
        `<strong>${id}: ${node.type}</strong> <em>?${aliases.get(id)}</em>` +
        (node.returned ? '' : ' <span class="muted">(not returned)</span>') +
        `<div class="muted">${node.constraints.length} constraint(s) ${rels}</div>` +
        '</div>'
      );
    })
    .join('');
  for (const card of document.querySelectorAll<HTMLElement>('.node-card')) {
    card.onclick = () => {
      builder.selectedNodeId = Number(card.dataset.node);
      renderAll();
    };
  }
}

function renderNodeEditor(): void {
  const host = el('node-editor');
  const id = builder.selectedNodeId;
  if (id === null || !builder.nodeIds().includes(id)) {
    host.innerHTML = '<p class="muted">Select or add a node.</p>';
    return;
  }
  const node = builder.node(id);
  const others = builder.nodeIds().filter((n) => n !== id);
  host.innerHTML = `
    <h3>Node ${id}</h3>
    <label>Type
      <select id="edit-type">${OPERATOR_TYPES.map((t) =>
        t === node.type ? `<option selected>${t}</option>` : option(t),
      ).join('')}</select>
    </label>
    <label>Alias <input id="edit-alias" value="${node.alias ?? ''}" placeholder="auto"></label>
    <label><input type="checkbox" id="edit-returned" ${node.returned ? 'checked' : ''}> returned</label>
    <fieldset><legend>Constraints</legend>
      <div id="constraint-rows">${node.constraints
        .map(
          (c, i) =>
            `<div>${c.property} ${c.sign} ${String(c.value)} ` +
            `<button data-del-constraint="${i}">×</button></div>`,
        )
        .join('')}</div>
      <input id="new-prop" placeholder="hasEstimatedCardinality" list="property-names">
      <select id="new-sign">${COMPARISON_SIGNS.map((s) => option(s)).join('')}</select>
      <input id="new-value" placeholder="100">
      <button id="add-constraint">add constraint</button>
    </fieldset>
    <fieldset><legend>Children</legend>
      <div>${node.relations
        .map(
          (r, i) =>
            `<div>${r.kind} ${r.leg} → node ${r.targetId} ` +
            `<button data-del-rel="${i}">×</button></div>`,
        )
        .join('')}</div>
      <select id="new-child">${others.map((n) => option(String(n))).join('')}</select>
      <select id="new-leg">${['OUTER', 'INNER', 'GENERIC', 'ANY'].map((l) => option(l)).join('')}</select>
      <select id="new-kind">${option('IMMEDIATE')}${option('DESCENDANT')}</select>
      <button id="add-relation" ${others.length ? '' : 'disabled'}>link child</button>
    </fieldset>
    <fieldset><legend>Compare to another node</legend>
      <div>${node.compares
        .map(
          (c, i) =>
            `<div>${c.property} ${c.sign} node ${c.otherId}.${c.otherProperty} ` +
            `<button data-del-cmp="${i}">×</button></div>`,
        )
        .join('')}</div>
      <input id="cmp-prop" placeholder="hasIOCost">
      <select id="cmp-sign">${COMPARISON_SIGNS.map((s) => option(s)).join('')}</select>
      <select id="cmp-other">${others.map((n) => option(String(n))).join('')}</select>
      <input id="cmp-other-prop" placeholder="hasIOCost">
      <button id="add-compare" ${others.length ? '' : 'disabled'}>add comparison</button>
    </fieldset>
    <button id="remove-node" class="danger">delete node</button>
  `;

  el<HTMLSelectElement>('edit-type').onchange = (event) => {
    builder.setType(id, (event.target as HTMLSelectElement).value);
    renderAll();
  };
  el<HTMLInputElement>('edit-alias').onchange = (event) => {
    builder.setAlias(id, (event.target as HTMLInputElement).value || null);
    renderAll();
  };
  el<HTMLInputElement>('edit-returned').onchange = (event) => {
    builder.setReturned(id, (event.target as HTMLInputElement).checked);
    renderAll();
  };
  el('add-constraint').onclick = () => {
    const property = el<HTMLInputElement>('new-prop').value.trim();
    const value = el<HTMLInputElement>('new-value').value.trim();
    if (!property || !value) return;
    const sign = el<HTMLSelectElement>('new-sign').value as ComparisonSign;
    builder.addConstraint(id, property, sign, value === 'true' ? true : value === 'false' ? false : value);
    renderAll();
  };
  el('add-relation').onclick = () => {
    builder.linkChild(
      id,
      Number(el<HTMLSelectElement>('new-child').value),
      el<HTMLSelectElement>('new-leg').value as Leg,
      el<HTMLSelectElement>('new-kind').value as RelKind,
    );
    renderAll();
  };
  el('add-compare').onclick = () => {
    const property = el<HTMLInputElement>('cmp-prop').value.trim();
    const otherProperty = el<HTMLInputElement>('cmp-other-prop').value.trim();
    if (!property || !otherProperty) return;
    builder.addCompare(
      id,
      property,
      el<HTMLSelectElement>('cmp-sign').value as ComparisonSign,
      Number(el<HTMLSelectElement>('cmp-other').value),
      otherProperty,
    );
    renderAll();
  };
  el('remove-node').onclick = () => {
    builder.removeNode(id);
    renderAll();
  };
  for (const button of host.querySelectorAll<HTMLElement>('[data-del-constraint]')) {
    button.onclick = () => {
      builder.removeConstraint(id, Number(button.dataset.delConstraint));
      renderAll();
    };
  }
  for (const button of host.querySelectorAll<HTMLElement>('[data-del-rel]')) {
    button.onclick = () => {
      const rel = builder.node(id).relations[Number(button.dataset.delRel)];
      builder.unlink(id, rel.targetId);
      renderAll();
    };
  }
  for (const button of host.querySelectorAll<HTMLElement>('[data-del-cmp]')) {
    button.onclick = () => {
      builder.removeCompare(id, Number(button.dataset.delCmp));
      renderAll();
    };
  }
}

function renderDiagnostics(): void {
  const problems = builder.diagnostics();
  el('diagnostics').innerHTML = problems.length
    ? problems.map((d) => `<li><code>${d.code}</code> ${d.message}</li>`).join('')
    : '<li class="ok">pattern is valid</li>';
  el<HTMLButtonElement>('export-pattern').disabled = !builder.canExport();
  el<HTMLButtonElement>('run-search').disabled = !builder.canExport() || !workloadId;
  el<HTMLButtonElement>('kb-save').disabled = !builder.canExport();
}

let previewTimer: ReturnType<typeof setTimeout> | undefined;

function schedulePreview(): void {
  clearTimeout(previewTimer);
  previewTimer = setTimeout(async () => {
    await builder.refreshPreview(api);
    el('query-preview').textContent = builder.preview || builder.previewError;
  }, 250);
}

function renderAll(): void {
  renderNodeList();
  renderNodeEditor();
  renderDiagnostics();
  renderKbForm();
  schedulePreview();
}

// ---------------------------------------------------------------- workload

async function uploadFiles(fileList: FileList): Promise<void> {
  const files = await Promise.all(
    [...fileList].map(async (file) => ({ name: file.name, content: await file.text() })),
  );
  const summary = await api.uploadWorkload(files);
  workloadId = summary.workload_id;
  planDocs.clear();
  el('workload-status').textContent =
    `${summary.workload_id}: ${Object.keys(summary.plans).length} plan(s)` +
    (summary.diagnostics.length ? `, ${summary.diagnostics.length} rejected` : '');
  renderDiagnostics();
}

async function runSearch(): Promise<void> {
  if (!workloadId) return;
  const results: SearchExport = await api.search(workloadId, builder.exportDoc());
  browser = new MatchBrowser(results);
  await renderResults();
}

async function renderResults(): Promise<void> {
  const host = el('results');
  if (!browser) {
    host.innerHTML = '';
    return;
  }
  if (browser.isEmpty()) {
    host.innerHTML = `<p class="muted">${browser.emptyMessage()}</p>`;
    return;
  }
  const planId = browser.currentPlanId() as string;
  if (!planDocs.has(planId) && workloadId) {
    planDocs.set(planId, await api.planDoc(workloadId, planId));
  }
  const labels = browser
    .rowLabels()
    .map(
      (entry) =>
        `<span class="badge${entry.returned ? '' : ' muted'}">?${entry.alias} = ${entry.label}</span>`,
    )
    .join(' ');
  host.innerHTML = `
    <div class="results-bar">
      <select id="result-plan">${browser
        .planIds()
        .map((p) => (p === planId ? `<option selected>${p}</option>` : option(p)))
        .join('')}</select>
      <span>occurrence ${browser.currentRowIndex() + 1} / ${browser.rowCount()}</span>
      <button id="next-row" ${browser.rowCount() > 1 ? '' : 'disabled'}>next occurrence</button>
    </div>
    <div class="row-labels">${labels}</div>
    <div id="tree-host">${renderPlanTree(planDocs.get(planId) as PlanDoc, browser.highlights())}</div>
  `;
  el<HTMLSelectElement>('result-plan').onchange = async (event) => {
    browser?.selectPlan((event.target as HTMLSelectElement).value);
    await renderResults();
  };
  el('next-row').onclick = async () => {
    browser?.nextRow();
    await renderResults();
  };
}

// ---------------------------------------------------------------- KB form

function renderKbForm(): void {
  const problems = builder.canExport()
    ? formProblems(kbForm, builder.returnedAliases())
    : [];
  el('kb-problems').innerHTML = problems
    .map((p) => `<li>offset ${p.position}: ${p.message}</li>`)
    .join('');
  const saveButton = el<HTMLButtonElement>('kb-save');
  saveButton.disabled = !builder.canExport() || problems.length > 0;
}

async function saveKbEntry(): Promise<void> {
  const result = await submitEntry(api, builder.exportDoc(), kbForm);
  el('kb-status').textContent = result.ok
    ? `saved as ${result.entryId}`
    : `rejected: ${result.error}`;
  if (result.ok) {
    kbForm = emptyForm();
    el<HTMLInputElement>('kb-template').value = '';
    renderKbForm();
  }
}

// ---------------------------------------------------------------- startup

export function start(): void {
  el('add-node').onclick = () => {
    builder.addNode(el<HTMLSelectElement>('new-node-type').value);
    renderAll();
  };
  el<HTMLSelectElement>('new-node-type').innerHTML = OPERATOR_TYPES.map((t) => option(t)).join('');
  el<HTMLInputElement>('workload-files').onchange = (event) => {
    const input = event.target as HTMLInputElement;
    if (input.files?.length) void uploadFiles(input.files);
  };
  el('run-search').onclick = () => void runSearch();
  el('export-pattern').onclick = () => {
    el('export-output').textContent = JSON.stringify(builder.exportDoc(), null, 2);
  };
  el<HTMLInputElement>('kb-template').oninput = (event) => {
    kbForm.template = (event.target as HTMLInputElement).value;
    renderKbForm();
  };
  el<HTMLInputElement>('kb-weight').oninput = (event) => {
    kbForm.weight = (event.target as HTMLInputElement).value;
    renderKbForm();
  };
  el('kb-save').onclick = () => void saveKbEntry();
  el('kb-cancel').onclick = () => {
    kbForm = emptyForm();
    el<HTMLInputElement>('kb-template').value = '';
    el<HTMLInputElement>('kb-weight').value = '1';
    el('kb-status').textContent = '';
    renderKbForm();
  };
  renderAll();
}

if (typeof document !== 'undefined' && document.getElementById('node-list')) {
  start();
}
