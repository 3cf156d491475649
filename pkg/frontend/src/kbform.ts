/** Knowledge-base entry form: validate locally, mutate only through the API,
 * and only after the server confirms (no optimistic writes). */

import type { ApiClient } from './api';
import { ApiError } from './api';
import { checkTemplate, type TemplateProblem } from './template';
import type { PatternDoc } from './types';

export interface KbFormState {
  template: string;
  weight: string;
  entryId: string;
  name: string;
  provenance: string;
}

export function emptyForm(): KbFormState {
  return { template: '', weight: '1', entryId: '', name: '', provenance: '' };
}

export function formProblems(form: KbFormState, returnedAliases: string[]): TemplateProblem[] {
  const problems = checkTemplate(form.template, returnedAliases);
  if (!form.template.trim()) {
    problems.unshift({ position: 0, message: 'template is empty' });
  }
  const weight = Number(form.weight);
  if (!Number.isFinite(weight) || weight <= 0 || weight > 1) {
    problems.push({ position: 0, message: 'severity weight must be in (0, 1]' });
  }
  return problems;
}

export type SubmitResult =
  | { ok: true; entryId: string; query: string }
  | { ok: false; error: string };

/** Create the entry through POST /kb/entries; the caller must have run
 * formProblems first (the server still re-validates everything). */
export async function submitEntry(
  api: ApiClient,
  pattern: PatternDoc,
  form: KbFormState,
): Promise<SubmitResult> {
  try {
    const created = await api.addKbEntry({
      pattern,
      template: form.template,
      severity_weight: form.weight,
      entry_id: form.entryId || undefined,
      name: form.name || undefined,
      provenance: form.provenance || undefined,
    });
    return { ok: true, entryId: created.entry_id, query: created.query };
  } catch (error) {
    if (error instanceof ApiError) {
      return { ok: false, error: error.detail };
    }
    return { ok: false, error: String(error) };
  }
}
