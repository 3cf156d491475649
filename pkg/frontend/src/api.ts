/** Thin client over the planmatch HTTP service.
 *
 * The UI never computes matches or query text itself; everything shown comes
 * back from these endpoints, byte for byte where the text matters.
 */

import type {
  CompileResponse,
  KbEntrySummary,
  PatternDoc,
  PlanDoc,
  SearchExport,
  WorkloadSummary,
} from './types';

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    if (!response.ok) {
      let detail = text;
      try {
        const parsed = JSON.parse(text) as { detail?: unknown };
        if (typeof parsed.detail === 'string') detail = parsed.detail;
      } catch {
        // non-JSON error body: report it verbatim
      }
      throw new ApiError(response.status, detail);
    }
    return JSON.parse(text) as T;
  }

  uploadWorkload(files: { name: string; content: string }[]): Promise<WorkloadSummary> {
    return this.request('POST', '/workloads', { files });
  }

  workload(workloadId: string): Promise<WorkloadSummary> {
    return this.request('GET', `/workloads/${workloadId}`);
  }

  planDoc(workloadId: string, planId: string): Promise<PlanDoc> {
    return this.request('GET', `/workloads/${workloadId}/plans/${planId}`);
  }

  compilePattern(pattern: PatternDoc): Promise<CompileResponse> {
    return this.request('POST', '/patterns/compile', { pattern });
  }

  search(workloadId: string, pattern: PatternDoc): Promise<SearchExport> {
    return this.request('POST', `/workloads/${workloadId}/search`, { pattern });
  }

  kbEntries(): Promise<{ entries: KbEntrySummary[] }> {
    return this.request('GET', '/kb/entries');
  }

  addKbEntry(payload: {
    pattern: PatternDoc;
    template: string;
    severity_weight?: string;
    entry_id?: string;
    name?: string;
    provenance?: string;
  }): Promise<{ entry_id: string; name: string; query: string }> {
    return this.request('POST', '/kb/entries', payload);
  }

  diagnose(workloadId: string): Promise<unknown> {
    return this.request('POST', `/workloads/${workloadId}/diagnose`);
  }
}
