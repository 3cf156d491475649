import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

import { ApiClient } from '../src/api';

const here = dirname(fileURLToPath(import.meta.url));

export function fixtureText(name: string): string {
  return readFileSync(join(here, 'fixtures', name), 'utf-8');
}

export function fixtureJson<T>(name: string): T {
  return JSON.parse(fixtureText(name)) as T;
}

export interface RecordedCall {
  method: string;
  path: string;
  body: unknown;
}

/** ApiClient wired to a canned route table; records every request. */
export function mockApi(
  routes: Record<string, { status?: number; body: unknown }>,
): { api: ApiClient; calls: RecordedCall[] } {
  const calls: RecordedCall[] = [];
  const fetchFn = async (input: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? 'GET';
    const key = `${method} ${input}`;
    calls.push({
      method,
      path: input,
      body: init?.body ? JSON.parse(init.body as string) : undefined,
    });
    const route = routes[key];
    if (!route) {
      return new Response(JSON.stringify({ detail: `no route ${key}` }), { status: 404 });
    }
    return new Response(JSON.stringify(route.body), { status: route.status ?? 200 });
  };
  return { api: new ApiClient('', fetchFn), calls };
}
