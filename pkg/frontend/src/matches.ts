/** Browse search results: per-plan match sets, row cycling, highlight sets.
 *
 * Every number shown here came out of the service's search export; the
 * browser only navigates it.
 */

import type { MatchRow, SearchExport } from './types';

export interface Highlights {
  operators: Set<number>;
  baseObjects: Set<string>;
}

export class MatchBrowser {
  private planIndex = 0;
  private rowIndex = 0;

  constructor(private readonly results: SearchExport) {}

  isEmpty(): boolean {
    return this.results.matches.length === 0;
  }

  emptyMessage(): string {
    return `No plan in this workload matches "${this.results.pattern}" (searched ${this.results.plan_count} plans).`;
  }

  planIds(): string[] {
    return this.results.matches.map((m) => m.plan_id);
  }

  currentPlanId(): string | null {
    if (this.isEmpty()) return null;
    return this.results.matches[this.planIndex].plan_id;
  }

  selectPlan(planId: string): void {
    const index = this.results.matches.findIndex((m) => m.plan_id === planId);
    if (index < 0) throw new Error(`no matches for plan ${planId}`);
    this.planIndex = index;
    this.rowIndex = 0;
  }

  rowCount(): number {
    if (this.isEmpty()) return 0;
    return this.results.matches[this.planIndex].rows.length;
  }

  currentRowIndex(): number {
    return this.rowIndex;
  }

  selectRow(index: number): void {
    if (index < 0 || index >= this.rowCount()) {
      throw new Error(`row ${index} out of range`);
    }
    this.rowIndex = index;
  }

  /** Advance to the next occurrence, wrapping around. */
  nextRow(): number {
    if (this.rowCount() === 0) return 0;
    this.rowIndex = (this.rowIndex + 1) % this.rowCount();
    return this.rowIndex;
  }

  currentRow(): MatchRow | null {
    if (this.isEmpty()) return null;
    return this.results.matches[this.planIndex].rows[this.rowIndex];
  }

  /** The plan elements the selected occurrence binds, for tree highlighting. */
  highlights(): Highlights {
    const operators = new Set<number>();
    const baseObjects = new Set<string>();
    const row = this.currentRow();
    if (row) {
      for (const location of Object.values(row)) {
        if (location.kind === 'OPERATOR') operators.add(location.ref as number);
        else if (location.kind === 'BASE_OBJECT') baseObjects.add(location.ref as string);
      }
    }
    return { operators, baseObjects };
  }

  /** alias -> label pairs of the selected occurrence, selects first. */
  rowLabels(): { alias: string; label: string; returned: boolean }[] {
    const row = this.currentRow();
    if (!row) return [];
    return Object.entries(row)
      .map(([alias, location]) => ({
        alias,
        label: location.label,
        returned: location.returned !== false,
      }))
      .sort((a, b) =>
        a.returned === b.returned ? a.alias.localeCompare(b.alias) : a.returned ? -1 : 1,
      );
  }
}
