/** Pattern composition state: nodes, constraints, relationships, live preview.
 *
 * The working document always either validates or surfaces the same
 * diagnostics the service would raise, and export emits the canonical
 * builder-schema document (including the redundant hasOutputStream inverse
 * entries) so a round trip through export/import is the identity.
 */

import type { ApiClient } from './api';
import type {
  ComparisonSign,
  Diagnostic,
  LegPredicate,
  PatternDoc,
  PatternPop,
  PropertyEntry,
  RelationshipSign,
} from './types';

export const WILDCARDS = ['ANY', 'JOIN', 'BASE OB'] as const;
export const JOIN_TYPES = ['NLJOIN', 'HSJOIN', 'MSJOIN'] as const;
export const COMPARISON_SIGNS: readonly ComparisonSign[] = ['<', '<=', '=', '!=', '>=', '>'];

export type RelKind = 'IMMEDIATE' | 'DESCENDANT';
export type Leg = 'OUTER' | 'INNER' | 'GENERIC' | 'ANY';

const LEG_TO_PREDICATE: Record<Leg, LegPredicate> = {
  OUTER: 'hasOuterInputStream',
  INNER: 'hasInnerInputStream',
  GENERIC: 'hasInputStream',
  ANY: 'hasAnyInputStream',
};

const PREDICATE_TO_LEG: Record<string, Leg> = {
  hasOuterInputStream: 'OUTER',
  hasInnerInputStream: 'INNER',
  hasInputStream: 'GENERIC',
  hasAnyInputStream: 'ANY',
};

/** Predicates whose values never order numerically. */
const NON_NUMERIC_PREDICATES = new Set([
  'hasPopType',
  'hasJoinInputLeg',
  'isABaseObj',
  'hasLeftOuterJoin',
]);

const NUMERIC_LITERAL = /^[+-]?[0-9]+(\.[0-9]+)?([eE][+-]?[0-9]+)?$/;

export interface Constraint {
  property: string;
  sign: ComparisonSign;
  value: string | number | boolean;
}

export interface Compare {
  property: string;
  sign: ComparisonSign;
  otherId: number;
  otherProperty: string;
}

export interface Relation {
  targetId: number;
  leg: Leg;
  kind: RelKind;
}

export interface BuilderNode {
  id: number;
  type: string;
  alias?: string;
  returned: boolean;
  constraints: Constraint[];
  compares: Compare[];
  relations: Relation[];
}

export class BuilderState {
  name = '';
  description = '';
  selectedNodeId: number | null = null;
  /** Exactly what the service last returned from /patterns/compile. */
  preview = '';
  previewError = '';

  private nodes = new Map<number, BuilderNode>();

  nodeIds(): number[] {
    return [...this.nodes.keys()].sort((a, b) => a - b);
  }

  node(id: number): BuilderNode {
    const found = this.nodes.get(id);
    if (!found) throw new Error(`no node ${id}`);
    return found;
  }

  nodeCount(): number {
    return this.nodes.size;
  }

  addNode(type: string): number {
    const id = this.nodeIds().reduce((max, n) => Math.max(max, n), 0) + 1;
    this.nodes.set(id, {
      id,
      type,
      returned: true,
      constraints: [],
      compares: [],
      relations: [],
    });
    this.selectedNodeId = id;
    return id;
  }

  removeNode(id: number): void {
    this.nodes.delete(id);
    if (this.selectedNodeId === id) this.selectedNodeId = null;
    // relations pointing at the removed node stay behind on purpose: the
    // dangling-reference diagnostic shows the user what broke
  }

  setType(id: number, type: string): void {
    this.node(id).type = type;
  }

  setAlias(id: number, alias: string | null): void {
    const node = this.node(id);
    if (alias) node.alias = alias;
    else delete node.alias;
  }

  setReturned(id: number, returned: boolean): void {
    this.node(id).returned = returned;
  }

  addConstraint(id: number, property: string, sign: ComparisonSign, value: string | boolean): void {
    this.node(id).constraints.push({ property, sign, value });
  }

  removeConstraint(id: number, index: number): void {
    this.node(id).constraints.splice(index, 1);
  }

  linkChild(parentId: number, childId: number, leg: Leg, kind: RelKind): void {
    this.node(parentId).relations.push({ targetId: childId, leg, kind });
  }

  unlink(parentId: number, childId: number): void {
    const node = this.node(parentId);
    node.relations = node.relations.filter((r) => r.targetId !== childId);
  }

  addCompare(id: number, property: string, sign: ComparisonSign, otherId: number, otherProperty: string): void {
    this.node(id).compares.push({ property, sign, otherId, otherProperty });
  }

  removeCompare(id: number, index: number): void {
    this.node(id).compares.splice(index, 1);
  }

  clear(): void {
    this.nodes.clear();
    this.selectedNodeId = null;
    this.preview = '';
    this.previewError = '';
  }

  /** Default aliases follow the service's rules: first node TOP, then TYPE+id. */
  aliases(): Map<number, string> {
    const out = new Map<number, string>();
    const ids = this.nodeIds();
    ids.forEach((id, index) => {
      const node = this.node(id);
      if (node.alias) {
        out.set(id, node.alias);
      } else if (index === 0) {
        out.set(id, 'TOP');
      } else {
        const base = node.type === 'ANY' ? 'ANY' : node.type === 'BASE OB' ? 'BASE' : node.type;
        out.set(id, `${base.replace(/\|/g, '_')}${id}`);
      }
    });
    return out;
  }

  returnedAliases(): string[] {
    const aliases = this.aliases();
    return this.nodeIds()
      .filter((id) => this.node(id).returned)
      .map((id) => aliases.get(id) as string);
  }

  diagnostics(): Diagnostic[] {
    const out: Diagnostic[] = [];
    const ids = new Set(this.nodeIds());
    if (ids.size === 0) {
      out.push({ code: 'EmptyPattern', message: 'add at least one node' });
      return out;
    }

    const seenAliases = new Set<string>();
    for (const alias of this.aliases().values()) {
      if (seenAliases.has(alias)) {
        out.push({ code: 'DuplicateAlias', message: `alias ${alias} names two nodes` });
      }
      seenAliases.add(alias);
    }

    const hasInbound = new Set<number>();
    for (const id of ids) {
      const node = this.node(id);
      const immediateLegs = new Set<string>();
      for (const rel of node.relations) {
        if (!ids.has(rel.targetId)) {
          out.push({
            code: 'DanglingReference',
            message: `node ${id} links to missing node ${rel.targetId}`,
            nodeId: id,
          });
        } else {
          hasInbound.add(rel.targetId);
        }
        if (rel.kind === 'IMMEDIATE' && (rel.leg === 'OUTER' || rel.leg === 'INNER')) {
          if (immediateLegs.has(rel.leg)) {
            out.push({
              code: 'DuplicateLeg',
              message: `node ${id} has two immediate ${rel.leg} children`,
              nodeId: id,
            });
          }
          immediateLegs.add(rel.leg);
        }
      }
      for (const cmp of node.compares) {
        if (!ids.has(cmp.otherId)) {
          out.push({
            code: 'DanglingReference',
            message: `node ${id} compares against missing node ${cmp.otherId}`,
            nodeId: id,
          });
        }
      }
      for (const constraint of node.constraints) {
        const ordered = ['<', '<=', '>=', '>'].includes(constraint.sign);
        const numeric =
          typeof constraint.value === 'number' ||
          (typeof constraint.value === 'string' && NUMERIC_LITERAL.test(constraint.value));
        if (ordered && (!numeric || NON_NUMERIC_PREDICATES.has(constraint.property))) {
          out.push({
            code: 'NonNumericComparison',
            message: `node ${id}: ${constraint.sign} needs a numeric value for ${constraint.property}`,
            nodeId: id,
          });
        }
      }
    }

    if (this.hasCycle()) {
      out.push({ code: 'CyclicPattern', message: 'relationships form a cycle' });
    }

    for (const id of ids) {
      const node = this.node(id);
      const comparedAgainst = this.nodeIds().some((other) =>
        this.node(other).compares.some((c) => c.otherId === id),
      );
      if (
        node.type === 'ANY' &&
        node.constraints.length === 0 &&
        node.compares.length === 0 &&
        node.relations.length === 0 &&
        !hasInbound.has(id) &&
        !comparedAgainst
      ) {
        out.push({
          code: 'UnconstrainedNode',
          message: `node ${id} is ANY with nothing pinning it`,
          nodeId: id,
        });
      }
    }
    return out;
  }

  private hasCycle(): boolean {
    const WHITE = 0;
    const GRAY = 1;
    const BLACK = 2;
    const color = new Map<number, number>(this.nodeIds().map((id) => [id, WHITE]));
    const visit = (id: number): boolean => {
      color.set(id, GRAY);
      for (const rel of this.node(id).relations) {
        if (!color.has(rel.targetId)) continue;
        if (color.get(rel.targetId) === GRAY) return true;
        if (color.get(rel.targetId) === WHITE && visit(rel.targetId)) return true;
      }
      color.set(id, BLACK);
      return false;
    };
    return this.nodeIds().some((id) => color.get(id) === WHITE && visit(id));
  }

  canExport(): boolean {
    return this.nodes.size > 0 && this.diagnostics().length === 0;
  }

  /** Canonical builder document, inverse entries included (the Fig-5 shape). */
  exportDoc(): PatternDoc {
    if (!this.canExport()) {
      throw new Error('cannot export: ' + this.diagnostics().map((d) => d.code).join(', '));
    }
    const parentsOf = new Map<number, number[]>();
    for (const id of this.nodeIds()) {
      for (const rel of this.node(id).relations) {
        if (rel.kind === 'IMMEDIATE') {
          const list = parentsOf.get(rel.targetId) ?? [];
          list.push(id);
          parentsOf.set(rel.targetId, list);
        }
      }
    }

    const pops: PatternPop[] = this.nodeIds().map((id) => {
      const node = this.node(id);
      const props: PropertyEntry[] = [];
      for (const constraint of node.constraints) {
        props.push({ id: constraint.property, value: constraint.value, sign: constraint.sign });
      }
      for (const rel of node.relations) {
        props.push({
          id: LEG_TO_PREDICATE[rel.leg],
          value: rel.targetId,
          sign: (rel.kind === 'IMMEDIATE' ? 'Immediate Child' : 'Descendant Child') as RelationshipSign,
        });
      }
      for (const parent of parentsOf.get(id) ?? []) {
        props.push({ id: 'hasOutputStream', value: parent });
      }
      const pop: PatternPop = { ID: id, type: node.type, popProperties: props };
      if (node.alias) pop.alias = node.alias;
      if (!node.returned) pop.returned = false;
      if (node.compares.length) {
        pop.compare = node.compares.map((c) => ({
          property: c.property,
          sign: c.sign,
          otherId: c.otherId,
          otherProperty: c.otherProperty,
        }));
      }
      return pop;
    });

    const doc: PatternDoc = { pops };
    if (this.name) doc.name = this.name;
    if (this.description) doc.description = this.description;
    return doc;
  }

  /** Load a document into the builder (export -> import is the identity). */
  importDoc(doc: PatternDoc): void {
    this.clear();
    this.name = doc.name ?? '';
    this.description = doc.description ?? '';
    for (const pop of doc.pops) {
      const node: BuilderNode = {
        id: pop.ID,
        type: pop.type,
        returned: pop.returned !== false,
        constraints: [],
        compares: [],
        relations: [],
      };
      if (pop.alias) node.alias = pop.alias;
      for (const entry of pop.popProperties ?? []) {
        const sign = entry.sign ?? '';
        if (sign === 'Immediate Child' || sign === 'Descendant Child') {
          node.relations.push({
            targetId: entry.value as number,
            leg: PREDICATE_TO_LEG[entry.id] ?? 'GENERIC',
            kind: sign === 'Immediate Child' ? 'IMMEDIATE' : 'DESCENDANT',
          });
        } else if (entry.id === 'hasOutputStream') {
          // redundant inverse: regenerated on export
        } else {
          node.constraints.push({
            property: entry.id,
            sign: sign as ComparisonSign,
            value: entry.value,
          });
        }
      }
      for (const cmp of pop.compare ?? []) {
        node.compares.push({
          property: cmp.property,
          sign: cmp.sign,
          otherId: cmp.otherId,
          otherProperty: cmp.otherProperty,
        });
      }
      this.nodes.set(pop.ID, node);
    }
  }

  /** Refresh the query preview from the service; never computed locally. */
  async refreshPreview(api: ApiClient): Promise<void> {
    if (!this.canExport()) {
      this.preview = '';
      this.previewError = this.diagnostics()
        .map((d) => `${d.code}: ${d.message}`)
        .join('\n');
      return;
    }
    try {
      const response = await api.compilePattern(this.exportDoc());
      this.preview = response.query;
      this.previewError = '';
    } catch (error) {
      this.preview = '';
      this.previewError = String(error);
    }
  }
}

/** Order-insensitive semantic equality of two pattern documents. */
export function patternsEquivalent(a: PatternDoc, b: PatternDoc): boolean {
  return normalizePattern(a) === normalizePattern(b);
}

export function normalizePattern(doc: PatternDoc): string {
  const pops = [...doc.pops]
    .sort((x, y) => x.ID - y.ID)
    .map((pop) => {
      const constraints: string[] = [];
      const relations: string[] = [];
      for (const entry of pop.popProperties ?? []) {
        const sign = entry.sign ?? '';
        if (sign === 'Immediate Child' || sign === 'Descendant Child') {
          relations.push(`${entry.id}|${sign}|${entry.value}`);
        } else if (entry.id !== 'hasOutputStream') {
          constraints.push(`${entry.id}|${sign}|${normalizeValue(entry.value)}`);
        }
      }
      const compares = (pop.compare ?? []).map(
        (c) => `${c.property}|${c.sign}|${c.otherId}|${c.otherProperty}`,
      );
      return JSON.stringify({
        id: pop.ID,
        type: pop.type,
        alias: pop.alias ?? null,
        returned: pop.returned !== false,
        constraints: constraints.sort(),
        relations: relations.sort(),
        compares: compares.sort(),
      });
    });
  return pops.join('\n');
}

function normalizeValue(value: string | number | boolean): string {
  if (typeof value === 'boolean') return value ? 'true' : 'false';
  const text = String(value);
  if (NUMERIC_LITERAL.test(text)) {
    const parsed = Number(text);
    if (Number.isFinite(parsed)) return String(parsed);
  }
  return text;
}
