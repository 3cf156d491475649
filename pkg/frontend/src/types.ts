/** Wire types shared with the planmatch HTTP service. */

export type ComparisonSign = '<' | '<=' | '=' | '!=' | '>=' | '>';
export type RelationshipSign = 'Immediate Child' | 'Descendant Child';

export type LegPredicate =
  | 'hasOuterInputStream'
  | 'hasInnerInputStream'
  | 'hasInputStream'
  | 'hasAnyInputStream';

export const LEG_PREDICATES: readonly LegPredicate[] = [
  'hasOuterInputStream',
  'hasInnerInputStream',
  'hasInputStream',
  'hasAnyInputStream',
];

export interface PropertyEntry {
  id: string;
  value: string | number | boolean;
  sign?: string;
}

export interface CompareEntry {
  property: string;
  sign: ComparisonSign;
  otherId: number;
  otherProperty: string;
}

export interface PatternPop {
  ID: number;
  type: string;
  alias?: string;
  returned?: boolean;
  popProperties?: PropertyEntry[];
  compare?: CompareEntry[];
  planDetails?: unknown[];
}

export interface PatternDoc {
  name?: string;
  description?: string;
  pops: PatternPop[];
}

export interface CompileResponse {
  name: string;
  query: string;
}

export interface MatchLocation {
  kind: 'OPERATOR' | 'BASE_OBJECT' | 'STREAM' | 'LITERAL';
  ref: number | string;
  label: string;
  returned?: boolean;
}

export type MatchRow = Record<string, MatchLocation>;

export interface MatchSetExport {
  plan_id: string;
  pattern: string;
  rows: MatchRow[];
}

export interface SearchExport {
  workload_id: string;
  pattern: string;
  plan_count: number;
  match_count: number;
  matches: MatchSetExport[];
}

export interface WorkloadSummary {
  workload_id: string;
  plans: Record<string, { operators: number; total_cost: string }>;
  diagnostics: string[];
}

export interface PlanOperatorDoc {
  op_num: number;
  op_type: string;
  modifiers: string[];
  cardinality: string;
  total_cost: string;
  io_cost: string;
  details: Record<string, string>;
}

export interface PlanBaseObjectDoc {
  name: string;
  cardinality: string;
  correlation: string | null;
  kind: 'TABLE' | 'INDEX';
}

export interface PlanStreamDoc {
  parent: number;
  child: number | string;
  leg: 'OUTER' | 'INNER' | 'GENERIC';
  ordinal: number;
}

export interface PlanDoc {
  format: 'planmatch-plan';
  version: 1;
  plan_id: string;
  source_name: string;
  operators: PlanOperatorDoc[];
  base_objects: PlanBaseObjectDoc[];
  streams: PlanStreamDoc[];
}

export interface KbEntrySummary {
  entry_id: string;
  name: string;
  pattern: PatternDoc;
  query: string;
  template: string;
  severity_weight: string;
  provenance: string;
}

export interface Diagnostic {
  code: string;
  message: string;
  nodeId?: number;
}
