"""planmatch: explain-plan problem determination.

Parse optimizer explain plans, transform them into triple graphs, match
user- and expert-defined problem patterns compiled through handler-based
queries, and render ranked, context-adapted tuning recommendations from a
knowledge base.
"""

from .canonical import dumps_canonical, parse_plan_canonical, plan_to_canonical
from .compile import (
    HandlerTable,
    QueryIR,
    allocate_handlers,
    compile_pattern,
    render_query_text,
)
from .errors import PlanmatchError
from .graph import (
    PlanLocation,
    Term,
    TripleGraph,
    build_graph,
    derive_properties,
    lookup_origin,
    plan_graph,
    serialize_graph,
)
from .kb import (
    KbEntry,
    KnowledgeBase,
    RenderedRecommendation,
    builtin_kb,
    diagnose_workload,
    kb_add,
    kb_load,
    kb_save,
    parse_template,
    render_recommendation,
    score_match,
)
from .match import (
    BindingRow,
    MatchSet,
    brute_force_oracle,
    descendant_closure,
    evaluate,
    match_workload,
)
from .model import BaseObject, Plan, PlanOperator, StreamEdge, validate_plan
from .numeric import format_decimal, parse_numeric_literal
from .pattern import (
    PatternSpec,
    builtin_patterns,
    pattern_from_builder_doc,
    pattern_to_builder_doc,
    validate_pattern,
)
from .text_parser import parse_plan_text
from .workload import (
    WorkloadStore,
    cluster_workload,
    generate_synthetic_workload,
    ingest_workload,
    search,
)

__version__ = "0.1.0"

__all__ = [
    "BaseObject",
    "BindingRow",
    "HandlerTable",
    "KbEntry",
    "KnowledgeBase",
    "MatchSet",
    "Plan",
    "PlanLocation",
    "PlanOperator",
    "PlanmatchError",
    "PatternSpec",
    "QueryIR",
    "RenderedRecommendation",
    "StreamEdge",
    "Term",
    "TripleGraph",
    "WorkloadStore",
    "allocate_handlers",
    "builtin_kb",
    "builtin_patterns",
    "brute_force_oracle",
    "build_graph",
    "cluster_workload",
    "compile_pattern",
    "derive_properties",
    "descendant_closure",
    "diagnose_workload",
    "dumps_canonical",
    "evaluate",
    "format_decimal",
    "generate_synthetic_workload",
    "ingest_workload",
    "kb_add",
    "kb_load",
    "kb_save",
    "lookup_origin",
    "match_workload",
    "parse_numeric_literal",
    "parse_plan_canonical",
    "parse_plan_text",
    "parse_template",
    "pattern_from_builder_doc",
    "pattern_to_builder_doc",
    "plan_graph",
    "plan_to_canonical",
    "render_query_text",
    "render_recommendation",
    "score_match",
    "search",
    "serialize_graph",
    "validate_pattern",
    "validate_plan",
]
