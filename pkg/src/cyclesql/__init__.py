"""Data-grounded explanation and verification loop for NL2SQL candidates.

Pipeline: parse the candidate SQL, rewrite it to retrieve why-provenance for
one result row, annotate the provenance with clause semantics, verbalize the
provenance graph into a deterministic explanation, and let an entailment
verifier accept or reject the candidate, iterating down the ranked list.
"""

from .annotator import Annotation, EnrichedProvenanceTable, annotate, operation_only_semantics
from .errors import (
    BackendUnavailable,
    CycleSqlError,
    DomainError,
    EmptyProvenance,
    MalformedCatalog,
    ParseError,
    RewriteError,
    SqlExecutionError,
    TaskError,
    Timeout,
    UnsupportedSyntax,
)
from .explainer import (
    Explainer,
    Explanation,
    JoinSemantics,
    ProvenanceGraph,
    build_graph,
    compose,
    discover_join_semantics,
    explain,
    generate_phrases,
    summarize,
)
from .gateway import DbGateway, ExecutionLimits, ProvenanceTable, bag_equal, load_catalog
from .harness import (
    GoldExample,
    NliTriple,
    evaluate,
    exact_match,
    execution_match,
    gen_training_triples,
    read_gold,
)
from .loop import LoopConfig, LoopResult, TranslationTask, run_dataset, run_task
from .parser import decompose, parse, referenced_columns
from .rewriter import (
    ResultSet,
    RewrittenQuery,
    apply_rule1,
    apply_rule2,
    apply_rule3,
    rewrite,
)
from .schema import NlQuery, SchemaCatalog, load_tables_json
from .sqlast import ColumnRef, QueryUnit, SqlQuery
from .verifier import (
    AlwaysEntailVerifier,
    FocalLossParams,
    HeuristicVerifier,
    NliInput,
    OracleVerifier,
    RemoteVerifier,
    Verdict,
    assemble_premise,
    focal_loss,
    verify,
)

__version__ = "0.1.0"
