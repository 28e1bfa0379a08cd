"""Vertex-replacement grammars for dynamic graphs."""

from .graphs import (
    DynamicGraph,
    LabeledMultigraph,
    ParseError,
    Vocabulary,
    ingest_edge_list,
    ingest_path,
    snapshot_stats,
)
from .clustering import Dendrogram, Filtration, dendrogram_to_filtration, hierarchical_cluster
from .grammar import (
    Grammar,
    IntegrityError,
    Rule,
    canonical_form,
    description_length,
    extract_grammar,
    replay_derivation,
    rule_isomorphic,
)
from .temporal import (
    EdgeClass,
    UpdateReport,
    apply_deletion,
    apply_frontier_external,
    apply_internal_addition,
    classify_edges,
    extract_snapshot_grammar,
    update_grammar,
)
from .deviation import (
    DeviationSeries,
    deviation_score,
    evaluate_series,
    forecast,
    graph_edit_distance,
    impostor_rank,
)
from .generation import WeightedGrammar, compatible_classes, generate, weight_grammar
from .transitions import TransitionTally, tally_transitions, top_transitions
from .baselines import (
    chung_lu_generate,
    er_generate,
    laplacian_spectrum,
    portrait,
    portrait_divergence,
    spectrum_mmd,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
