"""Interview-style dynamic evaluation of language models.

The pipeline grades a target model on seed benchmark batches, extends
each batch with follow-up questions generated from an entity context
graph at an adaptively chosen difficulty, produces per-batch feedback
suggestions, and validates those suggestions by re-asking the seed
questions with and without them.
"""

from .chunking import Chunk, ChunkPolicy, split_to_chunks
from .difficulty import (
    CapabilityState,
    DifficultyConfig,
    average_score,
    decide_difficulty,
    fold,
    gain,
    min_consecutive_correct,
    validate_config,
)
from .graph import (
    ContextGraph,
    GraphBundle,
    GraphNode,
    build_context_graph,
    chunks_of,
    neighbors,
    normalize_entity,
)
from .interview import (
    ModelEndpoints,
    RunConfig,
    RunResult,
    evaluate_feedback,
    generate_extended_question,
    grade_batch,
    run_evaluation,
    run_interactive_extension,
    split_batches,
)
from .records import (
    BatchDossier,
    ChoiceOption,
    DifficultyLevel,
    EvaluationSuggestion,
    QaRecord,
    Question,
    QuestionKind,
    Stage,
)
from .sampling import KnowledgePath, most_similar_entity, sample_knowledge_path
from .similarity import EmbeddingBackend, LexicalNgramBackend, similarity
from .validation import (
    JudgeMode,
    JudgePolicy,
    ValidationReport,
    check_answer,
    related_questions,
    transfer_suggestions,
    validate_suggestions,
)

__version__ = "0.1.0"
