"""Grammar-driven generation of artificial Nawatl sentences, corpus
normalization and a sentence-similarity evaluation harness."""

from .corpus import (
    AugmentationRatios,
    CorpusStats,
    MergeResult,
    NormalizationError,
    NormalizationRuleSet,
    RewriteRule,
    augmentation_ratios,
    compute_stats,
    load_rules,
    merge_corpora,
    merge_to,
    normalize,
)
from .engine import (
    REFERENCE_FILTERED_COUNT,
    Choice,
    ChoiceError,
    ConstraintViolation,
    CountReport,
    GeneratedSentence,
    LexicalUse,
    SamplingError,
    UnknownLexicalForm,
    cardinalities,
    count_symbolic,
    enumerate_sentences,
    expand,
    iter_sentences,
    reconciliation_note,
    sample,
)
from .filtering import (
    FILTERS,
    FilterPipeline,
    FilterVerdict,
    RejectionLog,
    UntaggedLexicalUse,
    animacy_filter,
    apply_pipeline,
    no_repeat_noun_filter,
)
from .grammar import (
    Diagnostic,
    Grammar,
    GrammarError,
    GrammarSymbol,
    GrammarSyntaxError,
    JoinOp,
    ProductionRule,
    RecursionInGrammar,
    RuleElement,
    bundled_grammar,
    load_grammar,
    make_grammar,
    parse_grammar,
    validate_grammar,
)
from .lexicon import (
    Animacy,
    KnowledgeBase,
    LexicalEntry,
    LexiconError,
    UnknownCategoryError,
    bundled_kb,
    entries_for,
    load_kb,
)
from .similarity import (
    DEFAULT_STOPWORDS,
    EmbeddingTable,
    LeaveOneOutReport,
    RankingTask,
    TaskScore,
    TaskSuite,
    cosine,
    evaluate_suite,
    kendall_tau,
    leave_one_out_report,
    load_suite,
    load_vectors,
    rank_candidates,
    sentence_embedding,
)

__version__ = "0.1.0"
