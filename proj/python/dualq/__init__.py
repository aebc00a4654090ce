"""Dual-quality review detection (C++ core).

Labels, perturbation kinds and prompt variants are passed as their canonical
strings ("dual quality", "pl_chars", "zero_shot_inst", ...). Structured results
are plain dicts and lists.
"""

from ._dualq import (
    ArgumentError,
    BackendError,
    Classifier,
    EmbeddingBackend,
    Error,
    HashingEmbedding,
    IntegrityError,
    LabelParseError,
    NumericalError,
    ParseError,
    StateError,
    TransportError,
    build_prompt,
    builtin_prompt,
    dataset_stats,
    disagreement,
    evaluate,
    generate_fixture,
    labels,
    load_classifier,
    load_reviews,
    parse_label,
    parse_reviews,
    perturb,
    perturbation_kinds,
    simulate,
    train_probe,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
