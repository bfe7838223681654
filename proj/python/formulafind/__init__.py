"""LaTeX formula encoding, LSTM feature extraction and retrieval."""

from ._core import (
    Corpus,
    CorpusError,
    EncodedExpression,
    EncodeError,
    FeatureDatabase,
    Model,
    ModelConfig,
    ModelError,
    RetrievalError,
    Vocabulary,
    VocabularyError,
    build_feature_db,
    default_vocabulary,
    encode,
    euclidean_distance,
    generate_synthetic,
    initialize_model,
    lcs_length,
    load_checkpoint,
    load_feature_db,
    load_vocabulary,
    nested_depth,
    query_lcs,
    query_semantic,
    read_corpus,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
