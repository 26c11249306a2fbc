"""Distance-constrained embedding specialization for knowledge-based WSD."""

from .vecstore import EmbeddingTable, VectorRef, load_table, write_table
from .lexicon import Lexicon, SenseRecord, WordInstance, load_lexicon
from .network import (
    ResidualMap,
    SpecializationNet,
    forward,
    backward,
    init,
    load_checkpoint,
    save_checkpoint,
)
from .objectives import (
    LossValue,
    SenseBatch,
    WordBatch,
    attract_repel_loss,
    combined_loss,
    cosine,
    self_training_loss,
)
from .trainer import AdamState, Toggles, TrainConfig, adam_step, train
from .engine import Prediction, predict, predict_corpus, try_again
from .evaluation import (
    EvalReport,
    MarginDistribution,
    SimilarityCharacteristics,
    margin_distribution,
    micro_f1,
    similarity_characteristics,
)

__version__ = "0.1.0"
