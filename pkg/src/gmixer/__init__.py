"""Training-free composed-query retrieval over unit-sphere embeddings.

Two stages: geodesic-mixup candidate expansion over a grid of mixing
ratios, then re-ranking with explicit include/exclude similarity terms.
"""

from .errors import (
    BundleDataError,
    BundleFormatError,
    ConsistencyError,
    DegenerateGeometryError,
    DimensionMismatchError,
    GenerationError,
    GmixerError,
    InvalidConfigError,
)
from .geometry import angle_between, cosine, normalize, slerp
from .expansion import (
    CandidateHit,
    CandidateSet,
    RetrievalConfig,
    build_grid,
    expand,
    minmax_normalize,
)
from .metrics import EvalReport, GroundTruth, evaluate, map_at_k, recall_at_k, subset_recall_at_k
from .rerank import DeltaVariant, QueryInstance, RankedResult, delta, rerank
from .store import EmbeddingStore, ScoredId, load_bundle, write_bundle

__version__ = "0.1.0"
