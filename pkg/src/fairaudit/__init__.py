"""fairaudit: subgroup fairness metrics from model prediction and embedding dumps."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    AssociationType,
    AuditError,
    BoundingBox,
    EmbeddingMatrix,
    GroupKey,
    HouseholdManifest,
    IncomeBucket,
    PredictionRecord,
    SubjectManifest,
    ValidationError,
    derive_age_group,
    derive_skin_group,
    validate,
)
from .formats import read_embeddings, read_predictions, write_embeddings, write_predictions  # noqa: F401
from .manifests import read_manifest, validate_distribution  # noqa: F401
from .taxonomy import AssociationTaxonomy, classify_label, load_default_taxonomy, load_taxonomy  # noqa: F401
from .geometry import CropPlan, cc_face_crop_plan, miap_crop_plan, middle_frame_index  # noqa: F401
from .association import ThresholdGrid, association_rates, image_hits  # noqa: F401
from .geodiversity import (  # noqa: F401
    BootstrapSpec,
    aggregate_geo,
    dedupe,
    household_hit_rates,
    image_hit,
    income_bucket,
    load_concept_map,
)
from .knn import NeighborList, normalize_rows, top_k  # noqa: F401
from .retrieval import precision_at_k, retrieval_report  # noqa: F401
