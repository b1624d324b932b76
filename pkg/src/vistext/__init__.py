"""vistext: shape-adaptive image tiling, instruction building, and metrics.

The package covers everything around a frozen vision-language model:
choosing a tiling grid for an arbitrary image shape, cutting pixels,
attaching 2-D crop position encodings to feature blocks, building
"Human: ... AI:" instruction samples for six task families, mixing
datasets deterministically, and scoring predictions.
"""

__version__ = "0.1.0"

from .cropping import (
    CropPlan,
    CropRegion,
    CropSet,
    crop_image_file,
    execute_plan,
    load_image,
    plan_crops,
    reassemble,
    resize_bilinear,
)
from .grid import (
    CellDims,
    CropConfig,
    Grid,
    ImageDims,
    ScoredGrid,
    centered_iou,
    enumerate_grids,
    score_grid,
    score_ra,
    score_rr,
    select_grid,
)
from .instructions import (
    InstructionSample,
    OcrToken,
    SampleMeta,
    Task,
    TemplateSet,
    format_caption,
    format_ie,
    format_nli,
    format_vqa,
    load_templates,
    make_keypoints_sample,
    make_text_reading_sample,
    serialize_reading_order,
    split_position_distribution,
    split_position_weights,
)
from .metrics import (
    KVRecord,
    MetricReport,
    QARecord,
    anls,
    anls_similarity,
    bleu,
    exact_accuracy,
    kv_f1,
    levenshtein,
    relaxed_accuracy,
    relaxed_match,
)
from .pipeline import (
    DatasetSpec,
    GridHistogram,
    RunConfig,
    SplitMix64,
    build_mixture,
    grid_stats,
    ingest,
    load_run_config,
    plan_report,
    run_eval,
    shuffle_in_place,
)
from .posenc import (
    PositionTables,
    build_position_tables,
    encode_positions,
    flatten_sequence,
    read_matrix,
    unflatten_sequence,
    write_matrix,
)
