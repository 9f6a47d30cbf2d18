"""Trajectory-to-behavior labeling toolkit.

Converts raw vehicle trajectories into hierarchical behavior labels through
a four-stage rule/automaton pipeline, learns the rule thresholds from the
data by descent on a partition-similarity objective, and supports
similarity search and unique-behavior mining over labeled corpora.
"""

from .labels import (
    ACTION,
    LEVELS,
    MANEUVER,
    TRACE,
    TREND,
    ActionSegment,
    FrameLabels,
    SdlLabel,
    deserialize,
    project,
    read_labels_jsonl,
    serialize,
    to_sdl,
    write_labels_jsonl,
)
from .optimizer import (
    OptimizationTrace,
    OptimizerConfig,
    combined_thresholds,
    fd_gradient,
    optimize_all,
    optimize_channel,
    seed_from_distribution,
)
from .partitioning import (
    DOMAIN_THRESHOLDS,
    KinematicDistributions,
    PartitionId,
    ThresholdSet,
    build_distributions,
    classify,
    mu_part,
    objective,
)
from .pipeline import PipelineConfig, PipelineResult, label_trajectory, run_pipeline
from .search import LabeledCorpus, SearchQuery, distance, find_unique, label_stats, search
from .synth import (
    BehaviorScript,
    GroundTruth,
    LateralPrimitive,
    LongitudinalPrimitive,
    ScriptMix,
    build_ground_truth,
    generate,
    generate_corpus,
    truth_corpus,
)
from .trajectory import (
    Corpus,
    Trajectory,
    VehicleState,
    derive_kinematics,
    export,
    ingest,
    trajectory_from_positions,
)

__version__ = "0.1.0"
