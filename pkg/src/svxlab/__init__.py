"""svxlab: streaming hierarchical supervoxel segmentation, supervoxel
shape-context features with a recognition harness, and a timed
forced-choice perception-study service with analysis tooling."""

from .video_io import VideoVolume, gaussian_smooth, load_frames, resize_bilinear
from .segmentation import (
    Hierarchy,
    SegmentationParams,
    SupervoxelLabeling,
    build_hierarchy,
    build_region_graph,
    build_voxel_graph,
    extract_level,
    fh_merge,
    segmentation_energy,
    stream_segment,
)
from .visualization import colorize, render_boundaries
from .motion import FlowField, ReferencePoint, compute_flow, flow_center_of_mass
from .ssc import SSCVideoDescriptor, boundary_points, log_polar_histogram, ssc_descriptor
from .recognition import (
    Codebook,
    ConfusionMatrix,
    LabeledDescriptor,
    bow_encode,
    kmeans_codebook,
    loo_evaluate,
)
from .study import PerceptionRecord, StudyDataset, StudyService, build_splits
from .analysis import confusion, response_time_density, stratified_accuracy

__version__ = "0.1.0"
