"""Heatmap-based surgical instrument pose estimation.

Heatmaps are float64 arrays of shape (H, W, C) in row-major order; joint
positions are (x, y) pixel coordinates with x along columns. Tensors for the
network kernels are (N, H, W, C).
"""

from ._core import (
    DecodeConfig,
    FormatError,
    InvalidInput,
    Skeleton,
    add_label_noise,
    attention_gate,
    attention_gate_backward,
    bbox_from_joints,
    decode_single,
    default_config,
    ema_update,
    evaluate,
    flip_h,
    gate_pseudo_label,
    gate_tv_total,
    gaussian_kernel,
    gaussian_smooth,
    generate_scene,
    group_norm,
    group_norm_backward,
    high_boost,
    line_integral_score,
    match_detections,
    max_score_matching,
    min_cost_assignment,
    mirror_joint_name,
    nms_candidates,
    parse_instruments,
    plan_swap,
    read_hmap,
    render_targets,
    rlrelu,
    rlrelu_backward,
    rotate,
    rotate_point,
    run_cli,
    swap_instruments,
    total_variation,
    translate,
    write_hmap,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
