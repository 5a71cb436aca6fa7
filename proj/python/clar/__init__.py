"""Frequency-guided diffusion augmentation and weighted contrastive pretraining."""

from ._clar import (
    ContrastiveModel,
    Corpus,
    EpsilonNet,
    GuidanceConfig,
    LinearProbe,
    Metrics,
    NoiseSchedule,
    ResponseMap,
    SampleRecord,
    SynthConfig,
    augment_once,
    compute_metrics,
    conditioned_generate,
    crop_map,
    crop_resize,
    default_schedule,
    derive_window_len,
    dtw_distance,
    dtw_path,
    fit_probe,
    forward_sample,
    generate_unconditional,
    guidance_weights,
    haar_analysis,
    linear_resample,
    load_corpus,
    make_schedule,
    mean_cross_class_dtw,
    metrics_json,
    pair_candidates,
    pair_weight,
    probe_predict,
    response_map,
    sample_weight,
    save_corpus,
    select_templates,
    sliding_windows,
    synth_generate,
    train_ddpm,
    warp_aggregate,
    weighted_ntxent,
)

__version__ = "0.1.0"

__all__ = [
    "ContrastiveModel",
    "Corpus",
    "EpsilonNet",
    "GuidanceConfig",
    "LinearProbe",
    "Metrics",
    "NoiseSchedule",
    "ResponseMap",
    "SampleRecord",
    "SynthConfig",
    "augment_once",
    "compute_metrics",
    "conditioned_generate",
    "crop_map",
    "crop_resize",
    "default_schedule",
    "derive_window_len",
    "dtw_distance",
    "dtw_path",
    "fit_probe",
    "forward_sample",
    "generate_unconditional",
    "guidance_weights",
    "haar_analysis",
    "linear_resample",
    "load_corpus",
    "make_schedule",
    "mean_cross_class_dtw",
    "metrics_json",
    "pair_candidates",
    "pair_weight",
    "probe_predict",
    "response_map",
    "sample_weight",
    "save_corpus",
    "select_templates",
    "sliding_windows",
    "synth_generate",
    "train_ddpm",
    "warp_aggregate",
    "weighted_ntxent",
]
