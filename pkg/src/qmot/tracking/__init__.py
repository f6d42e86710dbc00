"""Detection-to-track association: geometry, motion model, appearance hash, tracker."""

from .detections import Detection, FrameDetections, TrackTable
from .geometry import BoundingBox, LocationCode, iou, location_code
from .kalman import KalmanBoxFilter
from .phash import crop_hash, hamming, hash_similarity, perceptual_hash
from .tracker import (Track, Tracker, TrackerConfig, TrackingError, TrackingRun, build_frame_graphs,
                      predict_tracks, run_tracker, warm_start)

__all__ = [
    "BoundingBox", "Detection", "FrameDetections", "KalmanBoxFilter", "LocationCode", "Track", "Tracker", "TrackerConfig",
    "TrackTable", "TrackingError", "TrackingRun", "build_frame_graphs", "crop_hash", "hamming", "hash_similarity",
    "iou", "location_code", "perceptual_hash", "predict_tracks", "run_tracker", "warm_start",
]
