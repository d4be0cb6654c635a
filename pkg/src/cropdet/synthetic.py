"""Deterministic synthetic scenes for pipeline tests and benchmarks.

Walkers move in straight lines at constant speed; boxes are clamped to
the frame. The prebuilt scenes are tuned against the detector's default
visibility floor at a 416x416 full-frame input on a 1080p frame:
heights of 32 px and up survive the full-frame downscale, anything
under that is only detectable inside a crop.
"""

from __future__ import annotations

from dataclasses import dataclass

from .datasets_eval import AnnotationSet, GroundTruth, PEDESTRIAN_CATEGORY
from .geometry import BoundingBox, FrameDims, clamp_box

SCENE_DIMS = FrameDims(1920, 1080)


@dataclass(frozen=True)
class Walker:
    """One synthetic pedestrian: initial box plus per-frame velocity."""

    object_id: int
    x: float
    y: float
    width: float
    height: float
    vx: float = 0.0
    vy: float = 0.0


def walkers_annotation_set(
    walkers: list[Walker] | tuple[Walker, ...], n_frames: int, dims: FrameDims
) -> AnnotationSet:
    """Ground truth for walkers over n_frames of linear motion."""
    frames = []
    for frame in range(n_frames):
        frames.append(
            tuple(
                GroundTruth(
                    box=clamp_box(
                        BoundingBox(
                            w.x + w.vx * frame,
                            w.y + w.vy * frame,
                            w.x + w.vx * frame + w.width,
                            w.y + w.vy * frame + w.height,
                        ),
                        dims,
                    ),
                    object_id=w.object_id,
                    category=PEDESTRIAN_CATEGORY,
                )
                for w in walkers
            )
        )
    return AnnotationSet(dims=dims, frames=tuple(frames))


def fidelity_scene(n_frames: int = 50) -> AnnotationSet:
    """Two well-separated clusters plus two strays, everyone large enough
    to be seen in every pass. With a noise-free detector the pipeline
    should reproduce this scene exactly."""
    walkers = (
        Walker(1, 330.0, 330.0, 24.0, 60.0, 0.5, 0.2),
        Walker(2, 420.0, 350.0, 26.0, 64.0, -0.3, 0.4),
        Walker(3, 360.0, 470.0, 22.0, 56.0, 0.4, -0.3),
        Walker(4, 480.0, 430.0, 28.0, 72.0, -0.2, -0.4),
        Walker(5, 530.0, 350.0, 24.0, 60.0, 0.3, 0.5),
        Walker(6, 1330.0, 640.0, 26.0, 66.0, -0.3, 0.3),
        Walker(7, 1430.0, 620.0, 24.0, 58.0, 0.4, -0.2),
        Walker(8, 1360.0, 760.0, 28.0, 70.0, 0.2, 0.5),
        Walker(9, 1480.0, 740.0, 30.0, 80.0, -0.2, -0.3),
        Walker(10, 150.0, 900.0, 26.0, 64.0, 0.5, 0.0),
        Walker(11, 1750.0, 150.0, 24.0, 56.0, -0.4, 0.3),
    )
    return walkers_annotation_set(walkers, n_frames, SCENE_DIMS)


def low_resolution_scene(n_frames: int = 50) -> AnnotationSet:
    """Three clusters of one tall anchor plus four short walkers, and two
    lone anchors. The short walkers (20 to 28 px) fall below the
    visibility floor at full-frame scale but not inside crops, so crop
    scheduling is what makes them detectable."""
    walkers = (
        # cluster 1 around (411, 424)
        Walker(1, 400.0, 400.0, 22.0, 48.0, 0.3, 0.1),
        Walker(2, 380.0, 400.0, 12.0, 24.0, 0.3, 0.1),
        Walker(3, 430.0, 398.0, 12.0, 26.0, 0.3, 0.1),
        Walker(4, 390.0, 430.0, 10.0, 20.0, 0.3, 0.1),
        Walker(5, 425.0, 432.0, 14.0, 22.0, 0.3, 0.1),
        # cluster 2 around (1012, 326)
        Walker(6, 1000.0, 300.0, 24.0, 52.0, -0.2, 0.2),
        Walker(7, 975.0, 305.0, 12.0, 24.0, -0.2, 0.2),
        Walker(8, 1035.0, 302.0, 12.0, 26.0, -0.2, 0.2),
        Walker(9, 985.0, 335.0, 10.0, 20.0, -0.2, 0.2),
        Walker(10, 1030.0, 334.0, 12.0, 22.0, -0.2, 0.2),
        # cluster 3 around (1561, 773)
        Walker(11, 1550.0, 750.0, 22.0, 46.0, 0.2, -0.2),
        Walker(12, 1525.0, 752.0, 12.0, 24.0, 0.2, -0.2),
        Walker(13, 1580.0, 748.0, 12.0, 26.0, 0.2, -0.2),
        Walker(14, 1535.0, 780.0, 10.0, 20.0, 0.2, -0.2),
        Walker(15, 1578.0, 782.0, 12.0, 22.0, 0.2, -0.2),
        # lone anchors
        Walker(16, 200.0, 850.0, 22.0, 44.0, 0.4, 0.0),
        Walker(17, 1750.0, 180.0, 24.0, 52.0, -0.3, 0.2),
    )
    return walkers_annotation_set(walkers, n_frames, SCENE_DIMS)


def flicker_scene(n_frames: int = 60) -> AnnotationSet:
    """Eight isolated walkers, all visible at every scale, placed far
    enough apart that no two ever share a crop. Meant to be replayed
    with confidence flicker enabled."""
    walkers = (
        Walker(1, 100.0, 100.0, 20.0, 48.0, 0.4, 0.2),
        Walker(2, 700.0, 120.0, 24.0, 56.0, -0.3, 0.3),
        Walker(3, 1300.0, 140.0, 22.0, 52.0, 0.2, 0.4),
        Walker(4, 1800.0, 200.0, 20.0, 44.0, -0.4, 0.1),
        Walker(5, 150.0, 700.0, 26.0, 64.0, 0.5, -0.2),
        Walker(6, 800.0, 750.0, 22.0, 40.0, 0.1, 0.3),
        Walker(7, 1400.0, 800.0, 24.0, 60.0, -0.2, -0.3),
        Walker(8, 1850.0, 900.0, 20.0, 48.0, -0.5, 0.2),
    )
    return walkers_annotation_set(walkers, n_frames, SCENE_DIMS)


SCENES = {
    "fidelity": fidelity_scene,
    "low_resolution": low_resolution_scene,
    "flicker": flicker_scene,
}
