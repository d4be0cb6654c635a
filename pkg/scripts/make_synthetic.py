#!/usr/bin/env python3
"""Write the prebuilt synthetic scenes to JSON annotation files.

Usage:
    python3 scripts/make_synthetic.py --out scenes/
    cropdet run --annotations scenes/low_resolution.json --out results/
"""

import argparse
from pathlib import Path

from cropdet.datasets_eval import save_annotations
from cropdet.synthetic import SCENES


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="scenes", metavar="DIR")
    parser.add_argument("--frames", type=int, default=None,
                        help="override each scene's default length")
    parser.add_argument("--scene", choices=sorted(SCENES), action="append",
                        help="write only this scene (repeatable; default: all)")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.scene or sorted(SCENES):
        build = SCENES[name]
        annotations = build(args.frames) if args.frames is not None else build()
        path = out / f"{name}.json"
        save_annotations(annotations, path)
        n_boxes = sum(len(frame) for frame in annotations.frames)
        print(f"{path}: {annotations.frame_count} frames, {n_boxes} boxes")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
