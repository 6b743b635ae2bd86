#!/usr/bin/env python3
"""Generate the synthetic 18-hand landmark data set shipped with the package.

The original hand-contour data set used in the shape study is not
redistributable, so the package ships a synthetic stand-in: a stylized
hand outline sampled at 72 arclength-equispaced landmarks, with seeded
per-shape jitter of the control polygon, global rotation, and scale.
Running this script reproduces data/hands_synthetic.csv byte for byte.
"""

import sys
from pathlib import Path

import numpy as np

SEED = 20240
NUM_SHAPES = 18
NUM_LANDMARKS = 72

# control polygon of a left-hand silhouette, wrist -> thumb -> fingers -> wrist
HAND_OUTLINE = np.array([
    (0.30, 0.02), (0.28, 0.15), (0.24, 0.24),
    (0.12, 0.30), (0.03, 0.38), (0.06, 0.43), (0.16, 0.40), (0.24, 0.40),
    (0.26, 0.48), (0.22, 0.62), (0.22, 0.76), (0.27, 0.78), (0.31, 0.64), (0.33, 0.52),
    (0.37, 0.55), (0.36, 0.72), (0.38, 0.87), (0.43, 0.88), (0.45, 0.72), (0.46, 0.55),
    (0.51, 0.53), (0.52, 0.68), (0.55, 0.81), (0.60, 0.80), (0.60, 0.65), (0.59, 0.50),
    (0.64, 0.46), (0.68, 0.56), (0.73, 0.64), (0.77, 0.61), (0.74, 0.50), (0.70, 0.40),
    (0.72, 0.30), (0.69, 0.16), (0.62, 0.05), (0.46, 0.02),
])


def resample_closed(polygon: np.ndarray, count: int) -> np.ndarray:
    closed = np.vstack([polygon, polygon[:1]])
    seglen = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seglen)])
    targets = np.linspace(0.0, cum[-1], count, endpoint=False)
    out = np.empty((count, 2))
    out[:, 0] = np.interp(targets, cum, closed[:, 0])
    out[:, 1] = np.interp(targets, cum, closed[:, 1])
    return out


def make_shapes():
    rng = np.random.default_rng(SEED)
    shapes = []
    for _ in range(NUM_SHAPES):
        controls = HAND_OUTLINE + rng.normal(0.0, 0.012, size=HAND_OUTLINE.shape)
        angle = rng.normal(0.0, 0.15)
        scale = np.exp(rng.normal(0.0, 0.08))
        rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
        controls = scale * controls @ rot.T
        shapes.append(resample_closed(controls, NUM_LANDMARKS))
    return shapes


def main(out_path: str) -> None:
    shapes = make_shapes()
    lines = [
        f"# landmarks={NUM_LANDMARKS}",
        "# synthetic stand-in for an 18-hand planar contour data set",
        f"# generated by scripts/make_hand_dataset.py (seed {SEED})",
    ]
    for shape in shapes:
        lines.append(",".join(repr(float(v)) for v in shape.reshape(-1)))
    Path(out_path).write_text("\n".join(lines) + "\n")
    print(f"wrote {len(shapes)} shapes to {out_path}")


if __name__ == "__main__":
    default = Path(__file__).resolve().parents[1] / "src" / "manifoldmom" / "data" / "hands_synthetic.csv"
    main(sys.argv[1] if len(sys.argv) > 1 else str(default))
