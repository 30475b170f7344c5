"""Symbol-detection scoring: IoU, greedy matching, AP, mAP.

AP is the uninterpolated all-point form: the sum of precision values at
each true-positive rank divided by the ground-truth count, i.e. the area
under the raw precision/recall staircase with recall steps of 1/num_gt.
Classes with zero ground truth and zero detections are excluded from the
mean rather than scored 0; zero ground truth with detections scores 0.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box as (x, y, width, height)."""

    x: float
    y: float
    width: float
    height: float

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.width, self.height]


@dataclass
class Detection:
    image_id: str
    class_name: str
    bbox: BBox
    score: float


@dataclass
class GroundTruth:
    image_id: str
    class_name: str
    bbox: BBox


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union; 0 when either box is degenerate."""
    if a.width <= 0 or a.height <= 0 or b.width <= 0 or b.height <= 0:
        return 0.0
    x1 = max(a.x, b.x)
    y1 = max(a.y, b.y)
    x2 = min(a.x + a.width, b.x + b.width)
    y2 = min(a.y + a.height, b.y + b.height)
    if x2 <= x1 or y2 <= y1:
        return 0.0
    inter = (x2 - x1) * (y2 - y1)
    union = a.area + b.area - inter
    return inter / union


def confidence(prob_object: float, iou_value: float) -> float:
    """Detection confidence as class probability times localization IoU."""
    if not 0.0 <= prob_object <= 1.0:
        raise ValueError(f"prob_object {prob_object} outside [0, 1]")
    if not 0.0 <= iou_value <= 1.0:
        raise ValueError(f"iou {iou_value} outside [0, 1]")
    return prob_object * iou_value


def match_detections(
    detections: Sequence[Detection],
    ground_truths: Sequence[GroundTruth],
    iou_thresh: float = 0.5,
) -> list[bool]:
    """Per-detection TP flags for one image, aligned with the input order.

    Within each class, detections are visited by descending score (ties
    keep input order); each claims the unmatched ground truth with the
    highest IoU at or above the threshold, consuming it.
    """
    flags = [False] * len(detections)
    classes = {d.class_name for d in detections}
    for cls in classes:
        order = sorted(
            (i for i, d in enumerate(detections) if d.class_name == cls),
            key=lambda i: (-detections[i].score, i),
        )
        gts = [g for g in ground_truths if g.class_name == cls]
        taken = [False] * len(gts)
        for i in order:
            best_j = -1
            best_iou = 0.0
            for j, g in enumerate(gts):
                if taken[j]:
                    continue
                v = iou(detections[i].bbox, g.bbox)
                if v >= iou_thresh and v > best_iou:
                    best_iou = v
                    best_j = j
            if best_j >= 0:
                taken[best_j] = True
                flags[i] = True
    return flags


def average_precision(flags: Sequence[bool], num_gt: int) -> float | None:
    """All-point AP for score-ranked flags; None when undefined.

    Returns None only for the excluded case (no ground truth and no
    detections).  With ground truth, AP = sum of precision at each TP
    rank / num_gt; with detections but no ground truth the score is 0.
    """
    if num_gt < 0:
        raise ValueError("num_gt must be non-negative")
    if num_gt == 0:
        return None if not flags else 0.0
    tp = 0
    total = 0.0
    for rank, flag in enumerate(flags, start=1):
        if flag:
            tp += 1
            total += tp / rank
    return total / num_gt


def precision_recall_points(flags: Sequence[bool], num_gt: int) -> list[tuple[float, float]]:
    """(recall, precision) after each ranked detection."""
    points = []
    tp = 0
    for rank, flag in enumerate(flags, start=1):
        if flag:
            tp += 1
        recall = tp / num_gt if num_gt else 0.0
        points.append((recall, tp / rank))
    return points


def mean_ap(per_class_ap: dict[str, float | None]) -> float:
    """Mean over classes with defined AP; all-excluded is an error."""
    included = [v for v in per_class_ap.values() if v is not None]
    if not included:
        raise ValueError("mean_ap: every class is excluded (no GT, no detections)")
    return sum(included) / len(included)


@dataclass
class DetectionEvalResult:
    per_class: dict[str, dict]
    mean_ap: float
    iou_thresh: float
    ap_definition: str = (
        "all-point uninterpolated; per class, sum of precision at each "
        "true-positive rank divided by the ground-truth count"
    )

    def to_json(self) -> str:
        return json.dumps(
            {
                "ap_definition": self.ap_definition,
                "iou_thresh": self.iou_thresh,
                "mean_ap": self.mean_ap,
                "per_class": self.per_class,
            },
            indent=2,
            sort_keys=True,
        )


def evaluate_detections(
    detections: Sequence[Detection],
    ground_truths: Sequence[GroundTruth],
    iou_thresh: float = 0.5,
    classes: Iterable[str] | None = None,
) -> DetectionEvalResult:
    """Match per image, pool ranked flags per class, report AP and mAP."""
    if classes is None:
        classes = sorted({d.class_name for d in detections} | {g.class_name for g in ground_truths})
    else:
        classes = sorted(set(classes))

    image_ids = sorted({d.image_id for d in detections} | {g.image_id for g in ground_truths})
    flags_by_index: dict[int, bool] = {}
    for image_id in image_ids:
        idx = [i for i, d in enumerate(detections) if d.image_id == image_id]
        dets = [detections[i] for i in idx]
        gts = [g for g in ground_truths if g.image_id == image_id]
        for local, flag in zip(idx, match_detections(dets, gts, iou_thresh)):
            flags_by_index[local] = flag

    per_class: dict[str, dict] = {}
    ap_by_class: dict[str, float | None] = {}
    for cls in classes:
        order = sorted(
            (i for i, d in enumerate(detections) if d.class_name == cls),
            key=lambda i: (-detections[i].score, i),
        )
        flags = [flags_by_index[i] for i in order]
        num_gt = sum(1 for g in ground_truths if g.class_name == cls)
        ap = average_precision(flags, num_gt)
        ap_by_class[cls] = ap
        per_class[cls] = {
            "ap": ap,
            "num_gt": num_gt,
            "num_detections": len(flags),
            "num_tp": sum(flags),
            "pr_points": [[r, p] for r, p in precision_recall_points(flags, num_gt)],
            "excluded": ap is None,
        }
    return DetectionEvalResult(
        per_class=per_class,
        mean_ap=mean_ap(ap_by_class),
        iou_thresh=iou_thresh,
    )


# ---------------------------------------------------------------------------
# detections file


def load_detections(path) -> list[Detection]:
    """JSONL with image_id, class, bbox [x, y, w, h], score per line."""
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
        try:
            bbox = obj["bbox"]
            out.append(
                Detection(
                    image_id=str(obj["image_id"]),
                    class_name=str(obj["class"]),
                    bbox=BBox(float(bbox[0]), float(bbox[1]), float(bbox[2]), float(bbox[3])),
                    score=float(obj["score"]),
                )
            )
        except (KeyError, IndexError, TypeError) as exc:
            raise ValueError(f"{path}:{lineno}: missing or malformed field: {exc}") from exc
    return out


def save_detections(path, detections: Sequence[Detection]):
    lines = []
    for d in detections:
        lines.append(
            json.dumps(
                {
                    "image_id": d.image_id,
                    "class": d.class_name,
                    "bbox": d.bbox.as_list(),
                    "score": d.score,
                },
                sort_keys=True,
            )
        )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
