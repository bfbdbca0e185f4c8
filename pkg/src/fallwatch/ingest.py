"""Dataset ingestion: scan an on-disk trial layout, load clips, parse fall labels.

Expected layout is ``root/<participant>/<camera>/<Day|Night - Trial n>/`` where each
trial is either a directory of numerically named image frames or a single video
file. Fall labels live in a CSV with columns
``participant,modality,trial,start_frame,end_frame`` (frame indices in the clip's
native frame-rate space, inclusive on both ends).
"""

import csv
import enum
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .errors import ConfigurationError, DataError

# Luminance coefficients for RGB -> gray (ITU-R BT.601), fixed for determinism.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

IMAGE_EXTENSIONS = {".jpg", ".jpeg", ".png", ".bmp"}
VIDEO_EXTENSIONS = {".mp4", ".avi", ".mkv"}

DAY = "Day"
NIGHT = "Night"


class Modality(enum.Enum):
    """A camera stream type with its native frame rate."""

    IP_IR = ("IP_IR", 20.0, False)
    ORBBEC_IR = ("ORBBEC_IR", 30.0, False)
    ORBBEC_DEPTH = ("ORBBEC_DEPTH", 30.0, True)
    ZED_DEPTH = ("ZED_DEPTH", 30.0, True)
    ZED_RGB = ("ZED_RGB", 30.0, False)
    THERMAL = ("THERMAL", 8.7, False)
    SYNTHETIC = ("SYNTHETIC", 8.0, False)

    def __init__(self, label, native_fps, is_depth):
        self.label = label
        self.native_fps = native_fps
        self.is_depth = is_depth


# Folder / label-file spellings accepted for each modality (normalized form:
# lowercase, whitespace and underscores stripped).
_MODALITY_ALIASES = {
    "ip": Modality.IP_IR,
    "ipir": Modality.IP_IR,
    "orbbec": Modality.ORBBEC_IR,
    "orbbecir": Modality.ORBBEC_IR,
    "orbbecdepth": Modality.ORBBEC_DEPTH,
    "zed": Modality.ZED_RGB,
    "zedrgb": Modality.ZED_RGB,
    "zeddepth": Modality.ZED_DEPTH,
    "flir": Modality.THERMAL,
    "thermal": Modality.THERMAL,
    "synthetic": Modality.SYNTHETIC,
}

_PARTICIPANT_RE = re.compile(r"^[A-Za-z]{2,}\d+$")
_TRIAL_RE = re.compile(r"^(day|night)-?(?:trial)?-?(\d+)$")


def parse_modality(name):
    """Map a folder or CSV spelling to a Modality, or None if unrecognized."""
    key = re.sub(r"[\s_]+", "", name).casefold()
    return _MODALITY_ALIASES.get(key)


@dataclass(frozen=True)
class TrialId:
    """One recorded trial: participant, lighting condition, and trial number."""

    participant: str
    condition: str  # DAY or NIGHT
    trial_index: int

    def __post_init__(self):
        if self.condition not in (DAY, NIGHT):
            raise DataError(f"bad condition {self.condition!r}")
        if not 1 <= self.trial_index <= 5:
            raise DataError(f"trial_index {self.trial_index} outside 1..5")

    @property
    def trial_name(self):
        """Short form used in label CSVs, e.g. 'Day-1'."""
        return f"{self.condition}-{self.trial_index}"


def parse_trial_name(participant, name):
    """Parse trial folder/CSV spellings like 'Day - Trial 1' or 'Night-3'.

    Spelling is normalized by stripping whitespace and case-folding, so the
    layout's inconsistent spacing variants all resolve to the same TrialId.
    Returns None if the name does not look like a trial.
    """
    key = re.sub(r"[\s_]+", "", name).casefold()
    m = _TRIAL_RE.match(key)
    if m is None:
        return None
    condition = DAY if m.group(1) == "day" else NIGHT
    index = int(m.group(2))
    if not 1 <= index <= 5:
        return None
    return TrialId(participant, condition, index)


@dataclass
class VideoClip:
    """An ordered stack of single-channel frames from one trial recording.

    ``frames`` is (N, H, W); dtype is uint8/uint16 for raw intensity frames or
    float32 with unit-interval values (e.g. after RGB -> luminance conversion).
    """

    trial: TrialId
    modality: Modality
    frames: np.ndarray
    native_fps: float

    def __post_init__(self):
        if self.frames.ndim != 3 or len(self.frames) < 1:
            raise DataError("clip needs at least one 2-D frame")
        if self.native_fps <= 0:
            raise DataError("native_fps must be positive")

    @property
    def clip_id(self):
        return f"{self.trial.participant}_{self.trial.trial_name}_{self.modality.label}"


@dataclass(frozen=True)
class LabelSpan:
    """A fall interval [start_frame, end_frame], inclusive, in native frame indices."""

    start_frame: int
    end_frame: int
    kind: str = "FALL"

    def __post_init__(self):
        if self.start_frame < 0 or self.start_frame > self.end_frame:
            raise DataError(
                f"invalid span [{self.start_frame}, {self.end_frame}]"
            )


@dataclass
class LabelTable:
    """Parsed fall labels keyed by (participant, modality, trial).

    ``incomplete`` holds rows where one bound was never recorded; they are kept
    for reporting but are unusable for frame labeling. ``rejected`` holds
    (line_number, reason) diagnostics for rows that violated the schema.
    """

    spans: dict = field(default_factory=dict)
    incomplete: dict = field(default_factory=dict)
    rejected: list = field(default_factory=list)

    @staticmethod
    def key(participant, modality, trial):
        return (participant, modality.label, trial.trial_name)

    def spans_for(self, participant, modality, trial):
        return self.spans.get(self.key(participant, modality, trial), [])

    def has_fall(self, participant, modality, trial):
        """True if any fall was recorded for this clip, even with unusable bounds."""
        k = self.key(participant, modality, trial)
        return bool(self.spans.get(k)) or bool(self.incomplete.get(k))


@dataclass(frozen=True)
class CatalogEntry:
    trial: TrialId
    modality: Modality
    locator: Path
    kind: str  # "frames" (directory of images) or "video" (single file)


@dataclass
class Catalog:
    entries: list
    skips: list  # (path, reason) pairs for anything unparseable


def scan_dataset(root):
    """Discover every (participant, modality, trial) recording under ``root``.

    Missing trials are simply absent from the catalog; malformed folder names
    are recorded in ``catalog.skips`` with a reason instead of raising.
    """
    root = Path(root)
    if not root.is_dir():
        raise ConfigurationError(f"dataset root {root} does not exist")
    entries, skips = [], []
    for pdir in sorted(p for p in root.iterdir() if p.is_dir()):
        if not _PARTICIPANT_RE.match(pdir.name):
            skips.append((str(pdir), "unrecognized participant folder name"))
            continue
        for cdir in sorted(p for p in pdir.iterdir() if p.is_dir()):
            modality = parse_modality(cdir.name)
            if modality is None:
                skips.append((str(cdir), "unrecognized camera folder name"))
                continue
            for tpath in sorted(cdir.iterdir()):
                trial = parse_trial_name(pdir.name, tpath.stem if tpath.is_file() else tpath.name)
                if trial is None:
                    skips.append((str(tpath), "unrecognized trial name"))
                    continue
                if tpath.is_dir():
                    entries.append(CatalogEntry(trial, modality, tpath, "frames"))
                elif tpath.suffix.lower() in VIDEO_EXTENSIONS:
                    entries.append(CatalogEntry(trial, modality, tpath, "video"))
                else:
                    skips.append((str(tpath), "not a frame directory or video file"))
    return Catalog(entries, skips)


def write_catalog(catalog, path):
    """Export the catalog as JSON lines, one entry per recording."""
    with open(path, "w", encoding="utf-8") as fh:
        for e in catalog.entries:
            fh.write(json.dumps({
                "participant": e.trial.participant,
                "condition": e.trial.condition,
                "trial_index": e.trial.trial_index,
                "modality": e.modality.label,
                "locator": str(e.locator),
                "kind": e.kind,
            }) + "\n")


def rgb_to_luminance(frame):
    """Convert an (H, W, 3) RGB frame to unit-interval float32 luminance."""
    weights = np.asarray(LUMA_WEIGHTS, dtype=np.float64)
    luma = frame[..., :3].astype(np.float64) @ weights
    if np.issubdtype(frame.dtype, np.integer):
        luma /= float(np.iinfo(frame.dtype).max)
    return luma.astype(np.float32)


def _load_frame_dir(locator):
    files = {}
    for f in locator.iterdir():
        if f.suffix.lower() not in IMAGE_EXTENSIONS:
            continue
        try:
            files[int(f.stem)] = f
        except ValueError:
            raise DataError(f"{f}: frame filename is not numeric")
    if not files:
        raise DataError(f"{locator}: no frames found")
    indices = sorted(files)
    expected = range(indices[0], indices[0] + len(indices))
    missing = sorted(set(expected) - set(indices))
    if missing:
        raise DataError(f"{locator}: missing frame index {missing[0]}")
    frames = []
    for idx in indices:
        img = cv2.imread(str(files[idx]), cv2.IMREAD_UNCHANGED)
        if img is None:
            raise DataError(f"{locator}: unreadable frame index {idx}")
        if img.ndim == 3:
            img = rgb_to_luminance(img[..., ::-1])  # imread returns BGR
        frames.append(img)
    first = frames[0]
    for idx, img in zip(indices, frames):
        if img.shape != first.shape or img.dtype != first.dtype:
            raise DataError(f"{locator}: frame index {idx} has inconsistent shape/dtype")
    return np.stack(frames)


def _load_video_file(locator):
    cap = cv2.VideoCapture(str(locator))
    frames = []
    while True:
        ok, frame = cap.read()
        if not ok:
            break
        frames.append(rgb_to_luminance(frame[..., ::-1]))
    cap.release()
    if not frames:
        raise DataError(f"{locator}: no decodable frames")
    return np.stack(frames)


def load_clip(locator, modality, trial=None, native_fps=None):
    """Load one recording into a VideoClip.

    ``locator`` is a directory of numerically named image files (ordered and
    contiguity-checked) or a single video file (decode order). Color frames are
    converted to luminance; single-channel frames keep their integer dtype.
    """
    locator = Path(locator)
    if trial is None:
        trial = TrialId("XX000", DAY, 1)
    if locator.is_dir():
        frames = _load_frame_dir(locator)
    elif locator.is_file():
        frames = _load_video_file(locator)
    else:
        raise DataError(f"{locator}: not found")
    fps = native_fps if native_fps is not None else modality.native_fps
    return VideoClip(trial=trial, modality=modality, frames=frames, native_fps=fps)


def load_entry(entry):
    """Load a catalog entry produced by scan_dataset."""
    return load_clip(entry.locator, entry.modality, trial=entry.trial)


LABEL_COLUMNS = ["participant", "modality", "trial", "start_frame", "end_frame"]


def load_labels(path):
    """Parse the fall-label CSV into a LabelTable.

    Rows with an empty start or end are retained as incomplete (a fall happened
    but its bounds are unusable). Rows violating the schema are rejected with a
    per-line diagnostic and counted, never raised.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"label file {path} does not exist")
    table = LabelTable()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        got = [c.strip() for c in (reader.fieldnames or [])]
        if got[: len(LABEL_COLUMNS)] != LABEL_COLUMNS:
            raise DataError(f"{path}: expected header {','.join(LABEL_COLUMNS)}, got {','.join(got)}")
        for lineno, row in enumerate(reader, start=2):
            participant = (row["participant"] or "").strip()
            modality = parse_modality((row["modality"] or "").strip())
            if modality is None:
                table.rejected.append((lineno, f"unknown modality {row['modality']!r}"))
                continue
            trial = parse_trial_name(participant, (row["trial"] or "").strip())
            if trial is None:
                table.rejected.append((lineno, f"unparseable trial {row['trial']!r}"))
                continue
            key = LabelTable.key(participant, modality, trial)
            start_raw = (row["start_frame"] or "").strip()
            end_raw = (row["end_frame"] or "").strip()
            if not start_raw or not end_raw:
                bounds = (int(start_raw) if start_raw else None,
                          int(end_raw) if end_raw else None)
                table.incomplete.setdefault(key, []).append(bounds)
                continue
            try:
                start, end = int(start_raw), int(end_raw)
            except ValueError:
                table.rejected.append((lineno, "non-integer frame bound"))
                continue
            if start < 0 or start > end:
                table.rejected.append((lineno, f"start {start} > end {end}" if start > end
                                       else f"negative start {start}"))
                continue
            table.spans.setdefault(key, []).append(LabelSpan(start, end))
    return table


def write_labels(table, path):
    """Serialize a LabelTable back to CSV (round-trips through load_labels)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(LABEL_COLUMNS)
        for key in sorted(set(table.spans) | set(table.incomplete)):
            participant, modality_label, trial_name = key
            for span in table.spans.get(key, []):
                writer.writerow([participant, modality_label, trial_name,
                                 span.start_frame, span.end_frame])
            for start, end in table.incomplete.get(key, []):
                writer.writerow([participant, modality_label, trial_name,
                                 "" if start is None else start,
                                 "" if end is None else end])


def span_mask(n_frames, spans):
    """Binary vector of length n_frames: 1 where any span covers the frame."""
    mask = np.zeros(n_frames, dtype=np.uint8)
    for span in spans:
        if span.end_frame >= n_frames:
            raise DataError(
                f"span [{span.start_frame}, {span.end_frame}] exceeds clip of {n_frames} frames")
        mask[span.start_frame:span.end_frame + 1] = 1
    return mask


def frame_labels(clip, spans):
    """Per-frame fall ground truth for a clip: union of its label spans."""
    return span_mask(len(clip.frames), spans)
