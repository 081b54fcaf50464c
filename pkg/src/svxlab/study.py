"""Perception-study backend: dataset splits, per-participant shuffled
sessions, timed perception recording, durable persistence.

The full dataset is 32 base videos (2 actors x 8 actions x 2 backgrounds),
each segmented at three hierarchy levels, for 96 study videos. The three
splits (alpha, beta, gamma) each cover all 32 base videos exactly once,
rotating which level a participant sees so nobody meets the same base
video at two levels. Playback is at half frame rate, realized by doubling
frame durations in the served manifest rather than re-encoding.

Persistence is a newline-delimited perception-record log plus a session
snapshot; replaying both reconstructs identical service state.
"""

import json
import random
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .recognition import ACTIONS, ACTORS, BACKGROUNDS

LEVELS = ("fine", "medium", "coarse")
SPLITS = ("alpha", "beta", "gamma")

# Rotation order of levels by database position; split start offsets follow
# the worked protocol: base video 0 is coarse in alpha, medium in beta,
# fine in gamma, then it rotates.
LEVEL_CYCLE = ("coarse", "medium", "fine")
SPLIT_OFFSETS = {"alpha": 0, "beta": 1, "gamma": 2}

UNKNOWN = "unknown"


class StudyError(Exception):
    pass


@dataclass(frozen=True)
class StudyVideo:
    """One supervoxel segmentation video available to the study."""

    video_id: str
    base_id: str
    actor: str
    action: str
    background: str
    level: str
    frame_count: int
    source_fps: float
    frame_urls: list[str] = field(default_factory=list)

    @property
    def frame_duration_ms(self) -> float:
        """Served per-frame duration: half-frame-rate playback."""
        return 2.0 * 1000.0 / self.source_fps

    @property
    def duration_ms(self) -> float:
        return self.frame_count * self.frame_duration_ms

    def manifest(self) -> dict:
        return {
            "video_id": self.video_id,
            "level": self.level,
            "frame_count": self.frame_count,
            "frame_duration_ms": self.frame_duration_ms,
            "duration_ms": self.duration_ms,
            "frames": list(self.frame_urls),
        }


@dataclass
class StudyDataset:
    videos: list[StudyVideo]

    def __post_init__(self):
        self.by_id = {v.video_id: v for v in self.videos}
        self.by_base: dict[str, dict[str, StudyVideo]] = {}
        for v in self.videos:
            self.by_base.setdefault(v.base_id, {})[v.level] = v

    @property
    def base_ids(self) -> list[str]:
        return sorted(self.by_base)

    def validate(self) -> None:
        for base_id in self.base_ids:
            levels = self.by_base[base_id]
            missing = [lvl for lvl in LEVELS if lvl not in levels]
            if missing:
                raise StudyError(f"base video {base_id!r} missing levels: {missing}")

    @classmethod
    def synthetic(cls, frame_count: int = 96, source_fps: float = 24.0) -> "StudyDataset":
        """Complete 32-base-video dataset with placeholder frame metadata,
        one per (actor, action, background) combination."""
        videos = []
        for actor in ACTORS:
            for action in ACTIONS:
                for background in BACKGROUNDS:
                    base = f"{actor}_{action}_{background}"
                    for level in LEVELS:
                        videos.append(StudyVideo(
                            video_id=f"{base}_{level}",
                            base_id=base,
                            actor=actor,
                            action=action,
                            background=background,
                            level=level,
                            frame_count=frame_count,
                            source_fps=source_fps,
                        ))
        return cls(videos=videos)

    @classmethod
    def from_manifest(cls, path: str | Path) -> "StudyDataset":
        with open(path) as f:
            data = json.load(f)
        videos = [StudyVideo(**entry) for entry in data["videos"]]
        return cls(videos=videos)

    def to_manifest(self, path: str | Path) -> None:
        with open(path, "w") as f:
            json.dump({"videos": [asdict(v) for v in self.videos]}, f, indent=1)


@dataclass(frozen=True)
class SplitAssignment:
    split: str
    level_by_base: dict[str, str]

    def validate(self, dataset: StudyDataset) -> None:
        if set(self.level_by_base) != set(dataset.base_ids):
            raise StudyError(f"split {self.split}: does not cover the base videos exactly once")
        counts = {lvl: 0 for lvl in LEVELS}
        for lvl in self.level_by_base.values():
            counts[lvl] += 1
        if max(counts.values()) - min(counts.values()) > 1:
            raise StudyError(f"split {self.split}: level counts unbalanced: {counts}")

    def video_ids(self, dataset: StudyDataset) -> list[str]:
        return [dataset.by_base[b][self.level_by_base[b]].video_id
                for b in dataset.base_ids]


def build_splits(dataset: StudyDataset) -> dict[str, SplitAssignment]:
    """Rotate levels by database order: base video i is shown at
    LEVEL_CYCLE[(offset + i) mod 3], with offsets 0/1/2 for
    alpha/beta/gamma."""
    dataset.validate()
    splits = {}
    for split in SPLITS:
        offset = SPLIT_OFFSETS[split]
        level_by_base = {
            base: LEVEL_CYCLE[(offset + i) % len(LEVEL_CYCLE)]
            for i, base in enumerate(dataset.base_ids)
        }
        splits[split] = SplitAssignment(split=split, level_by_base=level_by_base)
    return splits


@dataclass(frozen=True)
class PerceptionRecord:
    """One human response for one supervoxel video."""

    participant_id: str
    video_id: str
    level: str
    actor_choice: str  # "human" | "animal" | "unknown"
    action_choice: str  # one of the 8 actions | "unknown"
    response_time_ms: float
    watched_full: bool

    def validate(self) -> None:
        if self.response_time_ms <= 0:
            raise StudyError("response_time_ms must be positive")
        if self.actor_choice not in ACTORS + (UNKNOWN,):
            raise StudyError(f"bad actor choice {self.actor_choice!r}")
        if self.action_choice not in ACTIONS + (UNKNOWN,):
            raise StudyError(f"bad action choice {self.action_choice!r}")
        # The interface offers one joint "don't know" option, so unknown
        # applies to both dimensions together.
        if (self.actor_choice == UNKNOWN) != (self.action_choice == UNKNOWN):
            raise StudyError("unknown is a joint choice: both fields or neither")


@dataclass
class Session:
    participant_id: str
    split: str
    seed: int
    playlist: list[str]
    answered: dict[str, int] = field(default_factory=dict)  # video_id -> record id

    @property
    def cursor(self) -> int:
        return len(self.answered)

    def next_video_id(self) -> str | None:
        for vid in self.playlist:
            if vid not in self.answered:
                return vid
        return None


class StudyService:
    """Session and record bookkeeping over a dataset, with an append-only
    record log and a session snapshot for replay."""

    def __init__(self, dataset: StudyDataset, log_path: str | Path,
                 snapshot_path: str | Path | None = None):
        dataset.validate()
        self.dataset = dataset
        self.splits = build_splits(dataset)
        self.log_path = Path(log_path)
        self.snapshot_path = Path(snapshot_path) if snapshot_path else \
            self.log_path.with_suffix(".sessions.json")
        self.sessions: dict[str, Session] = {}
        self.records: list[dict] = []
        self._lock = threading.Lock()
        self._replay()

    # -- session lifecycle ------------------------------------------------

    def start_session(self, participant_id: str, split: str, seed: int) -> Session:
        """Seeded Fisher-Yates shuffle of the split's 32 videos."""
        if split not in SPLITS:
            raise StudyError(f"unknown split {split!r}")
        with self._lock:
            existing = self.sessions.get(participant_id)
            if existing is not None and existing.next_video_id() is not None:
                raise StudyError(f"participant {participant_id!r} already has an active session")
            playlist = self.splits[split].video_ids(self.dataset)
            random.Random(seed).shuffle(playlist)
            session = Session(participant_id=participant_id, split=split,
                              seed=seed, playlist=playlist)
            self.sessions[participant_id] = session
            self._write_snapshot()
            return session

    def next_video(self, participant_id: str) -> dict | None:
        """Manifest of the next unanswered video plus a ready token, or
        None when the session is complete."""
        session = self._session(participant_id)
        vid = session.next_video_id()
        if vid is None:
            return None
        video = self.dataset.by_id[vid]
        return {
            "ready_token": f"{participant_id}:{vid}",
            "position": session.cursor,
            "total": len(session.playlist),
            "manifest": video.manifest(),
        }

    def record_perception(self, r: PerceptionRecord) -> int:
        """Validate, append to the durable log, return the record id.
        Stored records are immutable."""
        r.validate()
        with self._lock:
            session = self._session(r.participant_id)
            if r.video_id not in session.playlist:
                raise StudyError(f"video {r.video_id!r} is not in the participant's playlist")
            if r.video_id in session.answered:
                raise StudyError(f"already answered: {r.video_id!r}")
            video = self.dataset.by_id[r.video_id]
            if r.level != video.level:
                raise StudyError(f"level {r.level!r} does not match video level {video.level!r}")
            if r.watched_full and abs(r.response_time_ms - video.duration_ms) > 1e-6:
                raise StudyError(
                    f"watched_full requires response_time_ms == video duration "
                    f"({video.duration_ms} ms), got {r.response_time_ms}")
            record_id = len(self.records)
            entry = dict(asdict(r), record_id=record_id, server_time_unix=time.time())
            with open(self.log_path, "a") as f:
                f.write(json.dumps(entry) + "\n")
            self.records.append(entry)
            session.answered[r.video_id] = record_id
            return record_id

    def export_log(self) -> list[dict]:
        return [dict(e) for e in self.records]

    # -- persistence -------------------------------------------------------

    def _session(self, participant_id: str) -> Session:
        session = self.sessions.get(participant_id)
        if session is None:
            raise StudyError(f"no session for participant {participant_id!r}")
        return session

    def _write_snapshot(self) -> None:
        payload = {
            pid: {"split": s.split, "seed": s.seed}
            for pid, s in self.sessions.items()
        }
        self.snapshot_path.write_text(json.dumps(payload, indent=1))

    def _replay(self) -> None:
        """Rebuild sessions and answered state from snapshot plus log."""
        if self.snapshot_path.exists():
            payload = json.loads(self.snapshot_path.read_text())
            for pid, info in payload.items():
                playlist = self.splits[info["split"]].video_ids(self.dataset)
                random.Random(info["seed"]).shuffle(playlist)
                self.sessions[pid] = Session(participant_id=pid, split=info["split"],
                                             seed=info["seed"], playlist=playlist)
        if self.log_path.exists():
            with open(self.log_path) as f:
                for line in f:
                    line = line.strip()
                    if not line:
                        continue
                    entry = json.loads(line)
                    self.records.append(entry)
                    session = self.sessions.get(entry["participant_id"])
                    if session is not None:
                        session.answered[entry["video_id"]] = entry["record_id"]


def load_records(path: str | Path) -> list[PerceptionRecord]:
    """Read a record log back as PerceptionRecord objects."""
    out = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            out.append(PerceptionRecord(
                participant_id=entry["participant_id"],
                video_id=entry["video_id"],
                level=entry["level"],
                actor_choice=entry["actor_choice"],
                action_choice=entry["action_choice"],
                response_time_ms=entry["response_time_ms"],
                watched_full=entry["watched_full"],
            ))
    return out


def create_app(service: StudyService, assets_root: str | Path | None = None,
               ui_root: str | Path | None = None):
    """HTTP surface over a StudyService.

    Routes: POST /session/start, GET /session/next, POST /session/answer,
    GET /admin/export, plus GET /assets/... serving only registered
    segmentation frame files. Original RGB assets are never registered and
    therefore not routable. With ui_root set, the participant interface is
    served from / as static files.
    """
    from fastapi import FastAPI, HTTPException
    from fastapi.responses import FileResponse
    from pydantic import BaseModel

    app = FastAPI(title="svxlab perception study")
    assets_root = Path(assets_root) if assets_root else None

    class StartBody(BaseModel):
        participant_id: str
        split: str
        seed: int

    class AnswerBody(BaseModel):
        participant_id: str
        video_id: str
        level: str
        actor_choice: str
        action_choice: str
        response_time_ms: float
        watched_full: bool
        idempotency_key: str | None = None

    seen_keys: dict[str, int] = {}

    @app.post("/session/start")
    def start(body: StartBody):
        try:
            session = service.start_session(body.participant_id, body.split, body.seed)
        except StudyError as e:
            raise HTTPException(status_code=409, detail=str(e))
        return {"participant_id": session.participant_id, "split": session.split,
                "total": len(session.playlist)}

    @app.get("/session/next")
    def session_next(participant: str):
        try:
            nxt = service.next_video(participant)
        except StudyError as e:
            raise HTTPException(status_code=404, detail=str(e))
        if nxt is None:
            return {"done": True}
        return dict(nxt, done=False)

    @app.post("/session/answer")
    def answer(body: AnswerBody):
        if body.idempotency_key and body.idempotency_key in seen_keys:
            return {"record_id": seen_keys[body.idempotency_key], "duplicate": True}
        record = PerceptionRecord(
            participant_id=body.participant_id,
            video_id=body.video_id,
            level=body.level,
            actor_choice=body.actor_choice,
            action_choice=body.action_choice,
            response_time_ms=body.response_time_ms,
            watched_full=body.watched_full,
        )
        try:
            record_id = service.record_perception(record)
        except StudyError as e:
            raise HTTPException(status_code=409, detail=str(e))
        if body.idempotency_key:
            seen_keys[body.idempotency_key] = record_id
        return {"record_id": record_id, "duplicate": False}

    @app.get("/admin/export")
    def export():
        return {"records": service.export_log()}

    @app.get("/assets/{video_id}/{frame_name}")
    def asset(video_id: str, frame_name: str):
        if assets_root is None:
            raise HTTPException(status_code=404, detail="no assets configured")
        video = service.dataset.by_id.get(video_id)
        if video is None:
            raise HTTPException(status_code=404, detail="unknown video")
        rel = f"{video_id}/{frame_name}"
        if not any(url.endswith(rel) for url in video.frame_urls):
            raise HTTPException(status_code=404, detail="frame not registered")
        path = (assets_root / video_id / frame_name).resolve()
        if not str(path).startswith(str(assets_root.resolve())) or not path.is_file():
            raise HTTPException(status_code=404, detail="not found")
        return FileResponse(path)

    if ui_root is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_root, html=True), name="ui")

    return app
