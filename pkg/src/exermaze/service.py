"""HTTP service for the live adaptation loop.

Each session owns an independent agent forked from the base checkpoint, so
concurrent players never interleave gradients.  A session serves one maze at
a time: repeated GETs return the outstanding maze until it is rated, a
rating triggers one online update and an atomic checkpoint write, and the
next GET serves a freshly generated maze.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .dqn import (
    DqnAgent,
    ReplayBuffer,
    agent_from_json_dict,
    agent_to_json_dict,
    load_checkpoint,
    save_checkpoint,
)
from .maze import to_json as maze_to_json
from .rng import derive_seed

_SESSION_ID = re.compile(r"^[A-Za-z0-9_-]{1,64}$")


@dataclass
class ServiceConfig:
    checkpoint: str | None = None  # pretrained agent the sessions fork from
    checkpoint_dir: str = "./sessions"
    host: str = "127.0.0.1"
    port: int = 8000
    cors_origins: list[str] = field(default_factory=lambda: ["*"])
    # Pretraining buffers run to 50k transitions; sessions keep a recent
    # slice so per-rating checkpoint writes stay fast.
    session_buffer_cap: int = 4000


def load_service_config(path: str | None = None, env=None, **overrides) -> ServiceConfig:
    """Config file, then EXERMAZE_* environment variables, then overrides."""
    env = os.environ if env is None else env
    values: dict = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict):
            raise ValueError(f"service config {path} must hold a JSON object")
        values.update(doc)
    if "EXERMAZE_CHECKPOINT" in env:
        values["checkpoint"] = env["EXERMAZE_CHECKPOINT"]
    if "EXERMAZE_CHECKPOINT_DIR" in env:
        values["checkpoint_dir"] = env["EXERMAZE_CHECKPOINT_DIR"]
    if "EXERMAZE_HOST" in env:
        values["host"] = env["EXERMAZE_HOST"]
    if "EXERMAZE_PORT" in env:
        values["port"] = int(env["EXERMAZE_PORT"])
    if "EXERMAZE_CORS_ORIGINS" in env:
        values["cors_origins"] = [o for o in env["EXERMAZE_CORS_ORIGINS"].split(",") if o]
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ServiceConfig(**values)


class RatingBody(BaseModel):
    session: str
    maze_id: str
    rating: int


@dataclass
class Session:
    session_id: str
    agent: DqnAgent
    lock: threading.Lock = field(default_factory=threading.Lock)
    # one worker thread per session: replay refinement and checkpoint writes
    # run here, strictly ordered, off the request path
    worker: ThreadPoolExecutor = field(
        default_factory=lambda: ThreadPoolExecutor(max_workers=1)
    )
    pending: Future | None = None
    sequence: int = 0
    outstanding_id: str | None = None
    outstanding_doc: dict | None = None
    outstanding_transitions: list | None = None
    ratings: list[int] = field(default_factory=list)
    rated_ids: set[str] = field(default_factory=set)
    checkpoint_written_at: float | None = None

    def drain(self) -> None:
        """Wait for the previous rating's refinement/persist to finish."""
        if self.pending is not None:
            self.pending.result()
            self.pending = None


def _fork_agent(base: DqnAgent, session_id: str, buffer_cap: int) -> DqnAgent:
    """Independent copy of the base agent with a session-specific serving
    stream, so different sessions see different maze variety."""
    fork = DqnAgent(base.grid, base.profile, base.config, net=base.net.clone())
    fork.target_net = base.target_net.clone()
    fork.adam.m = {k: v.copy() for k, v in base.adam.m.items()}
    fork.adam.v = {k: v.copy() for k, v in base.adam.v.items()}
    fork.adam_t = base.adam_t
    fork.gradient_steps = base.gradient_steps
    fork.episodes_done = base.episodes_done
    fork.rating_offset = base.rating_offset
    fork.ratings_seen = base.ratings_seen
    fork.buffer = ReplayBuffer(base.config.replay_capacity)
    fork.buffer.extend(base.buffer.items()[-buffer_cap:])
    fork.rng_serve.setstate(derive_seed(base.config.seed, "session", session_id))
    fork.rng_sample.setstate(derive_seed(base.config.seed, "session-sample", session_id))
    return fork


class AdaptationService:
    def __init__(self, config: ServiceConfig, base_agent: DqnAgent | None = None):
        if base_agent is None:
            if not config.checkpoint:
                raise ValueError("service needs a checkpoint path or a base agent")
            base_agent = load_checkpoint(config.checkpoint)
        self.config = config
        self.base_agent = base_agent
        self.sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()
        os.makedirs(config.checkpoint_dir, exist_ok=True)

    def _session_path(self, session_id: str) -> str:
        return os.path.join(self.config.checkpoint_dir, f"{session_id}.ckpt.json")

    def _meta_path(self, session_id: str) -> str:
        return os.path.join(self.config.checkpoint_dir, f"{session_id}.meta.json")

    def _restore_or_create(self, session_id: str) -> Session:
        path = self._session_path(session_id)
        if os.path.exists(path):
            agent = load_checkpoint(path)
            session = Session(session_id=session_id, agent=agent)
            meta_path = self._meta_path(session_id)
            if os.path.exists(meta_path):
                with open(meta_path, encoding="utf-8") as fh:
                    meta = json.load(fh)
                session.sequence = meta["sequence"]
                session.ratings = meta["ratings"]
                session.rated_ids = set(meta["rated_ids"])
            session.checkpoint_written_at = os.path.getmtime(path)
            return session
        agent = _fork_agent(self.base_agent, session_id, self.config.session_buffer_cap)
        return Session(session_id=session_id, agent=agent)

    def session(self, session_id: str, create: bool) -> Session:
        if not _SESSION_ID.match(session_id or ""):
            raise HTTPException(status_code=422, detail="invalid session id")
        with self._registry_lock:
            existing = self.sessions.get(session_id)
            if existing is not None:
                return existing
            if not create and not os.path.exists(self._session_path(session_id)):
                raise HTTPException(status_code=404, detail="unknown session")
            session = self._restore_or_create(session_id)
            self.sessions[session_id] = session
            return session

    def _generate_outstanding(self, session: Session) -> None:
        maze, transitions, _ = session.agent.serve_episode()
        text = maze_to_json(maze)
        digest = hashlib.sha1(text.encode()).hexdigest()[:8]
        session.sequence += 1
        session.outstanding_id = f"m{session.sequence}-{digest}"
        session.outstanding_doc = json.loads(text)
        session.outstanding_transitions = transitions

    def next_maze(self, session: Session) -> dict:
        with session.lock:
            if session.outstanding_id is None:
                session.drain()  # the agent must be quiescent before serving
                self._generate_outstanding(session)
            return {
                "session": session.session_id,
                "maze_id": session.outstanding_id,
                "sequence": session.sequence,
                "maze": session.outstanding_doc,
            }

    def submit_rating(self, session: Session, maze_id: str, rating: int) -> dict:
        if not 1 <= rating <= 5:
            raise HTTPException(status_code=422, detail="rating must lie in 1..5")
        with session.lock:
            if maze_id in session.rated_ids:
                raise HTTPException(status_code=409, detail="maze already rated")
            if maze_id != session.outstanding_id:
                raise HTTPException(status_code=404, detail="unknown maze id")
            session.drain()
            # The rating offset steers the generator, so the next maze can be
            # served immediately; the replay refinement polishes values for
            # later mazes and runs on the session worker with the persist.
            session.agent.register_rating(session.outstanding_transitions, rating)
            session.ratings.append(rating)
            session.rated_ids.add(maze_id)
            self._generate_outstanding(session)

            def refine_and_persist():
                session.agent.refine_from_replay()
                self._persist(session)

            session.pending = session.worker.submit(refine_and_persist)
            return {"accepted": True, "next_available": True}

    def status(self, session: Session) -> dict:
        with session.lock:
            target = session.agent.config.target_rating
            ratings = list(session.ratings)
            mean_abs = (
                sum(abs(r - target) for r in ratings) / len(ratings) if ratings else None
            )
            age = (
                time.time() - session.checkpoint_written_at
                if session.checkpoint_written_at is not None
                else None
            )
            return {
                "session": session.session_id,
                "mazes_served": len(ratings),
                "ratings": ratings,
                "mean_abs_error": mean_abs,
                "checkpoint_age_seconds": age,
                "outstanding_maze_id": session.outstanding_id,
                "sequence": session.sequence,
            }

    def drain_all(self) -> None:
        """Block until every session's queued refinement/persist completes."""
        with self._registry_lock:
            sessions = list(self.sessions.values())
        for session in sessions:
            with session.lock:
                session.drain()

    def _persist(self, session: Session) -> None:
        save_checkpoint(session.agent, self._session_path(session.session_id))
        meta = {
            "sequence": session.sequence,
            "ratings": session.ratings,
            "rated_ids": sorted(session.rated_ids),
        }
        meta_path = self._meta_path(session.session_id)
        tmp = meta_path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(meta, fh)
        os.replace(tmp, meta_path)
        session.checkpoint_written_at = time.time()


def create_app(config: ServiceConfig, base_agent: DqnAgent | None = None) -> FastAPI:
    service = AdaptationService(config, base_agent=base_agent)
    app = FastAPI(title="exermaze", version="0.1.0")
    app.state.service = service
    app.add_middleware(
        CORSMiddleware,
        allow_origins=config.cors_origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/api/v1/maze")
    def get_maze(session: str):
        return service.next_maze(service.session(session, create=True))

    @app.post("/api/v1/rating")
    def post_rating(body: RatingBody):
        sess = service.session(body.session, create=False)
        return service.submit_rating(sess, body.maze_id, body.rating)

    @app.get("/api/v1/status")
    def get_status(session: str):
        return service.status(service.session(session, create=False))

    @app.on_event("shutdown")
    def finish_background_work():
        service.drain_all()

    return app
