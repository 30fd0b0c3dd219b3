"""Deep Q-learning agent that builds mazes to hit a target difficulty.

Episodes start from the bare start cell and connect one room per step until
the end-room action finishes the maze.  The only reward arrives at the end:
the negative absolute difference between the target rating (3 by default)
and the 1..5 rating of the finished maze, so mazes rated exactly on target
earn 0 and everything else is penalized symmetrically.

Occupied rooms are masked out of action selection rather than penalized.
Intermediate state difficulty comes from the player simulation, memoized per
maze identity so repeated mazes across episodes are estimated once.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .grid import RoomGrid
from .maze import (
    Maze,
    StateEncoding,
    action_from_index,
    apply_action,
    encode_state,
    legal_action_mask,
    new_maze,
)
from .nn import AdamState, QNetwork, adam_step, forward, forward_batch, loss_and_gradients
from .rng import SplitMix64, derive_seed
from .sim import DifficultyEstimate, PlayerProfile, estimate_difficulty

CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    """Checkpoint file missing, corrupt, or of an unsupported version."""


@dataclass
class TrainConfig:
    target_rating: int = 3
    gamma: float = 0.9
    batch_size: int = 64
    learning_rate: float = 1e-3
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_episodes: int = 10000
    target_sync_interval: int = 1000
    replay_capacity: int = 50000
    pretrain_episodes: int = 20000
    n_runs: int = 200
    seed: int = 0
    online_steps: int = 50
    serve_epsilon: float = 0.05
    # EMA coefficient for the player's rating offset; one rating is noisy
    # evidence, so the player model moves a step at a time.
    rating_offset_alpha: float = 0.3
    # Pretraining randomizes the perceived-difficulty shift per episode over
    # [-shift_range, +shift_range] so the policy stays steerable by the
    # player's rating offset at serve time.
    difficulty_shift_range: float = 2.0

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if not 1 <= self.target_rating <= 5:
            raise ValueError("target_rating must lie in 1..5")
        if self.batch_size < 1 or self.replay_capacity < self.batch_size:
            raise ValueError("need replay_capacity >= batch_size >= 1")

    def epsilon_at(self, episode: int) -> float:
        """Linear anneal from epsilon_start to epsilon_end, then flat."""
        if episode >= self.epsilon_decay_episodes:
            return self.epsilon_end
        frac = episode / self.epsilon_decay_episodes
        return self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)

    def to_json_dict(self) -> dict:
        return {
            "target_rating": self.target_rating,
            "gamma": self.gamma,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "epsilon_start": self.epsilon_start,
            "epsilon_end": self.epsilon_end,
            "epsilon_decay_episodes": self.epsilon_decay_episodes,
            "target_sync_interval": self.target_sync_interval,
            "replay_capacity": self.replay_capacity,
            "pretrain_episodes": self.pretrain_episodes,
            "n_runs": self.n_runs,
            "seed": self.seed,
            "online_steps": self.online_steps,
            "serve_epsilon": self.serve_epsilon,
            "rating_offset_alpha": self.rating_offset_alpha,
            "difficulty_shift_range": self.difficulty_shift_range,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "TrainConfig":
        return cls(**doc)


@dataclass
class Transition:
    state: StateEncoding
    action: int
    reward: float
    next_state: StateEncoding
    terminal: bool
    legal_mask_next: np.ndarray  # bool (n_rooms + 1,)


class ReplayBuffer:
    """Fixed-capacity ring buffer with uniform sampling (with replacement)."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._cursor] = transition
        self._cursor = (self._cursor + 1) % self.capacity

    def extend(self, transitions) -> None:
        for t in transitions:
            self.push(t)

    def sample(self, rng: SplitMix64, k: int) -> list[Transition]:
        if not self._items:
            raise ValueError("cannot sample from an empty buffer")
        return [self._items[rng.randrange(len(self._items))] for _ in range(k)]

    def items(self) -> list[Transition]:
        return list(self._items)


def backfill_reward(rating: int, target_rating: int) -> float:
    """Terminal reward: negative absolute distance from the target rating."""
    if not isinstance(rating, int) or not 1 <= rating <= 5:
        raise ValueError(f"rating must be an integer in 1..5, got {rating!r}")
    return -float(abs(target_rating - rating))


def select_action(
    net: QNetwork,
    state: StateEncoding,
    legal_mask: np.ndarray,
    epsilon: float,
    rng: SplitMix64,
) -> int:
    """Masked epsilon-greedy: explore uniformly over legal actions, exploit
    by the masked argmax (ties resolve to the lowest index)."""
    legal = np.flatnonzero(legal_mask)
    if legal.size == 0:
        raise ValueError("no legal actions to select from")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(legal[rng.randrange(legal.size)])
    q = forward(net, state)
    masked = np.where(legal_mask, q, -np.inf)
    return int(np.argmax(masked))


def q_targets(target_net: QNetwork, batch: list[Transition], gamma: float) -> np.ndarray:
    """Bootstrap targets: reward for terminal items, reward plus discounted
    best legal next-state value otherwise."""
    if not batch:
        raise ValueError("batch must be non-empty")
    y = np.array([t.reward for t in batch], dtype=np.float64)
    open_idx = [i for i, t in enumerate(batch) if not t.terminal]
    if open_idx:
        q_next = forward_batch(target_net, [batch[i].next_state for i in open_idx])
        masks = np.stack([batch[i].legal_mask_next for i in open_idx])
        if not masks.any(axis=1).all():
            raise ValueError("non-terminal transition with no legal next actions")
        best = np.where(masks, q_next, -np.inf).max(axis=1)
        y[open_idx] += gamma * best
    return y


class DifficultyEstimator:
    """Memoized simulated-difficulty lookups.

    The per-maze simulation seed derives from the maze identity and the base
    seed, so the estimate for a maze is the same whenever and wherever it is
    requested; that is what makes memoization safe.
    """

    def __init__(self, profile: PlayerProfile, n_runs: int, base_seed: int):
        self.profile = profile
        self.n_runs = n_runs
        self.base_seed = base_seed
        self._cache: dict[tuple, DifficultyEstimate] = {}

    def estimate(self, maze: Maze) -> DifficultyEstimate:
        key = maze.key()
        est = self._cache.get(key)
        if est is None:
            seed = derive_seed(self.base_seed, "sim", int(maze.terminal), *maze.connected)
            est = estimate_difficulty(maze, self.profile, self.n_runs, seed)
            self._cache[key] = est
        return est

    def difficulty(self, maze: Maze, shift: float = 0.0) -> float:
        """Normalized difficulty feature, optionally shifted (in rating
        units) to a player's perception; clamped to [0, 1]."""
        value = (self.estimate(maze).mean_rating + shift) / 5.0
        return min(1.0, max(0.0, value))

    def rating(self, maze: Maze, shift: float = 0.0) -> int:
        """The simulated 1..5 verdict under a perception shift: rounded,
        clamped mean rating."""
        mean = self.estimate(maze).mean_rating + shift
        return int(min(5.0, max(1.0, math.floor(mean + 0.5))))


def generate_episode(
    net: QNetwork,
    grid: RoomGrid,
    epsilon: float,
    config: TrainConfig,
    rng: SplitMix64,
    estimator: DifficultyEstimator,
    difficulty_shift: float = 0.0,
) -> tuple[Maze, list[Transition], int]:
    """Roll out one maze-building episode and rate the finished maze.

    difficulty_shift (in rating units) moves both the state difficulty
    feature and the terminal rating, so the policy sees and is rewarded in
    one consistent perceived-difficulty frame.  The terminal transition
    carries the backfilled reward; every other transition has reward 0.
    """
    maze = new_maze(grid)
    state = encode_state(maze, estimator.difficulty(maze, difficulty_shift))
    transitions: list[Transition] = []
    while not maze.terminal:
        mask = legal_action_mask(maze)
        action = select_action(net, state, mask, epsilon, rng)
        nxt = apply_action(maze, action_from_index(action, grid.n_rooms))
        nxt_state = encode_state(nxt, estimator.difficulty(nxt, difficulty_shift))
        transitions.append(
            Transition(
                state=state,
                action=action,
                reward=0.0,
                next_state=nxt_state,
                terminal=nxt.terminal,
                legal_mask_next=legal_action_mask(nxt),
            )
        )
        maze, state = nxt, nxt_state
    rating = estimator.rating(maze, difficulty_shift)
    transitions[-1].reward = backfill_reward(rating, config.target_rating)
    return maze, transitions, rating


@dataclass
class EpisodeMetrics:
    episode: int
    rating: int
    abs_error: int
    epsilon: float
    loss: float | None


class DqnAgent:
    """Owns the network pair, optimizer state, replay buffer and RNG streams.

    Single-writer: one training loop mutates the agent; concurrent readers
    should work on a snapshot (see clone-like checkpoint round trip).
    """

    def __init__(
        self,
        grid: RoomGrid,
        profile: PlayerProfile,
        config: TrainConfig,
        net: QNetwork | None = None,
    ):
        self.grid = grid
        self.profile = profile
        self.config = config
        self.net = net if net is not None else QNetwork(
            grid.height, grid.width, grid.n_rooms, seed=derive_seed(config.seed, "net-init")
        )
        self.target_net = self.net.clone()
        self.adam = AdamState.for_network(self.net)
        self.adam_t = 0
        self.gradient_steps = 0
        self.episodes_done = 0
        # Running mean of (player rating - simulated rating) over real ratings;
        # anchors online updates to this player's scale.
        self.rating_offset = 0.0
        self.ratings_seen = 0
        self.buffer = ReplayBuffer(config.replay_capacity)
        self.rng_action = SplitMix64(derive_seed(config.seed, "action"))
        self.rng_sample = SplitMix64(derive_seed(config.seed, "sample"))
        self.rng_serve = SplitMix64(derive_seed(config.seed, "serve"))
        self.estimator = DifficultyEstimator(
            profile, config.n_runs, derive_seed(config.seed, "sim")
        )

    def generate_episode(
        self,
        epsilon: float,
        rng: SplitMix64 | None = None,
        difficulty_shift: float | None = None,
    ):
        shift = self.rating_offset if difficulty_shift is None else difficulty_shift
        return generate_episode(
            self.net,
            self.grid,
            epsilon,
            self.config,
            rng or self.rng_action,
            self.estimator,
            difficulty_shift=shift,
        )

    def serve_episode(self) -> tuple[Maze, list[Transition], int]:
        """Near-greedy rollout used to serve mazes to a real player; the
        player's rating offset conditions what the policy perceives."""
        return self.generate_episode(self.config.serve_epsilon, self.rng_serve)

    def _apply_gradients(
        self, items: list[tuple[StateEncoding, int, float]], lr: float | None = None
    ) -> float:
        loss, grads = loss_and_gradients(self.net, items)
        self.adam_t += 1
        adam_step(self.net, grads, self.adam, lr or self.config.learning_rate, self.adam_t)
        self.gradient_steps += 1
        if self.gradient_steps % self.config.target_sync_interval == 0:
            self.target_net.copy_params_from(self.net)
        return loss

    def train_step(self) -> float:
        """One uniform replay batch against bootstrapped targets."""
        if len(self.buffer) < self.config.batch_size:
            raise ValueError(
                f"buffer holds {len(self.buffer)} transitions, need {self.config.batch_size}"
            )
        batch = self.buffer.sample(self.rng_sample, self.config.batch_size)
        targets = q_targets(self.target_net, batch, self.config.gamma)
        return self._apply_gradients(
            [(t.state, t.action, float(y)) for t, y in zip(batch, targets)]
        )

    def register_rating(self, episode_transitions: list[Transition], rating: int) -> None:
        """Fold a real rating into the player model and the replay buffer.

        Refines the rating offset (how this player's scale sits against the
        simulation's), which conditions every subsequently served maze, and
        backfills the episode's terminal reward.  Cheap: safe on a request
        path.
        """
        if not episode_transitions:
            raise ValueError("episode_transitions must be non-empty")
        reward = backfill_reward(rating, self.config.target_rating)
        final_state = episode_transitions[-1].next_state
        # The stored difficulty feature is the perceived (already shifted)
        # value, so the served maze's perceived rating is recoverable.
        perceived = min(5.0, max(1.0, math.floor(5.0 * final_state.difficulty + 0.5)))
        self.ratings_seen += 1
        alpha = self.config.rating_offset_alpha
        self.rating_offset += alpha * float(rating - perceived)
        episode_transitions[-1].reward = reward
        self.buffer.extend(episode_transitions)

    def refine_from_replay(self) -> None:
        """The training phase of an online update: the configured number of
        replay gradient steps (skipped while the buffer is still cold)."""
        if len(self.buffer) < self.config.batch_size:
            return  # not enough replay yet; the offset update alone adapts
        with threadpool_limits(limits=1):
            for _ in range(self.config.online_steps):
                self.train_step()

    def online_update(self, episode_transitions: list[Transition], rating: int) -> None:
        """One full rating update: register the feedback, then retrain."""
        self.register_rating(episode_transitions, rating)
        self.refine_from_replay()


def pretrain(
    grid: RoomGrid, profile: PlayerProfile, config: TrainConfig
) -> tuple[DqnAgent, list[EpisodeMetrics]]:
    """Train a fresh agent against the player simulation.

    Every episode draws a random perceived-difficulty shift, so the policy
    learns to hit the target rating across the whole shift range and stays
    steerable by a player's rating offset later.  One gradient step per
    episode once the buffer can fill a batch; returns the agent plus
    per-episode metrics for the CSV log.
    """
    agent = DqnAgent(grid, profile, config)
    rng_shift = SplitMix64(derive_seed(config.seed, "shift"))
    metrics: list[EpisodeMetrics] = []
    with threadpool_limits(limits=1):
        for episode in range(config.pretrain_episodes):
            epsilon = config.epsilon_at(episode)
            shift = (2.0 * rng_shift.random() - 1.0) * config.difficulty_shift_range
            _, transitions, rating = agent.generate_episode(
                epsilon, difficulty_shift=shift
            )
            agent.buffer.extend(transitions)
            loss = None
            if len(agent.buffer) >= config.batch_size:
                loss = agent.train_step()
            agent.episodes_done += 1
            metrics.append(
                EpisodeMetrics(
                    episode=episode,
                    rating=rating,
                    abs_error=abs(rating - config.target_rating),
                    epsilon=epsilon,
                    loss=loss,
                )
            )
    return agent, metrics


@dataclass
class EvalResult:
    mean_abs_error: float
    ratings: list[int]
    mean_effort: float
    mean_steps: float


def evaluate(
    agent: DqnAgent, n_mazes: int, seed: int, epsilon: float | None = None
) -> EvalResult:
    """Rate n_mazes rollouts of the near-greedy policy (epsilon defaults to
    the serving epsilon; pass 1.0 for the random baseline)."""
    if epsilon is None:
        epsilon = agent.config.serve_epsilon
    rng = SplitMix64(derive_seed(seed, "eval"))
    ratings: list[int] = []
    efforts: list[float] = []
    steps: list[float] = []
    with threadpool_limits(limits=1):
        for _ in range(n_mazes):
            maze, _, rating = generate_episode(
                agent.net,
                agent.grid,
                epsilon,
                agent.config,
                rng,
                agent.estimator,
                difficulty_shift=agent.rating_offset,
            )
            est = agent.estimator.estimate(maze)
            ratings.append(rating)
            efforts.append(est.mean_effort)
            steps.append(est.mean_steps)
    target = agent.config.target_rating
    mean_abs = float(np.mean([abs(r - target) for r in ratings]))
    return EvalResult(
        mean_abs_error=mean_abs,
        ratings=ratings,
        mean_effort=float(np.mean(efforts)),
        mean_steps=float(np.mean(steps)),
    )


# --- checkpointing ---------------------------------------------------------


def _state_to_doc(state: StateEncoding) -> dict:
    occupied_bits = 0
    for i, bit in enumerate(state.occupied):
        if bit:
            occupied_bits |= 1 << i
    return {
        "m": state.map_codes.astype(np.uint8).tobytes().hex(),
        "d": state.difficulty,
        "c": state.crossings,
        "o": occupied_bits,
    }


def _state_from_doc(doc: dict, height: int, width: int, n_rooms: int) -> StateEncoding:
    codes = np.frombuffer(bytes.fromhex(doc["m"]), dtype=np.uint8)
    codes = codes.reshape(height, width).astype(np.int8)
    occupied = np.array([(doc["o"] >> i) & 1 for i in range(n_rooms)], dtype=np.int8)
    return StateEncoding(
        map_codes=codes, difficulty=float(doc["d"]), crossings=int(doc["c"]), occupied=occupied
    )


def _transition_to_doc(t: Transition) -> dict:
    mask_bits = 0
    for i, bit in enumerate(t.legal_mask_next):
        if bit:
            mask_bits |= 1 << i
    return {
        "s": _state_to_doc(t.state),
        "a": t.action,
        "r": t.reward,
        "ns": _state_to_doc(t.next_state),
        "t": t.terminal,
        "lm": mask_bits,
    }


def _transition_from_doc(doc: dict, height: int, width: int, n_rooms: int) -> Transition:
    mask = np.array([(doc["lm"] >> i) & 1 for i in range(n_rooms + 1)], dtype=bool)
    return Transition(
        state=_state_from_doc(doc["s"], height, width, n_rooms),
        action=int(doc["a"]),
        reward=float(doc["r"]),
        next_state=_state_from_doc(doc["ns"], height, width, n_rooms),
        terminal=bool(doc["t"]),
        legal_mask_next=mask,
    )


def agent_to_json_dict(agent: DqnAgent) -> dict:
    return {
        "v": CHECKPOINT_VERSION,
        "kind": "exermaze-checkpoint",
        "config": agent.config.to_json_dict(),
        "grid": agent.grid.to_json_dict(),
        "profile": {
            "name": agent.profile.name,
            "e_cap": agent.profile.effort_capacity,
            "s_cap": agent.profile.cognitive_capacity,
            "beta": agent.profile.repeat_decay,
        },
        "net": agent.net.to_json_dict(),
        "target_net": agent.target_net.to_json_dict(),
        "adam": {"t": agent.adam_t, **agent.adam.to_json_dict()},
        "counters": {
            "gradient_steps": agent.gradient_steps,
            "episodes_done": agent.episodes_done,
            "rating_offset": agent.rating_offset,
            "ratings_seen": agent.ratings_seen,
        },
        "rng": {
            "action": agent.rng_action.getstate(),
            "sample": agent.rng_sample.getstate(),
            "serve": agent.rng_serve.getstate(),
        },
        "buffer": [_transition_to_doc(t) for t in agent.buffer.items()],
    }


def agent_from_json_dict(doc: dict) -> DqnAgent:
    if not isinstance(doc, dict) or doc.get("kind") != "exermaze-checkpoint":
        raise CheckpointError("not an agent checkpoint document")
    if doc.get("v") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {doc.get('v')} (expected {CHECKPOINT_VERSION})"
        )
    try:
        config = TrainConfig.from_json_dict(doc["config"])
        grid = RoomGrid.from_json_dict(doc["grid"])
        profile = PlayerProfile(
            name=doc["profile"]["name"],
            effort_capacity=doc["profile"]["e_cap"],
            cognitive_capacity=doc["profile"]["s_cap"],
            repeat_decay=doc["profile"]["beta"],
        )
        net = QNetwork.from_json_dict(doc["net"])
        agent = DqnAgent(grid, profile, config, net=net)
        agent.target_net = QNetwork.from_json_dict(doc["target_net"])
        agent.adam = AdamState.from_json_dict(doc["adam"], agent.net)
        agent.adam_t = int(doc["adam"]["t"])
        agent.gradient_steps = int(doc["counters"]["gradient_steps"])
        agent.episodes_done = int(doc["counters"]["episodes_done"])
        agent.rating_offset = float(doc["counters"].get("rating_offset", 0.0))
        agent.ratings_seen = int(doc["counters"].get("ratings_seen", 0))
        agent.rng_action.setstate(int(doc["rng"]["action"]))
        agent.rng_sample.setstate(int(doc["rng"]["sample"]))
        agent.rng_serve.setstate(int(doc["rng"]["serve"]))
        h, w, n = grid.height, grid.width, grid.n_rooms
        for tdoc in doc["buffer"]:
            agent.buffer.push(_transition_from_doc(tdoc, h, w, n))
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(f"corrupt checkpoint: {exc}") from exc
    return agent


def save_checkpoint(agent: DqnAgent, path: str) -> None:
    """Atomic write: serialize to a sibling temp file, then rename."""
    doc = agent_to_json_dict(agent)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, separators=(",", ":"))
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def load_checkpoint(path: str) -> DqnAgent:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from exc
    return agent_from_json_dict(doc)
