from reefloop.session.benchmark import RunStore, make_tracker, run_benchmark
from reefloop.session.episode import EpisodeLog, ScriptedOperator, load_episode, run_episode, save_episode

__all__ = [
    "EpisodeLog",
    "RunStore",
    "ScriptedOperator",
    "load_episode",
    "make_tracker",
    "run_benchmark",
    "run_episode",
    "save_episode",
]
