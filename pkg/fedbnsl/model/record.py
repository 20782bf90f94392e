"""
Per-round trace of a federated run
"""

# generic imports
from dataclasses import dataclass, field
from typing import Optional
import numpy as np

# fedbnsl imports
from fedbnsl.model.graph import BinaryDag, prune


@dataclass(frozen=True, eq=False)
class RoundEntry:
    """State of the federation at the end of one ADMM round."""
    round: int
    W: np.ndarray
    h_value: float
    bytes_up: int
    bytes_down: int
    bytes_up_cum: int
    bytes_down_cum: int
    dual_residual: float
    alpha: float
    w_support: int
    local_support: tuple
    server_iterations: int
    server_converged: bool
    wall_time: float


@dataclass(eq=False)
class RunRecord:
    """
    Trace of a run, appended to by the orchestrator once per round.

    Attributes
    ----------
    method : str
        Name of the method that produced the trace.
    rounds : list of RoundEntry
        One entry per completed round.
    local_matrices : list of np.ndarray
        Each participant's final local matrix B_p.
    estimate : BinaryDag
        Final pruned consensus structure, set by `finalize`.
    removed_edges : int
        Edges removed by cycle breaking in the final pruning.
    privacy : dict
        Privacy ledger of a private run (empty otherwise).
    """
    method: str
    d: int
    participants: int
    rounds: list = field(default_factory=list)
    local_matrices: list = field(default_factory=list)
    estimate: Optional[BinaryDag] = None
    removed_edges: int = 0
    privacy: dict = field(default_factory=dict)

    def append(self, entry):
        if self.rounds:
            last = self.rounds[-1]
            if entry.round != last.round + 1:
                raise ValueError(f"round {entry.round} appended after round {last.round}")
            if entry.bytes_up_cum < last.bytes_up_cum or entry.bytes_down_cum < last.bytes_down_cum:
                raise ValueError("cumulative byte counts must not decrease")
        self.rounds.append(entry)

    def finalize(self, threshold):
        """Prune the last consensus matrix into the final structure estimate."""
        self.estimate, self.removed_edges = prune(self.final_W, threshold)
        return self.estimate

    @property
    def final_W(self):
        if not self.rounds:
            return np.zeros((self.d, self.d))
        return self.rounds[-1].W

    @property
    def total_bytes(self):
        if not self.rounds:
            return 0
        return self.rounds[-1].bytes_up_cum + self.rounds[-1].bytes_down_cum

    def __len__(self):
        return len(self.rounds)
