"""Tabulates recorded trajectories."""
from __future__ import annotations

from typing import Any

from ..evolve import TrajectoryRecord

BLOCH_COLUMNS = (
    "bloch_T_x", "bloch_T_y", "bloch_T_z",
    "bloch_P_x", "bloch_P_y", "bloch_P_z",
)


class TrajectoryManager:
    """Turns a TrajectoryRecord into plot-ready rows.

    Args:
        include_amplitudes: Add re/im columns for every state amplitude.
    """

    def __init__(self, include_amplitudes: bool = False):
        self.include_amplitudes = include_amplitudes

    def rows(self, record: TrajectoryRecord) -> list[dict[str, Any]]:
        rows = []
        for sample in range(len(record)):
            row: dict[str, Any] = {"t_ns": float(record.times[sample])}
            if self.include_amplitudes:
                for index, amplitude in enumerate(record.states[sample]):
                    row[f"re_{index}"] = float(amplitude.real)
                    row[f"im_{index}"] = float(amplitude.imag)
            bloch = list(record.bloch_T[sample]) + list(record.bloch_P[sample])
            row.update({name: float(value) for name, value in zip(BLOCH_COLUMNS, bloch)})
            row["leakage"] = float(record.leakage[sample])
            rows.append(row)
        return rows

    def final_state(self, record: TrajectoryRecord) -> dict[str, Any]:
        """Summary of the last sample for the JSON result."""
        state = record.states[-1]
        return {
            "t_ns": float(record.times[-1]),
            "amplitudes": {"re": state.real.tolist(), "im": state.imag.tolist()},
            "bloch_T": [float(v) for v in record.bloch_T[-1]],
            "bloch_P": [float(v) for v in record.bloch_P[-1]],
            "leakage": float(record.leakage[-1]),
        }
