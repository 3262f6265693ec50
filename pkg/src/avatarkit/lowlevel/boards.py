"""Board partition and the board-set tick/wire contract.

EMS boards drive the brushless groups (torso, shoulder+elbow, legs); MC4Plus
boards drive up to four DC motors each (head, neck, wrists, hands). Boards
tick at 1 kHz; state goes on the wire decimated to 100 Hz on
``/avatar/board/<n>/state``, references arrive on ``/avatar/board/<n>/cmd``.
"""

from __future__ import annotations

import struct

import numpy as np

from ..config import LowlevelConfig
from ..model.robot import RobotModel
from .servo import ControlMode, ServoBoard

_CMD_ENTRY = struct.Struct("<BBd")  # local joint, mode, reference
_STATE_ENTRY = struct.Struct("<BBddddB")  # local joint, mode, setpoint, pos, cmd, integ, sat

CMD_TAG = "board-cmd"
STATE_TAG = "board-state"


def _board_layout(model: RobotModel) -> list[tuple[str, str, list[int]]]:
    def grp(group, lo=None, hi=None):
        s = model.group_slice(group)
        idx = list(range(s.start, s.stop))
        return idx[lo:hi] if lo is not None or hi is not None else idx

    layout = [
        ("ems0", "ems", grp("torso")),
        ("ems1", "ems", grp("left_arm", 0, 4)),
        ("ems2", "ems", grp("right_arm", 0, 4)),
        ("ems3", "ems", grp("left_leg")),
        ("ems4", "ems", grp("right_leg")),
        ("mc4p0", "mc4plus", grp("head")),
        ("mc4p1", "mc4plus", grp("neck")),
        ("mc4p2", "mc4plus", grp("left_arm", 4, 7)),
        ("mc4p3", "mc4plus", grp("right_arm", 4, 7)),
        ("mc4p4", "mc4plus", grp("left_hand", 0, 4)),
        ("mc4p5", "mc4plus", grp("left_hand", 4, 8)),
        ("mc4p6", "mc4plus", grp("left_hand", 8, 9)),
        ("mc4p7", "mc4plus", grp("right_hand", 0, 4)),
        ("mc4p8", "mc4plus", grp("right_hand", 4, 8)),
        ("mc4p9", "mc4plus", grp("right_hand", 8, 9)),
    ]
    assert sorted(i for _, _, idx in layout for i in idx) == list(range(model.dof))
    return layout


class BoardSet:
    """All boards of the robot, ticked together."""

    def __init__(self, model: RobotModel, cfg: LowlevelConfig):
        self.model = model
        self.cfg = cfg
        self.boards = [
            ServoBoard(name, btype, model, idx, cfg) for name, btype, idx in _board_layout(model)
        ]
        self._board_of = np.zeros(model.dof, dtype=int)
        for b, board in enumerate(self.boards):
            for j in board.joints:
                self._board_of[j] = b
        self._wire_counter = 0
        self._state_ports: list = []

    def board_for(self, model_index: int) -> ServoBoard:
        return self.boards[self._board_of[model_index]]

    def set_mode(self, model_index: int, mode: ControlMode) -> None:
        self.board_for(model_index).set_mode(model_index, mode)

    def set_mode_all(self, mode: ControlMode) -> None:
        for board in self.boards:
            for j in board.joints:
                board.set_mode(j, mode)

    def set_reference(self, model_index: int, value: float, now: float) -> None:
        self.board_for(model_index).set_reference(model_index, value, now)

    def set_references(self, refs: dict[int, float] | np.ndarray, now: float) -> None:
        if isinstance(refs, dict):
            for j, v in refs.items():
                self.set_reference(j, v, now)
        else:
            for j, v in enumerate(np.asarray(refs)):
                self.set_reference(j, float(v), now)

    def update_measurements(self, q, dq=None, torque=None, current=None) -> None:
        for board in self.boards:
            board.update_measurements(q, dq, torque, current)

    def tick(self, t_start: float, n_ticks: int) -> None:
        for board in self.boards:
            board.tick(t_start, n_ticks)
        self._wire_counter += n_ticks
        if self._state_ports and self._wire_counter >= self.cfg.wire_decimation:
            self._wire_counter = 0
            now = t_start + n_ticks * self.cfg.board_dt
            for board, port in zip(self.boards, self._state_ports):
                port.publish(pack_board_state(board, now), type_tag=STATE_TAG)

    def position_targets(self, now: float) -> np.ndarray:
        out = np.zeros(self.model.dof)
        for board in self.boards:
            out[board.joints] = board.position_targets(now)
        return out

    # -- bus wiring ---------------------------------------------------------

    def attach_bus(self, bus, subnet: str) -> None:
        """Register per-board cmd/state topics and subscribe to commands."""
        self._state_ports = []
        for n, board in enumerate(self.boards):
            state = bus.register_port(f"/avatar/board/{n}/state", "output", subnet)
            cmd = bus.register_port(f"/avatar/board/{n}/cmd", "input", subnet)
            cmd.subscribe(self._make_cmd_handler(board, bus))
            self._state_ports.append(state)

    def _make_cmd_handler(self, board: ServoBoard, bus):
        def on_cmd(env):
            for local, mode, ref in unpack_board_cmd(env.payload):
                j = board.joints[local]
                board.set_mode(j, ControlMode(mode))
                board.set_reference(j, ref, bus.clock.now())

        return on_cmd


def pack_board_cmd(entries: list[tuple[int, int, float]]) -> bytes:
    return b"".join(_CMD_ENTRY.pack(local, mode, ref) for local, mode, ref in entries)


def unpack_board_cmd(payload: bytes) -> list[tuple[int, int, float]]:
    n = len(payload) // _CMD_ENTRY.size
    return [_CMD_ENTRY.unpack_from(payload, i * _CMD_ENTRY.size) for i in range(n)]


def pack_board_state(board: ServoBoard, now: float) -> bytes:
    parts = [struct.pack("<d", now)]
    for i in range(len(board.joints)):
        parts.append(
            _STATE_ENTRY.pack(
                i,
                int(board.mode[i]),
                board.setpoint[i],
                board.meas_pos[i],
                board.cmd[i],
                board.integrator[i],
                int(board.sat[i]),
            )
        )
    return b"".join(parts)


def unpack_board_state(payload: bytes) -> tuple[float, list[tuple]]:
    (now,) = struct.unpack_from("<d", payload, 0)
    entries = []
    off = 8
    while off < len(payload):
        entries.append(_STATE_ENTRY.unpack_from(payload, off))
        off += _STATE_ENTRY.size
    return now, entries
