"""Message and decision types."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from ..errors import InvalidArgumentError


class MessageKind(str, Enum):
    HARQ1 = "HARQ1"
    HARQ2 = "HARQ2"
    SR = "SR"
    PAYLOAD = "PAYLOAD"


class TxState(str, Enum):
    PRESENT = "PRESENT"
    DTX = "DTX"


class DetectedState(str, Enum):
    DETECTED = "DETECTED"
    DTX = "DTX"


@dataclass(frozen=True)
class UciMessage:
    kind: MessageKind
    bits: np.ndarray
    tx_state: TxState = TxState.PRESENT

    def __post_init__(self):
        object.__setattr__(self, "kind", MessageKind(self.kind))
        object.__setattr__(self, "tx_state", TxState(self.tx_state))
        bits = np.asarray(self.bits, dtype=np.uint8).ravel()
        if np.any(bits > 1):
            raise InvalidArgumentError("bits must be 0 or 1")
        expected = {MessageKind.HARQ1: 1, MessageKind.HARQ2: 2, MessageKind.SR: 1}
        if self.kind in expected and bits.size != expected[self.kind]:
            raise InvalidArgumentError(f"{self.kind.value} carries {expected[self.kind]} bit(s)")
        if self.kind is MessageKind.PAYLOAD and bits.size <= 2:
            raise InvalidArgumentError("PAYLOAD messages carry more than 2 bits")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_bits(cls, bits, tx_state=TxState.PRESENT):
        n = len(bits)
        kind = {1: MessageKind.HARQ1, 2: MessageKind.HARQ2}.get(n, MessageKind.PAYLOAD)
        return cls(kind, np.asarray(bits), tx_state)


@dataclass(frozen=True)
class Decision:
    detected_state: DetectedState
    bits: np.ndarray = field(default_factory=lambda: np.zeros(0, np.uint8))
    metric: float = 0.0
    crc_pass: Optional[bool] = None

    def __post_init__(self):
        object.__setattr__(self, "detected_state", DetectedState(self.detected_state))
        bits = np.asarray(self.bits, dtype=np.uint8).ravel()
        if self.detected_state is DetectedState.DTX:
            bits = np.zeros(0, np.uint8)
        object.__setattr__(self, "bits", bits)
