"""Per-request cost accounting."""
from __future__ import annotations

import numpy as np


class CostLedger:
    """Service and adjustment charges of a served sequence, one entry per request.

    ``total`` is the summed cost; ``average`` divides by the number of
    requests and is what the experiments call the amortized cost.
    """

    def __init__(self, service=(), adjust=None):
        service = np.asarray(service, dtype=np.int64).reshape(-1)
        adjust = np.zeros_like(service) if adjust is None else np.asarray(adjust, dtype=np.int64).reshape(-1)
        if service.shape != adjust.shape:
            raise ValueError("service and adjust must have one entry per request")
        if np.any(service < 0) or np.any(adjust < 0):
            raise ValueError("charges must be non-negative")
        self.service = service
        self.adjust = adjust

    @classmethod
    def from_records(cls, records) -> "CostLedger":
        records = list(records)
        if not records:
            return cls()
        srv, adj = zip(*records)
        return cls(srv, adj)

    @property
    def m(self) -> int:
        return int(self.service.size)

    def __len__(self) -> int:
        return self.m

    @property
    def service_total(self) -> int:
        return int(self.service.sum())

    @property
    def adjust_total(self) -> int:
        return int(self.adjust.sum())

    @property
    def total(self) -> int:
        return self.service_total + self.adjust_total

    @property
    def average(self) -> float:
        if self.m == 0:
            raise ValueError("average cost of an empty ledger")
        return self.total / self.m

    amortized = average

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.service + self.adjust)

    def prefix_total(self, m: int) -> int:
        return int(self.service[:m].sum() + self.adjust[:m].sum())

    def __add__(self, other: "CostLedger") -> "CostLedger":
        return CostLedger(
            np.concatenate([self.service, other.service]),
            np.concatenate([self.adjust, other.adjust]),
        )

    def __eq__(self, other):
        if not isinstance(other, CostLedger):
            return NotImplemented
        return np.array_equal(self.service, other.service) and np.array_equal(self.adjust, other.adjust)

    __hash__ = None

    def __repr__(self) -> str:
        return f"CostLedger(m={self.m}, total={self.total})"

    def write_csv(self, fh, metadata: dict | None = None) -> None:
        for key, value in (metadata or {}).items():
            fh.write(f"# {key}={value}\n")
        fh.write("request_index,service,adjust,cumulative\n")
        cum = self.cumulative.tolist()
        for i, (s, a) in enumerate(zip(self.service.tolist(), self.adjust.tolist())):
            fh.write(f"{i},{s},{a},{cum[i]}\n")
