"""NR PDSCH/PUSCH MCS tables and the BLER waterfall built on them.

Rows are (modulation order, code rate x 1024, spectral efficiency) from
38.214 tables 5.1.3.1-1 (64QAM) and 5.1.3.1-2 (256QAM). The 256QAM table
defines 28 indices (0-27); the 64QAM table 29 (0-28).

The SINR at which each MCS hits 50 % BLER is the Shannon SINR of its
spectral efficiency plus a fixed implementation gap, forced strictly
increasing so BLER always grows with the index at a fixed SINR.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property

QAM64 = (
    (2, 120, 0.2344), (2, 157, 0.3066), (2, 193, 0.3770), (2, 251, 0.4902),
    (2, 308, 0.6016), (2, 379, 0.7402), (2, 449, 0.8770), (2, 526, 1.0273),
    (2, 602, 1.1758), (2, 679, 1.3262), (4, 340, 1.3281), (4, 378, 1.4766),
    (4, 434, 1.6953), (4, 490, 1.9141), (4, 553, 2.1602), (4, 616, 2.4063),
    (4, 658, 2.5703), (6, 438, 2.5664), (6, 466, 2.7305), (6, 517, 3.0293),
    (6, 567, 3.3223), (6, 616, 3.6094), (6, 666, 3.9023), (6, 719, 4.2129),
    (6, 772, 4.5234), (6, 822, 4.8164), (6, 873, 5.1152), (6, 910, 5.3320),
    (6, 948, 5.5547),
)

QAM256 = (
    (2, 120, 0.2344), (2, 193, 0.3770), (2, 308, 0.6016), (2, 449, 0.8770),
    (2, 602, 1.1758), (4, 378, 1.4766), (4, 434, 1.6953), (4, 490, 1.9141),
    (4, 553, 2.1602), (4, 616, 2.4063), (4, 658, 2.5703), (6, 466, 2.7305),
    (6, 517, 3.0293), (6, 567, 3.3223), (6, 616, 3.6094), (6, 666, 3.9023),
    (6, 719, 4.2129), (6, 772, 4.5234), (6, 822, 4.8164), (6, 873, 5.1152),
    (8, 682.5, 5.3320), (8, 711, 5.5547), (8, 754, 5.8906), (8, 797, 6.2266),
    (8, 841, 6.5703), (8, 885, 6.9141), (8, 916.5, 7.1602), (8, 948, 7.4063),
)

IMPLEMENTATION_GAP_DB = 1.0
MIN_STEP_DB = 0.1
DEFAULT_SLOPE = 1.0  # 1/dB


@dataclass(frozen=True)
class McsTable:
    name: str
    rows: tuple[tuple[int, float, float], ...]
    gap_db: float = IMPLEMENTATION_GAP_DB

    def __len__(self):
        return len(self.rows)

    @property
    def max_mcs(self) -> int:
        return len(self.rows) - 1

    def se(self, mcs: int) -> float:
        return self.rows[mcs][2]

    @cached_property
    def thresholds(self) -> tuple[float, ...]:
        out = []
        for _, _, se in self.rows:
            t = 10 * math.log10(2**se - 1) + self.gap_db
            if out and t < out[-1] + MIN_STEP_DB:
                t = out[-1] + MIN_STEP_DB
            out.append(t)
        return tuple(out)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["mcs", "qm", "code_rate_x1024", "spectral_efficiency", "sinr_50pct_db"])
        for i, (qm, rate, se) in enumerate(self.rows):
            w.writerow([i, qm, rate, se, f"{self.thresholds[i]:.3f}"])
        return buf.getvalue()


TABLES = {
    "qam64": McsTable("qam64", QAM64),
    "qam256": McsTable("qam256", QAM256),
}


def get_table(table: str | McsTable) -> McsTable:
    return table if isinstance(table, McsTable) else TABLES[table]


def bler(sinr_db: float, mcs: int, table: str | McsTable = "qam256", slope: float = DEFAULT_SLOPE) -> float:
    """Logistic waterfall centred on the table's 50 % point for ``mcs``."""
    tab = get_table(table)
    if not 0 <= mcs <= tab.max_mcs:
        raise ValueError(f"MCS {mcs} outside {tab.name} (0-{tab.max_mcs})")
    x = slope * (sinr_db - tab.thresholds[mcs])
    # split keeps exp() from overflowing at either tail
    if x >= 0:
        e = math.exp(-x)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(x))


def link_adapt(sinr_db: float, table: str | McsTable = "qam256", target_bler: float = 0.1,
               slope: float = DEFAULT_SLOPE) -> int:
    """Highest MCS whose predicted BLER meets ``target_bler``; 0 if none does."""
    if not 0 < target_bler < 1:
        raise ValueError("target_bler must lie in (0, 1)")
    tab = get_table(table)
    # bler <= target  <=>  sinr >= t_mcs + ln(1/target - 1)/slope
    margin = math.log(1.0 / target_bler - 1.0) / slope
    best = 0
    for mcs, t in enumerate(tab.thresholds):
        if sinr_db >= t + margin:
            best = mcs
        else:
            break
    return best
