import math

import numpy as np
import pytest

from sheref import compute_metrics
from sheref.errors import EmptyTraceList, MismatchedHorizons
from sheref.simulation import RunTrace, TickRecord


def tick(t, active, detected):
    a = np.asarray(active, dtype=np.int64)
    z = np.zeros(a.size)
    return TickRecord(t, a, z, z, z, len(detected), 0.0, np.asarray(detected, dtype=np.int64))


def test_hand_trace():
    tr = RunTrace(3, np.array([math.inf, 0, math.inf]), [tick(1, [1, 2], [2]), tick(2, [1, 2], [])])
    s = compute_metrics([tr])
    assert s.fdr_path.tolist() == [1.0, 0.0]
    assert s.max_fdr == 1.0
    assert s.afnr == pytest.approx(2 / 3)
    assert s.tadd == 2 and s.rejections == 1


def test_all_null_no_detections():
    tau = np.full(4, math.inf)
    tr = RunTrace(4, tau, [tick(t, [1, 2, 3], []) for t in (1, 2, 3)])
    s = compute_metrics([tr])
    assert s.max_fdr == 0 and s.afnr == 0 and s.tadd == 0


def test_all_false_detections():
    tau = np.full(3, math.inf)
    tr = RunTrace(4, tau, [tick(t, [1, 2], [1, 2]) for t in (1, 2, 3)])
    assert np.all(compute_metrics([tr]).fdr_path == 1.0)


def test_standard_errors():
    tau = np.array([math.inf, 0.0])
    a = RunTrace(2, tau, [tick(1, [1], [1])])
    b = RunTrace(2, tau, [tick(1, [1], [])])
    s = compute_metrics([a, b])
    assert s.afnr == 0.5 and s.afnr_se == pytest.approx(np.std([0, 1], ddof=1) / math.sqrt(2))
    assert s.reps == 2


def test_errors():
    with pytest.raises(EmptyTraceList):
        compute_metrics([])
    tau = np.array([math.inf, 0.0])
    with pytest.raises(MismatchedHorizons):
        compute_metrics([RunTrace(2, tau), RunTrace(3, tau)])
