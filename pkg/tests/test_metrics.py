import pytest
from hypothesis import given, strategies as st

from aqmsim.aqm.base import DropCause
from aqmsim.metrics import FlowLedger, QueueMonitor, ewma_step, jain_index, utilization
from aqmsim.simcore import Packet


def test_ewma_examples():
    assert ewma_step(0, 100, 0.002) == pytest.approx(0.2)
    assert ewma_step(7.5, 7.5, 0.002) == 7.5
    with pytest.raises(ValueError):
        ewma_step(0, 1, 0)


@given(st.floats(-1e3, 1e3), st.floats(0.001, 1.0), st.integers(0, 400))
def test_ewma_closed_form(s, w, n):
    v = 0.0
    for _ in range(n):
        v = ewma_step(v, s, w)
    assert v == pytest.approx(s * (1 - (1 - w) ** n), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("xs,expect", [([1, 1, 1, 1], 1.0), ([1, 0, 0, 0], 0.25),
                                       ([2, 2, 4], 64 / 72)])
def test_jain_examples(xs, expect):
    assert jain_index(xs) == pytest.approx(expect)


def test_jain_errors():
    with pytest.raises(ValueError):
        jain_index([0, 0])
    with pytest.raises(ValueError):
        jain_index([])


@given(st.lists(st.floats(0, 1e9), min_size=1, max_size=30).filter(lambda xs: max(xs) > 1e-3),
       st.floats(1e-3, 1e3))
def test_jain_scale_invariant_and_bounded(xs, k):
    j = jain_index(xs)
    assert 1 / len(xs) - 1e-12 <= j <= 1 + 1e-12
    assert jain_index([k * x for x in xs]) == pytest.approx(j, rel=1e-9)


@pytest.mark.parametrize("bits,expect", [(0.93e6 * 90, 0.93), (0, 0.0), (1e6 * 90, 1.0)])
def test_utilization(bits, expect):
    assert utilization(bits, 90.0, 1e6) == pytest.approx(expect)


def test_utilization_needs_duration():
    with pytest.raises(ValueError):
        utilization(1, 0, 1e6)


def test_ledger_window_and_drops():
    led = FlowLedger(["tcp", "udp"], warmup_s=10)
    p = Packet(1, 0)
    led.on_sent(p, 1.0)
    led.on_delivered(p, 5.0)
    led.on_sent(p, 11.0)
    led.on_delivered(p, 12.0)
    led.on_drop(Packet(1, 2), "matched")
    led.on_drop(Packet(0, 0, 40, is_ack=True), "overflow")
    led.finalize(90.0)
    f = led.flows[1]
    assert f.delivered_bytes == 2000 and f.window_bytes == 1000
    assert f.throughput_bps == pytest.approx(8000 / 90)
    assert led.drops_by_cause == {"matched": 1, "ack_overflow": 1}
    assert led.flows[0].dropped_pkts == 0


def test_queue_series_empty_is_zero():
    mon = QueueMonitor(["tcp", "udp"])
    mon.finish(5.0)
    assert len(mon.series.t) == 51
    assert set(mon.series.total) == {0.0}


def test_queue_series_converges_to_pinned_level():
    mon = QueueMonitor(["tcp"] * 3)
    t = 0.0
    for k in range(150):
        mon.on_accept(Packet(k % 3, k), t)
    # dequeue/refill keeps the raw queue at 150 for many samples
    for k in range(20_000):
        t += 1e-4
        mon.on_dequeue(Packet(k % 3, k), t)
        mon.on_accept(Packet(k % 3, k), t)
    mon.finish(t)
    assert mon.series.total[-1] == pytest.approx(150, abs=1.0)


@given(st.lists(st.tuples(st.integers(0, 3), st.booleans()), max_size=300))
def test_partition_and_bounds(ops):
    classes = ["tcp", "tcp", "udp", "udp"]
    mon = QueueMonitor(classes, interval=0.01)
    held = [0] * 4
    seen = [0]
    t = 0.0
    for f, add in ops:
        t += 0.003
        if add:
            mon.on_accept(Packet(f, 0), t)
            held[f] += 1
        elif held[f]:
            if f % 2:
                mon.on_victim(Packet(f, 0), DropCause.MATCHED, t)
            else:
                mon.on_dequeue(Packet(f, 0), t)
            held[f] -= 1
        seen.append(sum(held))
        assert mon.check_partition()
        assert min(seen) - 1e-9 <= mon.ew_total <= max(seen) + 1e-9
    mon.finish(t)
    assert mon.partition_violations == 0
    for row_t, total, tcp, udp in zip(mon.series.t, mon.series.total, mon.series.tcp,
                                      mon.series.udp):
        assert 0 <= total <= max(seen) + 1e-9
        assert tcp + udp == pytest.approx(total, abs=1e-9)


def test_rows_on_grid():
    mon = QueueMonitor(["tcp"], interval=0.1)
    mon.on_accept(Packet(0, 0), 0.05)
    mon.on_dequeue(Packet(0, 0), 0.37)
    mon.finish(1.0)
    assert mon.series.t == pytest.approx([0.1 * i for i in range(11)])
    assert mon.series.mean("total") >= 0
