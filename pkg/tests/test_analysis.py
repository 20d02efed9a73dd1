"""Audit tests.

The heard-of-set values for the triangle scenario were unfolded by hand from
the bookkeeping recursion: at the first synchronous step every process
publishes its input, so a node's upward set is its larger neighbor's
(empty) published set plus that neighbor's identifier, and symmetrically
downward.
"""

import pytest

from wfcolor.analysis import (
    ab_exclusion_audit,
    ab_growth_audit,
    ab_sets,
    activation_bound_audit,
    blocked_at,
    check_palette,
    check_proper_coloring,
    local_maxima,
    monotone_distances,
    parity_audit,
    round_complexity,
    stop_rule_audit,
    xhat_coloring_audit,
)
from wfcolor.engine import NotTerminated, StepRecord, new_execution, run
from wfcolor.model import cycle, explicit_ids, monotone_chain_ids, random_unique_ids
from wfcolor.protocols import Continue, INFINITE, Return
from wfcolor.schedulers import make_scheduler


def triangle_trace(protocol="slow6", sched="sync", horizon=100):
    g = cycle(3)
    ex = new_execution(g, explicit_ids(g, [5, 1, 9]), protocol)
    return run(ex, make_scheduler(sched, 3), horizon)


def test_proper_coloring_single_output_passes():
    report = check_proper_coloring(cycle(3), {0: (1, 1)})
    assert report.passed


def test_proper_coloring_triangle_outputs():
    report = check_proper_coloring(cycle(3), {0: (1, 1), 1: (1, 0), 2: (0, 1)})
    assert report.passed


def test_proper_coloring_flags_equal_neighbors():
    report = check_proper_coloring(cycle(4), {0: 3, 1: 3})
    assert not report.passed
    assert len(report.violations) == 1


def test_palette_checks():
    assert not check_palette({0: 5}, "slow5").passed
    assert check_palette({0: (2, 0)}, "slow6").passed
    assert not check_palette({0: (2, 2)}, "deltasq", delta=3).passed


def test_round_complexity_triangle():
    trace = triangle_trace()
    assert round_complexity(trace) == 2


def test_round_complexity_requires_termination():
    g = cycle(10)
    trace = run(new_execution(g, monotone_chain_ids(10), "slow6"), make_scheduler("sync", 10), 1)
    with pytest.raises(NotTerminated):
        round_complexity(trace)


def test_round_complexity_ignores_crashed_node():
    g = cycle(3)
    ex = new_execution(g, explicit_ids(g, [5, 1, 9]), "slow6")
    trace = run(ex, make_scheduler("crash:0@0;sync", 3), 100)
    assert round_complexity(trace) == 2
    assert trace.activations[0] == 0


def test_round_complexity_single_isolated_return():
    # a node whose neighbors never wake returns on its first activation
    g = cycle(3)
    ex = new_execution(g, explicit_ids(g, [5, 1, 9]), "slow6")
    trace = run(ex, make_scheduler("crash:0@0,1@0;sync", 3), 100)
    assert round_complexity(trace) == 1
    assert trace.outputs == {2: (0, 0)}


def test_ab_sets_start_empty():
    trace = triangle_trace()
    assert ab_sets(trace, 0, 0) == (frozenset(), frozenset())


def test_ab_sets_first_step_hand_values():
    trace = triangle_trace()
    assert ab_sets(trace, 0, 1) == (frozenset({9}), frozenset({1}))  # node with id 5
    assert ab_sets(trace, 2, 1) == (frozenset(), frozenset({1, 5}))  # node with id 9
    assert ab_sets(trace, 1, 1) == (frozenset({5, 9}), frozenset())  # node with id 1


def test_ab_sets_rejects_out_of_range():
    trace = triangle_trace()
    with pytest.raises(ValueError):
        ab_sets(trace, 0, 99)
    with pytest.raises(ValueError):
        ab_sets(trace, 7, 1)


def test_parity_audit_passes_synchronous_triangle():
    report = parity_audit(triangle_trace())
    assert report.passed
    assert report.checked > 0


def test_parity_audit_rejects_wrong_protocol():
    with pytest.raises(ValueError):
        parity_audit(triangle_trace(protocol="slow5"))


def _tamper_first_continue(trace, mutate):
    for i, record in enumerate(trace.steps):
        for p, decision in record.decisions.items():
            if isinstance(decision, Continue):
                decisions = dict(record.decisions)
                decisions[p] = Continue(mutate(decision.state))
                trace.steps[i] = StepRecord(
                    record.t, record.activated, record.writes, record.reads, decisions
                )
                return p
    raise AssertionError("no continue decision found")


def test_parity_audit_flags_corrupted_component():
    trace = triangle_trace()
    _tamper_first_continue(trace, lambda st: st._replace(a=st.a + 1))
    assert not parity_audit(trace).passed


def test_ab_exclusion_and_growth_pass_on_random_traces():
    g = cycle(9)
    for seed in range(5):
        ex = new_execution(g, random_unique_ids(g, seed=seed), "slow6")
        trace = run(ex, make_scheduler(f"rand:0.5:{seed}", 9), 400)
        assert trace.terminated
        assert ab_exclusion_audit(trace).passed
        assert ab_growth_audit(trace).passed
        assert parity_audit(trace).passed


def test_ab_exclusion_b_side_skipped_for_proper_inputs():
    from wfcolor.model import proper_coloring_ids

    g = cycle(8)
    ex = new_execution(g, proper_coloring_ids(g, 3, seed=1), "slow6")
    trace = run(ex, make_scheduler("sync", 8), 300)
    report = ab_exclusion_audit(trace)  # b side off by default for proper inputs
    assert report.passed


def test_stop_rule_audit_passes_and_detects_tampering():
    trace = triangle_trace(protocol="slow5", sched="rand:0.6:3", horizon=200)
    assert trace.terminated
    report = stop_rule_audit(trace)
    assert report.passed and report.checked > 0
    victim = _tamper_first_continue(trace, lambda st: st._replace(b=0))
    tampered = stop_rule_audit(trace)
    assert not tampered.passed
    assert tampered.violations[0][1] == victim


def test_stop_rule_rejects_wrong_protocol():
    with pytest.raises(ValueError):
        stop_rule_audit(triangle_trace())


def test_xhat_audit_passes_on_fast5():
    g = cycle(12)
    for seed in range(4):
        ex = new_execution(g, random_unique_ids(g, seed=seed), "fast5")
        trace = run(ex, make_scheduler(f"rand:0.5:{seed}", 12), 400)
        assert trace.terminated
        report = xhat_coloring_audit(trace)
        assert report.passed and report.checked > 0


def test_xhat_audit_flags_corrupted_write():
    trace = triangle_trace(protocol="fast5")
    record = trace.steps[0]
    writes = dict(record.writes)
    writes[0] = writes[0]._replace(x=writes[1].x)
    trace.steps[0] = StepRecord(record.t, record.activated, writes, record.reads, record.decisions)
    assert not xhat_coloring_audit(trace).passed


def test_xhat_audit_rejects_wrong_protocol():
    with pytest.raises(ValueError):
        xhat_coloring_audit(triangle_trace())


def reference_blocked(trace, node, t):
    r_local = 0
    r_hat = None
    returned = False
    for record in trace.steps[:t]:
        if node in record.decisions:
            r_hat = record.writes[node].r
            decision = record.decisions[node]
            if isinstance(decision, Return):
                returned = True
            else:
                r_local = decision.state.r
    return (not returned) and r_local < INFINITE and r_local == r_hat


def test_blocked_at_base_cases():
    trace = triangle_trace(protocol="fast5")
    for p in range(3):
        assert blocked_at(trace, p, 0) is False


def test_blocked_at_matches_reference_and_occurs():
    g = cycle(4)
    ids = explicit_ids(g, [7, 12, 3, 20])
    found = False
    for seed in range(6):
        ex = new_execution(g, ids, "fast5")
        trace = run(ex, make_scheduler(f"crash:0@2;rand:0.7:{seed}", 4), 300)
        for t in range(len(trace.steps) + 1):
            for p in range(4):
                got = blocked_at(trace, p, t)
                assert got == reference_blocked(trace, p, t)
                found = found or got
    assert found, "no blocked situation arose across the seeds"


def test_monotone_distances_chain():
    g = cycle(5)
    ids = monotone_chain_ids(5)
    distances = monotone_distances(ids, g)
    assert distances[2] == (2, 2)
    assert distances[4] == (0, 1)  # the unique local maximum
    assert distances[0] == (1, 0)  # the unique local minimum
    assert distances[1] == (3, 1)


def test_monotone_distances_alternating_ring():
    g = cycle(6)
    ids = explicit_ids(g, [10, 1, 11, 2, 12, 3])
    for ell, ell_prime in monotone_distances(ids, g).values():
        assert ell + ell_prime == 1


def test_monotone_distances_rejects_general_graphs():
    from wfcolor.model import random_connected_graph

    g = random_connected_graph(8, 3, seed=1)
    with pytest.raises(ValueError):
        monotone_distances(random_unique_ids(g, seed=0), g)


def test_local_maxima_chain():
    g = cycle(7)
    assert local_maxima(monotone_chain_ids(7), g) == {6}


def test_activation_bound_audit_slow6():
    g = cycle(11)
    for seed in range(5):
        ex = new_execution(g, random_unique_ids(g, seed=seed), "slow6")
        trace = run(ex, make_scheduler(f"rand:0.4:{seed}", 11), 440)
        assert trace.terminated
        assert activation_bound_audit(trace).passed


def test_activation_bound_audit_slow5():
    g = cycle(9)
    for sched in ("sync", "rr", "rand:0.5:8"):
        ex = new_execution(g, random_unique_ids(g, seed=3), "slow5")
        trace = run(ex, make_scheduler(sched, 9), 380)
        assert trace.terminated
        assert activation_bound_audit(trace).passed


def test_activation_bound_audit_rejects_fast5():
    with pytest.raises(ValueError):
        activation_bound_audit(triangle_trace(protocol="fast5"))


def test_report_serialization(tmp_path):
    import json

    from wfcolor.analysis import write_report

    report = check_proper_coloring(cycle(4), {0: 3, 1: 3})
    path = tmp_path / "audit.jsonl"
    write_report(report, str(path))
    lines = path.read_text().splitlines()
    head = json.loads(lines[0])
    assert head == {"audit": "proper_coloring", "checked": 1, "pass": False}
    assert json.loads(lines[1])["node"] == 0
    assert len(lines) == 2
