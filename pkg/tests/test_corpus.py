from __future__ import annotations

import pytest

from vtbound import corpus
from vtbound.corpus import (
    PLANTED,
    Unsupported,
    corpus_catalog,
    get_entry,
    make_planted,
    profile_access_frequencies,
    program_by_name,
)
from vtbound.explore import classify_bug
from vtbound.randomized import estimate_access_profile
from vtbound.scheduler import RoundRobin, execute


def test_catalog_names_unique():
    names = [e.name for e in corpus_catalog()]
    assert len(names) == len(set(names)) == 12


def test_catalog_has_bug_free_controls():
    free = {e.name for e in corpus_catalog() if e.expected is None}
    assert free == {"locked-increment", "producer-consumer"}


def test_controls_run_clean_round_robin():
    for name in ["locked-increment", "producer-consumer"]:
        prog = get_entry(name).program()
        for start in range(prog.n):
            assert not execute(prog, RoundRobin(start)).buggy


def test_get_entry_unknown():
    with pytest.raises(KeyError):
        get_entry("nope")


def test_program_by_name_forms():
    assert program_by_name("fig3").name == "fig3"
    assert program_by_name("pctf:0.5").name == "pctf:0.5"
    prog = program_by_name("planted:2,1,2:4+1")
    assert prog.name == "planted:2,1,2:4+1" and prog.n == 3
    assert {"d0", "d1", "d2", "a", "p0"} <= set(prog.globals)


def test_program_by_name_bad_planted():
    with pytest.raises(KeyError):
        program_by_name("planted:x")


@pytest.mark.parametrize("sig", sorted(s for s in PLANTED if s[2] <= 3))
def test_planted_signatures(sig):
    prog = make_planted(*sig, verify=False)
    assert classify_bug(prog, 2, 2, max(sig[2], 2)) == sig


def test_planted_thread_count_matches_t():
    for t in range(2, 6):
        assert make_planted(0, 0, t, verify=False).n == t
        assert make_planted(1, 1, t, verify=False).n == t


def test_planted_bystanders_keep_signature():
    prog = make_planted(1, 1, 2, extra_threads=3)
    assert prog.n == 5
    assert classify_bug(prog, 1, 1, 2) == (1, 1, 2)


def test_planted_decoys_keep_signature():
    prog = make_planted(2, 1, 2, decoys=3)
    assert classify_bug(prog, 2, 1, 2) == (2, 1, 2)


def test_unsupported_signatures():
    with pytest.raises(Unsupported):
        make_planted(3, 1, 2)
    with pytest.raises(Unsupported):
        make_planted(1, 1, 2, decoys=2)


def test_pctf_ratio_controls_access_counts():
    lo = estimate_access_profile(corpus.pctf_pair(0.1)).k
    hi = estimate_access_profile(corpus.pctf_pair(1.0)).k
    assert lo == {"x": 6, "y": 60}
    assert hi == {"x": 60, "y": 60}


def test_profile_histogram_fig4():
    hist = profile_access_frequencies(corpus.fig4(), runs=4)
    assert set(hist.means) == {"a", "b"}
    assert sum(hist.buckets.values()) == 2


def test_profile_histogram_rejects_zero_runs():
    with pytest.raises(ValueError):
        profile_access_frequencies(corpus.fig1(), runs=0)


def test_allocation_vector_shape():
    prog = corpus.allocation_vector()
    assert prog.n == 2 and {"blocks", "m"} <= set(prog.globals)
