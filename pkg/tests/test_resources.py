import random
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sysgrader.resources import (
    KINDS,
    ResourceId,
    Snapshot,
    SnapshotFormatError,
    diff_snapshots,
    parse_snapshot,
    read_proc_sysvipc,
)


def snap(*resources, label="before"):
    return Snapshot(frozenset(resources), label)


def test_single_line():
    s = parse_snapshot("semaphore_set 0x5401 98307 student")
    (r,) = s.resources
    assert r == ResourceId("semaphore_set", 0x5401, 98307, "student")


def test_empty_text():
    assert parse_snapshot("").resources == frozenset()


def test_header_comments_and_blanks_skipped():
    text = "kind key id owner\n# taken before run\n\nshared_memory 0 12 alice\nmessage_queue 17 3 bob\n"
    assert len(parse_snapshot(text).resources) == 2


@pytest.mark.parametrize(
    "text, line",
    [
        ("semaphore_set 0 1 a\nsemaphore_set 0x10 1 b\n", 2),
        ("semaphore_set 0 1\n", 1),
        ("\npipe 0 1 a\n", 2),
        ("shared_memory 0 x a\n", 1),
    ],
)
def test_format_errors_carry_line(text, line):
    with pytest.raises(SnapshotFormatError) as err:
        parse_snapshot(text)
    assert err.value.line_no == line


def test_same_id_in_different_kinds_is_fine():
    assert len(parse_snapshot("semaphore_set 0 1 a\nshared_memory 0 1 a\n").resources) == 2


def test_render_round_trip():
    s = snap(ResourceId("message_queue", 0, 3, "a"), ResourceId("semaphore_set", 0x5401, 98307, "b"))
    assert parse_snapshot(s.render()) == s
    assert s.render().splitlines()[0].startswith("semaphore_set")


def test_diff_examples():
    sem = ResourceId("semaphore_set", 0, 7, "u")
    mq = ResourceId("message_queue", 0, 3, "u")
    assert diff_snapshots(snap(sem), snap(sem, label="after")) == []
    assert diff_snapshots(snap(), snap(sem, label="after")) == [sem]
    assert diff_snapshots(snap(mq), snap(label="after")) == []


def test_diff_is_sorted_by_kind_then_id():
    rs = [ResourceId(k, 0, i, "u") for k in reversed(KINDS) for i in (9, 2)]
    leaks = diff_snapshots(snap(), snap(*rs))
    assert [(r.kind, r.os_id) for r in leaks] == [(k, i) for k in KINDS for i in (2, 9)]


def test_identity_ignores_key_and_owner():
    before = snap(ResourceId("shared_memory", 0, 5, "alice"))
    after = snap(ResourceId("shared_memory", 0x99, 5, "bob"))
    assert diff_snapshots(before, after) == []


def random_resources(rng: random.Random, n: int, taken: set) -> set:
    out = set()
    while len(out) < n:
        kind = rng.choice(KINDS)
        os_id = rng.randrange(1 << 20)
        if (kind, os_id) in taken:
            continue
        taken.add((kind, os_id))
        out.add(ResourceId(kind, rng.choice([0, rng.randrange(1 << 31)]), os_id, rng.choice(["root", "s1", "s2"])))
    return out


def check_pair(rng: random.Random) -> None:
    taken: set = set()
    a = random_resources(rng, rng.randint(0, 12), taken)
    x = random_resources(rng, rng.randint(0, 6), taken)
    before = snap(*a)
    assert diff_snapshots(before, snap(*a, label="after")) == []
    assert set(diff_snapshots(before, snap(*(a | x), label="after"))) == x
    # arbitrary after-snapshot, overlapping or not
    b = set(rng.sample(sorted(a, key=lambda r: r.identity), rng.randint(0, len(a)))) | random_resources(
        rng, rng.randint(0, 6), taken
    )
    leaks = diff_snapshots(before, snap(*b, label="after"))
    ids_before = {r.identity for r in a}
    assert all(r.identity not in ids_before for r in leaks)
    assert set(leaks) <= b


def test_diff_properties_10000_random_pairs():
    rng = random.Random(7)
    started = time.perf_counter()
    for _ in range(10_000):
        check_pair(rng)
    assert time.perf_counter() - started < 5.0


resource = st.builds(
    ResourceId,
    st.sampled_from(KINDS),
    st.integers(0, 2**31 - 1),
    st.integers(0, 2**31 - 1),
    st.sampled_from(["root", "student"]),
)


@settings(max_examples=200)
@given(st.lists(resource, max_size=15, unique_by=lambda r: r.identity))
def test_parse_render_identity(resources):
    s = snap(*resources)
    assert parse_snapshot(s.render()) == s


def test_read_proc_sysvipc_formats_tables(tmp_path):
    (tmp_path / "sem").write_text(
        "       key      semid perms      nsems   uid   gid  cuid  cgid      otime      ctime\n"
        "         0          4   664          4     0     0     0     0          0 1700000000\n"
    )
    (tmp_path / "shm").write_text(
        "       key      shmid perms                  size  cpid  lpid nattch   uid   gid  cuid  cgid"
        "      atime      dtime      ctime                   rss                  swap\n"
        "     21505         11   600                 4096   100   100      0     0     0     0     0"
        "          0          0 1700000000                     0                     0\n"
    )
    (tmp_path / "msg").write_text(
        "       key      msqid perms      cbytes       qnum lspid lrpid   uid   gid  cuid  cgid      stime      rtime      ctime\n"
    )
    s = parse_snapshot(read_proc_sysvipc(tmp_path))
    assert {(r.kind, r.key, r.os_id) for r in s.resources} == {("semaphore_set", 0, 4), ("shared_memory", 21505, 11)}


def test_read_proc_sysvipc_missing_dir(tmp_path):
    assert read_proc_sysvipc(tmp_path / "none") == ""
