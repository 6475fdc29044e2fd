import json

import pytest

from sockscope.analysis import (
    EmpiricalCdf,
    TCP_CLASSES,
    UDP_CLASSES,
    WrongFunctionError,
    WrongSocketTypeError,
    accept_origin_stats,
    classify_tcp,
    classify_udp,
    compute_report,
    flag_stats,
    function_usage,
    ioctl_breakdown,
    ioctl_timing,
    ks_uniform_distance,
    mode_transition_stats,
    multicast_stats,
    recv_buffer_cdf,
    report_json,
    socket_type_shares,
    sockopt_usage,
    tcp_class_fractions,
    tcpinfo_stats,
    udp_class_fractions,
)
from sockscope.functions import ApiFunction as F
from sockscope.model import (
    AddrArgs,
    FcntlArgs,
    FdArgs,
    IoArgs,
    IoctlArgs,
    NetAddress,
    SocketArgs,
    SockoptArgs,
    TraceEvent,
    TraceMeta,
)
from sockscope.traceio import Corpus, Trace, assemble_trace

LOOP = NetAddress.ipv4("127.0.0.1", 80)
REMOTE = NetAddress.ipv4("93.184.216.34", 443)
LINKLOCAL = NetAddress.ipv4("169.254.7.7", 80)
MCAST = NetAddress.ipv4("239.1.2.3", 5000)


def meta(app="demo"):
    return TraceMeta(
        app=app,
        cmd=app,
        os="linux",
        tracer_version="1.0",
        started_at="2024-01-01T00:00:00Z",
        salt_fp="00c0ffee",
        opt_out=False,
    )


class Stream:
    """Tiny builder for one process event stream."""

    def __init__(self):
        self.events = []
        self.ts = 0

    def add(self, fn, args, ret=0, err=0, tid=1):
        self.ts += 10
        self.events.append(TraceEvent(self.ts, tid, fn, args, ret, err))
        return self

    def sock(self, fd, sock_type="stream", domain="inet", flags=()):
        return self.add(F.SOCKET, SocketArgs(domain, sock_type, 0, tuple(flags)), ret=fd)


def one_trace(*streams, app="demo", tag="t0"):
    return assemble_trace(meta(app), [(100 + i, s.events) for i, s in enumerate(streams)], trace_tag=tag)


def corpus_of(*streams, app="demo"):
    return Corpus(traces=[one_trace(*streams, app=app)])


# -- datagram classification --------------------------------------------------


def _dgram_lc(build):
    s = Stream().sock(3, sock_type="dgram")
    build(s)
    c = corpus_of(s)
    return next(iter(c.all_lifecycles()))[1]


def test_udp_payload_wins_over_everything():
    lc = _dgram_lc(
        lambda s: s.add(F.CONNECT, AddrArgs(3, REMOTE))
        .add(F.IOCTL, IoctlArgs(3, "SIOCGIFADDR"))
        .add(F.SENDTO, IoArgs(3, 10, (), None, REMOTE), ret=10)
    )
    assert classify_udp(lc) == "data"


def test_udp_connect_beats_ioctl():
    lc = _dgram_lc(
        lambda s: s.add(F.IOCTL, IoctlArgs(3, "SIOCGIFADDR")).add(F.CONNECT, AddrArgs(3, REMOTE))
    )
    assert classify_udp(lc) == "connect_no_data"


def test_udp_ioctl_only_is_netinfo():
    lc = _dgram_lc(lambda s: s.add(F.IOCTL, IoctlArgs(3, "SIOCGIFMTU")).add(F.CLOSE, FdArgs(3)))
    assert classify_udp(lc) == "netinfo_ioctl"


def test_udp_idle_is_other():
    lc = _dgram_lc(lambda s: s.add(F.CLOSE, FdArgs(3)))
    assert classify_udp(lc) == "other"


def test_udp_rejects_stream_socket():
    s = Stream().sock(3)
    lc = next(iter(corpus_of(s).all_lifecycles()))[1]
    with pytest.raises(WrongSocketTypeError):
        classify_udp(lc)


# -- stream classification ----------------------------------------------------


def _stream_lc(build):
    s = Stream().sock(3)
    build(s)
    return next(iter(corpus_of(s).all_lifecycles()))[1]


def test_tcp_remote_data_needs_payload_after_connect():
    lc = _stream_lc(
        lambda s: s.add(F.CONNECT, AddrArgs(3, REMOTE)).add(F.SEND, IoArgs(3, 64), ret=64)
    )
    assert classify_tcp(lc) == "remote_data"


def test_tcp_payload_before_connect_does_not_count():
    lc = _stream_lc(
        lambda s: s.add(F.SEND, IoArgs(3, 64), ret=64).add(F.CONNECT, AddrArgs(3, REMOTE))
    )
    assert classify_tcp(lc) == "remote_no_data"


def test_tcp_failed_remote_connect_still_remote():
    lc = _stream_lc(lambda s: s.add(F.CONNECT, AddrArgs(3, REMOTE), ret=-1, err=111))
    assert classify_tcp(lc) == "remote_no_data"


def test_tcp_link_local_peer_counts_as_remote():
    lc = _stream_lc(
        lambda s: s.add(F.CONNECT, AddrArgs(3, LINKLOCAL)).add(F.RECV, IoArgs(3, 32), ret=4)
    )
    assert classify_tcp(lc) == "remote_data"


def test_tcp_loopback_connect_is_local():
    lc = _stream_lc(
        lambda s: s.add(F.CONNECT, AddrArgs(3, LOOP)).add(F.SEND, IoArgs(3, 8), ret=8)
    )
    assert classify_tcp(lc) == "local_other"


def test_tcp_rcvtimeo_only():
    lc = _stream_lc(
        lambda s: s.add(
            F.SETSOCKOPT, SockoptArgs(3, "SOL_SOCKET", "SO_RCVTIMEO", {"sec": 1, "usec": 0})
        ).add(F.CLOSE, FdArgs(3))
    )
    assert classify_tcp(lc) == "local_rcvtimeo_only"


def test_tcp_immediate_close():
    lc = _stream_lc(lambda s: s.add(F.CLOSE, FdArgs(3)))
    assert classify_tcp(lc) == "local_immediate_close"


def test_tcp_bare_socket_is_local_other():
    lc = _stream_lc(lambda s: s)
    assert classify_tcp(lc) == "local_other"


def test_tcp_wireless_probe():
    lc = _stream_lc(lambda s: s.add(F.IOCTL, IoctlArgs(3, "SIOCGIWNAME")).add(F.CLOSE, FdArgs(3)))
    assert classify_tcp(lc) == "local_wireless_check"


def test_tcp_mixed_options_fall_through_to_wireless():
    lc = _stream_lc(
        lambda s: s.add(
            F.SETSOCKOPT, SockoptArgs(3, "SOL_SOCKET", "SO_RCVTIMEO", {"sec": 1, "usec": 0})
        ).add(F.IOCTL, IoctlArgs(3, "SIOCGIWNAME"))
    )
    assert classify_tcp(lc) == "local_wireless_check"


def test_tcp_rejects_dgram_socket():
    s = Stream().sock(3, sock_type="dgram")
    lc = next(iter(corpus_of(s).all_lifecycles()))[1]
    with pytest.raises(WrongSocketTypeError):
        classify_tcp(lc)


# -- corpus-level fractions ---------------------------------------------------


def test_socket_type_shares_cover_all_types():
    a = Stream().sock(3)
    b = Stream().sock(4, sock_type="dgram")
    c = Stream().sock(5, sock_type="raw")
    d = Stream().sock(6)
    shares = socket_type_shares(corpus_of(a, b, c, d))
    assert shares == {"stream": 0.5, "dgram": 0.25, "other": 0.25}
    assert socket_type_shares(Corpus()) == {}


def test_class_fraction_keys_are_fixed():
    s = Stream().sock(3, sock_type="dgram")
    s.add(F.SENDTO, IoArgs(3, 10, (), None, LOOP), ret=10)
    fr = udp_class_fractions(corpus_of(s))
    assert tuple(fr) == UDP_CLASSES
    assert fr["data"] == 1.0 and sum(fr.values()) == 1.0
    assert udp_class_fractions(corpus_of(Stream().sock(3))) == {}
    tf = tcp_class_fractions(corpus_of(s, Stream().sock(4)))
    assert tuple(tf) == TCP_CLASSES and tf["local_other"] == 1.0


def test_function_usage_counts_apps_and_calls():
    a = Stream().sock(3)
    a.add(F.SEND, IoArgs(3, 5), ret=5).add(F.SEND, IoArgs(3, 5), ret=5)
    b = Stream().sock(3)
    b.add(F.SEND, IoArgs(3, 5), ret=5)
    corpus = Corpus(traces=[one_trace(a, app="one"), one_trace(b, app="two", tag="t1")])
    usage = function_usage(corpus)
    assert usage["send"].app_count == 2 and usage["send"].call_count == 3
    assert usage["socket"].call_count == 2
    assert list(usage) == sorted(usage)


def test_function_usage_collapse_folds_twins():
    s = Stream().sock(3)
    s.add(F.SEND, IoArgs(3, 5), ret=5)
    s.add(F.SENDTO, IoArgs(3, 5), ret=5)  # same call seen through its twin
    corpus = corpus_of(s)
    raw = function_usage(corpus)
    assert raw["send"].call_count == 1 and raw["sendto"].call_count == 1
    folded = function_usage(corpus, collapse=True)
    assert folded["send"].call_count == 1
    assert "sendto" not in folded


def test_ioctl_breakdown_only_sees_datagram_sockets():
    d = Stream().sock(3, sock_type="dgram")
    d.add(F.IOCTL, IoctlArgs(3, "SIOCGIFADDR"))
    d.add(F.IOCTL, IoctlArgs(3, "SIOCGIFMTU"))  # not in the named set
    t = Stream().sock(4)
    t.add(F.IOCTL, IoctlArgs(4, "SIOCGIFADDR"))
    br = ioctl_breakdown(corpus_of(d, t))
    assert br["SIOCGIFADDR"] == 0.5 and br["other"] == 0.5
    assert set(br) == {
        "SIOCGIFADDR", "SIOCGIFNAME", "SIOCGIFFLAGS", "SIOCGIFNETMASK", "SIOCGIFBRDADDR", "other",
    }
    assert ioctl_breakdown(corpus_of(t)) == {}


def test_sockopt_usage_keys_and_direction_split():
    s = Stream().sock(3)
    s.add(F.SETSOCKOPT, SockoptArgs(3, "IPPROTO_TCP", "TCP_NODELAY", 1))
    s.add(F.GETSOCKOPT, SockoptArgs(3, "IPPROTO_TCP", "TCP_NODELAY", 1))
    s.add(F.GETSOCKOPT, SockoptArgs(3, "SOL_SOCKET", "SO_ERROR", 0))
    d = Stream().sock(4, sock_type="dgram")
    d.add(F.SETSOCKOPT, SockoptArgs(4, "SOL_SOCKET", "SO_BROADCAST", 1))
    usage = sockopt_usage(corpus_of(s, d))
    assert list(usage) == ["IPPROTO_TCP.TCP_NODELAY", "SOL_SOCKET.SO_ERROR"]
    nd = usage["IPPROTO_TCP.TCP_NODELAY"]
    assert (nd.call_count, nd.get_count, nd.set_count, nd.app_count) == (2, 1, 1, 1)


# -- buffer sizes and flags ---------------------------------------------------


def test_recv_cdf_basic_and_at():
    s = Stream().sock(3)
    for n in (10, 10, 20, 40):
        s.add(F.RECV, IoArgs(3, n), ret=n)
    cdf = recv_buffer_cdf(corpus_of(s), F.RECV)
    assert cdf.n == 4
    assert cdf.points == [(10, 0.5), (20, 0.75), (40, 1.0)]
    assert cdf.at(9) == 0.0 and cdf.at(10) == 0.5 and cdf.at(39) == 0.75 and cdf.at(99) == 1.0


def test_recv_cdf_ignores_dgram_and_checks_fn():
    d = Stream().sock(3, sock_type="dgram")
    d.add(F.RECV, IoArgs(3, 512), ret=10)
    assert recv_buffer_cdf(corpus_of(d), F.RECV) is None
    with pytest.raises(WrongFunctionError):
        recv_buffer_cdf(corpus_of(d), F.SEND)


def test_empirical_cdf_from_values_handles_duplicates():
    cdf = EmpiricalCdf.from_values([5, 5, 5])
    assert cdf.points == [(5, 1.0)] and cdf.n == 3


def test_flag_stats_fractions_and_other():
    s = Stream().sock(3)
    s.add(F.SEND, IoArgs(3, 1, ("MSG_NOSIGNAL",)), ret=1)
    s.add(F.SEND, IoArgs(3, 1, ("MSG_NOSIGNAL", "MSG_MORE")), ret=1)
    s.add(F.SENDTO, IoArgs(3, 1, ("MSG_CONFIRM", "MSG_FASTOPEN")), ret=1)  # one event, one "other"
    s.add(F.SEND, IoArgs(3, 1), ret=1)
    stats = flag_stats(corpus_of(s))
    send = stats["send"]
    assert send["MSG_NOSIGNAL"] == 0.5 and send["MSG_MORE"] == 0.25
    assert send["other"] == 0.25
    assert stats["recv"] == {}


def test_flag_stats_exclude_plain_read_write():
    s = Stream().sock(3)
    s.add(F.WRITE, IoArgs(3, 1), ret=1)
    s.add(F.READ, IoArgs(3, 1), ret=1)
    stats = flag_stats(corpus_of(s))
    assert stats == {"send": {}, "recv": {}}


def test_flag_stats_include_unattributed_calls():
    s = Stream()
    s.add(F.SEND, IoArgs(99, 1, ("MSG_DONTWAIT",)), ret=-1, err=9)
    stats = flag_stats(corpus_of(s))
    assert stats["send"]["MSG_DONTWAIT"] == 1.0


# -- uniformity distance ------------------------------------------------------


def test_ks_known_values():
    assert ks_uniform_distance([0.5]) == 0.5
    assert ks_uniform_distance([1.0]) == 1.0
    assert ks_uniform_distance([0.0]) == 1.0
    # evenly spread mid-bin points sit at the theoretical minimum
    n = 10
    xs = [(i + 0.5) / n for i in range(n)]
    assert ks_uniform_distance(xs) == pytest.approx(0.05)
    with pytest.raises(ValueError):
        ks_uniform_distance([])


def test_ks_is_order_insensitive():
    xs = [0.9, 0.1, 0.4]
    assert ks_uniform_distance(xs) == ks_uniform_distance(sorted(xs))


# -- tcp_info retrieval -------------------------------------------------------


def _tcpinfo_read(s, fd):
    return s.add(F.GETSOCKOPT, SockoptArgs(fd, "IPPROTO_TCP", "TCP_INFO", {"len": 104}))


def test_tcpinfo_fractions_and_normalization():
    a = Stream().sock(3)          # reads twice over its life
    _tcpinfo_read(a, 3)
    _tcpinfo_read(a, 3)
    a.add(F.CLOSE, FdArgs(3))
    b = Stream().sock(3)          # reads once
    _tcpinfo_read(b, 3)
    c = Stream().sock(3)          # never reads
    c.add(F.CLOSE, FdArgs(3))
    stats = tcpinfo_stats(corpus_of(a, b, c))
    assert stats.socket_fraction == pytest.approx(2 / 3)
    assert stats.once_fraction == pytest.approx(1 / 2)
    assert stats.per_socket_counts == {1: 1, 2: 1}
    # stream a: events at 10,20,30,40 -> reads at (20-10)/30, (30-10)/30
    assert stats.normalized_times == sorted([[1 / 3, 2 / 3], [1.0]])
    assert stats.ks_uniform == ks_uniform_distance([1 / 3, 2 / 3, 1.0])


def test_tcpinfo_zero_span_maps_to_zero():
    sock_ev = TraceEvent(50, 1, F.SOCKET, SocketArgs("inet", "stream"), 3)
    read_ev = TraceEvent(50, 1, F.GETSOCKOPT, SockoptArgs(3, "IPPROTO_TCP", "TCP_INFO", {"len": 104}), 0)
    tr = assemble_trace(meta(), [(100, [sock_ev, read_ev])], trace_tag="t0")
    stats = tcpinfo_stats(Corpus(traces=[tr]))
    assert stats.normalized_times == [[0.0]]
    assert stats.ks_uniform == 1.0


def test_tcpinfo_empty_corpus():
    stats = tcpinfo_stats(Corpus())
    assert stats.socket_fraction == 0.0 and stats.once_fraction == 0.0
    assert stats.ks_uniform is None and stats.normalized_times == []


# -- blocking-mode transitions ------------------------------------------------


def test_mode_first_event_wins():
    s = Stream().sock(3, flags=("SOCK_NONBLOCK",))
    s.add(F.FCNTL, FcntlArgs(3, "F_SETFL", ("O_NONBLOCK",)), ret=0)
    m = mode_transition_stats(corpus_of(s))
    assert m["methods"]["creation_flag"]["sockets"] == 1
    assert m["methods"]["fcntl"]["sockets"] == 0


def test_mode_fcntl_and_ioctl_paths():
    f = Stream().sock(3)
    f.add(F.FCNTL, FcntlArgs(3, "F_SETFL", ("O_NONBLOCK", "O_RDWR")), ret=0)
    i = Stream().sock(3)
    i.add(F.IOCTL, IoctlArgs(3, "FIONBIO"))
    blocking = Stream().sock(3)
    blocking.add(F.FCNTL, FcntlArgs(3, "F_GETFL", None), ret=2)
    m = mode_transition_stats(corpus_of(f, i, blocking))
    by = {k: v["sockets"] for k, v in m["methods"].items()}
    assert by == {"creation_flag": 0, "fcntl": 1, "ioctl": 1, "blocking_throughout": 1}
    assert m["status_flags_seen"] == ["O_NONBLOCK", "O_RDWR"]


def test_mode_accept4_nonblock_counts_as_creation():
    s = Stream().sock(3)
    s.add(F.LISTEN, FdArgs(3, backlog=8))
    s.add(F.ACCEPT4, AddrArgs(3, LOOP, ("SOCK_NONBLOCK",)), ret=7)
    m = mode_transition_stats(corpus_of(s))
    assert m["methods"]["creation_flag"]["sockets"] == 1
    # the listener itself stayed blocking
    assert m["methods"]["blocking_throughout"]["sockets"] == 1


def test_mode_clearing_setfl_is_not_a_transition():
    s = Stream().sock(3)
    s.add(F.FCNTL, FcntlArgs(3, "F_SETFL", ()), ret=0)
    m = mode_transition_stats(corpus_of(s))
    assert m["methods"]["blocking_throughout"]["sockets"] == 1
    assert m["status_flags_seen"] == []


# -- accept origins -----------------------------------------------------------


def test_accept_origins_classify_peers():
    s = Stream().sock(3)
    s.add(F.LISTEN, FdArgs(3, backlog=8))
    s.add(F.ACCEPT, AddrArgs(3, LOOP), ret=7)
    s.add(F.ACCEPT, AddrArgs(3, REMOTE), ret=8)
    s.add(F.ACCEPT, AddrArgs(3, LINKLOCAL), ret=9)
    s.add(F.ACCEPT, AddrArgs(3, None), ret=10)   # accepted, peer unknown
    s.add(F.ACCEPT, AddrArgs(3, LOOP), ret=-1, err=11)  # failed: ignored
    out = accept_origin_stats(corpus_of(s))
    assert out["listen_apps"] == 1 and out["accept_apps"] == 1
    assert out["origins"] == {"loopback": 1, "link_local": 1, "remote": 1}
    assert out["origin_fractions"]["loopback"] == pytest.approx(1 / 3)


def test_accept_origins_empty():
    out = accept_origin_stats(corpus_of(Stream().sock(3)))
    assert out["listen_apps"] == 0 and out["origin_fractions"] == {}


# -- multicast ----------------------------------------------------------------


def test_multicast_senders_and_joiners():
    snd = Stream().sock(3, sock_type="dgram")
    snd.add(F.SENDTO, IoArgs(3, 10, (), None, MCAST), ret=10)
    joi = Stream().sock(3, sock_type="dgram")
    joi.add(F.SETSOCKOPT, SockoptArgs(3, "IPPROTO_IP", "IP_ADD_MEMBERSHIP", {"len": 8}))
    plain = Stream().sock(3, sock_type="dgram")
    plain.add(F.SENDTO, IoArgs(3, 10, (), None, REMOTE), ret=10)
    corpus = Corpus(
        traces=[
            one_trace(snd, app="sender"),
            one_trace(joi, app="joiner", tag="t1"),
            one_trace(plain, app="plain", tag="t2"),
        ]
    )
    out = multicast_stats(corpus)
    assert out == {"sender_apps": 1, "joiner_apps": 1}


def test_mapped_v6_multicast_does_not_trip_sender():
    # ::ffff:224.0.0.1 is NOT multicast: the mapped prefix places it in
    # ipv6 space, where only ff00::/8 qualifies.
    s = Stream().sock(3, sock_type="dgram", domain="inet6")
    s.add(F.SENDTO, IoArgs(3, 4, (), None, NetAddress.ipv6("::ffff:224.0.0.1", 1)), ret=4)
    assert multicast_stats(corpus_of(s)) == {"sender_apps": 0, "joiner_apps": 0}


# -- ioctl timing -------------------------------------------------------------


def test_ioctl_timing_mean_and_stddev():
    s = Stream().sock(3, sock_type="dgram")
    for ts in (1000, 3000, 7000):
        s.events.append(TraceEvent(ts, 1, F.IOCTL, IoctlArgs(3, "SIOCGIFADDR"), 0))
    single = Stream().sock(4, sock_type="dgram")
    single.add(F.IOCTL, IoctlArgs(4, "SIOCGIFADDR"))
    out = ioctl_timing(corpus_of(s, single), "SIOCGIFADDR")
    assert len(out) == 1
    rec = next(iter(out.values()))
    assert rec["n"] == 3
    assert rec["mean_ms"] == pytest.approx(3.0)  # gaps 2ms, 4ms
    assert rec["stddev_ms"] == pytest.approx(1.0)
    assert ioctl_timing(corpus_of(s), "FIONREAD") == {}


# -- the full report ----------------------------------------------------------


def _mini_corpus():
    a = Stream().sock(3)
    a.add(F.CONNECT, AddrArgs(3, REMOTE))
    a.add(F.SEND, IoArgs(3, 100, ("MSG_NOSIGNAL",)), ret=100)
    a.add(F.RECV, IoArgs(3, 4096), ret=512)
    _tcpinfo_read(a, 3)
    a.add(F.CLOSE, FdArgs(3))
    b = Stream().sock(5, sock_type="dgram")
    b.add(F.SENDTO, IoArgs(5, 32, (), None, MCAST), ret=32)
    return Corpus(traces=[one_trace(a, b)])


def test_compute_report_fills_every_section():
    report = compute_report(_mini_corpus())
    doc = report.to_dict()
    assert doc["socket_type_shares"] == {"stream": 0.5, "dgram": 0.5, "other": 0.0}
    assert doc["tcp_classes"]["remote_data"] == 1.0
    assert doc["udp_classes"]["data"] == 1.0
    assert doc["recv_cdfs"]["recv"] == {"n": 1, "points": [[4096, 1.0]]}
    assert doc["tcpinfo"]["per_socket_counts"] == {"1": 1}
    assert doc["multicast"] == {"sender_apps": 1, "joiner_apps": 0}
    assert doc["function_usage"]["send"] == {"apps": 1, "calls": 1}


def test_report_json_is_canonical():
    blob = report_json(compute_report(_mini_corpus()))
    assert blob.endswith(b"\n")
    doc = json.loads(blob)
    # sorted keys, 4-decimal rounding, no whitespace
    assert b": " not in blob and b", " not in blob
    assert list(doc) == sorted(doc)
    again = report_json(compute_report(_mini_corpus()))
    assert blob == again


def test_report_rounding_is_four_decimals():
    streams = [Stream().sock(3) for _ in range(3)]
    streams.append(Stream().sock(4, sock_type="dgram"))
    # shares: 0.75 / 0.25; now force a repeating fraction via 1/3
    streams.append(Stream().sock(5, sock_type="dgram"))
    streams.append(Stream().sock(6, sock_type="raw"))
    doc = json.loads(report_json(compute_report(corpus_of(*streams))))
    assert doc["socket_type_shares"]["stream"] == 0.5
    assert doc["socket_type_shares"]["dgram"] == round(2 / 6, 4)


def test_report_collapse_is_tag_independent():
    s = Stream().sock(3)
    s.add(F.SEND, IoArgs(3, 9), ret=9)
    s.add(F.SENDTO, IoArgs(3, 9), ret=9)
    c1 = Corpus(traces=[one_trace(s, tag="alpha")])
    c2 = Corpus(traces=[one_trace(s, tag="beta")])
    assert report_json(compute_report(c1, collapse=True)) == report_json(
        compute_report(c2, collapse=True)
    )
    doc = json.loads(report_json(compute_report(c1, collapse=True)))
    assert "sendto" not in doc["function_usage"]


def test_empty_report_shape():
    doc = json.loads(report_json(compute_report(Corpus())))
    assert doc["socket_type_shares"] == {}
    assert doc["tcpinfo"]["ks_uniform"] is None
    assert doc["recv_cdfs"] == {}
