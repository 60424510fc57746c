"""Session configuration, framing, and the per-party protocol driver.

Topology: every party links to P1 and P2 (P1 accepts all peers, P2 accepts
parties 3..m and dials P1). Contributors split their padded set into two
XOR shares, one per endpoint; P1 garbles the intersection circuit, P2
evaluates it and broadcasts the declared output. All frames are
length-prefixed and every link starts with a HELLO carrying a hash of the
shared session parameters, the sender's party id, and its declared true
set size.

The cleartext set sizes (after padding, all sets have n elements) and the
session parameters are the only values a link reveals outside the garbled
execution; P1 and P2 are trusted not to collude with each other.
"""

from __future__ import annotations

import configparser
import hashlib
import secrets
import socket
import struct
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from . import ot
from .circuit import AND, CONST0, CONST1
from .garble import TABLE_ROW_BYTES, decode_outputs, encode_inputs, garble, \
    evaluate
from .primitives import LABEL_BYTES, labels_from_bytes, labels_to_bytes, \
    pack_bits, unpack_bits
from .psi_circuit import MAX_SIGMA, PsiOutputs, derive_layout, psi_circuit_for
from .waksman import route_waksman, sample_permutation, switch_count

MAX_PAYLOAD = (1 << 24) - 1
CHUNK_BYTES = 1 << 22
DEFAULT_TIMEOUT = 120.0
DIAL_RETRY_SECONDS = 10.0

FRAME_TYPES = {
    "hello": 1,
    "shares": 2,
    "gc_chunk": 3,
    "garbler_labels": 4,
    "base_ot": 5,
    "ext_ot": 6,
    "decode_table": 7,
    "result": 8,
    "abort": 9,
}
FRAME_NAMES = {v: k for k, v in FRAME_TYPES.items()}


class ProtocolError(Exception):
    """Peer violated the wire protocol."""


class SessionAbort(Exception):
    """The session was aborted, locally or by a peer."""


class ConfigError(ValueError):
    """Bad session configuration."""


class InputError(ValueError):
    """Bad input set or input file."""


def auto_sigma(n: int) -> int:
    """Default hashed-element width: 40 + 2*log2(n) - 1 bits."""
    if n < 2 or n & (n - 1):
        raise ConfigError("set size must be a power of two")
    width = 40 + 2 * (n.bit_length() - 1) - 1
    if width > MAX_SIGMA:
        raise ConfigError(
            f"auto element width {width} exceeds the {MAX_SIGMA}-bit wire "
            f"format; pass an explicit sigma")
    return width


@dataclass(frozen=True)
class SessionConfig:
    m: int
    n: int
    sigma: int
    mode: str
    party_id: int
    ot_backend: str = "extension"
    kappa: int = 128
    stat_sec: int = 80
    p1_addr: tuple = ("127.0.0.1", 7710)
    p2_addr: tuple = ("127.0.0.1", 7711)
    addrs: dict = field(default_factory=dict)   # party id -> (host, port)
    timeout: float = DEFAULT_TIMEOUT
    session_tag: str = ""

    def __post_init__(self):
        derive_layout(self.m, self.n, self.sigma, self.mode)
        if not 1 <= self.party_id <= self.m:
            raise ConfigError(f"party id must be in [1, {self.m}]")
        if self.ot_backend not in ot.BACKENDS:
            raise ConfigError(f"unknown OT backend {self.ot_backend!r}")
        if self.kappa != 128:
            raise ConfigError("only kappa=128 is supported")

    @property
    def role(self) -> str:
        return {1: "garbler", 2: "evaluator"}.get(self.party_id, "contributor")

    def canonical_bytes(self) -> bytes:
        text = (f"m={self.m};n={self.n};sigma={self.sigma};mode={self.mode};"
                f"kappa={self.kappa};stat_sec={self.stat_sec};"
                f"ot={self.ot_backend};tag={self.session_tag}")
        return text.encode()

    def config_hash(self) -> bytes:
        return hashlib.sha256(self.canonical_bytes()).digest()

    def replace(self, **kw) -> "SessionConfig":
        fields = {k: getattr(self, k) for k in (
            "m", "n", "sigma", "mode", "party_id", "ot_backend", "kappa",
            "stat_sec", "p1_addr", "p2_addr", "addrs", "timeout",
            "session_tag")}
        fields.update(kw)
        return SessionConfig(**fields)


def _parse_addr(text: str) -> tuple:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"bad address {text!r}, expected host:port")
    return host, int(port)


def parse_config(path: str, party_id: int, mode: str | None = None,
                 sigma: int | None = None) -> SessionConfig:
    """Load a session config file; CLI overrides win over file values."""
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"bad config file: {exc}") from None
    if "session" not in cp:
        raise ConfigError("config file needs a [session] section")
    sec = cp["session"]
    try:
        m = sec.getint("m")
        n = sec.getint("n")
    except ValueError as exc:
        raise ConfigError(f"bad numeric field: {exc}") from None
    if m is None or n is None:
        raise ConfigError("config must set m and n")
    if sigma is None:
        raw = sec.get("sigma", "auto").strip()
        sigma = auto_sigma(n) if raw == "auto" else int(raw)
    if mode is None:
        mode = sec.get("mode", "intersection").strip()
    addrs = {}
    if "addresses" in cp:
        for key, val in cp["addresses"].items():
            addrs[int(key)] = _parse_addr(val)
    p1 = _parse_addr(sec.get("p1", "127.0.0.1:7710"))
    p2 = _parse_addr(sec.get("p2", "127.0.0.1:7711"))
    try:
        return SessionConfig(
            m=m, n=n, sigma=sigma, mode=mode, party_id=party_id,
            ot_backend=sec.get("ot", "extension").strip(),
            stat_sec=sec.getint("stat_sec", 80),
            p1_addr=p1, p2_addr=p2, addrs=addrs,
            timeout=sec.getfloat("timeout", DEFAULT_TIMEOUT),
            session_tag=sec.get("tag", "").strip())
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


class Channel:
    """Framed, byte-counting wrapper around a connected socket."""

    def __init__(self, sock: socket.socket, timeout: float = DEFAULT_TIMEOUT):
        self.sock = sock
        self.sock.settimeout(timeout)
        self.sent_bytes = 0
        self.recv_bytes = 0
        self.sent_by_type: dict = {}
        self.peer_id: int | None = None
        self.peer_size: int | None = None

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass

    def send(self, ftype: str, payload: bytes = b"") -> None:
        tid = FRAME_TYPES[ftype]
        if len(payload) > MAX_PAYLOAD:
            raise ProtocolError(f"{ftype} payload exceeds frame limit")
        frame = struct.pack(">IB", len(payload), tid) + payload
        try:
            self.sock.sendall(frame)
        except OSError as exc:
            raise SessionAbort(f"link failed while sending {ftype}: {exc}") from None
        self.sent_bytes += len(frame)
        self.sent_by_type[ftype] = self.sent_by_type.get(ftype, 0) + len(payload)

    def _recv_exact(self, k: int) -> bytes:
        buf = bytearray()
        while len(buf) < k:
            try:
                part = self.sock.recv(min(k - len(buf), 1 << 20))
            except socket.timeout:
                raise SessionAbort("timed out waiting for peer") from None
            except OSError as exc:
                raise SessionAbort(f"link failed: {exc}") from None
            if not part:
                raise SessionAbort("peer closed the connection")
            buf += part
        self.recv_bytes += k
        return bytes(buf)

    def recv(self) -> tuple:
        size, tid = struct.unpack(">IB", self._recv_exact(5))
        if size > MAX_PAYLOAD:
            raise ProtocolError("oversized frame")
        name = FRAME_NAMES.get(tid)
        if name is None:
            raise ProtocolError(f"unknown frame type {tid}")
        payload = self._recv_exact(size) if size else b""
        if name == "abort":
            raise SessionAbort(f"peer aborted: {payload.decode(errors='replace')}")
        return name, payload

    def expect(self, ftype: str) -> bytes:
        name, payload = self.recv()
        if name != ftype:
            raise ProtocolError(f"expected {ftype} frame, got {name}")
        return payload

    def send_big(self, ftype: str, data: bytes) -> None:
        """Send a payload of any size as one or more frames."""
        if not data:
            self.send(ftype, b"")
            return
        view = memoryview(data)
        for off in range(0, len(data), CHUNK_BYTES):
            self.send(ftype, bytes(view[off:off + CHUNK_BYTES]))

    def recv_big(self, ftype: str, nbytes: int) -> bytes:
        """Receive exactly nbytes split across frames of the given type."""
        if nbytes == 0:
            if self.expect(ftype):
                raise ProtocolError(f"expected empty {ftype} frame")
            return b""
        buf = bytearray()
        while len(buf) < nbytes:
            part = self.expect(ftype)
            if not part or len(buf) + len(part) > nbytes:
                raise ProtocolError(f"bad {ftype} chunking")
            buf += part
        return bytes(buf)

    def abort(self, reason: str) -> None:
        try:
            self.send("abort", reason.encode()[:512])
        except Exception:
            pass


@dataclass
class PsiResult:
    mode: str
    intersection: tuple | None
    cardinality: int | None
    party_id: int
    declared_sizes: dict = field(default_factory=dict)
    net_sent: dict = field(default_factory=dict)
    net_recv: dict = field(default_factory=dict)
    sent_by_type: dict = field(default_factory=dict)
    elapsed: float = 0.0


def elements_to_bits(elements, n: int, sigma: int) -> np.ndarray:
    arr = np.asarray(elements, dtype=np.uint64)
    if arr.shape != (n,):
        raise InputError(f"expected exactly {n} elements")
    shifts = np.arange(sigma, dtype=np.uint64)
    return ((arr[:, None] >> shifts) & np.uint64(1)).astype(np.uint8).reshape(-1)


def bits_to_elements(bits, n: int, sigma: int) -> list:
    vals = []
    for j in range(n):
        v = 0
        for k in range(sigma):
            v |= int(bits[j * sigma + k]) << k
        vals.append(v)
    return vals


def validate_padded_set(elements, n: int, sigma: int) -> list:
    """Protocol-level input contract: n distinct nonzero sigma-bit values."""
    if len(elements) != n:
        raise InputError(f"padded set must have exactly {n} elements")
    seen = set()
    for v in elements:
        if not isinstance(v, int) or not 0 < v < (1 << sigma):
            raise InputError("elements must be nonzero unsigned "
                             f"{sigma}-bit integers")
        if v in seen:
            raise InputError("elements must be distinct")
        seen.add(v)
    return sorted(elements)


def _hello_payload(config: SessionConfig, true_size: int) -> bytes:
    return config.config_hash() + struct.pack(">BI", config.party_id, true_size)


def _check_hello(config: SessionConfig, payload: bytes, ch: Channel) -> int:
    if len(payload) != 37:
        raise ProtocolError("bad hello length")
    if payload[:32] != config.config_hash():
        raise SessionAbort("peer session parameters do not match ours")
    pid, size = struct.unpack(">BI", payload[32:])
    if not 1 <= pid <= config.m or pid == config.party_id:
        raise ProtocolError(f"unexpected peer id {pid}")
    ch.peer_id = pid
    ch.peer_size = size
    return pid


def _dial(addr: tuple, timeout: float) -> socket.socket:
    deadline = time.monotonic() + DIAL_RETRY_SECONDS
    while True:
        try:
            return socket.create_connection(addr, timeout=timeout)
        except OSError:
            if time.monotonic() >= deadline:
                raise SessionAbort(f"cannot reach {addr[0]}:{addr[1]}") from None
            time.sleep(0.05)


def make_listener(addr: tuple, backlog: int = 8) -> socket.socket:
    srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    srv.bind(addr)
    srv.listen(backlog)
    return srv


def _connect_mesh(config: SessionConfig, true_size: int,
                  listener: socket.socket | None) -> dict:
    """Establish links (peer id -> Channel) and exchange HELLOs."""
    me = config.party_id
    links: dict = {}
    own_listener = False
    try:
        if me == 1 or me == 2:
            expect = config.m - 1 if me == 1 else config.m - 2
            if me == 2:
                ch = Channel(_dial(config.p1_addr, config.timeout), config.timeout)
                ch.send("hello", _hello_payload(config, true_size))
                if _check_hello(config, ch.expect("hello"), ch) != 1:
                    raise ProtocolError("expected party 1 on this link")
                links[1] = ch
            if expect and listener is None:
                addr = config.p1_addr if me == 1 else config.p2_addr
                listener = make_listener(addr)
                own_listener = True
            for _ in range(expect):
                listener.settimeout(config.timeout)
                try:
                    sock, _ = listener.accept()
                except socket.timeout:
                    raise SessionAbort("timed out waiting for peers") from None
                ch = Channel(sock, config.timeout)
                pid = _check_hello(config, ch.expect("hello"), ch)
                if pid in links:
                    raise ProtocolError(f"party {pid} connected twice")
                ch.send("hello", _hello_payload(config, true_size))
                links[pid] = ch
        else:
            for pid, addr in ((1, config.p1_addr), (2, config.p2_addr)):
                ch = Channel(_dial(addr, config.timeout), config.timeout)
                ch.send("hello", _hello_payload(config, true_size))
                if _check_hello(config, ch.expect("hello"), ch) != pid:
                    raise ProtocolError(f"expected party {pid} on this link")
                links[pid] = ch
        return links
    except BaseException:
        for ch in links.values():
            ch.close()
        raise
    finally:
        if own_listener and listener is not None:
            listener.close()


def _pack_result(result: PsiOutputs, mode: str) -> bytes:
    out = bytearray()
    if mode != "cardinality":
        inter = result.intersection or ()
        out += struct.pack(">BI", 1, len(inter))
        for v in inter:
            out += struct.pack(">Q", v)
    else:
        out += struct.pack(">BI", 0, 0)
    if mode != "intersection":
        out += struct.pack(">BI", 1, result.cardinality)
    else:
        out += struct.pack(">BI", 0, 0)
    return bytes(out)


def _unpack_result(payload: bytes) -> tuple:
    if len(payload) < 10:
        raise ProtocolError("short result frame")
    has_inter, k = struct.unpack(">BI", payload[:5])
    off = 5
    inter = None
    if has_inter:
        if len(payload) < off + 8 * k + 5:
            raise ProtocolError("short result frame")
        inter = tuple(struct.unpack(">Q", payload[off + 8 * i: off + 8 * i + 8])[0]
                      for i in range(k))
        off += 8 * k
    has_card, card = struct.unpack(">BI", payload[off:off + 5])
    if len(payload) != off + 5:
        raise ProtocolError("trailing bytes in result frame")
    return inter, (card if has_card else None)


def _make_shares(bits: np.ndarray, rng=secrets) -> tuple:
    r = unpack_bits(rng.token_bytes((len(bits) + 7) // 8), len(bits))
    return r, r ^ bits


def _garbler_bits(config: SessionConfig, layout, own_bits: np.ndarray,
                  share_bits: list, controls: np.ndarray | None) -> np.ndarray:
    parts = [own_bits] + share_bits
    if layout.g_controls.count:
        parts.append(controls)
    vec = np.concatenate(parts)
    if len(vec) != layout.garbler_bits:
        raise ProtocolError("internal: bit vector does not match layout")
    return vec


def run_party(config: SessionConfig, elements, true_size: int | None = None,
              listener: socket.socket | None = None) -> PsiResult:
    """Run one party of a session end to end; returns the public result."""
    elements = validate_padded_set(elements, config.n, config.sigma)
    if true_size is None:
        true_size = config.n
    t0 = time.monotonic()
    links = _connect_mesh(config, true_size, listener)
    try:
        result = _run_with_links(config, links, elements)
    except BaseException as exc:
        for ch in links.values():
            ch.abort(str(exc) or exc.__class__.__name__)
        raise
    finally:
        for ch in links.values():
            ch.close()
    result.elapsed = time.monotonic() - t0
    result.declared_sizes = {ch.peer_id: ch.peer_size for ch in links.values()}
    result.net_sent = {pid: ch.sent_bytes for pid, ch in links.items()}
    result.net_recv = {pid: ch.recv_bytes for pid, ch in links.items()}
    result.sent_by_type = {pid: dict(ch.sent_by_type) for pid, ch in links.items()}
    return result


def _run_with_links(config: SessionConfig, links: dict, elements) -> PsiResult:
    me = config.party_id
    layout = derive_layout(config.m, config.n, config.sigma, config.mode)
    bits = elements_to_bits(elements, config.n, config.sigma)

    if me >= 3:
        r, rq = _make_shares(bits)
        hdr = struct.pack(">B", me)
        links[1].send("shares", hdr + pack_bits(r))
        links[2].send("shares", hdr + pack_bits(rq))
        inter, card = _unpack_result(links[2].expect("result"))
        return PsiResult(config.mode, inter, card, me)

    share_bits = []
    nbytes = (config.n * config.sigma + 7) // 8
    for pid in range(3, config.m + 1):
        payload = links[pid].expect("shares")
        if len(payload) != 1 + nbytes or payload[0] != pid:
            raise ProtocolError(f"bad shares frame from party {pid}")
        share_bits.append(unpack_bits(payload[1:], config.n * config.sigma))

    controls = None
    if layout.g_controls.count:
        perm = sample_permutation(config.n)
        controls = np.asarray(route_waksman(perm), dtype=np.uint8)

    pc = psi_circuit_for(config.m, config.n, config.sigma, config.mode)
    circuit = pc.circuit
    my_bits = _garbler_bits(config, layout, bits, share_bits, controls)
    peer = links[2 if me == 1 else 1]

    if me == 1:
        gc = garble(circuit)
        g_active = encode_inputs(gc.input_zero[:layout.garbler_bits],
                                 gc.delta, my_bits)
        peer.send_big("garbler_labels",
                      labels_to_bytes(g_active) + labels_to_bytes(gc.const_active))
        ev_zero = gc.input_zero[layout.garbler_bits:]
        ot.ot_send(peer, config.ot_backend, ev_zero, ev_zero ^ gc.delta)
        peer.send_big("gc_chunk", gc.table_bytes)
        peer.send("decode_table", pack_bits(gc.decode_bits))
        inter, card = _unpack_result(peer.expect("result"))
        return PsiResult(config.mode, inter, card, me)

    # party 2: evaluator
    n_const = circuit.kinds.count(CONST0) + circuit.kinds.count(CONST1)
    and_count = circuit.kinds.count(AND)
    raw = peer.recv_big("garbler_labels",
                        (layout.garbler_bits + n_const) * LABEL_BYTES)
    g_active = labels_from_bytes(raw[:layout.garbler_bits * LABEL_BYTES])
    const_active = labels_from_bytes(raw[layout.garbler_bits * LABEL_BYTES:])
    e_active = ot.ot_recv(peer, config.ot_backend, my_bits)
    tables = peer.recv_big("gc_chunk", and_count * TABLE_ROW_BYTES)
    decode_payload = peer.expect("decode_table")
    decode_bits = unpack_bits(decode_payload, len(circuit.outputs))

    active = np.concatenate([g_active, e_active])
    out_labels = evaluate(circuit, tables, active, const_active)
    out_bits = decode_outputs(decode_bits, out_labels)
    parsed = pc.parse_outputs(out_bits)

    payload = _pack_result(parsed, config.mode)
    for ch in links.values():
        ch.send("result", payload)
    return PsiResult(config.mode, parsed.intersection, parsed.cardinality, me)
