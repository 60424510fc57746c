"""Application layer: token encoding, padding, sessions, anomaly checks,
and the gate/traffic bench.

Tokens are hashed to sigma-1 bits (the top bit is reserved), padding
elements set the top bit together with a party-id field so pads can never
collide with real elements or with another party's pads. The Jaccard
anomaly flow runs one pairwise cardinality session per peer, driven by the
window-holding party.
"""

from __future__ import annotations

import hashlib
import threading
import time
from dataclasses import dataclass
from fractions import Fraction

from .oracle import jaccard_oracle
from .protocol import (Channel, InputError, SessionConfig, _check_hello,
                       _dial, _hello_payload, _run_with_links, make_listener,
                       run_party)
from .psi_circuit import count_psi_gates, psi_circuit_for
from .circuit import stats as circuit_stats
from .garble import TABLE_ROW_BYTES


def read_token_file(path: str) -> list:
    """Newline-delimited tokens; blank lines and #-comments are skipped."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read input {path}: {exc}") from None
    tokens = []
    for line in lines:
        tok = line.strip()
        if tok and not tok.startswith("#"):
            tokens.append(tok)
    if len(tokens) != len(set(tokens)):
        raise InputError("input tokens must be distinct")
    return tokens


def encode_token(token: str, sigma: int) -> int:
    """Deterministic sigma-1 bit encoding of a token (top bit stays 0)."""
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    v = int.from_bytes(digest[:8], "big") & ((1 << (sigma - 1)) - 1)
    return v or 1  # zero encodes the dummy; nudge into the live range


def encode_tokens(tokens, sigma: int) -> dict:
    """Token -> element map; refuses post-hash collisions outright."""
    mapping = {}
    seen = {}
    for tok in tokens:
        v = encode_token(tok, sigma)
        if v in seen:
            raise InputError(
                f"hash collision between tokens {seen[v]!r} and {tok!r} at "
                f"width {sigma}; rerun with a larger sigma")
        seen[v] = tok
        mapping[tok] = v
    return mapping


def pad_elements(elements, n: int, sigma: int, party_id: int, m: int) -> list:
    """Top up a set to exactly n with per-party, top-bit-marked pads."""
    if len(elements) > n:
        raise InputError(f"set has {len(elements)} elements, config allows {n}")
    id_bits = m.bit_length()
    idx_bits = sigma - 1 - id_bits
    if idx_bits < 0 or (n - len(elements)) > (1 << idx_bits):
        raise InputError("sigma too small to pad this set; raise sigma or n")
    top = 1 << (sigma - 1)
    pads = [top | (party_id << idx_bits) | j for j in range(n - len(elements))]
    return sorted(elements) + pads


def prepare_input(tokens, config: SessionConfig) -> tuple:
    """Tokens -> (padded element list, element -> token map)."""
    mapping = encode_tokens(tokens, config.sigma)
    padded = pad_elements(sorted(mapping.values()), config.n, config.sigma,
                          config.party_id, config.m)
    return padded, {v: k for k, v in mapping.items()}


def run_psi(config: SessionConfig, tokens,
            listener=None) -> tuple:
    """Full run for one party; returns (PsiResult, intersection tokens)."""
    padded, rev = prepare_input(tokens, config)
    result = run_party(config, padded, true_size=len(tokens), listener=listener)
    toks = None
    if result.intersection is not None:
        missing = [v for v in result.intersection if v not in rev]
        if missing:
            raise InputError("result contains elements outside our own set; "
                             "inconsistent inputs across parties")
        toks = sorted(rev[v] for v in result.intersection)
    return result, toks


@dataclass(frozen=True)
class AnomalyVerdict:
    peer_id: int
    cardinality: int
    jaccard: Fraction
    threshold: Fraction
    anomalous: bool

    @property
    def label(self) -> str:
        return "anomalous" if self.anomalous else "regular"


def judge_similarity(card: int, size_a: int, size_b: int,
                     threshold: Fraction, peer_id: int) -> AnomalyVerdict:
    j = jaccard_oracle(size_a, size_b, card)
    return AnomalyVerdict(peer_id=peer_id, cardinality=card, jaccard=j,
                          threshold=threshold, anomalous=j > threshold)


def pairwise_config(base: SessionConfig, peer_id: int,
                    role_party: int) -> SessionConfig:
    """Two-party cardinality sub-session between party 1 and peer_id.

    The session tag pins the original pair so each sub-session gets a
    distinct HELLO hash and peers cannot be confused for one another.
    """
    return base.replace(m=2, mode="cardinality", party_id=role_party,
                        session_tag=f"{base.session_tag}|pair:1-{peer_id}")


def run_anomaly(config: SessionConfig, tokens, threshold: Fraction,
                listener=None) -> list:
    """Anomaly flow entry point for every party.

    Party 1 (the window holder) accepts one connection per peer and runs a
    pairwise cardinality session on it; peers dial party 1. Returns the
    verdict list for party 1, and the single own-pair verdict for peers.
    """
    if not tokens:
        raise InputError("anomaly scoring needs a nonempty token set")
    if config.mode != "cardinality":
        config = config.replace(mode="cardinality")
    mapping = encode_tokens(tokens, config.sigma)
    elements = sorted(mapping.values())

    if config.party_id == 1:
        own_listener = listener is None
        if own_listener:
            listener = make_listener(config.p1_addr, backlog=config.m)
        pending = {pid: pairwise_config(config, pid, 1)
                   for pid in range(2, config.m + 1)}
        padded_cache = pad_elements(elements, config.n, config.sigma, 1, 2)
        verdicts = []
        try:
            listener.settimeout(config.timeout)
            while pending:
                sock, _ = listener.accept()
                ch = Channel(sock, config.timeout)
                hello = ch.expect("hello")
                sub = None
                for pid, cand in pending.items():
                    if hello[:32] == cand.config_hash():
                        sub = pid
                        break
                if sub is None:
                    ch.abort("unexpected session hash")
                    ch.close()
                    continue
                cfg = pending.pop(sub)
                _check_hello(cfg, hello, ch)
                ch.send("hello", _hello_payload(cfg, len(tokens)))
                try:
                    res = _run_with_links(cfg, {2: ch}, padded_cache)
                finally:
                    ch.close()
                verdicts.append(judge_similarity(
                    res.cardinality, len(tokens), ch.peer_size,
                    threshold, sub))
        finally:
            if own_listener:
                listener.close()
        return sorted(verdicts, key=lambda v: v.peer_id)

    # peers: one pairwise session against the window holder
    cfg = pairwise_config(config, config.party_id, 2)
    padded = pad_elements(elements, cfg.n, cfg.sigma, 2, 2)
    ch = Channel(_dial(cfg.p1_addr, cfg.timeout), cfg.timeout)
    try:
        ch.send("hello", _hello_payload(cfg, len(tokens)))
        _check_hello(cfg, ch.expect("hello"), ch)
        res = _run_with_links(cfg, {1: ch}, padded)
        verdict = judge_similarity(res.cardinality, ch.peer_size,
                                   len(tokens), threshold, config.party_id)
    finally:
        ch.close()
    return [verdict]


@dataclass
class BenchRow:
    m: int
    n: int
    sigma: int
    mode: str
    and_count: int
    total_gates: int
    per_element: float
    table_mb: float
    and_depth: int | None = None
    p1_to_p2_mb: float | None = None
    p2_to_p1_mb: float | None = None
    seconds: float | None = None
    gc_table_bytes: int | None = None  # live runs: garbled-table payload sent

    def csv(self) -> str:
        def num(x, digits=3):
            return "" if x is None else f"{x:.{digits}f}"
        depth = "" if self.and_depth is None else str(self.and_depth)
        return (f"{self.m},{self.n},{self.sigma},{self.mode},{self.and_count},"
                f"{self.total_gates},{self.per_element:.1f},"
                f"{self.table_mb:.3f},{depth},{num(self.p1_to_p2_mb)},"
                f"{num(self.p2_to_p1_mb)},{num(self.seconds)}")

    CSV_HEADER = ("m,n,sigma,mode,and_gates,total_gates,and_per_element,"
                  "table_mb,and_depth,p1_to_p2_mb,p2_to_p1_mb,seconds")


def bench_counts(m: int, n: int, sigma: int, mode: str = "intersection",
                 with_depth: bool = False) -> BenchRow:
    """Size one circuit through the real composer (counting sink)."""
    depth = None
    if with_depth:
        st = circuit_stats(psi_circuit_for(m, n, sigma, mode).circuit)
        counts_and, total = st.and_count, st.total_gates
        depth = st.and_depth
    else:
        cc = count_psi_gates(m, n, sigma, mode)
        counts_and, total = cc.and_count, cc.total_gates
    return BenchRow(m=m, n=n, sigma=sigma, mode=mode, and_count=counts_and,
                    total_gates=total, per_element=counts_and / n,
                    table_mb=counts_and * TABLE_ROW_BYTES / 1e6,
                    and_depth=depth)


def random_sets(m: int, n: int, sigma: int, rng) -> list:
    """Random raw (pre-padding) inputs with a nonempty common slice."""
    universe = (1 << (sigma - 1)) - 1
    common = rng.sample(range(1, universe), max(1, rng.randrange(1, n + 1) // 2 + 1))
    sets = []
    for _ in range(m):
        k = rng.randrange(len(common), n + 1)
        extra = set()
        while len(extra) < k - len(common):
            v = rng.randrange(1, universe)
            if v not in common:
                extra.add(v)
        sets.append(sorted(set(common) | extra))
    return sets


class SessionTimeout(RuntimeError):
    pass


def run_local_session(m: int, n: int, sigma: int, mode: str, sets,
                      ot_backend: str = "dealer",
                      true_sizes=None) -> list:
    """Loopback session on threads; returns results indexed by party."""
    if len(sets) != m:
        raise ValueError("need one input set per party")
    l1 = make_listener(("127.0.0.1", 0))
    l2 = make_listener(("127.0.0.1", 0)) if m > 2 else None
    p1_addr = ("127.0.0.1", l1.getsockname()[1])
    p2_addr = ("127.0.0.1", l2.getsockname()[1]) if l2 else ("127.0.0.1", 1)
    results: list = [None] * m
    errors: list = []

    def work(pid: int):
        cfg = SessionConfig(m=m, n=n, sigma=sigma, mode=mode, party_id=pid,
                            ot_backend=ot_backend, p1_addr=p1_addr,
                            p2_addr=p2_addr)
        size = true_sizes[pid - 1] if true_sizes else None
        listener = l1 if pid == 1 else l2 if pid == 2 else None
        try:
            results[pid - 1] = run_party(cfg, sets[pid - 1], true_size=size,
                                         listener=listener)
        except BaseException as exc:
            errors.append((pid, exc))

    threads = [threading.Thread(target=work, args=(pid,), daemon=True)
               for pid in range(1, m + 1)]
    for t in threads:
        t.start()
    for t in threads:
        t.join(timeout=600)
    l1.close()
    if l2:
        l2.close()
    if errors:
        raise errors[0][1]
    if any(r is None for r in results):
        raise SessionTimeout("local session did not finish")
    return results


def bench_live(m: int, n: int, sigma: int, mode: str,
               ot_backend: str = "extension", seed: int = 1) -> BenchRow:
    """Count gates, then actually run a loopback session and measure it."""
    import random as _random
    row = bench_counts(m, n, sigma, mode)
    rng = _random.Random(seed)
    raw = random_sets(m, n, sigma, rng)
    sets = [pad_elements(s, n, sigma, pid + 1, m) for pid, s in enumerate(raw)]
    t0 = time.monotonic()
    results = run_local_session(m, n, sigma, mode, sets, ot_backend,
                                true_sizes=[len(s) for s in raw])
    row.seconds = time.monotonic() - t0
    row.p1_to_p2_mb = results[0].net_sent.get(2, 0) / 1e6
    row.p2_to_p1_mb = results[1].net_sent.get(1, 0) / 1e6
    row.gc_table_bytes = results[0].sent_by_type[2].get("gc_chunk", 0)
    return row
