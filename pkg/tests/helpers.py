"""Shared plumbing for the test suite: loopback channels, thread pairs,
random circuit generation, and a plaintext mirror of the protocol's
per-party input assembly.
"""

import socket
import threading

from mpsi.circuit import CircuitBuilder, eval_plaintext
from mpsi.protocol import Channel
from mpsi.psi_circuit import build_psi_circuit
from mpsi.waksman import route_waksman, sample_permutation


def bits_of(v, width):
    return [(v >> i) & 1 for i in range(width)]


def val_of(bits):
    return sum(int(b) << i for i, b in enumerate(bits))


def chan_pair(timeout=30.0):
    a, b = socket.socketpair()
    return Channel(a, timeout), Channel(b, timeout)


def run_pair(fa, fb, timeout=120.0):
    """Run two endpoints on threads; re-raise the first failure."""
    out = [None, None]
    errs = []

    def wrap(i, f):
        try:
            out[i] = f()
        except BaseException as exc:  # noqa: BLE001 - surfaced below
            errs.append(exc)

    threads = [threading.Thread(target=wrap, args=(i, f), daemon=True)
               for i, f in enumerate((fa, fb))]
    for t in threads:
        t.start()
    for t in threads:
        t.join(timeout)
    if errs:
        raise errs[0]
    if any(t.is_alive() for t in threads):
        raise TimeoutError("endpoint did not finish")
    return out


def random_circuit(rng, n_gates, n_garbler=4, n_evaluator=4):
    """Random well-formed circuit plus random input bit vectors."""
    cb = CircuitBuilder()
    wires = cb.garbler_inputs(n_garbler) + cb.evaluator_inputs(n_evaluator)
    for _ in range(n_gates):
        p = rng.random()
        if p < 0.40:
            w = cb.and_(rng.choice(wires), rng.choice(wires))
        elif p < 0.80:
            w = cb.xor(rng.choice(wires), rng.choice(wires))
        elif p < 0.95:
            w = cb.inv(rng.choice(wires))
        else:
            w = cb.const(rng.randrange(2))
        wires.append(w)
    pool = sorted(set(wires))
    cb.add_outputs(rng.sample(pool, min(len(pool), rng.randrange(1, 9))))
    g = [rng.randrange(2) for _ in range(n_garbler)]
    e = [rng.randrange(2) for _ in range(n_evaluator)]
    return cb.build(), g, e


def psi_input_bits(layout, sets, rng):
    """XOR-share contributor sets and order both input vectors exactly as
    the wire protocol does: own set, shares for parties 3..m, controls."""
    n, sigma = layout.n, layout.sigma

    def setbits(s):
        vals = sorted(s)
        assert len(vals) == n
        return [b for v in vals for b in bits_of(v, sigma)]

    g_parts = [setbits(sets[0])]
    e_parts = [setbits(sets[1])]
    for s in sets[2:]:
        plain = setbits(s)
        r = [rng.randrange(2) for _ in plain]
        g_parts.append(r)
        e_parts.append([a ^ b for a, b in zip(r, plain)])
    if layout.g_controls.count:
        g_parts.append(route_waksman(sample_permutation(n, rng)))
        e_parts.append(route_waksman(sample_permutation(n, rng)))
    return ([b for p in g_parts for b in p],
            [b for p in e_parts for b in p])


def plain_psi(m, n, sigma, mode, sets, rng):
    """Evaluate the PSI circuit in the clear on protocol-shaped inputs."""
    pc = build_psi_circuit(m, n, sigma, mode)
    gbits, ebits = psi_input_bits(pc.layout, sets, rng)
    return pc.parse_outputs(eval_plaintext(pc.circuit, gbits, ebits))
