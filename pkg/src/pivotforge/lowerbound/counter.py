"""The binary counter parity game G_n."""
from __future__ import annotations

from ..ordering import BOTTOM
from ..parity import SinkParityGame, Strategy

SINK = "T"


def gen_counter_game(n: int, prefix: str = "", sink: str = SINK):
    """Return (G_n, sigma_0).

    Level i has player-0 vertex a_i (priority 2i+1) and player-1 vertex b_i
    (priority 2i+2); b_{n+1} (priority 2n+4) leads to the sink.  The edge
    a_i -> a_{i+1} has Bland number 2i-1 and a_i -> b_{i+1} has 2i, with
    a_{n+1} standing for the sink.  sigma_0 follows the a-chain.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    a = [None] + [f"{prefix}a{i}" for i in range(1, n + 1)] + [sink]
    b = [None] + [f"{prefix}b{i}" for i in range(1, n + 2)]
    order, edges, pr, bland = [], [], {}, {}
    for i in range(1, n + 1):
        order += [a[i], b[i]]
        pr[a[i]] = 2 * i + 1
        pr[b[i]] = 2 * i + 2
        edges += [(a[i], a[i + 1]), (a[i], b[i + 1]), (b[i], b[i + 1]), (b[i], a[i + 1])]
        bland[(a[i], a[i + 1])] = 2 * i - 1
        bland[(a[i], b[i + 1])] = 2 * i
    order += [b[n + 1], sink]
    pr[b[n + 1]] = 2 * n + 4
    pr[sink] = BOTTOM
    edges += [(b[n + 1], sink), (sink, sink)]
    g = SinkParityGame(a[1:n + 1], b[1:n + 2], sink, edges, pr, bland, order)
    s0 = Strategy({a[i]: a[i + 1] for i in range(1, n + 1)})
    return g, s0
