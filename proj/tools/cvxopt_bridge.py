#!/usr/bin/env python3
"""Solve an SDPA sparse (.dat-s) problem with cvxopt's conelp and emit JSON.

Problem semantics (SDPA convention): minimize c.y subject to
sum_k y_k F_k - F0 being PSD per block; negative block sizes denote diagonal
blocks. The emitted JSON mirrors the caller's solver-result schema: status,
objectives, y, per-PSD-block dual matrices Z, and equality multipliers when
the file carries the `*EQ <p>` marker (final diagonal block of +/- pairs).
"""

import argparse
import json
import sys


def parse_sdpa(path):
    eq_count = 0
    tokens = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("*") or line.startswith('"'):
                if line.startswith("*EQ"):
                    eq_count = int(line[3:].split()[0])
                continue
            clean = []
            for ch in line:
                if ch.isdigit() or ch in "+-.eE" or ch.isspace():
                    clean.append(ch)
                else:
                    clean.append(" ")
            tokens.extend("".join(clean).split())
    pos = 0

    def take(n):
        nonlocal pos
        out = tokens[pos:pos + n]
        pos += n
        return out

    m = int(take(1)[0])
    nblocks = int(take(1)[0])
    sizes = [int(v) for v in take(nblocks)]
    c = [float(v) for v in take(m)]
    entries = []
    while pos + 5 <= len(tokens):
        matno, blk, i, j, v = take(5)
        entries.append((int(matno), int(blk), int(i), int(j), float(v)))
    return m, sizes, c, entries, eq_count


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("problem")
    ap.add_argument("answer")
    ap.add_argument("--tol", type=float, default=1e-8)
    ap.add_argument("--max-iter", type=int, default=200)
    args = ap.parse_args()

    try:
        from cvxopt import matrix, solvers, spmatrix
    except ImportError as exc:
        json.dump({"status": "error", "message": f"cvxopt unavailable: {exc}"}, open(args.answer, "w"))
        return 1

    m, sizes, c, entries, eq_count = parse_sdpa(args.problem)

    # Row layout: all diagonal blocks stack into one 'l' cone, then each PSD
    # block contributes a full (size*size) segment in an 's' cone.
    lin_blocks = [b for b, s in enumerate(sizes) if s < 0]
    psd_blocks = [b for b, s in enumerate(sizes) if s > 0]
    lin_offset = {}
    off = 0
    for b in lin_blocks:
        lin_offset[b] = off
        off += -sizes[b]
    n_lin = off
    psd_offset = {}
    for b in psd_blocks:
        psd_offset[b] = off
        off += sizes[b] * sizes[b]
    n_rows = off

    # s = h - G y must equal vec(sum y_k F_k - F0): h = vec(-F0), G = -vec(F_k).
    g_i, g_j, g_v = [], [], []
    h = [0.0] * n_rows
    for matno, blk, i, j, v in entries:
        b = blk - 1
        if sizes[b] < 0:
            rows = [lin_offset[b] + i - 1]
        else:
            base = psd_offset[b]
            k = sizes[b]
            rows = [base + (j - 1) * k + (i - 1)]
            if i != j:
                rows.append(base + (i - 1) * k + (j - 1))
        for r in rows:
            if matno == 0:
                h[r] += -v
            else:
                g_i.append(r)
                g_j.append(matno - 1)
                g_v.append(-v)

    G = spmatrix(g_v, g_i, g_j, (n_rows, m))
    hm = matrix(h, (n_rows, 1))
    cm = matrix(c, (m, 1))
    dims = {"l": n_lin, "q": [], "s": [sizes[b] for b in psd_blocks]}

    solvers.options["show_progress"] = False
    solvers.options["abstol"] = args.tol
    solvers.options["reltol"] = args.tol
    solvers.options["maxiters"] = args.max_iter
    try:
        sol = solvers.conelp(cm, G, hm, dims)
    except Exception as exc:  # solver-level breakdown
        json.dump({"status": "error", "message": str(exc)}, open(args.answer, "w"))
        return 1

    out = {
        "status": sol["status"],
        "iterations": sol.get("iterations", 0),
        "primal_objective": None if sol["primal objective"] is None else float(sol["primal objective"]),
        "dual_objective": None if sol["dual objective"] is None else float(sol["dual objective"]),
    }
    if sol["x"] is not None:
        out["y"] = [float(v) for v in sol["x"]]
    if sol["z"] is not None:
        z = sol["z"]
        zblocks = []
        for b in psd_blocks:
            base = psd_offset[b]
            k = sizes[b]
            zblocks.append([[float(z[base + col * k + row]) for col in range(k)] for row in range(k)])
        out["Z"] = zblocks
        if eq_count:
            # Equality pairs live at the tail of the linear cone rows.
            b = len(sizes) - 1
            base = lin_offset[b]
            duals = []
            for q in range(eq_count):
                duals.append(float(z[base + 2 * q]) - float(z[base + 2 * q + 1]))
            out["eq_duals"] = duals
    for key in ("primal_objective", "dual_objective"):
        if out[key] is None:
            out[key] = 0.0
    json.dump(out, open(args.answer, "w"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
