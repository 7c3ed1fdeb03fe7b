"""Command-line surface: compile | vol | centroid | estimate | bench | oracle | sample.

Every command is deterministic given --seed.  Exit codes: 0 success,
2 usage error, 3 numeric failure (degeneracy, rank deficiency,
non-convergence), 4 data rejection (malformed rows, schema mismatch,
refused basis class).
"""

import argparse
import json
import sys as _sys
import time

import numpy as np

from . import measurement
from .data import ingest_softmax_csv, peaked_rows
from .errors import (
    CentroidError,
    CorruptDocument,
    EmptyPolytope,
    RowNotOnSimplex,
    SchemaMismatch,
)
from .estimator import centroid_estimate
from .exp_poly import perturb_basis
from .ilt_engine import PERTURB_SEED, Engine
from .network import compile_network, load_network, save_network
from .oracles import l1_baseline, l2_baseline, mc_polytope, sample_uniform_simplex

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_DATA = 4

BENCH_UNDERFLOW_VOL = 1e-300


def _read_matrix(path):
    A = np.loadtxt(path, delimiter=",", ndmin=2)
    return A


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            c if isinstance(c, str) else format(c, ".17g") for c in row
        ))
    text = "\n".join(lines) + "\n"
    if path is None:
        _sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _parse_t(args, M):
    if args.t is not None:
        t = np.array([float(v) for v in args.t.split(",")])
        T = t[None, :]
    elif args.t_file is not None:
        T = _read_matrix(args.t_file)
    else:
        raise SystemExit("one of --t or --t-file is required")
    if T.shape[1] != M:
        raise SystemExit(f"t has {T.shape[1]} columns, expected M={M}")
    return T


def _system_for(args):
    A = _read_matrix(args.matrix)
    sys_ = measurement.decompose(A)
    if sys_.basis_class == measurement.BASIS_MIXED and not args.allow_negative_basis:
        raise RowNotOnSimplex(
            -1,
            "row-space basis has negative entries (the analytic moment formula "
            "is conjectural there); pass --allow-negative-basis to proceed",
        )
    return sys_


def _apply_perturb(build, sys_, eps):
    """Run `build(sys)`; on degeneracy retry with the user-supplied epsilon."""
    try:
        return build(sys_), sys_
    except CentroidError:
        if eps is None:
            raise
    pert = perturb_basis(sys_, eps, seed=PERTURB_SEED)
    return build(pert), pert


def cmd_compile(args):
    sys_ = _system_for(args)
    net, _ = _apply_perturb(
        lambda s: compile_network(s, auto_perturb=False), sys_, args.perturb_eps)
    save_network(net, args.out)
    st = net.stats
    print(f"N={net.N} M={net.M} basis={net.basis_class} perturbed={net.perturbed}")
    print(f"nodes per layer: {list(st.nodes_per_layer)}")
    print(f"nodes={st.n_nodes} edges={st.n_edges} "
          f"dedup_ratio={st.dedup_ratio:.3f} path_bound={st.path_bound}")
    return EXIT_OK


def _analytic_eval(sys_, T, backend):
    """Volume and moment matrix for each row of T."""
    if backend == "network":
        net = compile_network(sys_)
        vols = np.empty(len(T))
        mus = np.empty((len(T), sys_.N))
        for i, t in enumerate(T):
            v, m = net.forward(t)
            vols[i], mus[i] = v, m
        return vols, mus, net.perturbed
    eng = Engine(sys_)
    vols = np.array([eng.volume(t) for t in T])
    mus = np.array([[eng.moment(t, k)[0] for k in range(1, sys_.N + 1)] for t in T])
    return vols, mus, eng.perturbed


def cmd_vol(args):
    sys_ = _system_for(args)
    T = _parse_t(args, sys_.M)
    vols, _, _ = _analytic_eval(sys_, T, args.backend)
    rows = []
    header = [f"t{j+1}" for j in range(sys_.M)] + ["volume"]
    if args.oracle:
        header += ["mc_volume", "mc_stderr", "z"]
    rng = np.random.default_rng(args.seed)
    for t, v in zip(T, vols):
        row = list(t) + [v]
        if args.oracle:
            mc = mc_polytope(sys_, t, args.samples, rng)
            z = (v - mc.volume_est) / max(mc.volume_stderr, 1e-300)
            row += [mc.volume_est, mc.volume_stderr, z]
        rows.append(row)
    _write_csv(args.out, header, rows)
    return EXIT_OK


def cmd_centroid(args):
    sys_ = _system_for(args)
    T = _parse_t(args, sys_.M)
    header = ([f"t{j+1}" for j in range(sys_.M)] + ["volume"]
              + [f"x{k+1}" for k in range(sys_.N)])
    if args.oracle:
        header += [f"mc_x{k+1}" for k in range(sys_.N)] + ["max_z"]
    rng = np.random.default_rng(args.seed)
    rows = []
    for t in T:
        res = centroid_estimate(sys_, t, backend=args.backend)
        row = list(t) + [res.volume] + list(res.x_hat)
        if args.oracle:
            mc = mc_polytope(sys_, t, args.samples, rng)
            z = np.max(np.abs(res.x_hat - mc.centroid_mean)
                       / np.maximum(mc.centroid_stderr, 1e-300))
            row += list(mc.centroid_mean) + [z]
        rows.append(row)
    _write_csv(args.out, header, rows)
    return EXIT_OK


def cmd_estimate(args):
    if args.source.endswith(".json"):
        net = load_network(args.source)
        sys_ = measurement.from_basis(net.V_s, perturbed=net.perturbed)
        backend, net_obj = "network", net
    else:
        A = _read_matrix(args.source)
        sys_ = measurement.decompose(A)
        backend, net_obj = args.backend, None
    if args.y_file is not None:
        Y = _read_matrix(args.y_file)
        T = np.array([measurement.equivalent_measurement(sys_, y) for y in Y])
    else:
        T = _parse_t(args, sys_.M)
    header = ([f"t{j+1}" for j in range(sys_.M)]
              + [f"x{k+1}" for k in range(sys_.N)]
              + ["log_volume", "empty", "underflow", "clamped", "perturbed"])
    rows = []
    for t in T:
        try:
            res = centroid_estimate(sys_, t, backend=backend, net=net_obj)
            rows.append(list(t) + list(res.x_hat)
                        + [res.log_volume, 0,
                           int(res.flags["underflow"]), int(res.flags["clamped"]),
                           int(res.flags["perturbed"])])
        except EmptyPolytope:
            rows.append(list(t) + [float("nan")] * sys_.N
                        + [float("-inf"), 1, 0, 0, 0])
    _write_csv(args.out, header, rows)
    return EXIT_OK


def _bench_source(args, rng, N):
    if args.source == "uniform":
        return sample_uniform_simplex(N, rng, size=args.ns)
    X = ingest_softmax_csv(args.source)
    if X.shape[1] != N:
        raise RowNotOnSimplex(-1, f"csv rows have N={X.shape[1]}, expected {N}")
    if len(X) < args.ns:
        raise RowNotOnSimplex(-1, f"csv has {len(X)} rows, need {args.ns}")
    return X[: args.ns]


def cmd_bench(args):
    m_list = [int(v) for v in args.m_list.split(",")]
    rng = np.random.default_rng(args.seed)
    N = args.n
    A_pool = rng.standard_normal((max(m_list), N))  # drawn once, fixed
    X = _bench_source(args, rng, N)
    rows = []
    n_underflow = 0
    for M in m_list:
        A = A_pool[:M]
        sys_ = measurement.decompose(A)
        Y = X @ A.T
        T = np.array([measurement.equivalent_measurement(sys_, y) for y in Y])

        t0 = time.perf_counter()
        if args.backend == "network":
            net = compile_network(sys_)
            vols = np.empty(len(T))
            mus = np.empty((len(T), N))
            for i in range(0, len(T), 100):
                v, m = net.forward_batch(T[i:i + 100])
                vols[i:i + 100], mus[i:i + 100] = v, m
        else:
            eng = Engine(sys_)
            vols = np.array([eng.volume(t) for t in T])
            mus = np.array([[eng.moment(t, k)[0] for k in range(1, N + 1)] for t in T])
        X_cen = np.empty_like(X)
        for i in range(len(T)):
            if vols[i] > BENCH_UNDERFLOW_VOL:
                X_cen[i] = mus[i] / vols[i]
            else:
                X_cen[i] = l1_baseline(A, Y[i])  # underflow fallback
                n_underflow += 1
        t_cen = time.perf_counter() - t0

        t0 = time.perf_counter()
        X_l1 = np.array([l1_baseline(A, y) for y in Y])
        t_l1 = time.perf_counter() - t0

        t0 = time.perf_counter()
        X_l2 = np.array([l2_baseline(A, y) for y in Y])
        t_l2 = time.perf_counter() - t0

        for name, Xe, rt in (("centroid", X_cen, t_cen),
                             ("l1", X_l1, t_l1), ("l2", X_l2, t_l2)):
            e = float(np.mean(np.sum((X - Xe) ** 2, axis=1)))
            rows.append([M, name, e, rt])
    _write_csv(args.out, ["M", "method", "eMSE", "runtime"], rows)
    if n_underflow:
        print(f"# underflow fallback rows: {n_underflow}", file=_sys.stderr)
    return EXIT_OK


def cmd_oracle(args):
    sys_ = _system_for(args)
    T = _parse_t(args, sys_.M)
    rng = np.random.default_rng(args.seed)
    header = ([f"t{j+1}" for j in range(sys_.M)]
              + ["mc_volume", "mc_vol_stderr"]
              + [f"mc_x{k+1}" for k in range(sys_.N)]
              + [f"mc_x{k+1}_stderr" for k in range(sys_.N)])
    rows = []
    for t in T:
        mc = mc_polytope(sys_, t, args.samples, rng)
        rows.append(list(t) + [mc.volume_est, mc.volume_stderr]
                    + list(mc.centroid_mean) + list(mc.centroid_stderr))
    _write_csv(args.out, header, rows)
    return EXIT_OK


def cmd_sample(args):
    rng = np.random.default_rng(args.seed)
    if args.mean_top is not None:
        rows, tau = peaked_rows(args.count, args.n + 1, args.mean_top, rng)
        header = [f"p{j+1}" for j in range(args.n + 1)]
        print(f"# calibrated temperature: {tau:.6f}", file=_sys.stderr)
    else:
        rows = sample_uniform_simplex(args.n, rng, size=args.count)
        header = [f"x{j+1}" for j in range(args.n)]
    _write_csv(args.out, header, rows)
    return EXIT_OK


def _add_common(p, matrix=True, t_opts=True):
    if matrix:
        p.add_argument("matrix", help="CSV file with the measurement matrix A")
    if t_opts:
        p.add_argument("--t", help="comma-separated measurement vector")
        p.add_argument("--t-file", help="CSV file, one t per row")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--backend", choices=("engine", "network"), default="engine")
    p.add_argument("--allow-negative-basis", action="store_true")
    p.add_argument("--out", default=None, help="output CSV path (default stdout)")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="centroid",
        description="Exact volumes, moments, and MMSE centroid estimates for "
                    "simplex slices defined by linear measurements.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a measurement matrix to a network JSON")
    p.add_argument("matrix")
    p.add_argument("--out", required=True)
    p.add_argument("--perturb-eps", type=float, default=None)
    p.add_argument("--allow-negative-basis", action="store_true")
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("vol", help="slice volume at one or more t")
    _add_common(p)
    p.add_argument("--oracle", action="store_true", help="add Monte Carlo cross-check")
    p.set_defaults(fn=cmd_vol)

    p = sub.add_parser("centroid", help="centroid estimate at one or more t")
    _add_common(p)
    p.add_argument("--oracle", action="store_true", help="add Monte Carlo cross-check")
    p.set_defaults(fn=cmd_centroid)

    p = sub.add_parser("estimate", help="batch estimation from a net JSON or matrix")
    p.add_argument("source", help="network .json or matrix .csv")
    p.add_argument("--y-file", help="CSV of raw measurements y, one per row")
    p.add_argument("--t", help="comma-separated measurement vector")
    p.add_argument("--t-file", help="CSV file, one t per row")
    p.add_argument("--backend", choices=("engine", "network"), default="engine")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("bench", help="eMSE benchmark: centroid vs l1 vs l2")
    p.add_argument("--n", type=int, default=9)
    p.add_argument("--ns", type=int, default=500)
    p.add_argument("--m-list", default="1,2,3,4,5")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--source", default="uniform", help="'uniform' or a softmax CSV path")
    p.add_argument("--backend", choices=("engine", "network"), default="network")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("oracle", help="Monte Carlo volume/centroid with stderr")
    _add_common(p)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("sample", help="draw uniform or peaked simplex vectors")
    p.add_argument("--n", type=int, required=True, help="dimension N")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--mean-top", type=float, default=None,
                   help="emit peaked probability rows over N+1 classes with "
                        "this calibrated mean top entry")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_sample)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (RowNotOnSimplex, SchemaMismatch, CorruptDocument) as ex:
        print(f"error: {ex}", file=_sys.stderr)
        return EXIT_DATA
    except CentroidError as ex:
        print(f"error: {type(ex).__name__}: {ex}", file=_sys.stderr)
        return EXIT_NUMERIC
    except OSError as ex:
        print(f"error: {ex}", file=_sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
