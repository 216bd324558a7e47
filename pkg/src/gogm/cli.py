"""Command-line front end.

Subcommands: ``run``, ``certify``, ``table``, ``worstcase``, ``export-sdpa``.
The exit status is 1 whenever a check (certificate, attainment, bound
dominance, trace consistency) fails and 2 on bad input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bounds as bd
from .methods import Family, MethodSpec, run, verify_trace
from .oracles import (make_huber_psi, make_quadratic_phi, make_random_least_squares,
                      make_random_log_sum_exp, make_random_psd_quadratic, random_start,
                      unit_start)
from .params import (make_fgm_t, make_ogm_a, make_ogm_og, make_ogm_theta,
                     random_valid_sequence)
from .pep import CertificateUndefined, certify, verify
from .sdpa import export_sdpa
from .tables import (DEFAULT_NS, TABLE_NAMES, gm_worstcase_gradient,
                     ogm_worstcase_gradient, render_csv, render_json, table_rows,
                     table1_rows)

RUN_METHODS = [f.value for f in Family if f != Family.FO_GENERIC]
ORACLES = ["psd_quadratic", "least_squares", "log_sum_exp", "quadratic_phi", "huber_psi"]
CERTS = ["gogm_cost", "gogm_prime_cost", "fgm_grad", "gogm_prime_grad"]
SEQS = ["ogm-theta", "fgm-t", "ogm-og", "ogm-a", "custom"]
ATTAIN_RTOL = 1e-9


def parse_ns(text: str) -> list:
    """``"5"``, ``"1,2,4"`` or ``"1..50"`` (inclusive)."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError(f"bad iteration counts {text!r}")
    return out


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _rows_to_text(rows: list, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if rows:
        w.writerow(list(rows[0]))
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r.values()])
    return buf.getvalue()


def _spec(method: str, N: int, m, a) -> MethodSpec:
    fam = Family(method)
    if fam == Family.OGM_M:
        return MethodSpec(fam, N, m=bd.default_m(N) if m is None else m)
    if fam == Family.OGM_A:
        return MethodSpec(fam, N, a=4.0 if a is None else a)
    return MethodSpec(fam, N)


def _oracle(args, d: int, N: int):
    if args.oracle == "psd_quadratic":
        return make_random_psd_quadratic(args.seed, d, args.L)
    if args.oracle == "least_squares":
        return make_random_least_squares(args.seed, 2 * d, d)
    if args.oracle == "log_sum_exp":
        return make_random_log_sum_exp(args.seed, d)
    if args.oracle == "quadratic_phi":
        return make_quadratic_phi(args.L, d)
    return make_huber_psi(N, args.R, args.L, d)


def cmd_run(args) -> int:
    N = args.N
    d = args.d or N + 2
    spec = _spec(args.method, N, args.m, args.a)
    oracle = _oracle(args, d, N)
    if args.oracle in ("quadratic_phi", "huber_psi"):
        x0 = unit_start(oracle, args.R)
    else:
        x0 = random_start(oracle, args.R, np.random.default_rng([args.seed, 1]))
    trace = run(spec, oracle, x0, form=args.form)
    if args.format == "json":
        _emit(trace.to_json(points=args.points) + "\n", args.out)
    else:
        _emit(trace.to_csv(), args.out)
    failures = verify_trace(trace, oracle)
    for c in bd.dominance(spec, trace):
        if c.slack < -1e-9 * c.scale:
            failures.append(f"{c.bound.formula} at i={c.index}: measured {c.measured!r} "
                            f"exceeds bound {c.bound.value!r}")
    for f in failures:
        print(f"FAIL {f}", file=sys.stderr)
    return 1 if failures else 0


def _sequence(kind: str, N: int, a: float, seed: int, doubled: bool):
    if kind == "ogm-theta":
        return make_ogm_theta(N)
    if kind == "fgm-t":
        return make_fgm_t(N)
    if kind == "ogm-og":
        return make_ogm_og(N)
    if kind == "ogm-a":
        return make_ogm_a(a, N)
    return random_valid_sequence(np.random.default_rng([seed, N]), N, doubled=doubled)


def _analytic_for(cert_name: str, seq_kind: str, seq, N: int):
    """The bounds-module value the certificate must reproduce, and its simplified form."""
    M = bd.Metric
    if cert_name == "gogm_cost":
        return bd.bound("GOGM", M.COST_FINAL_X, N, seq=seq)
    if cert_name == "gogm_prime_cost":
        return bd.bound("GOGMP", M.COST_PRIMARY_Y, N, seq=seq, i=N + 1)
    if cert_name == "fgm_grad":
        return bd.bound("FGM", M.GRAD_SMALLEST, N, seq=seq)
    method = {"ogm-og": "OGM_OG", "ogm-a": "OGM_A"}.get(seq_kind, "GOGMP")
    return bd.bound(method, M.GRAD_SMALLEST, N, seq=seq)


def cmd_certify(args) -> int:
    rows, bad = [], 0
    for N in args.N:
        row = {"N": N, "cert": args.cert, "seq": args.seq}
        try:
            seq = _sequence(args.seq, N, args.a, args.seed, doubled=args.cert == "gogm_cost")
            cert = certify(args.cert, seq)
        except (CertificateUndefined, ValueError) as e:
            row.update(bound=float("nan"), reciprocal=float("nan"), analytic=float("nan"),
                       simplified=float("nan"), min_eig=float("nan"), identity_gap=float("nan"),
                       ok=False)
            print(f"FAIL N={N}: {e}", file=sys.stderr)
            rows.append(row)
            bad += 1
            continue
        rep = verify(cert)
        grad = cert.kind.value == "D_DPRIME"
        value = cert.norm_bound() if grad else cert.bound_value()
        ana = _analytic_for(args.cert, args.seq, cert.seq if args.cert == "gogm_cost" else seq, N)
        agree = math.isclose(value, ana.value, rel_tol=1e-12)
        below = ana.simplified is None or value <= ana.simplified * (1 + 1e-12)
        ok = rep.ok and agree and below
        row.update(bound=value, reciprocal=1 / value, analytic=ana.value,
                   simplified=float("nan") if ana.simplified is None else ana.simplified,
                   min_eig=rep.min_eig,
                   identity_gap=float("nan") if rep.identity_gap is None else rep.identity_gap,
                   ok=ok)
        if not ok:
            bad += 1
            why = str(rep) if not rep.ok else ("differs from analytic bound" if not agree
                                                else "exceeds simplified bound")
            print(f"FAIL N={N}: {why}", file=sys.stderr)
        rows.append(row)
    _emit(_rows_to_text(rows, args.format), args.out)
    return 1 if bad else 0


def _table_id(text: str) -> int:
    if text in TABLE_NAMES:
        return TABLE_NAMES[text]
    if text in {"1", "2", "3", "4"}:
        return int(text)
    raise argparse.ArgumentTypeError(f"unknown table {text!r}")


def cmd_table(args) -> int:
    which = args.which
    text = render_json(which, args.Ns) + "\n" if args.format == "json" else render_csv(which, args.Ns)
    _emit(text, args.out)
    bad = 0
    if which == 1:
        for r in table1_rows():
            if not r["ok"]:
                print(f"FAIL {r['method']}: exact bound off its leading constant", file=sys.stderr)
                bad += 1
    elif which in (3, 4):
        for r in table_rows(which, args.Ns):
            pairs = [("GM", "GM_measured"),
                     ("OGM" if which == 3 else "OGM_x", "OGM_measured" if which == 3 else "OGM_x_measured")]
            for a_key, m_key in pairs:
                if not math.isclose(r[a_key], r[m_key], rel_tol=ATTAIN_RTOL):
                    print(f"FAIL N={r['N']}: {m_key} {r[m_key]!r} vs analytic {r[a_key]!r}",
                          file=sys.stderr)
                    bad += 1
    return 1 if bad else 0


def worstcase_rows(target: str, Ns, L: float = 1.0, R: float = 1.0, d=None) -> list:
    rows = []
    for N in Ns:
        dim = d or N + 2
        if target == "ogm-quadratic":
            tr = ogm_worstcase_gradient(N, L, R, dim)
            theta = make_ogm_theta(N).values
            expect = np.zeros_like(tr.x)
            expect[:, 0] = R * (-1.0) ** np.arange(N + 1) / theta
            traj = float(np.max(np.linalg.norm(tr.x - expect, axis=1) / (R / theta)))
            measured = float(tr.gnorm_x[-1])
            analytic = bd.bound("OGM", bd.Metric.GRAD_FINAL, N, L, R).value
        else:
            tr = gm_worstcase_gradient(N, L, R, dim)
            target_norm = bd.bound("GM", bd.Metric.LOWER_BOUND, N, L, R).value
            traj = float(np.max(np.abs(tr.gnorm_x - target_norm)) / target_norm)
            measured = float(tr.gnorm_x[-1])
            analytic = target_norm
        rel = abs(measured - analytic) / analytic
        rows.append({"N": N, "target": target, "measured_reciprocal": L * R / measured,
                     "analytic_reciprocal": L * R / analytic, "rel_err": rel,
                     "trajectory_err": traj, "ok": rel <= ATTAIN_RTOL and traj <= ATTAIN_RTOL})
    return rows


def cmd_worstcase(args) -> int:
    rows = worstcase_rows(args.target, args.N, args.L, args.R, args.d)
    _emit(_rows_to_text(rows, args.format), args.out)
    bad = [r for r in rows if not r["ok"]]
    for r in bad:
        print(f"FAIL N={r['N']}: attainment off by {max(r['rel_err'], r['trajectory_err']):.3e}",
              file=sys.stderr)
    return 1 if bad else 0


def cmd_export_sdpa(args) -> int:
    spec = _spec(args.method, args.N, args.m, args.a)
    path = export_sdpa(args.kind, spec.steps(), args.out)
    print(f"wrote {path} and {path}.json", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gogm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt=True):
        sp.add_argument("--L", type=float, default=1.0)
        sp.add_argument("--R", type=float, default=1.0)
        sp.add_argument("--d", type=int, default=None, help="dimension (default N+2)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None)
        if fmt:
            sp.add_argument("--format", choices=["csv", "json"], default="csv")

    sp = sub.add_parser("run", help="run one method and emit its trace")
    sp.add_argument("--method", choices=RUN_METHODS, required=True)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--a", type=float, default=None)
    sp.add_argument("--oracle", choices=ORACLES, default="psd_quadratic")
    sp.add_argument("--form", choices=["box", "fo"], default="box")
    sp.add_argument("--points", action="store_true", help="include iterates in JSON output")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("certify", help="build and verify closed-form certificates")
    sp.add_argument("--cert", choices=CERTS, required=True)
    sp.add_argument("--seq", choices=SEQS, required=True)
    sp.add_argument("--N", type=parse_ns, required=True, help="5, 1,2,4 or 1..50")
    sp.add_argument("--a", type=float, default=4.0)
    common(sp)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("table", help="emit a comparison table")
    sp.add_argument("which", type=_table_id, help="1-4 or asymptotic, cost, min-grad, final-grad")
    sp.add_argument("--Ns", type=parse_ns, default=list(DEFAULT_NS))
    common(sp)
    sp.set_defaults(func=cmd_table)

    sp = sub.add_parser("worstcase", help="replay an exact worst-case trajectory")
    sp.add_argument("--target", choices=["ogm-quadratic", "gm-huber"], required=True)
    sp.add_argument("--N", type=parse_ns, required=True)
    common(sp)
    sp.set_defaults(func=cmd_worstcase)

    sp = sub.add_parser("export-sdpa", help="write a certificate problem in SDPA sparse format")
    sp.add_argument("--kind", choices=["D", "D_PRIME", "D_DPRIME"], required=True)
    sp.add_argument("--method", choices=RUN_METHODS, required=True)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--a", type=float, default=None)
    common(sp, fmt=False)
    sp.set_defaults(func=cmd_export_sdpa)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "export-sdpa" and not args.out:
        parser.error("export-sdpa needs --out")
    try:
        return args.func(args)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
