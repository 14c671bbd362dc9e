"""Command-line interface.

Subcommands: compile (circuit -> Hamiltonian export), sequence (legal
configuration trace), spectrum (eigenvalues by method), verify (named
verification suites).

Exit codes: 0 success, 1 usage or parse error, 2 validation error,
3 suite failure.  All randomness flows from --seed; equal invocations
produce identical output.  HAMLINE_THREADS caps BLAS/OpenMP threads
(read before the numeric modules load).
"""

from __future__ import annotations

import argparse
import os
import sys

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_SUITE = 3


def _cap_threads():
    cap = os.environ.get("HAMLINE_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ.setdefault(var, cap)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hamline",
        description="8-state chain Hamiltonians from layered circuits: "
                    "compile, trace, diagonalize, verify.")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for all randomized numerics (default 0)")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", help="compile a circuit file into a "
                                       "Hamiltonian term export")
    c.add_argument("--circuit", required=True, help="circuit JSON file")
    c.add_argument("--out", required=True, help="output path for the terms")
    c.add_argument("--couplings", choices=["auto", "unit"], default="auto",
                   help="derived power-of-two couplings or all-ones")
    c.add_argument("--coo", help="also write a full-matrix coordinate "
                                 "export here (small chains only)")

    s = sub.add_parser("sequence", help="print the legal configuration "
                                        "sequence with rule annotations")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--R", type=int, required=True)
    s.add_argument("--out", help="also write the lines to this file")

    e = sub.add_parser("spectrum", help="smallest eigenvalues of the "
                                        "assembled Hamiltonian")
    e.add_argument("--circuit", required=True)
    e.add_argument("--method", choices=["dense", "lanczos", "subspace"],
                   default="subspace")
    e.add_argument("--set", dest="subspace", choices=["legal", "fringe"],
                   default="legal", help="restriction used by --method "
                                         "subspace")
    e.add_argument("--eigs", type=int, default=4)
    e.add_argument("--couplings", choices=["auto", "unit"], default="auto")
    e.add_argument("--maxiter", type=int, default=50)
    e.add_argument("--out", help="write the report to this file")

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("--suite", required=True,
                   choices=["census", "facts", "history", "soundness",
                            "appendix", "horizon", "all"])
    v.add_argument("--n", type=int, default=3)
    v.add_argument("--R", type=int, default=2)
    v.add_argument("--Lmax", type=int, default=64)
    v.add_argument("--max-len", type=int, default=12)
    v.add_argument("--full-space", action="store_true",
                   help="include the full-space Lanczos probes "
                        "(slow, needs ~3 GB)")
    v.add_argument("--json", help="write a machine-readable report here")
    v.add_argument("--inject-fault",
                   choices=["mutate-rule", "drop-pen-family"],
                   help="negative-control fault injection (testing only)")
    return p


def _log_config(args):
    items = sorted(vars(args).items())
    print("config: " + " ".join(f"{k}={v}" for k, v in items
                                if k != "command" and v is not None))


def cmd_compile(args) -> int:
    from . import chain, circuit, hamiltonian as hm
    try:
        text = open(args.circuit).read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        circ = circuit.parse_circuit(text)
    except circuit.CircuitFormatError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    couplings = hm.UNIT_COUPLINGS if args.couplings == "unit" else None
    spec = hm.build_hamiltonian(circ, couplings=couplings)
    with open(args.out, "w") as fh:
        fh.write(hm.export_terms(spec))
    if args.coo:
        from . import spectra
        try:
            text = spectra.export_coo(spec)
        except ValueError as exc:
            print(f"validation error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        with open(args.coo, "w") as fh:
            fh.write(text)
    counts = hm.census(spec)
    forbidden = len(chain.forbidden_families())
    print(f"n={circ.n} m={circ.m} R={circ.R} K={spec.K}")
    print("terms: " + " ".join(f"{fam}={counts.get(fam, 0)}"
                               for fam in ("in", "prop", "pen", "out")))
    print(f"pen families: {forbidden}")
    print(f"couplings: j_in={spec.couplings.j_in} "
          f"j_prop={spec.couplings.j_prop} j_pen={spec.couplings.j_pen}")
    print(f"wrote {args.out}")
    return EXIT_OK


def sequence_lines(n: int, R: int) -> list[str]:
    from . import chain
    seq, applied = chain.annotated_sequence(n, R)
    lines = []
    for c, inst in zip(seq, applied):
        rule = inst.rule if inst is not None else "-"
        lines.append(f"{c.to_string()}  {rule}")
    return lines


def cmd_sequence(args) -> int:
    if args.n < 2 or args.R < 1:
        print("validation error: need n >= 2 and R >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    lines = sequence_lines(args.n, args.R)
    for line in lines:
        print(line)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    import numpy as np
    from . import chain, circuit, hamiltonian as hm, spectra, verify
    try:
        circ = circuit.parse_circuit(open(args.circuit).read())
    except circuit.CircuitFormatError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    couplings = hm.UNIT_COUPLINGS if args.couplings == "unit" else None
    spec = hm.build_hamiltonian(circ, couplings=couplings)
    n, R = circ.n, circ.R
    if args.method == "dense":
        if 2 * n * R > 4:
            print("validation error: dense method limited to 4 sites",
                  file=sys.stderr)
            return EXIT_VALIDATION
        op = spectra.FullOperator.from_spec(spec).dense()
        res = spectra.min_eigs(op, k=args.eigs, seed=args.seed)
    elif args.method == "lanczos":
        op = spectra.FullOperator.from_spec(spec)
        res = spectra.min_eigs(op, k=1, seed=args.seed,
                               maxiter=args.maxiter)
    else:
        if args.subspace == "legal":
            configs = spectra.legal_basis(n, R)
        else:
            configs = verify.legal_fringe(n, R)
        mat, _ = spectra.restrict(spec, configs)
        res = spectra.min_eigs(mat, k=min(args.eigs, mat.shape[0] - 2),
                               seed=args.seed)
    lines = [f"method={args.method} K={spec.K} converged={res.converged}"]
    for lam, r in zip(res.values, res.residuals):
        lines.append(f"eigenvalue {lam:.12e}  residual {r:.3e}")
    out = "\n".join(lines)
    print(out)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out + "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    import numpy as np
    from . import chain, verify

    rules = chain.RULES
    transitions = chain.TRANSITION_TERMS
    drop_pen = None
    if args.inject_fault == "mutate-rule":
        rules = chain.mutated_rules("2a", (chain.DEAD, chain.GATE))
    elif args.inject_fault == "drop-pen-family":
        drop_pen = (chain.DEAD, chain.BLANK, "B")

    def run(name):
        try:
            if name == "census":
                return verify.census_suite(args.n, 1, args.R,
                                           drop_pen_family=drop_pen,
                                           transitions=transitions)
            if name == "facts":
                return verify.check_facts(args.n, args.R, rules=rules,
                                          transitions=transitions)
            if name == "history":
                return verify.check_history(verify.accepting_circuit(),
                                            np.array([1.0, 0.0]))
            if name == "soundness":
                return verify.soundness_probe(full_space=args.full_space,
                                              seed=args.seed)
            if name == "appendix":
                return verify.appendix_suite(args.Lmax)
            if name == "horizon":
                return verify.horizon_suite(args.max_len)
            raise ValueError(name)
        except Exception as exc:  # suites must fail loudly, not crash
            rep = verify.Report(name)
            rep.add(f"suite ran to completion", False, notes=repr(exc))
            return rep

    names = (["census", "facts", "history", "appendix", "horizon",
              "soundness"] if args.suite == "all" else [args.suite])
    reports = [run(name) for name in names]
    for rep in reports:
        print(rep.to_text())
    if args.json:
        with open(args.json, "w") as fh:
            fh.write("[" + ",\n".join(r.to_json() for r in reports) + "]\n")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_SUITE


def main(argv=None) -> int:
    _cap_threads()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    _log_config(args)
    handler = {"compile": cmd_compile, "sequence": cmd_sequence,
               "spectrum": cmd_spectrum, "verify": cmd_verify}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
