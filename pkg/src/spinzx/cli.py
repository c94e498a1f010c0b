"""Command-line interface: eval, oracle, simplify, verify, demo, export-dot."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diagram import deserialize, serialize, to_dot
from .errors import (
    InvalidSpinArgs,
    NotClosed,
    ParseError,
    SizeExceeded,
    SpinZXError,
    ValidationError,
)
from .evaluate import EvalConfig, evaluate
from .oracles import (
    SpinTriple,
    clebsch_gordan,
    swap_perm,
    symmetriser_dense,
    wigner_3jm,
    wigner_D_oracle,
    couple,
    leaf,
    tree,
)
from .rewrite import simplify
from .spins import magnetic, parse_half_integer, spin
from .verify import run_suite
from . import apps

EXIT_PARSE = 1
EXIT_VALIDATION = 2
EXIT_SIZE = 3
EXIT_SPIN_ARGS = 4
EXIT_CHECK_FAILED = 5

CONFIG_FILE = "spinzx.toml"


class CliFailure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load_config_file() -> dict:
    path = Path(CONFIG_FILE)
    if not path.is_file():
        return {}
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib

    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise CliFailure(EXIT_PARSE, f"cannot read {CONFIG_FILE}: {exc}")
    allowed = {"tolerance", "max_entries", "seed", "output"}
    return {k: v for k, v in data.items() if k in allowed}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="spinzx",
        description="Mixed-dimensional ZX diagrams for SU(2) representation theory.",
    )
    p.add_argument("--version", action="version", version=f"spinzx {__version__}")
    p.add_argument("--tolerance", type=float, default=None,
                   help="numeric comparison tolerance (default 1e-9)")
    p.add_argument("--max-entries", type=int, default=None,
                   help="dense-tensor size cap (default 2^26)")
    p.add_argument("--seed", type=int, default=None,
                   help="random seed for randomized checks (default 42)")
    p.add_argument("--json", action="store_true", help="JSON output")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("eval", help="evaluate a diagram file")
    sp.add_argument("path")

    sp = sub.add_parser("oracle", help="closed-form coupling coefficients")
    osub = sp.add_subparsers(dest="oracle_command", required=True)
    o3 = osub.add_parser("3jm")
    o3.add_argument("args", nargs=6, metavar="VALUE",
                    help="j1 j2 j3 m1 m2 m3 as fractions or decimals")
    oc = osub.add_parser("cg")
    oc.add_argument("args", nargs=6, metavar="VALUE",
                    help="j1 m1 j2 m2 j3 m3 as fractions or decimals")
    ow = osub.add_parser("wignerd")
    ow.add_argument("j")
    ow.add_argument("--identity", action="store_true",
                    help="evaluate at the identity group element")
    ow.add_argument("--u", nargs=4, type=float, metavar=("a_re", "a_im", "b_re", "b_im"),
                    help="group element [[a, -conj(b)], [b, conj(a)]]")
    os_ = osub.add_parser("symmetriser")
    os_.add_argument("n", type=int)

    sp = sub.add_parser("simplify", help="rewrite a diagram file")
    sp.add_argument("path")
    sp.add_argument("--strategy", choices=("fuse", "spin", "full"), default="full")
    sp.add_argument("--trace", action="store_true")
    sp.add_argument("--max-steps", type=int, default=1000)
    sp.add_argument("-o", "--output", default=None, help="write result here")

    sp = sub.add_parser("verify", help="run a verification suite")
    sp.add_argument("suite", choices=("rules", "symmetriser", "threej", "lie", "binor", "all"))

    sp = sub.add_parser("demo", help="run an application demo")
    sp.add_argument("name", choices=("pqc", "aklt", "qml", "lqg"))
    sp.add_argument("--sites", type=int, default=4, help="aklt: chain length")
    sp.add_argument("--samples", type=int, default=200, help="qml: gradient samples")

    sp = sub.add_parser("export-dot", help="write a Graphviz rendering")
    sp.add_argument("path")
    sp.add_argument("-o", "--output", default=None)
    return p


def _half(text: str, what: str):
    try:
        return parse_half_integer(str(text))
    except SpinZXError as exc:
        raise CliFailure(EXIT_SPIN_ARGS, str(exc))


def _fmt_complex(z: complex) -> str:
    return f"{z.real:.12g}{z.imag:+.12g}j"


def _print_tensor(T: np.ndarray, out):
    if T.ndim == 0:
        out.append(("scalar", _fmt_complex(complex(T))))
        return
    out.append(("shape", "x".join(str(s) for s in T.shape)))
    flat = [
        (list(idx), [float(v.real), float(v.imag)])
        for idx, v in np.ndenumerate(T)
        if abs(v) > 0
    ]
    out.append(("entries", flat))


def _emit(args, command: str, payload: dict, lines):
    if args.json:
        doc = {"schema": 1, "command": command}
        doc.update(payload)
        print(json.dumps(doc, sort_keys=True))
    else:
        for line in lines:
            print(line)


def _read_diagram(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliFailure(EXIT_PARSE, f"cannot read {path}: {exc}")
    return deserialize(text)


def cmd_eval(args, cfg: EvalConfig) -> int:
    D = _read_diagram(args.path)
    T = evaluate(D, cfg)
    if T.ndim == 0:
        value = complex(T)
        _emit(args, "eval",
              {"path": args.path, "scalar": [value.real, value.imag]},
              [_fmt_complex(value)])
        return 0
    lines = [f"shape: {'x'.join(str(s) for s in T.shape)}"]
    entries = []
    for idx, v in np.ndenumerate(T):
        if abs(v) > 0:
            lines.append(f"  {idx}: {_fmt_complex(complex(v))}")
            entries.append({"index": list(idx), "value": [float(v.real), float(v.imag)]})
    _emit(args, "eval",
          {"path": args.path, "shape": list(T.shape), "entries": entries}, lines)
    return 0


def cmd_oracle(args, cfg: EvalConfig) -> int:
    sub = args.oracle_command
    if sub == "3jm":
        j1, j2, j3, m1, m2, m3 = (_half(a, "arg") for a in args.args)
        try:
            t = SpinTriple(spin(j1), spin(j2), spin(j3))
            ms = (magnetic(m1), magnetic(m2), magnetic(m3))
        except SpinZXError as exc:
            raise CliFailure(EXIT_SPIN_ARGS, str(exc))
        note = None
        if not t.admissible():
            value, note = 0.0, "Clebsch-Gordan conditions violated"
        else:
            value = wigner_3jm(t, *ms)
        lines = [f"{value:.12g}"] + ([f"note: {note}"] if note else [])
        _emit(args, "oracle/3jm", {"value": value, "note": note}, lines)
        return 0
    if sub == "cg":
        j1, m1, j2, m2, j3, m3 = (_half(a, "arg") for a in args.args)
        try:
            t = SpinTriple(spin(j1), spin(j2), spin(j3))
        except SpinZXError as exc:
            raise CliFailure(EXIT_SPIN_ARGS, str(exc))
        note = None
        if not t.admissible():
            value, note = 0.0, "Clebsch-Gordan conditions violated"
        else:
            value = clebsch_gordan(spin(j1), magnetic(m1), spin(j2), magnetic(m2),
                                   spin(j3), magnetic(m3))
        lines = [f"{value:.12g}"] + ([f"note: {note}"] if note else [])
        _emit(args, "oracle/cg", {"value": value, "note": note}, lines)
        return 0
    if sub == "wignerd":
        j = _half(args.j, "j")
        if args.identity or args.u is None:
            u = np.eye(2, dtype=complex)
        else:
            a = complex(args.u[0], args.u[1])
            b = complex(args.u[2], args.u[3])
            u = np.array([[a, -b.conjugate()], [b, a.conjugate()]])
        try:
            M = wigner_D_oracle(spin(j), u)
        except SpinZXError as exc:
            raise CliFailure(EXIT_SPIN_ARGS, str(exc))
        lines = [" ".join(_fmt_complex(complex(v)) for v in row) for row in M]
        _emit(args, "oracle/wignerd",
              {"matrix": [[[v.real, v.imag] for v in row] for row in M.tolist()]},
              lines)
        return 0
    if sub == "symmetriser":
        if args.n < 1:
            raise CliFailure(EXIT_SPIN_ARGS, "n must be >= 1")
        M = symmetriser_dense(args.n)
        lines = [" ".join(f"{v.real:.9g}" for v in row) for row in M]
        _emit(args, "oracle/symmetriser",
              {"n": args.n, "matrix": [[v.real for v in row] for row in M.tolist()]},
              lines)
        return 0
    raise CliFailure(EXIT_VALIDATION, f"unknown oracle {sub!r}")


def cmd_simplify(args, cfg: EvalConfig) -> int:
    D = _read_diagram(args.path)
    S, trace = simplify(D, strategy=args.strategy, max_steps=args.max_steps, cfg=cfg)
    total_wires = len(D.wires) + len(S.wires)
    verified = None
    if D.n_in + D.n_out <= 8 and total_wires:
        from .evaluate import tensors_close

        verified = bool(tensors_close(evaluate(D, cfg), evaluate(S, cfg), cfg))
        if not verified:
            raise CliFailure(
                EXIT_CHECK_FAILED,
                "simplified diagram no longer evaluates equal to the input",
            )
    status = "verified" if verified else "unverified-by-size"
    text = serialize(S)
    if args.output:
        Path(args.output).write_text(text)
    lines = [
        f"nodes: {len(D.nodes)} -> {len(S.nodes)}  steps: {len(trace)}  [{status}]",
    ]
    if args.trace:
        lines.extend(trace)
    if not args.output:
        lines.append(text)
    _emit(args, "simplify",
          {"path": args.path, "strategy": args.strategy,
           "nodes_before": len(D.nodes), "nodes_after": len(S.nodes),
           "steps": trace, "status": status,
           "output": args.output or None, "diagram": json.loads(text)},
          lines)
    return 0


def cmd_verify(args, cfg: EvalConfig, seed: int) -> int:
    checks = run_suite(args.suite, seed=seed, cfg=cfg) if args.suite in ("rules", "symmetriser", "lie") \
        else run_suite(args.suite, cfg=cfg)
    lines = [c.line() for c in checks]
    n_fail = sum(not c.ok for c in checks)
    lines.append(f"{len(checks) - n_fail}/{len(checks)} checks passed")
    _emit(args, "verify",
          {"suite": args.suite,
           "checks": [
               {"suite": c.suite, "name": c.name, "residual": c.residual,
                "tolerance": c.tolerance, "ok": c.ok}
               for c in checks
           ],
           "failed": n_fail},
          lines)
    return EXIT_CHECK_FAILED if n_fail else 0


def _demo_expect(name: str, value: complex, expected: complex, tol: float,
                 lines: list, label: str) -> bool:
    ok = abs(value - expected) <= tol
    lines.append(
        f"  {label}: {_fmt_complex(complex(value))} "
        f"(expected {_fmt_complex(complex(expected))}) {'ok' if ok else 'MISMATCH'}"
    )
    return ok


def cmd_demo(args, cfg: EvalConfig, seed: int) -> int:
    tol = cfg.tolerance
    lines = [f"demo {args.name}"]
    payload = {"name": args.name}
    ok = True
    if args.name == "pqc":
        h = leaf("1/2")
        bra = tree(couple(couple(h, h, 1), h, "1/2"), "1/2")
        ket = tree(couple(couple(h, h, 0), h, "1/2"), "1/2")
        perm = swap_perm(3, 1, 2)
        lines.append(
            "three-qubit coupling bases: first pair at spin 1 (bra) vs spin 0 (ket), "
            "total spin 1/2; observable swaps the last two qubits")
        report = apps.pqc_amplitude(bra, ket, perm, mode="both", cfg=cfg)
        ok &= _demo_expect(args.name, report.bra_norm_sq, 1.5, tol, lines, "bra norm^2")
        ok &= _demo_expect(args.name, report.ket_norm_sq, 2.0, tol, lines, "ket norm^2")
        ok &= _demo_expect(args.name, report.diagram_value, math.sqrt(3) / 2, tol,
                           lines, "closed-network amplitude")
        ok &= _demo_expect(args.name, report.oracle_value, math.sqrt(3) / 2, tol,
                           lines, "coupling-coefficient amplitude")
        payload.update(
            diagram_value=[report.diagram_value.real, report.diagram_value.imag],
            oracle_value=[report.oracle_value.real, report.oracle_value.imag],
            bra_norm_sq=report.bra_norm_sq, ket_norm_sq=report.ket_norm_sq)
    elif args.name == "aklt":
        acfg = apps.AKLTConfig(args.sites)
        residual = apps.aklt_ground_check(acfg, cfg)
        lines.append(f"chain of {args.sites} spin-1 sites with open edges")
        ok &= _demo_expect(args.name, residual, 0.0, tol, lines,
                           "max spin-2 projector residual over bonds")
        T = apps.aklt_state_tensor(acfg, cfg)
        O = apps.aklt_mps_oracle(acfg)
        idx = np.unravel_index(int(np.argmax(np.abs(O))), O.shape)
        ratio = complex(T[idx] / O[idx])
        prop = float(np.max(np.abs(T - ratio * O)))
        ok &= _demo_expect(args.name, prop, 0.0, tol, lines,
                           "distance to matrix-product oracle (after scale)")
        lines.append(f"  scale vs matrix-product oracle: {_fmt_complex(ratio)}")
        payload.update(sites=args.sites, residual=residual,
                       mps_scale=[ratio.real, ratio.imag], mps_distance=prop)
    elif args.name == "qml":
        spec2 = apps.AnsatzSpec(2, 1, (0.0,))
        e = apps.qml_expectation(spec2, [1, 0], cfg=cfg)
        lines.append("two qubits, one vertex gate at angle 0, observable = swap")
        ok &= _demo_expect(args.name, e, -1.0, tol, lines, "expectation on the singlet")
        spec4 = apps.AnsatzSpec(4, 2)
        rep = apps.qml_grad_variance(spec4, [0, 2, 1, 3], 2, args.samples, seed)
        lines.append(
            f"  gradient variance (4 qubits, 2 layers, angle 3 of 3, "
            f"{args.samples} samples, seed {seed}): "
            f"{rep.estimate:.6g} +/- {rep.std_error:.2g}")
        payload.update(singlet_expectation=e, grad_variance=rep.estimate,
                       grad_variance_std_error=rep.std_error,
                       samples=args.samples, seed=seed)
    elif args.name == "lqg":
        from .apps import lqg_vtilde2, lqg_vtilde2_oracle
        from .verify import _mat

        diff = float(np.max(np.abs(_mat(lqg_vtilde2(), cfg) - lqg_vtilde2_oracle())))
        ok &= _demo_expect(args.name, diff, 0.0, 1e-12, lines,
                           "volume-squared diagram vs dense Pauli sum")
        report = apps.lqg_min_volume_check(cfg)
        ok &= _demo_expect(args.name, report.residual, 0.0, tol, lines,
                           "eigen-residual of the minimal 4-valent state")
        ok &= _demo_expect(args.name, report.modulus, math.sqrt(3) / 4, tol,
                           lines, "|eigenvalue|")
        ok &= _demo_expect(args.name, report.hermitian_part_eigenvalue,
                           -math.sqrt(3) / 4, tol, lines,
                           "eigenvalue in the Hermitian convention")
        lines.append(
            f"  raw eigenvalue {_fmt_complex(report.eigenvalue)} carries the "
            "explicit factor i of the operator normalisation")
        area = apps.area_eigenvalue("1/2", dimensionless=True)
        ok &= _demo_expect(args.name, area, math.sqrt(3) / 2, tol, lines,
                           "area eigenvalue at j=1/2 (dimensionless)")
        payload.update(
            eigenvalue=[report.eigenvalue.real, report.eigenvalue.imag],
            residual=report.residual, modulus=report.modulus,
            hermitian_eigenvalue=report.hermitian_part_eigenvalue,
            area_half=area)
    payload["ok"] = ok
    lines.append("demo passed" if ok else "demo FAILED")
    _emit(args, "demo", payload, lines)
    return 0 if ok else EXIT_CHECK_FAILED


def cmd_export_dot(args, cfg: EvalConfig) -> int:
    D = _read_diagram(args.path)
    text = to_dot(D)
    if args.output:
        Path(args.output).write_text(text)
        _emit(args, "export-dot", {"path": args.path, "output": args.output},
              [f"wrote {args.output}"])
    else:
        _emit(args, "export-dot", {"path": args.path, "dot": text}, [text])
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    argv = list(argv)
    # Magnetic labels may be negative ("-1/2"); stop option parsing after the
    # oracle subcommand so they are read as positionals.  Known flags are
    # hoisted to the front first so they survive the "--" separator.
    if any(marker in argv for marker in ("3jm", "cg")) and "--" not in argv:
        valued = {"--tolerance", "--max-entries", "--seed"}
        hoisted, rest, i = [], [], 0
        while i < len(argv):
            tok = argv[i]
            if tok == "--json":
                hoisted.append(tok)
            elif tok in valued and i + 1 < len(argv):
                hoisted.extend(argv[i : i + 2])
                i += 1
            else:
                rest.append(tok)
            i += 1
        argv = hoisted + rest
        for marker in ("3jm", "cg"):
            if marker in argv:
                argv.insert(argv.index(marker) + 1, "--")
                break
    args = parser.parse_args(argv)
    try:
        file_cfg = _load_config_file()
        tolerance = args.tolerance if args.tolerance is not None else \
            float(file_cfg.get("tolerance", 1e-9))
        max_entries = args.max_entries if args.max_entries is not None else \
            int(file_cfg.get("max_entries", 2**26))
        seed = args.seed if args.seed is not None else int(file_cfg.get("seed", 42))
        if not args.json and file_cfg.get("output") == "json":
            args.json = True
        try:
            cfg = EvalConfig(tolerance=tolerance, max_total_entries=max_entries)
        except ValueError as exc:
            raise CliFailure(EXIT_VALIDATION, str(exc))
        if args.command == "eval":
            return cmd_eval(args, cfg)
        if args.command == "oracle":
            return cmd_oracle(args, cfg)
        if args.command == "simplify":
            return cmd_simplify(args, cfg)
        if args.command == "verify":
            return cmd_verify(args, cfg, seed)
        if args.command == "demo":
            return cmd_demo(args, cfg, seed)
        if args.command == "export-dot":
            return cmd_export_dot(args, cfg)
        raise CliFailure(EXIT_VALIDATION, f"unknown command {args.command!r}")
    except CliFailure as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SizeExceeded as exc:
        print(f"size cap exceeded: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except InvalidSpinArgs as exc:
        print(f"invalid spin arguments: {exc}", file=sys.stderr)
        return EXIT_SPIN_ARGS
    except SpinZXError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
