"""Command-line driver.

Commands run the pipeline on a model file and emit a deterministic report:
``--format json`` produces byte-identical output for identical inputs
(timing goes to stderr in text mode and is omitted from the structured
report).  Exit codes: 0 all checks passed, 1 mathematical failure,
2 usage or parse error, 3 resource or ansatz-bound exhaustion.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from .algebra import GradedPoly, JetCapError, jet, poly_to_data
from .gauge import GaugeError, check_noether_identity, gauge_symmetry
from .model import ElaborationError, ParseError, load_model
from .render import poly_text
from .superpotential import (SuperpotentialError, extract, structural_checks,
                             verify_split)
from .variational import (BOUND_EXHAUSTED, EXACT, Current, check_lepage,
                          euler_lagrange, first_variational_residual,
                          is_variational_symmetry, noether_current,
                          weak_conservation_witness)

DEFAULT_ANSATZ_DEGREE = 4

EXIT_OK = 0
EXIT_MATH = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3


class _Usage(Exception):
    pass


def _poly_payload(p: GradedPoly) -> dict:
    return {"text": poly_text(p), "monomials": poly_to_data(p)}


def _el_payload(el) -> list:
    return [{"field": sym.name, "expression": _poly_payload(poly)}
            for sym, poly in el.sorted_items()]


def _current_payload(J: Current) -> list:
    return [{"mu": mu, "expression": _poly_payload(J.component(mu))}
            for mu in range(J.dim)]


def _symmetry_payload(u) -> list:
    return [{"field": sym.name, "expression": _poly_payload(poly)}
            for sym, poly in u.vertical]


def _split_payload(split, el) -> dict:
    w_rows = []
    for (sym, index, mu), w in sorted(
            split.w_table.items(),
            key=lambda it: (it[0][0].sort_key, it[0][1], it[0][2])):
        w_rows.append({"field": sym.name, "index": list(index), "mu": mu,
                       "coefficient": _poly_payload(w)})
    u_rows = []
    for (nu, mu), poly in sorted(split.superpotential.components.items()):
        u_rows.append({"nu": nu, "mu": mu, "component": _poly_payload(poly)})
    witness_rows = []
    for (contact, horiz), poly in split.remainder_witness.sorted_components():
        witness_rows.append({"horizontal": list(horiz),
                             "component": _poly_payload(poly)})
    return {"W": w_rows, "U": u_rows,
            "W_components": [{"mu": mu, "label": "W",
                              "expression": _poly_payload(split.w_component(mu))}
                             for mu in range(split.dim)],
            "remainder_witness": witness_rows}


class _Runner:
    def __init__(self, args):
        self.args = args
        self.steps = []
        self.bound_exhausted = False

    def add(self, name: str, status: str, payload=None):
        step = {"name": name, "status": status}
        if payload is not None:
            step["payload"] = payload
        self.steps.append(step)

    def model(self):
        with open(self.args.model, "r", encoding="utf-8") as fh:
            text = fh.read()
        return load_model(text, jet_cap=self.args.jet_cap)

    def exit_code(self) -> int:
        if any(s["status"] == "fail" for s in self.steps):
            return EXIT_MATH
        if self.bound_exhausted:
            return EXIT_RESOURCE
        return EXIT_OK

    # -- commands ------------------------------------------------------------

    def cmd_el(self):
        model = self.model()
        el = euler_lagrange(model.lagrangian, model.fields)
        if self.args.field is not None:
            if self.args.field not in model.symbols:
                raise _Usage(f"unknown field {self.args.field!r}")
            sym = model.symbols[self.args.field]
            el.components = {sym: el.component(sym)}
        self.add("euler-lagrange", "pass", _el_payload(el))

    def cmd_check_identity(self):
        model = self.model()
        name = self.args.name
        if name not in model.identities:
            raise _Usage(f"unknown identity {name!r}")
        op = model.identities[name]
        el = euler_lagrange(model.lagrangian, model.fields)
        residual = op.contraction(el, model.jet_cap)
        if residual.is_zero():
            self.add(f"identity {name}", "pass")
        else:
            self.add(f"identity {name}", "fail",
                     {"residual": _poly_payload(residual)})

    def _gauge(self, model, name):
        op = model.identities[name]
        ghost = model.ghost_of(name)
        if ghost is None:
            raise _Usage(f"identity {name!r} has no declared ghost")
        return gauge_symmetry(op, ghost, model.lagrangian,
                              max_degree=self.args.ansatz_degree)

    def cmd_gauge_symmetry(self):
        model = self.model()
        name = self.args.name
        if name not in model.identities:
            raise _Usage(f"unknown identity {name!r}")
        el = euler_lagrange(model.lagrangian, model.fields)
        if not check_noether_identity(model.identities[name], el,
                                      model.jet_cap):
            self.add(f"identity {name}", "fail",
                     {"reason": "identity does not hold; refusing"})
            return
        self.add(f"identity {name}", "pass")
        result = self._gauge(model, name)
        sigma = Current.from_form(result.sigma)
        self.add("gauge-symmetry", "pass",
                 {"components": _symmetry_payload(result.symmetry),
                  "sigma": _current_payload(sigma)})

    def cmd_superpotential(self):
        model = self.model()
        name = self.args.name
        el = euler_lagrange(model.lagrangian, model.fields)
        if name in model.identities:
            if not check_noether_identity(model.identities[name], el,
                                          model.jet_cap):
                self.add(f"identity {name}", "fail",
                         {"reason": "identity does not hold; refusing"})
                return
            result = self._gauge(model, name)
            u, current = result.symmetry, result.current
        elif name in model.symmetries:
            u = model.symmetries[name]
            sym_result = is_variational_symmetry(
                u, model.lagrangian, max_degree=self.args.ansatz_degree)
            if sym_result.status == BOUND_EXHAUSTED:
                self.bound_exhausted = True
                self.add(f"symmetry {name}", "error",
                         {"reason": "witness search exhausted its bound"})
                return
            if sym_result.status != EXACT:
                self.add(f"symmetry {name}", "fail",
                         {"reason": "not a variational symmetry"})
                return
            current = noether_current(u, model.lagrangian, sym_result.sigma)
        else:
            raise _Usage(f"unknown identity or symmetry {name!r}")
        if self.args.debug_corrupt_current:
            ghosts = sorted({v.symbol for _, poly in u.vertical
                             for v in poly.variables()
                             if v.symbol.kind == "ghost"},
                            key=lambda s: s.sort_key)
            if ghosts:
                broken = dict(current.components)
                broken[0] = current.component(0) \
                    + GradedPoly.variable(jet(ghosts[0]))
                current = Current(broken, current.dim)
        self.add("current", "pass", _current_payload(current))
        try:
            split = extract(current, u, model.lagrangian,
                            max_degree=self.args.ansatz_degree)
        except SuperpotentialError as exc:
            if "ansatz" in str(exc):
                self.bound_exhausted = True
                self.add("superpotential", "error", {"reason": str(exc)})
            else:
                self.add("superpotential", "fail",
                         {"reason": str(exc), "equation": exc.tag})
            return
        ok, report = verify_split(current, split, el, model.jet_cap)
        self.add("superpotential", "pass" if ok else "fail",
                 dict(_split_payload(split, el), checks=report))

    def cmd_verify(self):
        model = self.model()
        L = model.lagrangian
        el = euler_lagrange(L, model.fields)
        self.add("lepage", "pass" if check_lepage(L) else "fail")
        self.add("euler-lagrange", "pass", _el_payload(el))
        for name, op in sorted(model.identities.items()):
            residual = op.contraction(el, model.jet_cap)
            if not residual.is_zero():
                self.add(f"identity {name}", "fail",
                         {"residual": _poly_payload(residual)})
                continue
            self.add(f"identity {name}", "pass")
            ghost = model.ghost_of(name)
            if ghost is None:
                continue
            try:
                result = gauge_symmetry(op, ghost, L,
                                        max_degree=self.args.ansatz_degree)
            except GaugeError as exc:
                self.bound_exhausted = "ansatz" in str(exc)
                self.add(f"gauge {name}",
                         "error" if self.bound_exhausted else "fail",
                         {"reason": str(exc)})
                continue
            u, current = result.symmetry, result.current
            residual_form = first_variational_residual(u, L)
            self.add(f"variational-formula {name}",
                     "pass" if residual_form.is_zero() else "fail")
            witness = weak_conservation_witness(
                current, el, L.jet_cap, self.args.ansatz_degree)
            self.add(f"weak-conservation {name}",
                     "pass" if witness.status == EXACT else "fail")
            checks = structural_checks(current, u, L, el)
            bad = [c for c in checks if not c.ok]
            self.add(f"structural-equations {name}",
                     "pass" if not bad else "fail",
                     {"failing": [c.tag for c in bad]} if bad else None)
            try:
                split = extract(current, u, L,
                                max_degree=self.args.ansatz_degree)
            except SuperpotentialError as exc:
                self.add(f"superpotential {name}", "fail",
                         {"reason": str(exc)})
                continue
            ok, report = verify_split(current, split, el, L.jet_cap)
            dd = GradedPoly.zero()
            for mu in range(L.dim):
                dd = dd + split.superpotential.divergence(mu, L.jet_cap) \
                    .total_derivative(mu, L.jet_cap)
            self.add(f"superpotential {name}",
                     "pass" if ok and dd.is_zero() else "fail",
                     {"checks": report})
        for name, ups in sorted(model.symmetries.items()):
            residual_form = first_variational_residual(ups, L)
            self.add(f"variational-formula {name}",
                     "pass" if residual_form.is_zero() else "fail")
            sym_result = is_variational_symmetry(
                ups, L, max_degree=self.args.ansatz_degree)
            if sym_result.status == BOUND_EXHAUSTED:
                self.bound_exhausted = True
                self.add(f"symmetry {name}", "error",
                         {"reason": "witness search exhausted its bound"})
                continue
            self.add(f"symmetry {name}",
                     "pass" if sym_result.status == EXACT else "fail")
            if sym_result.status == EXACT:
                current = noether_current(ups, L, sym_result.sigma)
                witness = weak_conservation_witness(
                    current, el, L.jet_cap, self.args.ansatz_degree)
                self.add(f"weak-conservation {name}",
                         "pass" if witness.status == EXACT else "fail")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vnoether",
        description="symbolic Noether analysis of graded Lagrangian models")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("model", help="model file (.vln)")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--jet-cap", type=int,
                        default=int(os.environ.get("VNOETHER_JET_CAP", "6")))
    common.add_argument("--ansatz-degree", type=int,
                        default=DEFAULT_ANSATZ_DEGREE)
    sub = parser.add_subparsers(dest="command", required=True)
    p_el = sub.add_parser("el", parents=[common],
                          help="Euler-Lagrange expressions per field")
    p_el.add_argument("--field", default=None)
    p_ci = sub.add_parser("check-identity", parents=[common],
                          help="verify a declared identity")
    p_ci.add_argument("name")
    p_gs = sub.add_parser("gauge-symmetry", parents=[common],
                          help="construct the gauge symmetry of an identity")
    p_gs.add_argument("name")
    p_sp = sub.add_parser("superpotential", parents=[common],
                          help="split the gauge current")
    p_sp.add_argument("name")
    p_sp.add_argument("--debug-corrupt-current", action="store_true",
                      help="inject a broken term to exercise the checks")
    sub.add_parser("verify", parents=[common],
                   help="run the full check suite on a model")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    runner = _Runner(args)
    start = time.monotonic()
    try:
        getattr(runner, "cmd_" + args.command.replace("-", "_"))()
    except _Usage as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ElaborationError) as exc:
        print(f"error: {args.model}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except JetCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    elapsed = time.monotonic() - start
    report = {
        "command": args.command,
        "model": args.model,
        "format_version": 1,
        "steps": runner.steps,
        "bound_exhausted": runner.bound_exhausted,
    }
    if args.format == "json":
        sys.stdout.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
    else:
        for step in runner.steps:
            line = f"{step['name']}: {step['status']}"
            sys.stdout.write(line + "\n")
            payload = step.get("payload")
            if payload:
                for text in _payload_lines(payload):
                    sys.stdout.write("  " + text + "\n")
        print(f"elapsed: {elapsed:.3f}s", file=sys.stderr)
    return runner.exit_code()


def _payload_lines(payload, prefix=""):
    if isinstance(payload, dict):
        if set(payload) == {"text", "monomials"}:
            yield prefix + payload["text"]
            return
        for key in payload:
            value = payload[key]
            if isinstance(value, (dict, list)):
                yield f"{prefix}{key}:"
                yield from _payload_lines(value, prefix + "  ")
            else:
                yield f"{prefix}{key}: {value}"
    elif isinstance(payload, list):
        for item in payload:
            if isinstance(item, dict) and "field" in item and "expression" in item:
                extra = {k: v for k, v in item.items()
                         if k not in ("field", "expression")}
                desc = " ".join(f"{k}={v}" for k, v in sorted(extra.items()))
                label = item["field"] + (f" {desc}" if desc else "")
                yield f"{prefix}{label}: {item['expression']['text']}"
            elif isinstance(item, dict) and "mu" in item and "expression" in item:
                label = item.get("label", "J")
                yield f"{prefix}{label}^{item['mu']}: {item['expression']['text']}"
            elif isinstance(item, dict) and "nu" in item and "component" in item:
                yield (f"{prefix}U^{item['nu']}{item['mu']}: "
                       f"{item['component']['text']}")
            elif isinstance(item, dict) and "coefficient" in item:
                idx = "".join(str(i) for i in item.get("index", []))
                yield (f"{prefix}w[{item['field']},({idx}),mu={item['mu']}]: "
                       f"{item['coefficient']['text']}")
            else:
                yield from _payload_lines(item, prefix)
    else:
        yield f"{prefix}{payload}"


if __name__ == "__main__":
    sys.exit(main())
