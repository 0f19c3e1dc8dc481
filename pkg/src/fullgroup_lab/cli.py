"""fullgroup-lab command line.

Exit codes: 0 success, 2 infeasible input, 3 certificate failure, 64 usage.
Every command writes its artifacts atomically plus a manifest.json holding
the normalized arguments and the sha256 of each artifact; `replay` re-runs
a manifest into a fresh directory and compares the hashes.
"""
import argparse
import csv
import hashlib
import io
import json
import os
import platform
import sys
import tempfile
import time
from fractions import Fraction

import numpy as np

from . import __version__
from . import entropy_builder as eb
from . import gamma
from . import toeplitz_delta as td
from .lattice import box

OK, INFEASIBLE, CERT_FAIL, USAGE = 0, 2, 3, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(USAGE)


def threads():
    raw = os.environ.get("FULLGROUP_LAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"FULLGROUP_LAB_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError("FULLGROUP_LAB_THREADS must be >= 1")
    return n


def rational(s):
    try:
        v = Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a rational p/q, got {s!r}") from None
    if "." in s or "e" in s.lower():
        raise argparse.ArgumentTypeError("rationals are written p/q, not as decimals")
    return v


def dims(s):
    try:
        a, b = (int(p) for p in s.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected AxB, got {s!r}") from None
    if a < 1 or b < 1:
        raise argparse.ArgumentTypeError("dimensions must be positive")
    return a, b


def positive(s):
    n = int(s)
    if n < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return n


def dump_json(obj):
    return (json.dumps(obj, sort_keys=True, indent=1) + "\n").encode()


def write_atomic(path, data):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Artifacts:
    def __init__(self, out):
        self.out = out
        self.hashes = {}

    def put(self, name, data):
        write_atomic(os.path.join(self.out, name), data)
        self.hashes[name] = hashlib.sha256(data).hexdigest()

    def manifest(self, command, args, started, status):
        doc = {"version": 1, "command": command, "args": args, "seed": args.get("seed", 0),
               "versions": {"fullgroup_lab": __version__, "python": platform.python_version(),
                            "numpy": np.__version__},
               "outputs": dict(sorted(self.hashes.items())), "status": status,
               "wallTime": round(time.time() - started, 3)}
        write_atomic(os.path.join(self.out, "manifest.json"), dump_json(doc))
        return doc


def level_doc(level, params):
    doc = level.to_json()
    doc["lambda"] = str(params.lam)
    doc["dCount"] = level.d_count
    doc["labelsDigest"] = hashlib.sha256(np.ascontiguousarray(level.labels.T).tobytes()).hexdigest()
    return doc


# ---- commands ---------------------------------------------------------------

def cmd_build_entropy(a, art):
    depth = a["levels"]
    schedule = [tuple(d) for d in a["dims"]] if a["dims"] else eb.DEFAULT_LEVELS[:depth]
    if len(schedule) < depth:
        raise UsageError(f"--dims gives {len(schedule)} levels, --levels asks for {depth}")
    try:
        params = eb.BuilderParams(Fraction(a["lambda"]), schedule=schedule[:depth], budget=a["budget"],
                                  seed=a["seed"], base=tuple(a["base"]))
    except ValueError as e:
        print(f"infeasible parameters: {e}", file=sys.stderr)
        return INFEASIBLE
    try:
        levels, report, _ = eb.run_construction(params, depth=depth, max_len=a["maxlen"])
    except eb.InfeasibleSchedule as e:
        art.put("report.json", dump_json({"ok": False, "failure": "infeasible", "condition": e.condition,
                                          "k": e.k, "detail": str(e)}))
        print(f"infeasible schedule: {e}", file=sys.stderr)
        return INFEASIBLE
    for lev in levels[1:]:
        art.put(f"level-{lev.k}.json", dump_json(level_doc(lev, params)))
    fp = report.pop("freeProduct")
    art.put("free-product.json", dump_json(fp))
    art.put("report.json", dump_json(report))
    if not report["ok"]:
        print("certificate failure, see report.json", file=sys.stderr)
        return CERT_FAIL
    return OK


def _fault_labeling(lam, kind):
    if kind == "adjacent":
        # copy the label above the origin onto the origin's up-edge
        def vertical(n, m):
            if (n, m) == (0, 0):
                return td.vertical_labeling(0, 1)
            return td.vertical_labeling(n, m)
        return td.EdgeLabeling(vertical, lam.horizontal, lam.offset)
    raise UsageError(f"unknown fault {kind!r}")


def cmd_build_toeplitz(a, art):
    try:
        z = td.ZParameter.parse(a["z"])
    except ValueError as e:
        raise UsageError(str(e)) from None
    lam = td.build_labeling(z)
    if a["fault"]:
        lam = _fault_labeling(lam, a["fault"])
    r = a["scan"]
    window = box((-r, -r), (r + 1, r + 1))
    tr = min(r, a["toeplitz_radius"])
    point = td.pack_phi(lam)
    sample = {"version": 1, "z": z.to_json(), "lo": [-r, -r], "dims": [2 * r + 1, 2 * r + 1],
              "rows": [[point((n, m)) for n in range(-r, r + 1)] for m in range(-r, r + 1)]}
    art.put("sample.json", dump_json(sample))
    defects = td.membership_defects(lam, window)
    art.put("membership.json", dump_json({"version": 1, "window": r, "ok": not defects,
                                          "defects": [[k, list(t), v] for k, t, v in defects[:100]]}))
    toe = td.toeplitz_report(point, box((-tr, -tr), (tr + 1, tr + 1)), 8)
    art.put("toeplitz.json", dump_json(dict(toe, window=tr)))
    faith = []
    try:
        faith = td.faithfulness_table(td.build_labeling(z), a["maxlen"])
    except ValueError as e:
        faith = [{"ok": False, "error": str(e)}]
    art.put("faithfulness.json", dump_json({"version": 1, "rows": faith}))
    ok = not defects and toe["ok"] and all(row["ok"] for row in faith)
    if not ok:
        if defects:
            kind, t, v = defects[0]
            print(f"membership failure: {kind} at {t} (label {td.SIGMA[v] if v < 6 else v})", file=sys.stderr)
        if not toe["ok"]:
            print(f"toeplitz failure at {toe['failures'][0]}", file=sys.stderr)
        return CERT_FAIL
    return OK


def cmd_certify_free(a, art):
    params = eb.BuilderParams(Fraction(a["lambda"]), schedule=eb.DEFAULT_LEVELS[:a["levels"]], seed=a["seed"])
    try:
        levels = eb.build_levels(params, a["levels"])
    except eb.InfeasibleSchedule as e:
        print(f"infeasible schedule: {e}", file=sys.stderr)
        return INFEASIBLE
    k = a["gen_level"]
    if not 0 <= k < len(levels):
        raise UsageError(f"--gen-level must lie in [0, {len(levels) - 1}]")
    from .fullgroup import alternating_words, free_product_certificate
    words = alternating_words(3, a["maxlen"])
    witnesses = {tuple(w.ids()): eb.free_product_witness(w, levels, k) for w in words}
    lang = eb.sample_language(levels, k, extra=witnesses.values())
    gens = eb.csimplicity_generators(levels, k, lang)
    z = eb.point_from_box(levels)

    def factory(w):
        yield "witness", witnesses[tuple(w.ids())]
        yield "canonical", z

    cert = free_product_certificate(gens.elements, a["maxlen"], factory, lang, budget=2)
    m = gens.m
    rows = []
    for r in cert.rows:
        expect = [0, 6 * len(r.word) * m]
        rows.append(dict(r.to_json(), expected=expect, exact=list(r.displacement) == expect))
    doc = {"version": 1, "m": m, "level": k, "complete": cert.complete,
           "involutions": {str(g): v for g, v in cert.involutions.items()},
           "rows": rows, "missing": [w.ids() for w in cert.missing]}
    art.put("free-product.json", dump_json(doc))
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["word", "displacement_x", "displacement_y", "exact"])
    for row in rows:
        wr.writerow(["-".join(map(str, row["word"])), *row["displacement"], int(row["exact"])])
    art.put("free-product.csv", buf.getvalue().encode())
    if not cert.complete or not all(row["exact"] for row in rows):
        print("free-product certificate incomplete", file=sys.stderr)
        return CERT_FAIL
    return OK


def cmd_gamma_table(a, art):
    if a["nu"] not in gamma.NAMED:
        raise UsageError(f"unknown distribution {a['nu']!r}; choose from {sorted(gamma.NAMED)}")
    nu = gamma.NAMED[a["nu"]]
    eps = Fraction(a["eps"])
    if eps <= 0:
        raise UsageError("--eps must be positive")
    rows = gamma.delta_curve(nu, eps, a["max"])
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["sizeF", "delta"])
    for n, d in rows:
        wr.writerow([n, "" if d is None else str(d)])
    art.put("delta-curve.csv", buf.getvalue().encode())
    art.put("distribution.json", dump_json(nu.to_json()))
    return OK


def _read_level(path):
    with open(path) as fh:
        doc = json.load(fh)
    return doc, eb.LevelData.from_json(doc)


def cmd_verify(a, art):
    loaded = []
    for path in a["level_file"]:
        try:
            loaded.append(_read_level(path))
        except (OSError, ValueError, KeyError) as e:
            print(f"unreadable level file {path}: {e}", file=sys.stderr)
            return CERT_FAIL
    loaded.sort(key=lambda p: p[1].k)
    lam = Fraction(a["lambda"] or loaded[0][0].get("lambda", "0"))
    if lam <= 0:
        raise UsageError("--lambda is required when the level files do not record it")
    base = tuple(a["base"])
    params = eb.BuilderParams(lam, q=loaded[0][1].q, schedule=[lev.dims for _, lev in loaded], base=base)
    prev = eb.base_level(params) if loaded[0][1].k == 1 else None
    results = []
    ok = True
    for doc, lev in loaded:
        digest = hashlib.sha256(np.ascontiguousarray(lev.labels.T).tobytes()).hexdigest()
        row = {"k": lev.k, "digest": digest == doc.get("labelsDigest"),
               "dCount": doc.get("dCount") == lev.d_count,
               "densities": eb.verify_densities(lev, params)}
        if prev is not None and prev.k == lev.k - 1:
            row["conditions"] = eb.verify_level(lev, prev, params)
            row_ok = row["conditions"]["ok"]
        else:
            row["conditions"] = None
            row_ok = row["densities"]["ok"]
        row["ok"] = row_ok and row["digest"] and row["dCount"]
        ok = ok and row["ok"]
        results.append(row)
        prev = lev
    art.put("verify.json", dump_json({"version": 1, "ok": ok, "levels": results}))
    if not ok:
        bad = next(r for r in results if not r["ok"])
        print(f"level {bad['k']} failed verification", file=sys.stderr)
        return CERT_FAIL
    return OK


COMMANDS = {"build-entropy": cmd_build_entropy, "build-toeplitz": cmd_build_toeplitz,
            "certify-free": cmd_certify_free, "gamma-table": cmd_gamma_table, "verify": cmd_verify}


def build_parser():
    p = _Parser(prog="fullgroup-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    b = sub.add_parser("build-entropy", help="build the entropy-lambda box levels and certificates")
    b.add_argument("--lambda", dest="lambda_", type=rational, required=True)
    b.add_argument("--levels", type=positive, default=2)
    b.add_argument("--budget", type=int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--dims", type=dims, nargs="+", help="level rectangles AxB, one per level")
    b.add_argument("--base", type=dims, default=eb.DEFAULT_BASE)
    b.add_argument("--maxlen", type=positive, default=3, help="free-product word length")
    b.add_argument("--out", required=True)

    t = sub.add_parser("build-toeplitz", help="Toeplitz Delta-subshift sample and certificates")
    t.add_argument("--z", default="0", help="prefix bits plus tail rule, e.g. 0110+periodic:01")
    t.add_argument("--scan", type=positive, default=64)
    t.add_argument("--toeplitz-radius", type=positive, default=32)
    t.add_argument("--maxlen", type=positive, default=4)
    t.add_argument("--fault", choices=["adjacent"])
    t.add_argument("--out", required=True)

    c = sub.add_parser("certify-free", help="free-product witness table for g1, g2, g3")
    c.add_argument("--maxlen", type=positive, default=4)
    c.add_argument("--lambda", dest="lambda_", type=rational, default=Fraction(1, 2))
    c.add_argument("--levels", type=positive, default=1)
    c.add_argument("--gen-level", type=int, default=0)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)

    g = sub.add_parser("gamma-table", help="certified delta curve as CSV")
    g.add_argument("--nu", default="uniform2")
    g.add_argument("--eps", type=rational, required=True)
    g.add_argument("--max", type=positive, default=12)
    g.add_argument("--out", required=True)

    v = sub.add_parser("verify", help="re-check stored level files")
    v.add_argument("--level-file", action="append", required=True)
    v.add_argument("--lambda", dest="lambda_", type=rational)
    v.add_argument("--base", type=dims, default=eb.DEFAULT_BASE)
    v.add_argument("--out", required=True)

    r = sub.add_parser("replay", help="re-run a manifest and compare artifact hashes")
    r.add_argument("manifest")
    r.add_argument("--out", required=True)
    return p


def _normalize(ns):
    args = {}
    for k, v in vars(ns).items():
        if k in ("command", "out"):
            continue
        k = k.rstrip("_")
        if isinstance(v, Fraction):
            v = str(v)
        elif isinstance(v, tuple):
            v = list(v)
        elif isinstance(v, list):
            v = [list(x) if isinstance(x, tuple) else x for x in v]
        args[k] = v
    return args


def run(command, args, out):
    """Run a command from normalized args; returns (exit code, manifest)."""
    threads()
    art = Artifacts(out)
    started = time.time()
    code = COMMANDS[command](args, art)
    status = {OK: "ok", INFEASIBLE: "infeasible", CERT_FAIL: "certificate-failure"}[code]
    return code, art.manifest(command, args, started, status)


def replay(manifest_path, out):
    with open(manifest_path) as fh:
        old = json.load(fh)
    code, new = run(old["command"], old["args"], out)
    same = new["outputs"] == old["outputs"]
    doc = {"version": 1, "source": os.path.abspath(manifest_path), "identical": same,
           "outputs": {k: [old["outputs"].get(k), new["outputs"].get(k)]
                       for k in sorted(set(old["outputs"]) | set(new["outputs"]))}}
    write_atomic(os.path.join(out, "replay.json"), dump_json(doc))
    if not same:
        print("replay produced different artifacts", file=sys.stderr)
        return CERT_FAIL
    return code


def main(argv=None):
    ns = build_parser().parse_args(argv)
    try:
        if ns.command == "replay":
            return replay(ns.manifest, ns.out)
        code, _ = run(ns.command, _normalize(ns), ns.out)
        return code
    except UsageError as e:
        print(f"fullgroup-lab: error: {e}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
