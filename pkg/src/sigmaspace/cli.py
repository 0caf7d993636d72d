"""Command line entry point: ingest CSV/JSON samples and emit JSON reports.

Exit codes: 0 success, 2 validation failure, 3 certificate gap above tolerance.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np

from . import distortion, oracle, risk, sigma_norm
from .dual_norm import CertificateError, sigma_dominates, vector_dual_norm
from .prob_core import FiniteSpace, RandomVector, ValidationError, dual_exponent, p_norm

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_GAP = 3
MAX_WORKERS = 4


class GapError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# ingestion and emission


def _read_csv(path: Path) -> RandomVector:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValidationError(f"{path}: empty file")
    header = [h.strip().lower() for h in rows[0]]
    ycols = [i for i, h in enumerate(header) if h.startswith("y") and h[1:].isdigit()]
    ycols.sort(key=lambda i: int(header[i][1:]))
    if not ycols:
        raise ValidationError(f"{path}: no y1..yd columns in header {rows[0]}")
    wcol = header.index("w") if "w" in header else None
    vals, weights = [], []
    for lineno, row in enumerate(rows[1:], start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ValidationError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
        try:
            vec = [float(row[i]) for i in ycols]
            w = float(row[wcol]) if wcol is not None else None
        except ValueError as exc:
            raise ValidationError(f"{path}: row {lineno}: {exc}") from exc
        if not all(math.isfinite(x) for x in vec):
            raise ValidationError(f"{path}: row {lineno} has a non-finite value")
        if w is not None and not (math.isfinite(w) and w > 0):
            raise ValidationError(f"{path}: row {lineno} has non-positive weight {w}")
        vals.append(vec)
        weights.append(w)
    if not vals:
        raise ValidationError(f"{path}: no data rows")
    space = FiniteSpace.uniform(len(vals)) if wcol is None else FiniteSpace(np.array(weights))
    return RandomVector(space, np.array(vals))


def _read_json(path: Path) -> RandomVector:
    doc = json.loads(Path(path).read_text())
    values = doc.get("values")
    if not isinstance(values, list) or not values:
        raise ValidationError(f"{path}: 'values' must be a non-empty list")
    rows = [v if isinstance(v, list) else [v] for v in values]
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise ValidationError(f"{path}: row {i} has {len(r)} entries, expected {width}")
        if not all(isinstance(x, (int, float)) and math.isfinite(x) for x in r):
            raise ValidationError(f"{path}: row {i} has a non-finite value")
    weights = doc.get("weights")
    if weights is None:
        space = FiniteSpace.uniform(len(rows))
    else:
        if len(weights) != len(rows):
            raise ValidationError(f"{path}: {len(weights)} weights for {len(rows)} rows")
        for i, w in enumerate(weights):
            if not (isinstance(w, (int, float)) and w > 0):
                raise ValidationError(f"{path}: weight {i} is not positive")
        space = FiniteSpace(np.array(weights, dtype=float))
    return RandomVector(space, np.array(rows, dtype=float))


def ingest(path, fmt: str | None = None) -> RandomVector:
    """Load a sample as a random vector; weights default to uniform."""
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt == "csv":
        return _read_csv(path)
    if fmt == "json":
        return _read_json(path)
    raise ValidationError(f"unknown data format {fmt!r}")


def emit(Y: RandomVector, path, fmt: str | None = None) -> None:
    """Write a sample so that :func:`ingest` reads it back bit for bit."""
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt == "json":
        path.write_text(dumps({"weights": Y.weights.tolist(), "values": Y.values.tolist()}))
    elif fmt == "csv":
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow([f"y{j + 1}" for j in range(Y.d)] + ["w"])
            for row, w in zip(Y.values, Y.weights):
                wr.writerow([_num(x) for x in row] + [_num(w)])
    else:
        raise ValidationError(f"unknown data format {fmt!r}")


def _num(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    return s if any(ch in s for ch in ".en") else s + ".0"


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON with 17 significant digits per float and insertion-ordered keys."""
    return _encode(obj, indent, 0) + "\n"


# ---------------------------------------------------------------------------
# commands (each returns a JSON-ready dict)


def cmd_validate_distortion(spec: str) -> dict:
    s = distortion.parse(spec)
    return {
        "sigma": s.spec(),
        "u0": s.u0(),
        "bounded": s.is_bounded(),
        "sup": s.sup(),
        "integral": s.integral_sigma(0.0, 1.0),
        "power_integral_2": s.power_integral(2.0),
    }


def cmd_norm(data, sigma: str, p: float, vecnorm: float) -> dict:
    Y = ingest(data)
    s = distortion.parse(sigma)
    return {
        "sigma": s.spec(),
        "p": p,
        "vecnorm": vecnorm,
        "norm": sigma_norm.norm(Y, s, p, vecnorm),
        "p_norm": p_norm(Y, p, vecnorm),
        "sup_norm": p_norm(Y, math.inf, vecnorm),
    }


def cmd_dual_norm(data, sigma: str, p: float, vecnorm: float) -> dict:
    Z = ingest(data)
    s = distortion.parse(sigma)
    try:
        cert = vector_dual_norm(Z, s, p, vecnorm)
    except CertificateError as exc:
        raise GapError(str(exc)) from exc
    return cert.to_dict()


def cmd_dominates(data_zp, data_z, sigma: str) -> dict:
    Zp, Z = ingest(data_zp), ingest(data_z)
    s = distortion.parse(sigma)
    res = sigma_dominates(_magnitudes(Zp, 2.0), _magnitudes(Z, 2.0), s)
    return {"dominates": res.holds, "margin": res.margin}


def cmd_risk(data_z, data_y, p: float, vecnorm: float, data_y2=None) -> dict:
    Z, Y = ingest(data_z), ingest(data_y)
    report = risk.bound_chain(Z, Y, vecnorm)
    out = report.to_dict()
    if data_y2 is not None:
        chk = risk.lipschitz_check(Z, Y, ingest(data_y2), p, vecnorm)
        out["lipschitz_lhs"] = chk.lhs
        out["lipschitz_rhs"] = chk.rhs
        out["lipschitz_holds"] = chk.holds
        out["scale"] = chk.scale
    return out


def _magnitudes(Z: RandomVector, vecnorm: float) -> RandomVector:
    if Z.d == 1:
        return Z.with_values(np.abs(Z.values))
    return Z.with_values(Z.magnitudes(dual_exponent(vecnorm))[:, None])


def cmd_certify(data, sigma: str, p: float, vecnorm: float, run_oracle: bool, restarts: int) -> dict:
    """Dual certificate plus dominance of the envelope and an optional search oracle."""
    Z = ingest(data)
    s = distortion.parse(sigma)
    try:
        cert = vector_dual_norm(Z, s, p, vecnorm)
    except CertificateError as exc:
        raise GapError(str(exc)) from exc
    out = cert.to_dict()
    mags = _magnitudes(Z, vecnorm)
    dom = sigma_dominates(cert.envelope, mags, s)
    out["envelope_dominates"] = dom.holds
    out["dominance_margin"] = dom.margin
    if run_oracle:
        if mags.n <= 8:
            lb = oracle.search_dual_pairing(mags, s, p, restarts=restarts)
            out["oracle_lower_bound"] = lb
            out["oracle_consistent"] = lb <= cert.dual_value + 1e-6 * max(1.0, cert.dual_value)
        else:
            out["oracle_lower_bound"] = None
            out["oracle_consistent"] = None
    return out


def _run_job(job: dict, base: Path) -> dict:
    def path(key):
        return base / job[key]

    kind = job.get("command")
    p = float(job.get("p", 1.0))
    r = float(job.get("vecnorm", 2.0))
    if kind == "validate-distortion":
        return cmd_validate_distortion(job["sigma"])
    if kind == "norm":
        return cmd_norm(path("data"), job["sigma"], p, r)
    if kind == "dual-norm":
        return cmd_dual_norm(path("data"), job["sigma"], p, r)
    if kind == "dominates":
        return cmd_dominates(path("zp"), path("z"), job["sigma"])
    if kind == "risk":
        y2 = path("y2") if "y2" in job else None
        return cmd_risk(path("z"), path("y"), p, r, y2)
    if kind == "certify":
        return cmd_certify(path("data"), job["sigma"], p, r, bool(job.get("oracle", False)), int(job.get("restarts", 2000)))
    raise ValidationError(f"unknown command {kind!r} in manifest")


def cmd_report(manifest, workers: int = MAX_WORKERS) -> tuple[list[dict], int]:
    """Run every job of a manifest ``{"jobs": [...]}``; paths are relative to it."""
    manifest = Path(manifest)
    doc = json.loads(manifest.read_text())
    jobs = doc.get("jobs") if isinstance(doc, dict) else doc
    if not isinstance(jobs, list):
        raise ValidationError("manifest must hold a list of jobs")

    def run(job):
        try:
            return {"status": "ok", "result": _run_job(job, manifest.parent)}, EXIT_OK
        except GapError as exc:
            return {"status": "gap", "error": str(exc)}, EXIT_GAP
        except (ValidationError, KeyError, ValueError, OSError) as exc:
            return {"status": "invalid", "error": str(exc)}, EXIT_INVALID

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(run, jobs))
    out = [{"job": i, "command": j.get("command"), **res} for i, (j, (res, _)) in enumerate(zip(jobs, results))]
    code = max((c for _, c in results), default=EXIT_OK)
    return out, code


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sigmaspace", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    v = sub.add_parser("validate-distortion", help="parse and check a distortion spec")
    v.add_argument("spec")

    n = sub.add_parser("norm", help="primal norm ||Y||_{sigma,p}")
    n.add_argument("data")
    n.add_argument("--sigma", required=True)
    n.add_argument("--p", type=float, default=1.0)
    n.add_argument("--vecnorm", type=float, default=2.0)

    d = sub.add_parser("dual-norm", help="dual norm with certificate")
    d.add_argument("data")
    d.add_argument("--sigma", required=True)
    d.add_argument("--p", type=float, default=1.0)
    d.add_argument("--vecnorm", type=float, default=2.0)

    m = sub.add_parser("dominates", help="sigma-dominance of Z' over Z")
    m.add_argument("data_zp")
    m.add_argument("data_z")
    m.add_argument("--sigma", required=True)

    r = sub.add_parser("risk", help="maximal correlation risk and bound chain")
    r.add_argument("data_z")
    r.add_argument("data_y")
    r.add_argument("--y2", default=None, help="second portfolio for the Lipschitz check")
    r.add_argument("--p", type=float, default=1.0)
    r.add_argument("--vecnorm", type=float, default=2.0)

    c = sub.add_parser("certify", help="dual norm certificate with oracle cross-checks")
    c.add_argument("data")
    c.add_argument("--sigma", required=True)
    c.add_argument("--p", type=float, default=1.0)
    c.add_argument("--vecnorm", type=float, default=2.0)
    c.add_argument("--oracle", action="store_true")
    c.add_argument("--restarts", type=int, default=2000)

    b = sub.add_parser("report", help="run a batch manifest")
    b.add_argument("manifest")
    b.add_argument("--workers", type=int, default=MAX_WORKERS)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "validate-distortion":
            out = cmd_validate_distortion(args.spec)
        elif args.cmd == "norm":
            out = cmd_norm(args.data, args.sigma, args.p, args.vecnorm)
        elif args.cmd == "dual-norm":
            out = cmd_dual_norm(args.data, args.sigma, args.p, args.vecnorm)
        elif args.cmd == "dominates":
            out = cmd_dominates(args.data_zp, args.data_z, args.sigma)
        elif args.cmd == "risk":
            out = cmd_risk(args.data_z, args.data_y, args.p, args.vecnorm, args.y2)
        elif args.cmd == "certify":
            out = cmd_certify(args.data, args.sigma, args.p, args.vecnorm, args.oracle, args.restarts)
            if out.get("oracle_consistent") is False or not out["envelope_dominates"]:
                sys.stdout.write(dumps(out))
                return EXIT_GAP
        else:
            out, code = cmd_report(args.manifest, args.workers)
            sys.stdout.write(dumps(out))
            return code
    except GapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GAP
    except (ValidationError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    sys.stdout.write(dumps(out))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
