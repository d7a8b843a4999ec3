"""Matrix Market files, scenario files and CSV output."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import InputError
from .models import assemble_second_order, chain_scenario
from .policy import EtaPolicy, XiPolicy
from .reach import ReachConfig, ReachResult
from .sets import Zonotope, interval_hull, polygon_2d, project
from .sparse_linalg import SparseMatrix


# ------------------------------------------------------------ Matrix Market

def load_matrix_market(path) -> SparseMatrix:
    """Read a real coordinate Matrix Market file (general or symmetric)."""
    path = Path(path)
    with open(path) as fh:
        header = fh.readline()
        parts = header.strip().lower().split()
        if len(parts) != 5 or parts[0] != "%%matrixmarket" or parts[1] != "matrix":
            raise InputError(f"{path}: malformed Matrix Market header")
        fmt, field_, sym = parts[2], parts[3], parts[4]
        if fmt != "coordinate":
            raise InputError(f"{path}: only coordinate format is supported")
        if field_ not in ("real", "integer", "double"):
            raise InputError(f"{path}: field {field_!r} is not real")
        if sym not in ("general", "symmetric"):
            raise InputError(f"{path}: symmetry {sym!r} is not supported")
        line = fh.readline()
        while line and (line.startswith("%") or not line.strip()):
            line = fh.readline()
        try:
            nr, nc, nnz = (int(t) for t in line.split())
        except ValueError as exc:
            raise InputError(f"{path}: malformed size line {line.strip()!r}") from exc
        rows, cols, vals = [], [], []
        for ln in fh:
            if not ln.strip() or ln.startswith("%"):
                continue
            t = ln.split()
            if len(t) != 3:
                raise InputError(f"{path}: malformed entry {ln.strip()!r}")
            try:
                i, j, v = int(t[0]) - 1, int(t[1]) - 1, float(t[2])
            except ValueError as exc:
                raise InputError(f"{path}: malformed entry {ln.strip()!r}") from exc
            if not (0 <= i < nr and 0 <= j < nc):
                raise InputError(f"{path}: entry ({i + 1}, {j + 1}) out of bounds for {nr} x {nc}")
            rows.append(i)
            cols.append(j)
            vals.append(v)
    if len(vals) != nnz:
        raise InputError(f"{path}: expected {nnz} entries, found {len(vals)}")
    rows, cols, vals = np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64), np.array(vals)
    if sym == "symmetric":
        if np.any(rows < cols):
            raise InputError(f"{path}: symmetric file has entries above the diagonal")
        off = rows != cols
        rows, cols, vals = (np.concatenate([rows, cols[off]]), np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, vals[off]]))
    return SparseMatrix.from_coo(rows, cols, vals, (nr, nc))


def write_matrix_market(path, A: SparseMatrix) -> None:
    """Write in general coordinate format with round-trippable floats."""
    entries = list(A.entries())
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{A.nrows} {A.ncols} {len(entries)}\n")
        for i, j, x in entries:
            fh.write(f"{i + 1} {j + 1} {float(x)!r}\n")


# ---------------------------------------------------------------- scenarios

@dataclass
class Scenario:
    A: SparseMatrix
    B: SparseMatrix | None
    X0: Zonotope
    U: Zonotope
    cfg: ReachConfig
    projections: list = field(default_factory=list)
    unsafe: dict = field(default_factory=dict)
    simulation: dict = field(default_factory=dict)
    source: Path | None = None


def _vec(v, n: int | None, what: str) -> np.ndarray:
    a = np.atleast_1d(np.asarray(v, dtype=float))
    if a.ndim != 1:
        raise InputError(f"{what}: expected a vector")
    if n is not None:
        if a.size == 1:
            a = np.full(n, a[0])
        elif a.size != n:
            raise InputError(f"{what}: length {a.size}, expected {n}")
    return a


def parse_zonotope(spec, n: int, what: str) -> Zonotope:
    """``{box: {center, radius}}`` or ``{center, generators}`` (one row per generator)."""
    if not isinstance(spec, dict):
        raise InputError(f"{what}: expected a mapping")
    if "box" in spec:
        b = spec["box"]
        c = _vec(b.get("center", 0.0), n, f"{what}.box.center")
        r = _vec(b.get("radius", 0.0), n, f"{what}.box.radius")
        if np.any(r < 0):
            raise InputError(f"{what}: negative box radius")
        idx = np.flatnonzero(r)
        G = np.zeros((n, idx.size))
        G[idx, np.arange(idx.size)] = r[idx]
        return Zonotope(c, G)
    if "center" not in spec:
        raise InputError(f"{what}: needs 'box' or 'center'")
    c = _vec(spec["center"], n, f"{what}.center")
    rows = spec.get("generators") or []
    G = np.zeros((n, len(rows)))
    for i, g in enumerate(rows):
        G[:, i] = _vec(g, n, f"{what}.generators[{i}]")
        if G.shape[0] != n:
            raise InputError(f"{what}: generator {i} has wrong length")
    return Zonotope(c, G)


def _matrix(value, base: Path, what: str) -> SparseMatrix:
    if isinstance(value, str):
        p = (base / value) if not Path(value).is_absolute() else Path(value)
        if not p.exists():
            raise InputError(f"{what}: file {p} not found")
        return load_matrix_market(p)
    try:
        return SparseMatrix(np.asarray(value, dtype=float))
    except ValueError as exc:
        raise InputError(f"{what}: {exc}") from exc


def parse_config(d: dict) -> ReachConfig:
    xi = XiPolicy(target=float(d.get("xi_target", 1e-12)), cap=int(d.get("xi_cap", 200)),
                  fixed=None if d.get("xi_fixed") is None else int(d["xi_fixed"]),
                  tol=float(d.get("arnoldi_tol", 1e-14)))
    eta = EtaPolicy(eps_max=float(d.get("eta_eps_max", 0.5)), remainder_tol=float(d.get("eta_remainder_tol", 1e-16)),
                    cap=int(d.get("eta_cap", 64)))
    try:
        return ReachConfig(delta=float(d["delta"]), t_f=float(d["t_f"]), input_mode=d.get("input_mode", "varying"),
                           error_channel=d.get("error_channel", "interval"), xi_policy=xi, eta_policy=eta,
                           strict_soundness=bool(d.get("strict", False)))
    except KeyError as exc:
        raise InputError(f"config: missing {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise InputError(f"config: {exc}") from exc


def load_scenario(path) -> Scenario:
    """Read a YAML scenario and validate every dimension before any computation."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{path}: top level must be a mapping")
    return scenario_from_dict(doc, path.parent, path)


def scenario_from_dict(doc: dict, base: Path = Path("."), source: Path | None = None) -> Scenario:
    sysd = doc.get("system")
    if not isinstance(sysd, dict):
        raise InputError("scenario needs a 'system' section")
    X0_override = U_override = None
    if "A" in sysd:
        A = _matrix(sysd["A"], base, "system.A")
        B = _matrix(sysd["B"], base, "system.B") if sysd.get("B") is not None else None
    elif "second_order" in sysd:
        so = sysd["second_order"]
        try:
            M, D, K = (_matrix(so[k], base, f"system.second_order.{k}") for k in ("M", "D", "K"))
        except KeyError as exc:
            raise InputError(f"system.second_order: missing {exc.args[0]!r}") from exc
        A, B = assemble_second_order(M, D, K)
    elif "chain" in sysd:
        ch = sysd["chain"] or {}
        A, B, X0_override, U_override = chain_scenario(
            nodes=int(ch.get("nodes", 1260)), load=float(ch.get("load", 1.0)),
            x0_radius=float(ch.get("x0_radius", 1e-3)), x0_nodes=int(ch.get("x0_nodes", 4)))
    else:
        raise InputError("system needs 'A', 'second_order' or 'chain'")
    n = A.nrows
    if A.ncols != n:
        raise InputError(f"A is {A.nrows} x {A.ncols}, must be square")
    if B is not None and B.nrows != n:
        raise InputError(f"B has {B.nrows} rows, A has {n}")
    m = n if B is None else B.ncols
    X0 = parse_zonotope(doc["X0"], n, "X0") if "X0" in doc else X0_override
    U = parse_zonotope(doc["U"], m, "U") if "U" in doc else U_override
    if X0 is None:
        raise InputError("scenario needs 'X0'")
    if U is None:
        U = Zonotope(np.zeros(m))
    cfg = parse_config(doc.get("config") or {})
    out = doc.get("outputs") or {}
    projections = []
    for pr in out.get("projections", []) or []:
        if len(pr) != 2 or not all(0 <= int(i) < n for i in pr):
            raise InputError(f"projection {pr} out of range for dimension {n}")
        projections.append((int(pr[0]), int(pr[1])))
    unsafe = {}
    for u in out.get("unsafe", []) or []:
        i = int(u["coordinate"])
        if not 0 <= i < n:
            raise InputError(f"unsafe coordinate {i} out of range")
        lo, hi = float(u.get("lo", -np.inf)), float(u.get("hi", np.inf))
        if lo > hi:
            raise InputError(f"unsafe range for coordinate {i} is empty")
        unsafe[i] = (lo, hi)
    return Scenario(A, B, X0, U, cfg, projections, unsafe, doc.get("simulation") or {}, source)


# ---------------------------------------------------------------------- CSV

def hull_rows(result: ReachResult, kind: str = "interval"):
    sets = result.time_interval_sets if kind == "interval" else result.time_point_sets
    delta = result.diagnostics["run"]["delta"]
    for k, R in enumerate(sets, start=1):
        iv = interval_hull(R)
        t_hi = k * delta
        t_lo = (k - 1) * delta if kind == "interval" else t_hi
        row = [k, t_lo, t_hi]
        for lo, hi in zip(iv.inf, iv.sup):
            row += [lo, hi]
        yield row


def _r(x) -> str:
    return repr(float(x)) if not isinstance(x, (int, np.integer)) else str(int(x))


def write_hulls_csv(path, result: ReachResult, kind: str = "interval") -> None:
    """Header: step, t_lo, t_hi, lo_0, hi_0, lo_1, hi_1, ..."""
    n = result.time_interval_sets[0].dim
    header = ["step", "t_lo", "t_hi"] + [f"{s}_{i}" for i in range(n) for s in ("lo", "hi")]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in hull_rows(result, kind):
            w.writerow([_r(x) for x in row])


def read_hulls_csv(path):
    """Returns (steps, t_lo, t_hi, lo, hi) arrays."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        rows = [r for r in rd]
    if header[:3] != ["step", "t_lo", "t_hi"]:
        raise InputError(f"{path}: not a hull file")
    a = np.array([[float(x) for x in r] for r in rows]) if rows else np.zeros((0, len(header)))
    return a[:, 0].astype(int), a[:, 1], a[:, 2], a[:, 3::2], a[:, 4::2]


def projection_polygons(result: ReachResult, dims):
    return [polygon_2d(project(R, dims)) for R in result.time_interval_sets]


def write_polygons_csv(path, result: ReachResult, dims) -> list:
    """Header: step, vertex, x_<i>, x_<j>; one row per polygon vertex."""
    polys = projection_polygons(result, dims)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "vertex", f"x_{dims[0]}", f"x_{dims[1]}"])
        for k, P in enumerate(polys, start=1):
            for v, (x, y) in enumerate(P):
                w.writerow([k, v, _r(x), _r(y)])
    return polys


def write_trajectories_csv(path, trajectories) -> None:
    """Header: trajectory, t, x_0, ..., x_{n-1}."""
    n = trajectories[0].states.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trajectory", "t"] + [f"x_{i}" for i in range(n)])
        for j, tr in enumerate(trajectories):
            for t, x in zip(tr.times, tr.states):
                w.writerow([j, _r(t)] + [_r(v) for v in x])


def trajectory_to_text(tr) -> str:
    """Same line layout as the set text format: a header, then one row per time."""
    lines = [f"trajectory {tr.states.shape[1]} {len(tr.times)}"]
    lines += [" ".join(repr(float(v)) for v in (t, *x)) for t, x in zip(tr.times, tr.states)]
    return "\n".join(lines) + "\n"


def trajectory_from_text(text: str):
    from .oracle import Trajectory
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "trajectory":
        raise InputError("not a trajectory")
    n, T = int(head[1]), int(head[2])
    rows = np.array([[float(v) for v in ln.split()] for ln in lines[1:]])
    if rows.shape != (T, n + 1):
        raise InputError("malformed trajectory text")
    return Trajectory(rows[:, 0], rows[:, 1:])
