"""Command line front end.

Reads a flat ``key = value`` config file, runs one subcommand and writes
``<command>.json`` (and ``<command>.csv`` for tabular commands) to the
output directory. JSON is written with sorted keys and a schema version so
that identical inputs give byte-identical files.
"""

import argparse
import configparser
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import bubbles, lattice, pohozaev, quadrature, radial, reduced
from .config import ProblemConfig, default_coefficients
from .errors import ConfigError, ConvergenceError, IdentityFailure
from .fields import random_smooth_radial

SCHEMA_VERSION = "1.0"
COMMANDS = ("verify-kernel", "pohozaev-check", "solve", "scan-L", "constants", "report")

TOLERANCE_DEFAULTS = {
    "roundtrip": 1e-7,
    "radial_vanishing": 1e-10,
    "gVV": 1e-9,
    "transport": 1e-8,
    "solver": 1e-12,
    "uniqueness": 1e-10,
    "slope": 0.01,
    "rate": 0.25,
}


@dataclass
class RunConfig:
    problem: ProblemConfig
    selection: str = "full-box"
    radius: int = 1
    points: tuple = ()
    L_scan: tuple = (8.0, 16.0, 32.0, 64.0)
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCE_DEFAULTS))
    commands: tuple = ()
    output_dir: str = "polybubble-out"
    seed: int = 0
    verify_pairs: tuple = ((1, 5), (2, 7), (3, 9), (2, 10))
    verify_perturb: Fraction = None
    poh_N: int = 5
    poh_m: tuple = (1, 2, 3)
    poh_pairs: int = 10
    poh_degree: int = 30
    poh_radial_nodes: int = 16
    V_N: int = 7
    V_mu: float = 2.0
    norm_radial: int = 48
    norm_sphere_degree: int = 3
    cutoff_degree: int = 2
    restarts: int = 20
    samples: int = 200

    def lattice(self, L=None):
        L = self.problem.L if L is None else L
        return lattice.generate(self.problem.k, self.selection, radius=self.radius,
                                points=self.points or None, N=self.problem.N, m=self.problem.m, L=L)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _floats(text):
    return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())


def _ints(text):
    return tuple(int(t) for t in text.replace(";", ",").split(",") if t.strip())


def _pairs(text):
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        m, N = item.split(":")
        out.append((int(m), int(N)))
    return tuple(out)


def _points(text):
    return tuple(tuple(int(c) for c in p.split(",")) for p in text.split(";") if p.strip())


def parse_config(text):
    """Parse config text; every ProblemConfig invariant is checked here."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    body = text if text.lstrip().startswith("[") else "[run]\n" + text
    try:
        cp.read_string(body)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    sec = cp[cp.sections()[0]] if cp.sections() else {}
    kv = {k.strip(): v.strip() for k, v in sec.items()}
    used = set()

    def get(key, conv, default):
        used.add(key)
        if key not in kv:
            return default
        try:
            return conv(kv[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {kv[key]!r} ({exc})") from None

    N = get("N", int, None)
    m = get("m", int, None)
    if N is None or m is None:
        raise ConfigError("config must set N and m")
    if N <= 2 * m:
        raise ConfigError(f"N > 2m is required for the bubble profile, got N={N}, m={m}")
    a_sum = get("a_sum", float, -1.0)
    a = get("a", _floats, None) or default_coefficients(N, a_sum)
    problem = ProblemConfig(N=N, m=m, k=get("k", int, 1), beta=get("beta", float, None) or float(N - 2 * m) + 1.0,
                            a=a, K0=get("K0", float, 1.0), L=get("L", float, 16.0),
                            vartheta=get("vartheta", float, 0.1))
    tols = dict(TOLERANCE_DEFAULTS)
    for key in list(kv):
        if key.startswith("tol."):
            name = key[4:]
            if name not in tols:
                raise ConfigError(f"unknown tolerance {key!r}; known: {sorted(tols)}")
            tols[name] = get(key, float, None)
    perturb = get("verify.perturb", Fraction, None)
    rc = RunConfig(
        problem=problem,
        selection=get("lattice.selection", str, "full-box"),
        radius=get("lattice.radius", int, 1),
        points=get("lattice.points", _points, ()),
        L_scan=get("L_scan", _floats, (8.0, 16.0, 32.0, 64.0)),
        tolerances=tols,
        commands=get("commands", lambda t: tuple(c.strip() for c in t.split(",") if c.strip()), ()),
        output_dir=get("output_dir", str, "polybubble-out"),
        seed=get("seed", int, 0),
        verify_pairs=get("verify.pairs", _pairs, ((1, 5), (2, 7), (3, 9), (2, 10))),
        verify_perturb=perturb,
        poh_N=get("pohozaev.N", int, 5),
        poh_m=get("pohozaev.m", _ints, (1, 2, 3)),
        poh_pairs=get("pohozaev.pairs", int, 10),
        poh_degree=get("pohozaev.degree", int, 30),
        poh_radial_nodes=get("pohozaev.radial_nodes", int, 16),
        V_N=get("pohozaev.V_N", int, 7),
        V_mu=get("pohozaev.V_mu", float, 2.0),
        norm_radial=get("norm.radial", int, 48),
        norm_sphere_degree=get("norm.sphere_degree", int, 3),
        cutoff_degree=get("cutoff_degree", int, 2),
        restarts=get("uniqueness.restarts", int, 20),
        samples=get("appendix.samples", int, 200),
    )
    unknown = sorted(set(kv) - used)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    for mm, NN in rc.verify_pairs:
        if NN <= 2 * mm:
            raise ConfigError(f"verify.pairs entry (m={mm}, N={NN}) needs N > 2m")
    for c in rc.commands:
        if c not in COMMANDS:
            raise ConfigError(f"unknown command {c!r} in config")
    if rc.selection not in ("full-box", "explicit-list"):
        raise ConfigError(f"unknown lattice.selection {rc.selection!r}")
    rc.lattice()  # validates k-range and the point list
    return rc


def load_config(path):
    return parse_config(Path(path).read_text())


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def dumps(payload):
    return json.dumps(_clean(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_outputs(out_dir, command, payload, rows=None, columns=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = dict(payload, schema_version=SCHEMA_VERSION, command=command)
    paths = [out / f"{command}.json"]
    paths[0].write_text(dumps(payload))
    if rows is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(float(r[c])) if isinstance(r[c], (float, np.floating)) else r[c] for c in columns])
        paths.append(out / f"{command}.csv")
        paths[1].write_text(buf.getvalue())
    return paths


def _problem_dict(cfg):
    return {"N": cfg.N, "m": cfg.m, "k": cfg.k, "beta": cfg.beta, "a": list(cfg.a), "K0": cfg.K0,
            "L": cfg.L, "vartheta": cfg.vartheta, "tau": cfg.tau, "kappa": cfg.kappa}


# ---------------------------------------------------------------------------
# commands; each returns (exit status, payload, rows, columns)
# ---------------------------------------------------------------------------

def cmd_verify_kernel(rc):
    entries = []
    ok = True
    for m, N in rc.verify_pairs:
        res = radial.verify_bubble_pde(m, N, rc.verify_perturb)
        cprime = radial.polyharmonic_constant(m, N)
        alphas = radial.farfield_coefficients(m, N, m)
        # every retained far-field power must be m-harmonic
        harmonic = all(radial.RadialSum.term(1, -(N - 2 * m + 2 * h), 0, N).neg_laplacian_power(m).is_zero()
                       for h in range(m))
        # the expansion reproduces the profile at large r up to the first dropped power
        r = 1e3
        prof = float(radial.bubble_profile(m, N)(np.array([r]))[0])
        series = sum(float(al) * r ** (-(N - 2 * m + 2 * h)) for h, al in enumerate(alphas))
        far_rel = abs(prof - series) / abs(prof)
        nxt = abs(float(radial.generalized_binomial(Fraction(-(N - 2 * m), 2), m)))
        far_ok = far_rel < 2.0 * nxt * r ** (-2 * m)
        exact = res.is_zero()
        entry_ok = exact and cprime > 0 and harmonic and far_ok
        ok &= entry_ok
        entries.append({"m": m, "N": N, "pde_residual_zero": exact, "pde_residual": repr(res),
                        "cprime": cprime, "cprime_positive": cprime > 0, "farfield_alpha": alphas,
                        "farfield_m_harmonic": harmonic, "farfield_rel_error_r1000": far_rel,
                        "ok": entry_ok})
    payload = {"entries": entries, "ok": ok,
               "perturb": rc.verify_perturb if rc.verify_perturb is not None else None}
    return (0 if ok else 1), payload, None, None


def cmd_pohozaev(rc):
    tol = rc.tolerances
    rng = np.random.default_rng(rc.seed)
    recs = pohozaev.roundtrip_suite(rc.poh_m, rc.poh_N, rc.poh_pairs, rc.seed,
                                    rc.poh_degree, rc.poh_radial_nodes)
    rt_worst = max(max(r["f_rel_error"], r["g_rel_error"]) for r in recs)
    failures = []
    if rt_worst >= tol["roundtrip"]:
        failures.append(f"round trip worst rel error {rt_worst:.3e}")

    vanish = []
    for m in rc.poh_m:
        N = rc.poh_N
        c = rng.uniform(-0.3, 0.3, N)
        gu = radial.RadialSum.term(1, 0, Fraction(N - 2 * m, 2), N) if N > 2 * m else \
            radial.RadialSum.term(1, 2, 1, N)
        gv = random_smooth_radial(rng, N)
        i = int(rng.integers(N))
        val, scale = pohozaev.radial_vanishing_f(m, gu, gv, c, 0.8, i, rc.poh_degree)
        rel = abs(val) / scale
        vanish.append({"m": m, "i": i, "integral": val, "scale": scale, "rel": rel})
        if not rel < tol["radial_vanishing"]:
            failures.append(f"radial f vanishing m={m}: {rel:.3e}")

    vid = []
    for m in rc.poh_m:
        N = rc.V_N
        if not N > 2 * m:
            continue
        rep = pohozaev.verify_V_identities(m, N, rc.V_mu)
        g = rep["gVV"]
        g_rel = abs(g["value"]) / g["scale"]
        if not g_rel < tol["gVV"]:
            failures.append(f"gVV m={m}: {g_rel:.3e}")
        transport = 0.0
        for vals in rep["pairs"].values():
            a, b = vals
            sc = max(a["rescaled_scale"], b["rescaled_scale"])
            if sc > 0:
                transport = max(transport, abs(a["rescaled"] - b["rescaled"]) / sc)
        mixed = max(abs(v["integral"] - rep["mixed"]["expected"]) / abs(rep["mixed"]["expected"])
                    for v in rep["mixed"]["values"])
        transport = max(transport, mixed)
        if not transport < tol["transport"]:
            failures.append(f"transport m={m}: {transport:.3e}")
        vid.append({"m": m, "N": N, "mu": rc.V_mu, "gVV_rel": g_rel, "transport_rel": transport,
                    "report": rep})

    payload = {"roundtrip": {"N": rc.poh_N, "degree": rc.poh_degree, "radial_nodes": rc.poh_radial_nodes,
                             "worst_rel_error": rt_worst, "records": recs},
               "radial_vanishing": vanish, "V_identities": vid,
               "tolerances": tol, "failures": failures, "ok": not failures}
    cols = ["m", "pair", "i", "f_volume", "f_surface", "f_rel_error", "g_volume", "g_surface", "g_rel_error"]
    return (0 if not failures else 1), payload, recs, cols


def cmd_solve(rc):
    cfg = rc.problem
    lat = rc.lattice()
    consts = quadrature.constants_table(cfg)
    sys_ = reduced.system_from_config(cfg, lat, consts.B)
    sol = reduced.solve_heights(sys_, tol=rc.tolerances["solver"])
    sol.mu = reduced.recover_mu(sol.a, cfg, lat.L)
    uq = reduced.uniqueness_stress(sys_, rc.restarts, rc.tolerances["solver"], rc.seed)
    lin = reduced.linearized_bound(sys_, sol, seed=rc.seed)
    cen = reduced.refine_centers(cfg, lat, sol, consts)
    rows = []
    P = lat.embedded(cfg.N)
    for j, p in enumerate(lat.points):
        rows.append({"index": j, "point": " ".join(map(str, p)), "a": float(sol.a[j]), "mu": float(sol.mu[j]),
                     "offset_norm": float(np.linalg.norm(cen.offsets[j])),
                     "x1": float(cen.x[j, 0]), "P1": float(P[j, 0])})
    ok = sol.residual < rc.tolerances["solver"] and uq.spread < rc.tolerances["uniqueness"] and \
        lin.sigma_min > 0
    payload = {"problem": _problem_dict(cfg), "n": lat.n, "B": consts.B, "residual": sol.residual,
               "iterations": sol.iterations, "newton_steps": sol.newton_steps,
               "uniqueness_spread": uq.spread, "sigma_min": lin.sigma_min,
               "offset_envelope_constant": cen.envelope, "ok": ok}
    cols = ["index", "point", "a", "mu", "offset_norm", "x1", "P1"]
    return (0 if ok else 1), payload, rows, cols


def cmd_scan(rc):
    cfg = rc.problem
    lat = rc.lattice(1.0)
    consts = quadrature.constants_table(cfg)
    rows, slope, sols = reduced.mu_ladder(cfg, lat, consts, list(rc.L_scan), tol=rc.tolerances["solver"])
    expected = cfg.mu_exponent
    rel = abs(slope - expected) / expected
    table = []
    for r in rows:
        d = dict(r.__dict__)
        d["offset_times_mu2"] = r.max_offset * r.mu_min ** 2
        table.append(d)
    mirror = lat.mirror_map()
    height_asym = 0.0
    if mirror is not None:
        for _, _, ref, _ in sols:
            height_asym = max(height_asym, float(np.max(np.abs(ref.a - ref.a[mirror]) / ref.a)))
    payload = {"problem": _problem_dict(cfg), "n": lat.n, "slope": slope, "expected_slope": expected,
               "slope_rel_error": rel, "slope_deviation_flag": not rel < rc.tolerances["slope"],
               "mirror_height_asymmetry": height_asym, "rows": table}
    cols = list(table[0].keys())
    return 0, payload, table, cols


def cmd_constants(rc):
    t = quadrature.constants_table(rc.problem)
    return 0, {"problem": _problem_dict(rc.problem), "constants": t.to_dict()}, None, None


def cmd_report(rc):
    cfg = rc.problem
    lat = rc.lattice(1.0)
    consts = quadrature.constants_table(cfg)
    ladder = bubbles.residual_ladder(cfg, lat, consts, list(rc.L_scan), rc.norm_radial, rc.norm_sphere_degree)
    rows = [{"L": L, "starstar": n, "refinement_delta": d}
            for L, n, d in zip(ladder.Ls, ladder.norms, ladder.deltas)]
    # kernel orthogonality under two bump choices (must not depend on the bump)
    zchk = []
    for deg in (rc.cutoff_degree, rc.cutoff_degree + 1):
        for which in (1, cfg.N + 1):
            val, scale = bubbles.z_orthogonality(cfg, which, 2.0, deg)
            zchk.append({"cutoff_degree": deg, "which": which, "integral": val, "scale": scale,
                         "entry": "diagonal" if which == cfg.N + 1 else "off-diagonal"})
    _, _, sols = reduced.mu_ladder(cfg, lat, consts, [rc.L_scan[0]])
    bf = bubbles.field_from_ladder(cfg.replace(L=float(rc.L_scan[0])), lat, sols, 0)
    app = bubbles.appendixA_checks(bf, cfg, samples=rc.samples, seed=rc.seed)
    ok = ladder.decreasing and ladder.rel_gap < rc.tolerances["rate"]
    payload = {"problem": _problem_dict(cfg), "residual_ladder": ladder.to_dict(),
               "z_orthogonality": zchk, "appendixA": app, "ok": ok}
    return (0 if ok else 1), payload, rows, ["L", "starstar", "refinement_delta"]


HANDLERS = {
    "verify-kernel": cmd_verify_kernel,
    "pohozaev-check": cmd_pohozaev,
    "solve": cmd_solve,
    "scan-L": cmd_scan,
    "constants": cmd_constants,
    "report": cmd_report,
}


def run_command(command, rc, out_dir=None):
    status, payload, rows, cols = HANDLERS[command](rc)
    paths = write_outputs(out_dir or rc.output_dir, command, payload, rows, cols)
    return status, paths


def build_parser():
    p = argparse.ArgumentParser(prog="polybubble", description=__doc__.splitlines()[0])
    p.add_argument("command", nargs="?", choices=COMMANDS,
                   help="subcommand; if omitted, the config's 'commands' list is run")
    p.add_argument("--config", required=True, help="flat key = value config file")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--seed", type=int, help="random seed (overrides seed)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        rc = load_config(args.config)
    except (ConfigError, configparser.Error, OSError) as exc:
        print(f"config rejected: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        rc.seed = args.seed
    commands = [args.command] if args.command else list(rc.commands)
    if not commands:
        print("no command given", file=sys.stderr)
        return 2
    status = 0
    for c in commands:
        try:
            code, paths = run_command(c, rc, args.out)
        except (ConvergenceError, IdentityFailure) as exc:
            print(f"{c}: failed: {exc}", file=sys.stderr)
            code, paths = 1, []
        for path in paths:
            print(path)
        print(f"{c}: {'ok' if code == 0 else 'FAILED'}")
        status = max(status, code)
    return status


if __name__ == "__main__":
    sys.exit(main())
