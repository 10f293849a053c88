"""Command-line entry point: synthesis, scattering, evolution, comparison,
figure data and waveguide design.

Every subcommand computes all of its outputs in memory first and then
writes them through temporary files renamed into place, so a failure never
leaves partial files behind.  Exit codes: 0 success, 2 bad parameters,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import darboux, dynamics, scattering, waveguide
from .extended import scatter_family_dd
from .errors import LatticeToolError, NumericalError, ParameterError
from .lattice import Lattice, defect_window

OUTDIR_ENV = "DARBOUX_LATTICE_OUTDIR"
EXIT_OK, EXIT_PARAM, EXIT_NUMERIC = 0, 2, 3


# ---------------------------------------------------------------------------
# config and output helpers
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    """One subcommand invocation: its name, parameters and output directory."""

    command: str
    params: dict = field(default_factory=dict)
    out_dir: str = "."

    def to_dict(self):
        return {"command": self.command, "params": self.params, "out_dir": self.out_dir}

    @classmethod
    def from_dict(cls, d):
        return cls(d["command"], dict(d.get("params", {})), d.get("out_dir", "."))

    def save(self, path):
        _atomic_write({Path(path): _json_bytes(self.to_dict())})

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def out_path(self, key, default_name):
        p = self.params.get(key)
        return Path(p) if p else Path(self.out_dir) / default_name


def _json_bytes(obj):
    return (json.dumps(obj, indent=1) + "\n").encode()


def _fmt(x):
    return repr(float(x))


def _csv_bytes(header, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue().encode()


def _atomic_write(files):
    """Write {path: bytes} all-or-nothing (as far as the filesystem allows)."""
    staged = []
    try:
        for path, data in files.items():
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix="." + path.name, suffix=".tmp")
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            staged.append((tmp, path))
        for tmp, path in staged:
            os.replace(tmp, path)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def _load_lattice(path):
    try:
        return Lattice.load(path)
    except FileNotFoundError as exc:
        raise ParameterError(f"lattice file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ParameterError(f"lattice file is not JSON: {path}") from exc


def _load_levels(path):
    try:
        d = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ParameterError(f"levels file not found: {path}") from exc
    return [darboux.LevelSpec.from_dict(x) for x in d["levels"]]


def _sidecar(out: Path, name):
    return out.parent / (name if out.stem == "lattice" else f"{out.stem}_{name}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_synth(cfg: ExperimentConfig):
    p = cfg.params
    kind = p["kind"]
    N, omega, alpha, kappa = int(p["levels"]), float(p["omega"]), float(p["alpha"]), float(p["kappa"])
    if kind == "sinh" and darboux._is_integer(alpha):
        raise ParameterError("alpha must be non-integer")
    lat = darboux.synthesize_family(kind, N, omega, alpha, kappa, p.get("sites"))
    levels = darboux.family_levels(kind, N, omega, alpha, kappa)
    out = cfg.out_path("out", "lattice.json")
    side = {"kind": kind, "N": N, "omega1": omega, "alpha": alpha, "kappa": kappa,
            "levels": [lv.to_dict() for lv in levels]}
    _atomic_write({out: _json_bytes(lat.to_dict()), _sidecar(out, "levels.json"): _json_bytes(side)})
    return {"lattice": str(out), "sites": lat.size}


def cmd_scatter(cfg: ExperimentConfig):
    p = cfg.params
    q = scattering.default_q_grid(int(p["q_samples"]))
    if p.get("analytic"):
        res = scattering.scatter_analytic(_load_levels(p["analytic"]), q)
    else:
        res = scattering.scatter_numeric(_load_lattice(p["lattice"]), q)
    out = cfg.out_path("out", "scatter.csv")
    cols = [res.q, res.r.real, res.r.imag, res.t.real, res.t.imag, res.phase,
            np.abs(res.r) ** 2 + np.abs(res.t) ** 2]
    _atomic_write({out: _csv_bytes(["q", "re_r", "im_r", "re_t", "im_t", "phase",
                                    "abs_r2_plus_t2"], cols)})
    return {"scatter": str(out), "flagged": int(res.flagged.sum())}


def _packet(p):
    return dynamics.WavepacketSpec(float(p["n0"]), float(p["width"]), float(p["q0"]))


def _probe_name(t):
    return f"profile_t{float(t):g}.csv"


def cmd_evolve(cfg: ExperimentConfig):
    p = cfg.params
    lat = _load_lattice(p["lattice"])
    probes = [float(x) for x in (p.get("probe") or [])]
    tr = dynamics.evolve(lat, _packet(p), float(p["tmax"]), float(p["dt"]), probe_times=probes)
    out = cfg.out_path("out", "trace.csv")
    files = {out: _csv_bytes(["t", "P_total", "centroid"], [tr.times, tr.P_total, tr.centroid])}
    for t in probes:
        files[out.parent / _probe_name(t)] = _csv_bytes(["n", "P_n"], [tr.sites, tr.profile(t)])
    _atomic_write(files)
    return {"trace": str(out), "contamination_time": tr.contamination_time}


def compare_runs(defect: Lattice, free: Lattice, packet, t_max, dt, t_probe):
    td = dynamics.evolve(defect, packet, t_max, dt, probe_times=(t_probe,))
    tf = dynamics.evolve(free, packet, t_max, dt, probe_times=(t_probe,))
    pd = td.profile(t_probe)
    core = td.core
    left = core.start if len(core) else defect.offset
    refl = float(pd[td.sites < left].sum() / pd.sum())
    report = {
        "t_probe": t_probe,
        "advancement": dynamics.time_of_flight(td, tf, t_probe),
        "distortion": dynamics.distortion(td, tf, t_probe),
        "max_reflected_probability": refl,
        "P_total_max": float(td.P_total.max()),
        "P_total_min": float(td.P_total.min()),
        "P_total_final": float(td.P_total[-1]),
        "centroid_defect": float(td.centroid[td.sample_index(t_probe)]),
        "centroid_free": float(tf.centroid[tf.sample_index(t_probe)]),
        "contamination_time": td.contamination_time,
    }
    return report, td, tf


def cmd_compare(cfg: ExperimentConfig):
    p = cfg.params
    defect = _load_lattice(p["lattice"])
    free = (_load_lattice(p["free"]) if p.get("free")
            else Lattice.uniform(defect.size, defect.kappa_inf, defect.offset))
    report, _, _ = compare_runs(defect, free, _packet(p), float(p["tmax"]), float(p["dt"]),
                                float(p["probe"]))
    if p.get("levels"):
        dr = scattering.group_delay(_load_levels(p["levels"]), float(p["q0"]))
        report["tau_g_analytic"] = dr.tau_g
    out = cfg.out_path("out", "compare.json")
    _atomic_write({out: _json_bytes(report)})
    return report


def _hop_table(lat, lo, hi):
    n = np.arange(lo, hi + 1)
    k = lat.hop(n)
    return ["n", "re_kappa", "im_kappa"], [n, k.real, k.imag]


FIG1 = {"a": ("cosh", 3, 0.6, 0.0), "b": ("sinh", 3, 0.01, 0.5)}
FIG2_OMEGAS = (0.01, 0.1, 0.5, 1.0, 2.0, 4.0)
FIG4_OMEGAS = (0.6, 0.3, 0.2, 0.02)
PLOT_HALF = 30


def _fig1_profile(which):
    kind, N, w, a = FIG1[which]
    lat = darboux.synthesize_family(kind, N, w, a)
    c = int(round(darboux.family_center(N, a)))
    return {f"fig1{which}.csv": _csv_bytes(*_hop_table(lat, c - PLOT_HALF, c + PLOT_HALF))}


def _fig1_phase(which):
    kind, N, w, a = FIG1[which]
    lat = darboux.synthesize_family(kind, N, w, a)
    q = scattering.default_q_grid()
    an = scattering.scatter_analytic(darboux.family_levels(kind, N, w, a), q)
    # plain doubles lose the small-omega band edges to hop rounding
    nu = scatter_family_dd(kind, N, w, a, q=q, sites=lat.size)
    # align the numeric branch with the analytic one at the carrier
    mid = len(q) // 2
    shift = 2 * np.pi * np.round((an.phase[mid] - nu.phase[mid]) / (2 * np.pi))
    name = {"a": "fig1c.csv", "b": "fig1d.csv"}[which]
    return {name: _csv_bytes(["q", "phase_analytic", "phase_numeric"],
                             [q, an.phase, nu.phase + shift])}


def _fig2(delta):
    q = np.linspace(0.0, np.pi, 513)
    cols = [q] + [scattering.level_phase(w, delta, q) for w in FIG2_OMEGAS]
    head = ["q"] + [f"phi_omega_{w:g}" for w in FIG2_OMEGAS]
    return {f"fig2{'a' if delta > 0 else 'b'}.csv": _csv_bytes(head, cols)}


def _fig4():
    n = np.arange(3 - PLOT_HALF, 4 + PLOT_HALF + 1)
    cols = [n] + [darboux.family_hops("cosh", 3, w, 0.0, n).real for w in FIG4_OMEGAS]
    head = ["n"] + [f"kappa_omega_{w:g}" for w in FIG4_OMEGAS]
    return {"fig4.csv": _csv_bytes(head, cols)}


def _fig_dynamics(which):
    kind, N, w, a = FIG1[which]
    lat = darboux.synthesize_family(kind, N, w, a)
    free = Lattice.uniform(lat.size, lat.kappa_inf, lat.offset)
    report, td, tf = compare_runs(lat, free, dynamics.WavepacketSpec(70, 10, np.pi / 2),
                                  100.0, 0.005, 70.0)
    name = {"a": "fig3c", "b": "fig5c"}[which]
    return {
        f"{name}_profiles.csv": _csv_bytes(["n", "P_defect", "P_free"],
                                           [td.sites, td.profile(70.0), tf.profile(70.0)]),
        f"{name}_ptotal.csv": _csv_bytes(["t", "P_total_defect", "P_total_free"],
                                         [td.times, td.P_total, tf.P_total]),
        f"{name}_report.json": _json_bytes(report),
    }


FIGURES = {
    "fig1a": lambda: _fig1_profile("a"),
    "fig1b": lambda: _fig1_profile("b"),
    "fig1c": lambda: _fig1_phase("a"),
    "fig1d": lambda: _fig1_phase("b"),
    "fig2a": lambda: _fig2(1),
    "fig2b": lambda: _fig2(-1),
    "fig3c": lambda: _fig_dynamics("a"),
    "fig4": _fig4,
    "fig5c": lambda: _fig_dynamics("b"),
}


def cmd_figdata(cfg: ExperimentConfig):
    fid = cfg.params["figure"]
    ids = sorted(FIGURES) if fid == "all" else [fid]
    for f in ids:
        if f not in FIGURES:
            raise ParameterError(f"unknown figure id {f!r}; choose from {', '.join(sorted(FIGURES))}")
    out_dir = Path(cfg.params.get("out_dir") or cfg.out_dir)
    files = {}
    for f in ids:
        files.update({out_dir / k: v for k, v in FIGURES[f]().items()})
    _atomic_write(files)
    return {"written": sorted(str(k) for k in files)}


def cmd_design(cfg: ExperimentConfig):
    p = cfg.params
    lat = _load_lattice(p["lattice"])
    design = waveguide.solve_modulation(float(p["abeta_product"]), float(p["lambda"]))
    design = waveguide.realize_lattice(lat, design)
    out = cfg.out_path("out", "design.json")
    d = design.to_dict()
    d["Lambda_A_gamma_over_2pi"] = design.gamma_product
    d["Lambda_A_beta_over_2pi"] = design.beta_product
    _atomic_write({out: _json_bytes(d)})
    return {"design": str(out), "Gamma": design.Gamma, "gamma_product": design.gamma_product}


COMMANDS = {
    "synth": cmd_synth,
    "scatter": cmd_scatter,
    "evolve": cmd_evolve,
    "compare": cmd_compare,
    "figdata": cmd_figdata,
    "design-modulation": cmd_design,
}


def run_config(cfg: ExperimentConfig):
    if cfg.command not in COMMANDS:
        raise ParameterError(f"unknown command {cfg.command!r}")
    return COMMANDS[cfg.command](cfg)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_packet(sp):
    sp.add_argument("--n0", type=float, default=70.0)
    sp.add_argument("--width", type=float, default=10.0)
    sp.add_argument("--q0", type=float, default=np.pi / 2)
    sp.add_argument("--tmax", type=float, default=100.0)
    sp.add_argument("--dt", type=float, default=0.005)


def build_parser():
    ap = argparse.ArgumentParser(prog="darboux-lattice", description=__doc__.splitlines()[0])
    ap.add_argument("--save-config", metavar="PATH",
                    help="also write the invocation as a JSON config")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="closed-form lattice with 2N bound levels")
    sp.add_argument("--kind", choices=["cosh", "sinh"], required=True)
    sp.add_argument("--levels", type=int, required=True, help="number N of level pairs")
    sp.add_argument("--omega", type=float, required=True)
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.add_argument("--kappa", type=float, default=1.0)
    sp.add_argument("--sites", type=int, default=None, help="window size (auto if omitted)")
    sp.add_argument("--out")

    sp = sub.add_parser("scatter", help="r(q), t(q) and phase on a q grid")
    sp.add_argument("--lattice")
    sp.add_argument("--analytic", metavar="LEVELS_JSON")
    sp.add_argument("--q-samples", type=int, default=512)
    sp.add_argument("--out")

    sp = sub.add_parser("evolve", help="propagate a Gaussian packet")
    sp.add_argument("--lattice", required=True)
    _add_packet(sp)
    sp.add_argument("--probe", type=float, action="append")
    sp.add_argument("--out")

    sp = sub.add_parser("compare", help="defect vs free packet comparison")
    sp.add_argument("--lattice", required=True)
    sp.add_argument("--free", help="reference lattice (uniform chain on the same window if omitted)")
    sp.add_argument("--levels", help="levels.json for the analytic group delay")
    _add_packet(sp)
    sp.add_argument("--probe", type=float, default=70.0)
    sp.add_argument("--out")

    sp = sub.add_parser("figdata", help="data behind the figures")
    sp.add_argument("figure", help="figure id or 'all': " + ", ".join(sorted(FIGURES)))
    sp.add_argument("--out-dir")

    sp = sub.add_parser("design-modulation", help="waveguide modulation for a lattice")
    sp.add_argument("--lattice", required=True)
    sp.add_argument("--lambda", dest="lambda", type=float, default=0.1)
    sp.add_argument("--abeta-product", type=float, default=2.0)
    sp.add_argument("--out")

    sp = sub.add_parser("run", help="execute a saved JSON config")
    sp.add_argument("config")
    return ap


def _validate(cfg: ExperimentConfig):
    p = cfg.params
    if cfg.command == "synth":
        if p["levels"] < 1:
            raise ParameterError("--levels must be >= 1")
        if not p["omega"] > 0:
            raise ParameterError("--omega must be positive")
        if not p["kappa"] > 0:
            raise ParameterError("--kappa must be positive")
        if p["kind"] == "sinh" and darboux._is_integer(p["alpha"]):
            raise ParameterError("alpha must be non-integer")
    elif cfg.command == "scatter":
        if bool(p.get("lattice")) == bool(p.get("analytic")):
            raise ParameterError("give exactly one of --lattice or --analytic")
        if p["q_samples"] < 2:
            raise ParameterError("--q-samples must be >= 2")
    elif cfg.command in ("evolve", "compare"):
        dynamics.WavepacketSpec(p["n0"], p["width"], p["q0"])
        if not 0 < p["dt"] <= 0.01:
            raise ParameterError("--dt must lie in (0, 0.01]")


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "run":
            cfg = ExperimentConfig.load(args.config)
        else:
            params = {k: v for k, v in vars(args).items() if k not in ("command", "save_config")}
            cfg = ExperimentConfig(args.command, params, os.environ.get(OUTDIR_ENV, "."))
        _validate(cfg)
        if args.save_config:
            cfg.save(args.save_config)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            result = run_config(cfg)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (LatticeToolError, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    print(json.dumps(result))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
