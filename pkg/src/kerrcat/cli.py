"""Command-line runner: one experiment per invocation, CSV/JSON outputs plus a run manifest.

Exit status: 0 success, 1 usage error, 2 invalid configuration or output
location, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (ConfigError, ContractError, FitError, InvalidDimensionError, KerrCatError,
                     SearchBracketError, StiffnessError, TruncationError)
from .model import DeviceParams, NoiseConfig, read_config

EXPERIMENTS = ("spectrum", "rabi", "tomo", "rb", "gates", "readout", "qswitch", "coherence",
               "tuneup", "wigner", "energy-surface")
STATES = {"plusX": "+X", "minusX": "-X", "plusY": "+Y", "minusY": "-Y", "plusZ": "+Z", "minusZ": "-Z"}
NOISE = {"full": NoiseConfig, "off": NoiseConfig.off, "cavity": NoiseConfig.cavity_only}


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    experiment: str
    params: dict
    noise: dict
    seed: int
    tolerances: dict = field(default_factory=dict)
    version: str = __version__
    outputs: list = field(default_factory=list)
    wall_clock_s: float = 0.0

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path


def validate_config(path=None, overrides=()) -> dict:
    """Resolved parameters for a config file plus ``key=value`` overrides.

    Unknown keys and invalid values raise ConfigError naming the key; the
    report lists which entries were left at their defaults.
    """
    data = read_config(path) if path is not None else {}
    params = DeviceParams.from_mapping(data).with_overrides(overrides)
    given = set(data) | {o.split("=", 1)[0].strip() for o in overrides}
    cfg = params.to_config()
    return {"params": cfg, "defaulted": sorted(k for k in cfg if k not in given)}


# ------------------------------------------------------------------ output


class _Writer:
    def __init__(self, out_dir: Path):
        self.dir = out_dir
        self.files: list[str] = []

    def csv(self, name: str, header, rows) -> None:
        with open(self.dir / name, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        self.files.append(name)

    def json(self, name: str, obj) -> None:
        (self.dir / name).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
        self.files.append(name)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    return obj


def _range(spec: str) -> np.ndarray:
    try:
        lo, hi, n = spec.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    except ValueError:
        raise ConfigError(f"range {spec!r} is not of the form start:stop:count") from None


# ------------------------------------------------------------- experiments


def _spectrum(args, params, noise, w):
    from .model import Generator, cat_terms
    from .spectrum import default_dim, diagonalize, tuneup_detuning
    from .model import classical_energy_surface

    p = params
    if args.compensate:
        p = p.replace(delta_as=tuneup_detuning(p))
    dim = args.dim or default_dim(p.nbar)
    h = Generator(cat_terms(p, dim, "effective"), (dim,))({"eps2": p.eps2})
    rep = diagonalize(h, p.K, p.eps2)
    w.json("spectrum.json", {**rep.to_dict(), "delta_as_MHz": p.delta_as, "dim": dim})
    x = np.linspace(-3.0, 3.0, 241)
    e = classical_energy_surface(p.K, p.eps2, x)
    w.csv("energy_cut.csv", ["re_alpha [sqrt(photons)]", "energy [MHz]"], zip(x, e))


def _rabi(args, params, noise, w):
    from .experiments import rabi_oscillation

    kw = dict(t_drive=args.t_drive, dim=args.dim or 30, arg_eps_x=args.phase)
    if args.eps2_sweep:
        rows = []
        for e in _range(args.eps2_sweep):
            r = rabi_oscillation(params, float(e), **kw)
            rows.append((math.sqrt(e), r.frequency, r.expected_frequency(params.eps_x), r.nbar))
        w.csv("rabi_sweep.csv", ["sqrt_eps2 [sqrt(MHz)]", "omega_x [MHz]", "omega_x_estimate [MHz]", "nbar [photons]"], rows)
        return
    r = rabi_oscillation(params, **kw)
    w.csv("rabi.csv", ["time [us]", "population_c_plus [1]"], zip(r.times, r.population))
    w.json("rabi.json", {"frequency_MHz": r.frequency, "estimate_MHz": r.expected_frequency(params.eps_x),
                         "contrast": r.contrast, "nbar": r.nbar, "eps2_MHz": r.eps2,
                         "arg_eps_x_rad": r.arg_eps_x})


def _gate_op(name, params):
    from .schedule import x_gate, z_gate
    from .tomography import rx, rz

    table = {
        "identity": (None, np.eye(2)),
        "x90": (lambda: x_gate(math.pi / 2, params), rx(math.pi / 2)),
        "x180": (lambda: x_gate(math.pi, params), rx(math.pi)),
        "xm90": (lambda: x_gate(-math.pi / 2, params), rx(-math.pi / 2)),
        "z90": (lambda: z_gate(params), rz(math.pi / 2)),
        "z90-exp": (lambda: z_gate(params, mode="experimental"), rz(math.pi / 2)),
    }
    op, u = table[name]
    return (op() if op else None), u


def _tomo(args, params, noise, w):
    from .tomography import (PTM, bootstrap_fidelity_error, measure_cardinals, ptm_fidelity,
                             ptm_from_expectations)

    op, u = _gate_op(args.gate, params)
    dim = args.dim or 24
    ref = measure_cardinals(None, params, noise, dim, thermal_init=args.thermal, std=args.std)
    es = ref if op is None else measure_cardinals(op, params, noise, dim, thermal_init=args.thermal,
                                                  std=args.std)
    r = ptm_from_expectations(es, ref)
    ideal = PTM.from_unitary(u)
    w.json("tomo.json", {
        "gate": args.gate, "expectations": es.to_dict(), "mapping_expectations": ref.to_dict(),
        "ptm": r.matrix, "fidelity": ptm_fidelity(r, ideal),
        "bootstrap_std": bootstrap_fidelity_error(es, ideal, ref, args.resamples, args.seed),
    })


def _rb(args, params, noise, w):
    from .tomography import random_sequence_benchmark

    res = random_sequence_benchmark(args.n_max, args.n_samples, params, noise, args.seed,
                                    exact=args.exact)
    w.csv("rb.csv", ["n_gates [count]", "z_mean [1]", "z_sem [1]"], zip(res.lengths, res.z_mean, res.z_sem))
    w.json("rb_fit.json", res.to_dict())


def _gates(args, params, noise, w):
    from .schedule import calibrate_x_amplitude
    from .tomography import PTM, gate_ptm, process_fidelity

    dim = args.dim or 36
    out = {"x_amplitude_MHz": {}, "process_fidelity": {}, "reference_amplitude_MHz": params.eps_x_gate}
    for name, theta in (("x90", math.pi / 2), ("x180", math.pi), ("xm90", -math.pi / 2)):
        out["x_amplitude_MHz"][name] = calibrate_x_amplitude(theta, params, dim=dim)
    for name in ("x90", "x180", "z90", "z90-exp"):
        op, u = _gate_op(name, params)
        r = gate_ptm(op, params, dim)
        out["process_fidelity"][name] = process_fidelity(r, PTM.from_unitary(u))
    w.json("gates.json", out)


def _readout(args, params, noise, w):
    from .readout import histogram_report, output_field, qnd_metric, readout_dynamics

    q = qnd_metric(params, noise, args.t_cr)
    rep = histogram_report(params, noise, args.shots, args.seed, args.t_cr, args.eta, q)
    rows = [(lab, z.real, z.imag) for lab in ("+", "-") for z in rep.points[lab]]
    w.csv("histogram.csv", ["prep [label]", "I_over_sigma [1]", "Q_over_sigma [1]"], rows)
    if args.records:
        dyn = readout_dynamics(params, noise, args.t_cr)
        beta = output_field(dyn, params)
        w.csv("records.csv", ["time [us]", "re_beta_out_plus [sqrt(photons/us)]",
                              "im_beta_out_plus [sqrt(photons/us)]", "re_beta_out_minus [sqrt(photons/us)]",
                              "im_beta_out_minus [sqrt(photons/us)]"],
              zip(dyn.times, beta[:, 0].real, beta[:, 0].imag, beta[:, 1].real, beta[:, 1].imag))
    w.json("readout.json", rep.to_dict())


def _qswitch(args, params, noise, w):
    from .readout import fit_gcr, qswitch_decay, qswitch_simulation

    t, n_sim = qswitch_simulation(params, args.t_max)
    rng = np.random.default_rng(args.seed)
    data = n_sim + args.noise_sigma * rng.standard_normal(t.size)
    fit = fit_gcr(t, data, params.kappa_b)
    w.csv("qswitch.csv", ["time [us]", "n_simulated [photons]", "n_data [photons]", "n_formula [photons]"],
          zip(t, n_sim, data, qswitch_decay(t, params.g_cr, params.kappa_b)))
    w.json("qswitch.json", {"g_cr_fit_MHz": fit.g, "g_cr_stderr_MHz": fit.g_stderr,
                            "scale": fit.scale, "offset": fit.offset,
                            "unidentifiable": fit.unidentifiable, "g_cr_MHz": params.g_cr})


def _coherence(args, params, noise, w):
    from .decoherence import coherence_sweep, rate_report

    summary = {"analytic": rate_report(noise.resolve(params)).to_dict()}
    for axis in ("XYZ" if args.axis == "all" else args.axis):
        c = coherence_sweep(axis, params, noise, args.t_max, args.points)
        labels = list(c.expectations)
        header = (["time [us]"] + [f"expect_{lab} [1]" for lab in labels]
                  + [f"leakage_{lab} [1]" for lab in labels])
        cols = [c.times] + [c.expectations[k] for k in labels] + [c.leakage[k] for k in labels]
        w.csv(f"coherence_{axis}.csv", header, zip(*cols))
        summary[axis] = c.to_dict()
    w.json("coherence.json", summary)


def _tuneup(args, params, noise, w):
    from .spectrum import tuneup_detuning, z_rotation_rate

    d = tuneup_detuning(params, args.dim)
    w.json("tuneup.json", {"delta_as_MHz": d, "stark_shift_MHz": params.stark_shift,
                           "residual_rate_MHz": z_rotation_rate(params, d, args.dim),
                           "uncompensated_rate_MHz": z_rotation_rate(params, 0.0, args.dim)})


def _wigner(args, params, noise, w):
    from .hilbert import ket2dm, wigner_grid
    from .model import cat_basis

    dim = args.dim or 40
    psi = cat_basis(params, dim, "ideal").cardinals()[STATES[args.state]]
    x = np.linspace(-args.extent, args.extent, args.points)
    grid = wigner_grid(ket2dm(psi), x, x)
    rows = ((xv, yv, grid[j, i]) for j, yv in enumerate(x) for i, xv in enumerate(x))
    w.csv("wigner.csv", ["re_alpha [sqrt(photons)]", "im_alpha [sqrt(photons)]", "W [1]"], rows)
    w.json("wigner.json", {"state": STATES[args.state], "min": grid.min(), "max": grid.max(),
                           "norm": grid.sum() * (x[1] - x[0]) ** 2})


def _energy_surface(args, params, noise, w):
    from .model import classical_energy_surface

    x = np.linspace(-args.extent, args.extent, args.points)
    z = x[None, :] + 1j * x[:, None]
    e = classical_energy_surface(params.K, params.eps2, z)
    rows = ((z[j, i].real, z[j, i].imag, e[j, i]) for j in range(x.size) for i in range(x.size))
    w.csv("energy_surface.csv", ["re_alpha [sqrt(photons)]", "im_alpha [sqrt(photons)]", "energy [MHz]"], rows)


RUNNERS = {"spectrum": _spectrum, "rabi": _rabi, "tomo": _tomo, "rb": _rb, "gates": _gates,
           "readout": _readout, "qswitch": _qswitch, "coherence": _coherence, "tuneup": _tuneup,
           "wigner": _wigner, "energy-surface": _energy_surface}


# ------------------------------------------------------------------ parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML or JSON parameter file")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="parameter override (repeatable)")
    common.add_argument("--noise", choices=sorted(NOISE), default="full")
    common.add_argument("--dim", type=int, default=None, help="Fock truncation")

    parser = _Parser(prog="kerrcat", description="Kerr-cat qubit numerical experiments")
    sub = parser.add_subparsers(dest="experiment", required=True, parser_class=_Parser)
    p = sub.add_parser("spectrum", parents=[common])
    p.add_argument("--compensate", action="store_true", help="use the tuned-up detuning")
    p = sub.add_parser("rabi", parents=[common])
    p.add_argument("--eps2-sweep", metavar="START:STOP:N")
    p.add_argument("--t-drive", type=float, default=1.5)
    p.add_argument("--phase", type=float, default=0.0, help="drive phase offset (rad)")
    p = sub.add_parser("tomo", parents=[common])
    p.add_argument("--gate", choices=["identity", "x90", "x180", "xm90", "z90", "z90-exp"], default="x90")
    p.add_argument("--std", type=float, default=0.006, help="per-value standard error")
    p.add_argument("--resamples", type=int, default=10_000)
    p.add_argument("--thermal", action="store_true", help="thermal error in the preparation")
    p = sub.add_parser("rb", parents=[common])
    p.add_argument("--n-max", type=int, default=100)
    p.add_argument("--n-samples", type=int, default=40)
    p.add_argument("--exact", action="store_true", help="exact ensemble average")
    sub.add_parser("gates", parents=[common])
    p = sub.add_parser("readout", parents=[common])
    p.add_argument("--shots", type=int, default=30_000)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--t-cr", type=float, default=3.6)
    p.add_argument("--records", action="store_true", help="write mean output records")
    p = sub.add_parser("qswitch", parents=[common])
    p.add_argument("--t-max", type=float, default=3.0)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p = sub.add_parser("coherence", parents=[common])
    p.add_argument("--axis", choices=["X", "Y", "Z", "all"], default="all")
    p.add_argument("--t-max", type=float, default=None)
    p.add_argument("--points", type=int, default=121)
    sub.add_parser("tuneup", parents=[common])
    p = sub.add_parser("wigner", parents=[common])
    p.add_argument("--state", choices=sorted(STATES), default="minusY")
    p.add_argument("--extent", type=float, default=3.0)
    p.add_argument("--points", type=int, default=81)
    p = sub.add_parser("energy-surface", parents=[common])
    p.add_argument("--extent", type=float, default=3.0)
    p.add_argument("--points", type=int, default=121)
    p = sub.add_parser("validate")
    p.add_argument("--config")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    return parser


def run(experiment: str, config_path=None, out_dir="out", overrides=(), seed: int = 0,
        extra=()) -> int:
    argv = [experiment, "--out", str(out_dir), "--seed", str(seed), *extra]
    if config_path is not None:
        argv += ["--config", str(config_path)]
    for o in overrides:
        argv += ["--set", o]
    return main(argv)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"kerrcat: {exc}", file=sys.stderr)
        return 1
    try:
        if args.experiment == "validate":
            print(json.dumps(validate_config(args.config, args.set), indent=2))
            return 0
        params = DeviceParams.from_mapping(read_config(args.config) if args.config else {})
        params = params.with_overrides(args.set)
        noise = NOISE[args.noise]()
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
            probe = out / ".write_test"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            raise ConfigError(f"output directory {out} is not writable: {exc}") from None
        writer = _Writer(out)
        start = time.perf_counter()
        RUNNERS[args.experiment](args, params, noise, writer)
        manifest = RunManifest(args.experiment, params.to_config(), noise.to_dict(), args.seed,
                               {"rtol": 1e-8, "atol": 1e-10}, outputs=list(writer.files),
                               wall_clock_s=time.perf_counter() - start)
        manifest.write(out)
    except (StiffnessError, FitError, SearchBracketError, TruncationError) as exc:
        print(f"kerrcat: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ContractError, InvalidDimensionError, OSError) as exc:
        print(f"kerrcat: invalid input: {exc}", file=sys.stderr)
        return 2
    except KerrCatError as exc:
        print(f"kerrcat: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
