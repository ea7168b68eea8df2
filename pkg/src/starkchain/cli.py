"""Experiment runner: config in, deterministic CSV/JSON artifacts out.

Ramp orientation: the device's work-point ladder descends along the qubit
labeling (the chain is labeled in order of decreasing frequency), so every
experiment here builds the linear potential with a negative gradient,
h_j = -F * j up to a gauge constant. Occupation and current observables from
computational-basis initial states are provably identical under either
orientation (the test suite asserts this); the edge-coherent thermal initial
state is the one case that resolves it, and the descending ramp is the one
that reproduces the observed edge localization.
"""

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from importlib import metadata

import numpy as np

from .analysis import (
    first_wavefront_peak,
    gaussian_fit_wavefront,
    linear_fit,
    wsl_length_from_boundary,
)
from .config import EXPERIMENTS, ShotPlan, load_config, parse_config
from .device import ANGULAR_PER_MHZ, PotentialSpec
from .dynamics import (
    evolve_lindblad,
    evolve_unitary,
    make_collapse_ops,
    prepare_initial_state,
    QuantumState,
)
from .errors import ConfigError, DomainError
from .measurement import ConfusionMatrix, group_means, sample_shots
from .model import build_observable, build_sector_basis, build_xy_hamiltonian, full_tag
from .observables import expectation
from .freefermion import propagate_single_particle, single_particle_matrix

CSV_FORMAT = "%.9g"


def _version():
    try:
        return metadata.version("starkchain")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _potential_for(f_mhz):
    # descending ramp; see the module docstring
    return PotentialSpec.linear(-abs(float(f_mhz)))


def _derive_seed(base, *key):
    seq = np.random.SeedSequence(
        entropy=int(base), spawn_key=tuple(int(k) for k in key)
    )
    return int(seq.generate_state(1, np.uint64)[0])


def _f_label(f):
    return ("%g" % float(f)).replace(".", "p").replace("-", "m")


def _write_atomic(path, text):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv_text(times, columns, errors=None):
    """Header 't_ns' + names; an error column directly follows its value."""
    errors = errors or {}
    header = ["t_ns"]
    for name in columns:
        header.append(name)
        if name in errors:
            header.append(name + "_err")
    lines = [",".join(header)]
    for i, t in enumerate(times):
        row = [CSV_FORMAT % t]
        for name in columns:
            row.append(CSV_FORMAT % columns[name][i])
            if name in errors:
                row.append(CSV_FORMAT % errors[name][i])
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _confusion_list(config):
    if config.readout is None:
        return [ConfusionMatrix.perfect() for _ in range(config.device.n_qubits)]
    return [ConfusionMatrix(f0=f0, f1=f1) for f0, f1 in config.readout]


def _snapshots(config, potential, initial_spec=None):
    """Evolve once on the full space; returns a list of QuantumState."""
    params = config.device
    n = params.n_qubits
    times = np.arange(0.0, config.t_max_ns + 1e-9, config.dt_sample_ns)
    state = prepare_initial_state(initial_spec or config.initial_state, n)
    h = build_xy_hamiltonian(params, potential)
    tag = full_tag(n)
    if config.noise == "lindblad":
        collapse = make_collapse_ops(params, dephasing=config.dephasing)
        rhos = evolve_lindblad(h, state, times, collapse)
        return times, [QuantumState(r, tag) for r in rhos]
    amps = evolve_unitary(h, state, times)
    return times, [QuantumState(v, tag) for v in amps]


def _sampled_estimates(config, states, basis, estimators, f_index, setting_index,
                       shots_per_setting):
    """Per-snapshot, per-estimator group means under one basis setting."""
    confusion = _confusion_list(config)
    correct = confusion if config.readout_correction else None
    plan = config.shots
    out = {name: [] for name in estimators}
    for k, state in enumerate(states):
        seed = _derive_seed(plan.seed, f_index, k, setting_index)
        rec = sample_shots(
            state, confusion, basis, shots_per_setting, seed,
            n_groups=plan.n_groups,
        )
        for name in estimators:
            out[name].append(group_means(rec, name, confusion=correct))
    return {name: np.asarray(v) for name, v in out.items()}  # (nt, n_groups)


def _exact_columns(states, ops):
    cols = {name: np.empty(len(states)) for name in ops}
    for k, state in enumerate(states):
        for name, op in ops.items():
            cols[name][k] = expectation(state, op)
    return cols


def _run_spin_transport(config, out_dir):
    params = config.device
    n = params.n_qubits
    outputs = []
    for i, f in enumerate(config.gradients_mhz):
        pot = _potential_for(f)
        times, states = _snapshots(config, pot)
        ops = {
            f"P{j}": build_observable("density", j, params)
            for j in range(1, n + 1)
        }
        if config.shots is None:
            cols = _exact_columns(states, ops)
            errs = {}
        else:
            per_site = _sampled_estimates(
                config, states, "Z" * n, [f"P{j}" for j in range(1, n + 1)],
                i, 0, config.shots.n_shots,
            )
            cols = {k: v.mean(axis=1) for k, v in per_site.items()}
            errs = {k: v.std(axis=1, ddof=1) for k, v in per_site.items()}
        name = f"spin_transport_F{_f_label(f)}.csv"
        _write_atomic(os.path.join(out_dir, name), _csv_text(times, cols, errs))
        outputs.append(name)
    return outputs, {}


def _p5_series(config, f, f_index):
    """Boundary-site trajectory for one gradient (theory route when ideal)."""
    params = config.device
    times = np.arange(0.0, config.t_max_ns + 1e-9, config.dt_sample_ns)
    pot = _potential_for(f)
    if config.noise == "ideal" and config.shots is None:
        h = single_particle_matrix(params, pot)
        dens = propagate_single_particle(h, 1, times)
        return times, dens[:, params.n_qubits - 1], None
    times, states = _snapshots(config, pot)
    n = params.n_qubits
    if config.shots is None:
        op = build_observable("density", n, params)
        return times, np.array([expectation(s, op) for s in states]), None
    est = _sampled_estimates(config, states, "Z" * n, [f"P{n}"], f_index, 0,
                             config.shots.n_shots)[f"P{n}"]
    return times, est.mean(axis=1), est.std(axis=1, ddof=1)


def _run_wsl_scan(config, out_dir):
    params = config.device
    theory_mode = config.noise == "ideal" and config.shots is None
    rows = []
    for f_index, f in enumerate(config.gradients_mhz):
        if f <= 0:
            raise ConfigError("wsl_scan: gradients must be positive")
        times, p5, _err = _p5_series(config, f, f_index)
        if theory_mode:
            peak = first_wavefront_peak(p5)
        else:
            peak = gaussian_fit_wavefront(times, np.clip(p5, 0.0, 1.0)) \
                .parameters["amplitude"]
        xi_est = wsl_length_from_boundary(peak, params.n_qubits - 1)
        rows.append((f, peak, np.log(peak), xi_est))
    header = "F_mhz,p5max,ln_p5max,xi_boundary"
    lines = [header]
    for row in rows:
        lines.append(",".join(CSV_FORMAT % v for v in row))
    name = "wsl_scan.csv"
    _write_atomic(os.path.join(out_dir, name), "\n".join(lines) + "\n")
    fits = {}
    if len(rows) >= 2:
        fit = linear_fit([r[0] for r in rows], [r[2] for r in rows])
        fits["ln_p5max_vs_F"] = {
            "slope": fit.parameters["slope"],
            "intercept": fit.parameters["intercept"],
            "slope_stderr": fit.stderr["slope"],
            "r_squared": fit.r_squared,
            "extraction": "wavefront" if theory_mode else "gaussian",
        }
    return [name], fits


def _run_thermal_transport(config, out_dir):
    params = config.device
    n = params.n_qubits
    g_mhz = params.coupling_mhz
    bonds = (1, n - 1)
    outputs = []
    for i, f in enumerate(config.gradients_mhz):
        pot = _potential_for(f)
        times, states = _snapshots(config, pot)
        if config.shots is None:
            ops = {
                f"K{b}": build_observable("kinetic", b, params) for b in bonds
            }
            raw = _exact_columns(states, ops)
            # rad/ns -> ordinary-frequency MHz units (value of K/2pi)
            cols = {k: v / ANGULAR_PER_MHZ for k, v in raw.items()}
            errs = {}
        else:
            half = config.shots.n_shots // 2
            xx = _sampled_estimates(config, states, "X" * n,
                                    [f"XX{b}" for b in bonds], i, 0, half)
            yy = _sampled_estimates(config, states, "Y" * n,
                                    [f"YY{b}" for b in bonds], i, 1, half)
            cols, errs = {}, {}
            for b in bonds:
                per_group = 0.5 * g_mhz[b - 1] * (xx[f"XX{b}"] + yy[f"YY{b}"])
                cols[f"K{b}"] = per_group.mean(axis=1)
                errs[f"K{b}"] = per_group.std(axis=1, ddof=1)
        name = f"thermal_transport_F{_f_label(f)}.csv"
        order = {f"K{b}": cols[f"K{b}"] for b in bonds}
        _write_atomic(os.path.join(out_dir, name), _csv_text(times, order, errs))
        outputs.append(name)
    return outputs, {}


def _run_spin_current(config, out_dir):
    params = config.device
    n = params.n_qubits
    outputs = []
    sector_ok = set(config.initial_state) <= {"0", "1"}
    for i, f in enumerate(config.gradients_mhz):
        pot = _potential_for(f)
        bond_names = [f"J{b}" for b in range(1, n)]
        if config.shots is None and config.noise == "ideal" and sector_ok:
            # fixed-excitation fast path
            basis = build_sector_basis(n, config.initial_state.count("1"))
            h = build_xy_hamiltonian(params, pot, basis=basis)
            state = prepare_initial_state(config.initial_state, n, basis=basis)
            times = np.arange(0.0, config.t_max_ns + 1e-9, config.dt_sample_ns)
            amps = evolve_unitary(h, state, times)
            ops = {
                name: build_observable("spin_current", b, params, basis=basis)
                for b, name in enumerate(bond_names, start=1)
            }
            states = [QuantumState(v, basis.tag) for v in amps]
            cols = _exact_columns(states, ops)
            errs = {}
        else:
            times, states = _snapshots(config, pot)
            if config.shots is None:
                ops = {
                    name: build_observable("spin_current", b, params)
                    for b, name in enumerate(bond_names, start=1)
                }
                cols = _exact_columns(states, ops)
                errs = {}
            else:
                half = config.shots.n_shots // 2
                # setting A: XYXY...; setting B: YXYX...
                basis_a = "".join("X" if q % 2 == 0 else "Y" for q in range(n))
                basis_b = "".join("Y" if q % 2 == 0 else "X" for q in range(n))
                est_a = [("XY" if b % 2 == 1 else "YX") + str(b)
                         for b in range(1, n)]
                est_b = [("YX" if b % 2 == 1 else "XY") + str(b)
                         for b in range(1, n)]
                got_a = _sampled_estimates(config, states, basis_a, est_a,
                                           i, 0, half)
                got_b = _sampled_estimates(config, states, basis_b, est_b,
                                           i, 1, half)
                cols, errs = {}, {}
                for b in range(1, n):
                    if b % 2 == 1:
                        xy, yx = got_a[f"XY{b}"], got_b[f"YX{b}"]
                    else:
                        xy, yx = got_b[f"XY{b}"], got_a[f"YX{b}"]
                    per_group = 0.5 * (xy - yx)
                    cols[f"J{b}"] = per_group.mean(axis=1)
                    errs[f"J{b}"] = per_group.std(axis=1, ddof=1)
        name = f"spin_current_F{_f_label(f)}.csv"
        order = {k: cols[k] for k in bond_names}
        _write_atomic(os.path.join(out_dir, name), _csv_text(times, order, errs))
        outputs.append(name)
    return outputs, {}


def _run_decoherence_check(config, out_dir):
    params = config.device
    n = params.n_qubits
    outputs = []
    for f in config.gradients_mhz:
        pot = _potential_for(f)
        ideal_cfg = dataclasses.replace(config, noise="ideal")
        lind_cfg = dataclasses.replace(config, noise="lindblad")
        times, ideal_states = _snapshots(ideal_cfg, pot)
        _, lind_states = _snapshots(lind_cfg, pot)
        ops = {
            f"P{j}": build_observable("density", j, params)
            for j in range(1, n + 1)
        }
        ideal_cols = _exact_columns(ideal_states, ops)
        lind_cols = _exact_columns(lind_states, ops)
        cols = {}
        for j in range(1, n + 1):
            cols[f"P{j}_ideal"] = ideal_cols[f"P{j}"]
            cols[f"P{j}_lindblad"] = lind_cols[f"P{j}"]
        name = f"decoherence_check_F{_f_label(f)}.csv"
        _write_atomic(os.path.join(out_dir, name), _csv_text(times, cols))
        outputs.append(name)
    return outputs, {}


_RUNNERS = {
    "spin_transport": _run_spin_transport,
    "wsl_scan": _run_wsl_scan,
    "thermal_transport": _run_thermal_transport,
    "spin_current": _run_spin_current,
    "decoherence_check": _run_decoherence_check,
}


def run(config, out_dir=None):
    """Execute one experiment; returns the summary dict it also writes."""
    out_dir = out_dir or config.output_dir
    os.makedirs(out_dir, exist_ok=True)
    outputs, fits = _RUNNERS[config.experiment](config, out_dir)
    normalized = config.normalized()
    canonical = json.dumps(normalized, sort_keys=True, separators=(",", ":"))
    summary = {
        "experiment": config.experiment,
        "config": normalized,
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "seed": None if config.shots is None else config.shots.seed,
        "outputs": sorted(outputs),
        "fits": fits,
        "versions": {
            "starkchain": _version(),
            "numpy": np.__version__,
            "python": "%d.%d.%d" % sys.version_info[:3],
        },
    }
    text = json.dumps(summary, sort_keys=True, indent=2) + "\n"
    _write_atomic(os.path.join(out_dir, "summary.json"), text)
    return summary


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="starkchain",
        description="Tilted-chain transport experiments: simulate, sample, fit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS + ("validate",):
        p = sub.add_parser(name, help=f"run the {name} experiment"
                           if name != "validate" else "check a config file")
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="shot seed (overrides config)")
        p.add_argument("--preset", help="device preset name, e.g. paper-device")
    return parser


def _load(args, default_experiment):
    if args.config:
        config = load_config(args.config, default_experiment=default_experiment)
        if default_experiment and config.experiment != default_experiment:
            raise ConfigError(
                f"config names experiment {config.experiment!r} but the "
                f"subcommand is {default_experiment!r}"
            )
    else:
        raw = {}
        if args.preset:
            raw["device"] = args.preset
        config = parse_config(raw, default_experiment=default_experiment)
    if args.config and args.preset:
        from .device import device_preset

        config = dataclasses.replace(
            config, device=device_preset(args.preset), preset_name=args.preset
        )
    if args.out:
        config = dataclasses.replace(config, output_dir=args.out)
    if args.seed is not None and config.shots is not None:
        config = dataclasses.replace(
            config, shots=ShotPlan(
                n_shots=config.shots.n_shots,
                n_groups=config.shots.n_groups,
                seed=args.seed,
            )
        )
    return config


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            if not args.config:
                parser.error("validate requires --config")
            config = _load(args, None)
            print(json.dumps(config.normalized(), sort_keys=True, indent=2))
            return 0
        config = _load(args, args.command)
        summary = run(config)
        print(f"wrote {len(summary['outputs'])} file(s) + summary.json to "
              f"{config.output_dir}")
        return 0
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
