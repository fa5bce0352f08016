"""Command-line front end: every analysis writes deterministic CSV/JSON.

Outputs are data only (plotting is left to external tools); identical
config and seed produce byte-identical files.  Exit codes: 0 success,
2 config error, 3 numerical failure, 4 inconclusive classification.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

import numpy as np

from . import dynamics, gaussian, pseudospec, response, spectral, wienerhopf
from .model import CoupledHN, model_from_config
from .operators import OBC, PBC, assemble, fmt
from .model import build_stencil


class ConfigError(ValueError):
    pass


class InconclusiveError(RuntimeError):
    pass


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _model_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def _parse_range(text: str) -> np.ndarray:
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise ConfigError(f"range must be start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise ConfigError(f"bad range {text!r}")
    return np.arange(start, stop + 0.5 * step, step)


def _parse_region(text: str):
    try:
        parts = tuple(float(x) for x in text.split(":"))
        assert len(parts) == 4
    except (ValueError, AssertionError):
        raise ConfigError(
            f"region must be re_min:re_max:im_min:im_max, got {text!r}") from None
    return parts


def _parse_resolution(text: str):
    try:
        if "x" in text:
            a, b = text.split("x")
            return (int(a), int(b))
        return int(text)
    except ValueError:
        raise ConfigError(f"bad resolution {text!r}") from None


def _parse_sizes(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError(f"sizes must be comma-separated ints, got {text!r}") from None


def _write(path: str, text: str):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _model(cfg):
    try:
        return model_from_config(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _assembled(cfg, args):
    spec = _model(cfg)
    st = build_stencil(spec)
    bc = OBC if args.bc == "obc" else PBC
    return spec, st, assemble(st, bc, args.n)


# ---------------------------------------------------------------------------
# commands

def cmd_spectrum(cfg, args) -> str:
    _, _, D = _assembled(cfg, args)
    rep = spectral.spectral_report(D)
    signs = {}
    if rep.krein is not None:
        for ev, sg in zip(rep.krein.eigenvalues, rep.krein.signs):
            signs[complex(-1j * ev)] = int(sg)
    lines = ["index,re,im,krein_sign"]
    for i, lam in enumerate(rep.eigenvalues):
        sign = 0
        for key, sg in signs.items():
            if abs(lam - key) < 1e-9 * max(1.0, abs(lam)):
                sign = sg
                break
        lines.append(f"{i},{fmt(lam.real)},{fmt(lam.imag)},{sign}")
    return "\n".join(lines) + "\n"


def cmd_krein(cfg, args) -> str:
    _, _, D = _assembled(cfg, args)
    data = spectral.krein_analysis(D)
    lines = ["index,re,im,krein_sign"]
    for i, (ev, sg) in enumerate(zip(data.eigenvalues, data.signs)):
        lines.append(f"{i},{fmt(ev)},0.0,{int(sg)}")
    lines.append(f"# collisions: {len(data.collisions)}")
    return "\n".join(lines) + "\n"


def _set_param(cfg: dict, name: str, value: float) -> dict:
    out = json.loads(json.dumps(cfg))
    if name not in out["params"]:
        raise ConfigError(f"unknown sweep parameter {name!r}")
    out["params"][name] = value
    return out


def cmd_gap_sweep(cfg, args) -> str:
    values = _parse_range(args.range)
    sizes = _parse_sizes(args.sizes)
    if not sizes:
        raise ConfigError("empty sizes list")
    spec0 = _model(cfg)
    if isinstance(spec0, CoupledHN) and args.param != "theta":
        th = spec0.theta % (2 * np.pi)
        if min(abs(th), abs(th - np.pi), abs(th - 2 * np.pi)) > 1e-9:
            raise ConfigError("phase-diagram sweeps require theta in {0, pi}")
    lines = ["param,N,obc_gap,sibc_gap"]
    for val in values:
        cfg_v = _set_param(cfg, args.param, float(val))
        st = build_stencil(_model(cfg_v))
        if args.sibc == "wh":
            sg = wienerhopf.sibc_stability_gap(st)
        elif args.sibc == "bulk":
            sg = spectral.bulk_stability_gap(st)
        else:
            sg = float("nan")
        for n in sizes:
            try:
                gap = spectral.stability_gap(assemble(st, OBC, n))
            except Exception as exc:  # per-point failures recorded, sweep continues
                lines.append(f"{fmt(val)},{n},nan,{fmt(sg)}  # error: {exc}")
                continue
            lines.append(f"{fmt(val)},{n},{fmt(gap)},{fmt(sg)}")
    return "\n".join(lines) + "\n"


def cmd_pseudospectrum(cfg, args):
    _, _, D = _assembled(cfg, args)
    grid = pseudospec.resolvent_norm_grid(
        D, _parse_region(args.region), _parse_resolution(args.resolution),
        workers=args.workers, plane=args.plane)
    return grid.to_csv(), grid.sidecar()


def cmd_sibc(cfg, args) -> str:
    spec = _model(cfg)
    st = build_stencil(spec)
    grid = wienerhopf.sibc_membership_grid(
        st, _parse_region(args.region), _parse_resolution(args.resolution))
    return grid.to_csv()


def cmd_evolve(cfg, args) -> str:
    _, _, D = _assembled(cfg, args)
    site = args.site if args.site is not None else args.n // 2
    times = np.arange(0.0, args.t_max + 0.5 * args.dt, args.dt)
    kind = args.kind or ("x" if D.basis == "nambu" else "a")
    traj = dynamics.trajectory_ensemble(
        D, args.n_traj, times, site, seed=args.seed, kind=kind,
        keep_trajectories=args.dump_trajectories)
    lines = ["t,mean_abs,stderr"]
    vals = traj.values if traj.values.ndim == 1 else traj.values.mean(axis=0)
    for t, v, s in zip(traj.times, vals, traj.stderr):
        lines.append(f"{fmt(t)},{fmt(v)},{fmt(s)}")
    out = "\n".join(lines) + "\n"
    if args.dump_trajectories:
        out += "# per-trajectory |values| follow, one row per trajectory\n"
        for row in np.atleast_2d(traj.values):
            out += ",".join(fmt(v) for v in row) + "\n"
    return out


def cmd_entropy(cfg, args) -> str:
    _, _, D = _assembled(cfg, args)
    if D.basis != "nambu":
        raise ConfigError("entropy command requires a Nambu-basis model")
    site = args.site if args.site is not None else args.n // 2
    times = np.arange(0.0, args.t_max + 0.5 * args.dt, args.dt)
    curves = []
    for i in range(args.n_states):
        state = gaussian.random_pure_cm(args.n, args.seed + i)
        curves.append(gaussian.ee_trajectory(D, state, [site], times).values)
    curves = np.array(curves)
    lines = ["t,S_A_mean,S_A_min,S_A_max"]
    for j, t in enumerate(times):
        lines.append(f"{fmt(t)},{fmt(curves[:, j].mean())},"
                     f"{fmt(curves[:, j].min())},{fmt(curves[:, j].max())}")
    return "\n".join(lines) + "\n"


def cmd_response(cfg, args):
    spec, st, D = _assembled(cfg, args)
    G = D.G if D.basis == "nambu" else 1j * D.G
    if args.kappa:
        G = G - 1j * args.kappa * np.eye(G.shape[0])
    resp = response.susceptibility(G, args.omega, args.eta)
    if args.full_out:
        from .operators import matrix_to_csv
        _write(args.full_out, matrix_to_csv(resp.chi))
    amap = resp.species_map()
    lines = ["l,m,abs_chi"]
    for l in range(amap.shape[0]):
        for m in range(amap.shape[1]):
            lines.append(f"{l + 1},{m + 1},{fmt(amap[l, m])}")
    meta = {
        "eta": resp.eta,
        "kappa": float(args.kappa),
        "model_sha256": _model_hash(cfg),
        "n": args.n,
        "omega": resp.omega,
    }
    return "\n".join(lines) + "\n", json.dumps(meta, sort_keys=True, indent=1) + "\n"


def cmd_classify(cfg, args) -> str:
    sizes = _parse_sizes(args.sizes)
    spec = _model(cfg)
    st = build_stencil(spec)
    gaps = [(n, spectral.stability_gap(assemble(st, OBC, n))) for n in sizes]
    sibc = wienerhopf.sibc_stability_gap(st)
    result = spectral.classify(gaps, sibc, tol=args.tol)
    payload = {
        "class": result.label,
        "detail": result.detail,
        "disagreement": result.disagreement,
        "discontinuity": result.discontinuity,
        "gaps": [[n, g] for n, g in result.gap_sequence],
        "obc_gap_extrapolated": result.obc_gap_extrapolated,
        "sibc_gap": result.sibc_gap,
    }
    text = json.dumps(payload, sort_keys=True, indent=1) + "\n"
    if result.label == spectral.INCONCLUSIVE:
        raise InconclusiveError(text)
    return text


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qbl",
        description="Spectral/pseudospectral analysis of bulk-translationally-"
                    "invariant quadratic bosonic lattice models.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, n=True):
        sp.add_argument("--config", required=True, help="model config JSON")
        sp.add_argument("--out", required=True, help="output file path")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--workers", type=int, default=1)
        if n:
            sp.add_argument("--n", type=int, default=30, help="site count")
            sp.add_argument("--bc", choices=["obc", "pbc"], default="obc")

    sp = sub.add_parser("spectrum", help="rapidity spectrum CSV")
    common(sp)

    sp = sub.add_parser("krein", help="Krein signatures of the real spectrum")
    common(sp)

    sp = sub.add_parser("gap-sweep", help="stability gap vs one parameter")
    common(sp, n=False)
    sp.add_argument("--param", required=True)
    sp.add_argument("--range", required=True, help="start:stop:step")
    sp.add_argument("--sizes", required=True, help="comma-separated N list")
    sp.add_argument("--sibc", choices=["wh", "bulk", "none"], default="wh")

    sp = sub.add_parser("pseudospectrum", help="resolvent-norm grid CSV")
    common(sp)
    sp.add_argument("--region", required=True, help="re_min:re_max:im_min:im_max")
    sp.add_argument("--resolution", required=True, help="N or NRExNIM")
    sp.add_argument("--plane", choices=["matrix", "rapidity"], default="matrix")

    sp = sub.add_parser("sibc", help="semi-infinite spectrum membership grid")
    common(sp, n=False)
    sp.add_argument("--region", required=True)
    sp.add_argument("--resolution", required=True)

    sp = sub.add_parser("evolve", help="ensemble-averaged |<obs(t)>|")
    common(sp)
    sp.add_argument("--t-max", type=float, required=True)
    sp.add_argument("--dt", type=float, default=0.05)
    sp.add_argument("--n-traj", type=int, default=300)
    sp.add_argument("--site", type=int, default=None)
    sp.add_argument("--kind", choices=["x", "p", "a", "component"], default=None)
    sp.add_argument("--dump-trajectories", action="store_true")

    sp = sub.add_parser("entropy", help="entanglement entropy over time")
    common(sp)
    sp.add_argument("--t-max", type=float, required=True)
    sp.add_argument("--dt", type=float, default=0.1)
    sp.add_argument("--n-states", type=int, default=50)
    sp.add_argument("--site", type=int, default=None)

    sp = sub.add_parser("response", help="zero/nonzero-frequency response map")
    common(sp)
    sp.add_argument("--omega", type=float, required=True)
    sp.add_argument("--eta", type=float, default=None)
    sp.add_argument("--kappa", type=float, default=0.0,
                    help="extra uniform loss applied at response time")
    sp.add_argument("--full-out", default=None,
                    help="also dump the full susceptibility matrix as CSV")

    sp = sub.add_parser("classify", help="finite/infinite stability classes")
    common(sp, n=False)
    sp.add_argument("--sizes", default="10,20,30,40")
    sp.add_argument("--tol", type=float, default=1e-6)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        handler = {
            "spectrum": cmd_spectrum,
            "krein": cmd_krein,
            "gap-sweep": cmd_gap_sweep,
            "pseudospectrum": cmd_pseudospectrum,
            "sibc": cmd_sibc,
            "evolve": cmd_evolve,
            "entropy": cmd_entropy,
            "response": cmd_response,
            "classify": cmd_classify,
        }[args.command]
        out = handler(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InconclusiveError as exc:
        _write(args.out, str(exc))
        print("classification inconclusive", file=sys.stderr)
        return 4
    except Exception as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    if isinstance(out, tuple):
        _write(args.out, out[0])
        _write(args.out + ".json", out[1])
    else:
        _write(args.out, out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
