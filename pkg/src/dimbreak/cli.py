"""Command-line entry point: `dimbreak <subcommand>`."""

import os
import sys


def _cap_threads():
    n = os.environ.get("DIMBREAK_THREADS", "0").strip() or "0"
    if n.isdigit() and int(n) > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, n)


_cap_threads()

import math  # noqa: E402
import time  # noqa: E402
from pathlib import Path  # noqa: E402

import click  # noqa: E402
import numpy as np  # noqa: E402

from .cli_io import (build_manifest, dumps, load_config, validate_config,  # noqa: E402
                     write_csv, write_json)
from .errors import DimbreakError  # noqa: E402

COMMANDS = ("params", "dispersion", "coeffs", "soliton", "spectrum", "dimbreak", "bvp-check",
            "linop-check", "synth")


def _base(cfg):
    from .coefficients import compute_coefficients, profile_coefficients
    from .dispersion import params_from_tau
    p = params_from_tau(cfg.tau0, eps=cfg.eps)
    c = compute_coefficients(p)
    return p, c, profile_coefficients(p, c)


def _reduced_grid(c, n, L):
    from .soliton import Grid1D
    return Grid1D(40.0 * math.sqrt(c.A1) if L is None else L, n)


def _k0(c, n=4096):
    from .reduced_spectra import find_k0
    return find_k0(c, _reduced_grid(c, n, None), refine_ns=())


def _target(out_dir, given, default_name):
    return Path(given) if given else Path(out_dir) / default_name


def cmd_params(cfg, out_dir, opts):
    p, _, _ = _base(cfg)
    res = dict(p.to_dict(), sigma=p.sigma)
    return res, [write_json(Path(out_dir) / "params.json", res)], {}


def cmd_dispersion(cfg, out_dir, opts):
    from .dispersion import dispersion_curve
    p, _, _ = _base(cfg)
    n = opts.get("n") or 401
    lam = opts.get("lam") or 0.0
    mu_max = opts.get("mu_max") or 3.0 * p.mu0
    rows = [(s.mu, s.lam, s.q, s.g) for s in dispersion_curve(p, (0.01, mu_max), n, lam)]
    path = write_csv(_target(out_dir, opts.get("out"), "dispersion.csv"), ["mu", "lambda", "q", "g"],
                     rows)
    return None, [path], {}


def coeffs_payload(p, c, pc):
    return {"A1": c.A1, "A2": c.A2, "A3": c.A3, "A4": c.A4, "A5": c.A5, "sigma": c.sigma,
            "C1": pc.C1, "C2": pc.C2, "C4": pc.C4, "C5": pc.C5, "B1": pc.B1, "B2": pc.B2,
            "B3": pc.B3, "g0_2mu0": pc.g0_at_2mu0}


def cmd_coeffs(cfg, out_dir, opts):
    p, c, pc = _base(cfg)
    res = coeffs_payload(p, c, pc)
    return res, [write_json(Path(out_dir) / "coeffs.json", res)], {}


def cmd_soliton(cfg, out_dir, opts):
    from .soliton import Grid1D, build_line_wave, zeta
    from .strip_bvp import uniform_y
    eps = cfg.eps
    p, c, pc = _base(cfg)
    L = opts.get("L") or cfg.L
    n = opts.get("n") or cfg.n
    ny = opts.get("ny") or cfg.ny
    sign = -1 if opts.get("negative") else 1
    lw = build_line_wave(p, c, pc, Grid1D(L, n), uniform_y(ny), sign=sign)
    d = Path(opts.get("out") or out_dir)
    z = zeta(eps * lw.x, lw.star.amp, lw.star.width)
    files = [write_csv(d / "zeta_star.csv", ["x", "value"], zip(lw.x, z)),
             write_csv(d / "eta_star.csv", ["x", "value"], zip(lw.x, lw.eta))]
    X, Y = np.meshgrid(lw.x, lw.y, indexing="ij")
    files.append(write_csv(d / "phi_star.csv", ["x", "y", "value"],
                           zip(X.ravel(), Y.ravel(), lw.phi.ravel())))
    return None, files, {}


def cmd_spectrum(cfg, out_dir, opts):
    from .reduced_spectra import btilde_spectrum, schrodinger_spectrum
    _, c, _ = _base(cfg)
    g = _reduced_grid(c, opts.get("n") or cfg.n, opts.get("L"))
    count = opts.get("count") or 4
    s1 = schrodinger_spectrum(6.0, c, g, count=count)
    s2 = schrodinger_spectrum(2.0, c, g, count=count)
    bf = btilde_spectrum(c, g, "fixR", count=count)
    bu = btilde_spectrum(c, g, "full", count=count)
    lowest = float(bf.eigenvalues[0])
    res = {"k0": math.sqrt(-lowest) if lowest < -c.delta_ess else None,
           "eigenvalue_table": {"C01": s1.eigenvalues, "C02": s2.eigenvalues,
                                "Btilde_fixR": bf.eigenvalues, "Btilde_full": bu.eigenvalues},
           "neg_counts": {"C01": s1.neg_count, "C02": s2.neg_count, "Btilde_fixR": bf.neg_count,
                          "Btilde_full": bu.neg_count},
           "delta_ess": c.delta_ess, "refinement": [],
           "parity_report": {"kappa_fixR": lowest, "kappa_full": float(bu.eigenvalues[0])},
           "grid": {"L": g.L, "n": g.n, "h": g.h}}
    return res, [write_json(Path(out_dir) / "spectrum.json", res)], {}


def cmd_dimbreak(cfg, out_dir, opts):
    from .reduced_spectra import find_k0
    _, c, _ = _base(cfg)
    n = opts.get("n") or cfg.n
    g = _reduced_grid(c, n, opts.get("L"))
    levels = opts.get("refine") or 0
    ns = [n // 2 ** (levels - 1 - i) for i in range(levels)] if levels else None
    r = find_k0(c, g, refine_ns=ns)
    res = {"k0": r.k0, "k_eps": r.k_eps, "kappa_min": r.kappa_min, "eigenvalue_table": r.eigenvalues,
           "neg_count": r.neg_count, "delta_ess": r.delta_ess, "kmin": r.kmin, "kmax": r.kmax,
           "refinement": r.refinement, "richardson_order": r.richardson_order,
           "parity_report": r.parity, "grid": {"L": g.L, "n": g.n, "h": g.h}}
    m = r.mode
    files = [write_json(Path(out_dir) / "dimbreak.json", res),
             write_csv(Path(out_dir) / "dimbreak_mode.csv", ["x", "zeta1", "zeta2", "psi"],
                       zip(m["x"], m["zeta1"], m["zeta2"], m["psi"]))]
    return res, files, {}


def cmd_bvp_check(cfg, out_dir, opts):
    from .soliton import StarProfiles
    from .strip_bvp import (fit_exponent, gamma1_deviation, oracle_discrepancy,
                            random_modal_problems, solve_gamma)
    eps = cfg.eps
    ny = opts.get("ny") or cfg.ny
    p, c, pc = _base(cfg)
    t0 = time.perf_counter()
    disc = oracle_discrepancy(random_modal_problems(20, 2049, seed=cfg.seed))
    t1 = time.perf_counter()
    k0 = _k0(c, 2048).k0
    eps_fit = (0.08, 0.04, 0.02)
    devs = [gamma1_deviation(p.with_eps(0.0), c, e, k0, ny=ny) for e in eps_fit]
    rate = fit_exponent(eps_fit, devs)
    t2 = time.perf_counter()
    L = 40.0 * math.sqrt(c.A1) / eps
    nx = 2 ** int(math.ceil(math.log2(2 * L / 0.25)))
    x = (np.arange(nx) - nx // 2) * (2 * L / nx)
    star = StarProfiles(p, c, pc)
    sol = solve_gamma(star.eta_parts(x)[0], eps * k0, x, ny, star=star)
    t3 = time.perf_counter()
    res = {"oracle_discrepancy": disc, "oracle_ny": 2049, "oracle_problems": 20,
           "leading_order_rate": rate, "leading_order_eps": list(eps_fit),
           "leading_order_deviation": devs, "iterations": sol.iterations,
           "contraction_ratios": sol.ratios, "eps": eps, "ny": ny}
    timings = {"oracle": t1 - t0, "leading_order": t2 - t1, "fixed_point": t3 - t2}
    return res, [write_json(Path(out_dir) / "bvp_check.json", res)], timings


def cmd_linop_check(cfg, out_dir, opts):
    from .soliton import StarProfiles
    from .waterwave_linop import (assemble_L, default_strip_grid, imaginary_eigenvalue_search,
                                  instability_report, linearity_check, reverser_check,
                                  symplectic_check)
    eps = cfg.eps
    p, c, pc = _base(cfg)
    t0 = time.perf_counter()
    k0 = _k0(c).k0
    grid = default_strip_grid(c, eps, ny=opts.get("ny") or 17)
    h = assemble_L(p, StarProfiles(p, c, pc), grid)
    t1 = time.perf_counter()
    rev = reverser_check(h, trials=10)
    sym = symplectic_check(h, trials=10)
    lin = linearity_check(h)
    r = imaginary_eigenvalue_search(h, eps * k0, restrict_fixR=bool(opts.get("fix_r")))
    target = eps * k0
    res = {"lambda_re": r.lam.real, "lambda_im": r.lam.imag, "target": target,
           "residual": r.residual, "iterations": r.iterations, "fix_r": r.fix_r,
           "relative_deviation": abs(r.lam.imag - target) / target,
           "relative_real_part": abs(r.lam.real) / target,
           "ritz": [{"re": z.real, "im": z.imag} for z in r.ritz],
           "mode_asymmetry": r.mode_asymmetry, "reverser": rev, "symplectic": sym,
           "linearity": lin,
           "grid": grid.to_dict(), "k0": k0,
           "instability": instability_report(p, r.lam.imag / eps),
           "timings": "wall-clock timings are recorded in manifest.json"}
    timings = dict(r.timings, assemble=t1 - t0)
    path = _target(out_dir, opts.get("out"), "linop_check.json")
    return res, [write_json(path, res)], timings


def cmd_synth(cfg, out_dir, opts):
    from .soliton import StarProfiles
    from .wave_synthesis import synthesize
    eps = cfg.eps
    s = opts.get("s")
    s = 0.1 if s is None else s
    p, c, pc = _base(cfg)
    r = _k0(c, 2048)
    w = synthesize(p, StarProfiles(p, c, pc), r, s, opts.get("nz") or cfg.nz, r.k_eps)
    path = _target(out_dir, opts.get("out"), "synth.csv")
    files = [write_csv(path, ["x", "z", "eta"], w.rows()),
             write_json(path.with_suffix(".json"), w.meta)]
    return w.meta, files, {}


HANDLERS = {"params": cmd_params, "dispersion": cmd_dispersion, "coeffs": cmd_coeffs,
            "soliton": cmd_soliton, "spectrum": cmd_spectrum, "dimbreak": cmd_dimbreak,
            "bvp-check": cmd_bvp_check, "linop-check": cmd_linop_check, "synth": cmd_synth}


def run(command, cfg, out_dir=None, **opts):
    """Dispatch one subcommand; writes outputs plus manifest.json and returns (result, manifest)."""
    if command not in HANDLERS:
        raise click.UsageError(f"unknown command {command}")
    out_dir = Path(out_dir or cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    res, files, timings = HANDLERS[command](cfg, out_dir, opts)
    wall = time.perf_counter() - t0
    man = build_manifest(command, cfg, files, wall, out_dir, timings)
    write_json(out_dir / "manifest.json", man.to_dict())
    return res, man


class State:
    def __init__(self):
        self.config_path = None
        self.out = None
        self.quiet = False


def _config(state, tau0, eps=None):
    if state.config_path:
        cfg = load_config(state.config_path)
        raw = cfg.to_dict()
        if tau0 is not None or eps is not None:
            if tau0 is not None:
                raw["tau0"] = tau0
            if eps is not None:
                raw["eps"] = eps
            raw["grids"]["L"] = None
            cfg = validate_config(raw)
        return cfg
    if tau0 is None:
        raise click.UsageError("--tau0 is required without --config")
    raw = {"tau0": tau0}
    if eps is not None:
        raw["eps"] = eps
    return validate_config(raw)


def _emit(state, command, tau0, eps=None, **opts):
    cfg = _config(state, tau0, eps)
    out = opts.get("out")
    if state.out:
        out_dir = state.out
    elif out:
        out_dir = out if command == "soliton" else str(Path(out).parent)
    else:
        out_dir = None
    res, man = run(command, cfg, out_dir=out_dir, **opts)
    if not state.quiet:
        click.echo(dumps(res if res is not None else {"files": man.files}), nl=False)


pass_state = click.make_pass_decorator(State, ensure=True)
TAU = click.option("--tau0", type=float, default=None, help="Bond number in (0, 1/3).")
EPS = click.option("--eps", type=float, default=None, help="Small parameter (default 0.05).")


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None, help="JSON run config.")
@click.option("--out", type=click.Path(), default=None, help="Output directory.")
@click.option("--quiet", is_flag=True, help="Do not echo results to stdout.")
@click.version_option(package_name="artifact")
@pass_state
def cli(state, config_path, out, quiet):
    """Dimension-breaking computations for gravity-capillary line solitary waves."""
    state.config_path, state.out, state.quiet = config_path, out, quiet


@cli.command()
@TAU
@EPS
@pass_state
def params(state, tau0, eps):
    """Dispersion minimizer mu0, alpha0, beta0."""
    _emit(state, "params", tau0, eps)


@cli.command()
@TAU
@click.option("--n", type=int, default=None)
@click.option("--lam", type=float, default=None)
@click.option("--mu-max", type=float, default=None)
@click.option("--out", type=click.Path(), default=None)
@pass_state
def dispersion(state, tau0, n, lam, mu_max, out):
    """g(mu, lambda) samples as CSV."""
    _emit(state, "dispersion", tau0, n=n, lam=lam, mu_max=mu_max, out=out)


@cli.command()
@TAU
@pass_state
def coeffs(state, tau0):
    """Envelope and profile coefficients."""
    _emit(state, "coeffs", tau0)


@cli.command()
@TAU
@EPS
@click.option("--L", "L", type=float, default=None, help="Physical half-length.")
@click.option("--n", type=int, default=None)
@click.option("--ny", type=int, default=None)
@click.option("--negative", is_flag=True, help="Negative soliton branch.")
@click.option("--out", type=click.Path(), default=None, help="Output directory.")
@pass_state
def soliton(state, tau0, eps, L, n, ny, negative, out):
    """Line solitary wave profiles."""
    _emit(state, "soliton", tau0, eps, L=L, n=n, ny=ny, negative=negative, out=out)


@cli.command()
@TAU
@click.option("--n", type=int, default=None)
@click.option("--L", "L", type=float, default=None, help="Half-length in the long variable X.")
@click.option("--count", type=int, default=None)
@pass_state
def spectrum(state, tau0, n, L, count):
    """Lowest eigenvalues of the reduced operators."""
    _emit(state, "spectrum", tau0, n=n, L=L, count=count)


@cli.command("dimbreak")
@TAU
@click.option("--n", type=int, default=None)
@click.option("--L", "L", type=float, default=None, help="Half-length in the long variable X.")
@click.option("--refine", type=int, default=None, help="Number of grid levels ending at n.")
@pass_state
def dimbreak_cmd(state, tau0, n, L, refine):
    """Dimension-breaking wavenumber k0."""
    _emit(state, "dimbreak", tau0, n=n, L=L, refine=refine)


@cli.command("bvp-check")
@TAU
@EPS
@click.option("--ny", type=int, default=None)
@pass_state
def bvp_check(state, tau0, eps, ny):
    """Strip boundary-value solver checks."""
    _emit(state, "bvp-check", tau0, eps, ny=ny)


@cli.command("linop-check")
@TAU
@EPS
@click.option("--fix-r", is_flag=True, help="Restrict the search to Fix R.")
@click.option("--ny", type=int, default=None, help="Lobatto nodes in y.")
@click.option("--out", type=click.Path(), default=None)
@pass_state
def linop_check(state, tau0, eps, fix_r, ny, out):
    """Imaginary eigenvalue of the full linearized operator."""
    _emit(state, "linop-check", tau0, eps, fix_r=fix_r, ny=ny, out=out)


@cli.command()
@TAU
@EPS
@click.option("--s", type=float, default=None, help="Leading-order amplitude.")
@click.option("--nz", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@pass_state
def synth(state, tau0, eps, s, nz, out):
    """Modulated solitary-wave surface as CSV."""
    _emit(state, "synth", tau0, eps, s=s, nz=nz, out=out)


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="dimbreak", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except DimbreakError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    except Exception as exc:  # unexpected failures map to the internal-error code
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        return 4
    return 0


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
