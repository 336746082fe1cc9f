"""Command-line front end.

Exit codes: 0 success, 1 internal error, 2 invalid input, 3 enumeration
guard exceeded, 4 conjecture violation found.
"""

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from coalloc import games, majorization, variance
from coalloc.dataio import DataError, load_covariance, load_mean, load_returns, sample_moments
from coalloc.games import GuardError, TabularGame

log = logging.getLogger("coalloc")

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_GUARD, EXIT_VIOLATION = 0, 1, 2, 3, 4
SD_WARN_N = 18
METHODS = ("variance", "sd", "utility")


class InputError(ValueError):
    pass


def fmt(x):
    """12 significant digits, locale independent, no negative zero."""
    return f"{float(x) + 0.0:.12g}"


def num(x):
    return float(fmt(x))


@dataclass
class RunConfig:
    command: str
    method: str = "variance"
    theta: float = None
    returns: str = None
    cov: str = None
    mean: str = None
    game: str = None
    allocation: str = None
    coalition: str = None
    n: int = None
    samples: int = None
    seed: int = 0
    mode: str = "diagonal"
    output: str = None
    sidecar: str = None
    format: str = "csv"
    threads: int = None

    def validate(self):
        if self.method not in METHODS:
            raise InputError(f"unknown method {self.method!r}")
        if self.command in ("allocate", "check-core", "fuse", "export-game"):
            sources = [s for s in (self.returns, self.cov, self.game) if s]
            if len(sources) != 1:
                raise InputError("give exactly one input source (--returns, --cov or --game)")
            if self.game and self.command in ("allocate", "export-game"):
                raise InputError("--game is not accepted here")
            if self.game and self.theta is not None:
                raise InputError("--theta has no meaning with --game")
            if not self.game:
                if self.method == "utility" and self.theta is None:
                    raise InputError("--theta is required for --method utility")
                if self.method != "utility" and self.theta is not None:
                    raise InputError("--theta is only valid with --method utility")
                if self.mean and not self.cov:
                    raise InputError("--mean goes with --cov; with --returns the sample mean is used")
                if self.method == "utility" and self.cov and not self.mean:
                    raise InputError("--method utility with --cov needs --mean")
            if self.theta is not None:
                variance.UtilityParams(self.theta)
        if self.command == "fuse" and not self.coalition:
            raise InputError("--coalition is required")
        if self.command == "verify-conjecture":
            if self.n is None or self.samples is None:
                raise InputError("--n and --samples are required")
            if self.samples < 0:
                raise InputError("--samples must be >= 0")
            if not 0 <= self.seed < 2**64:
                raise InputError("--seed must be a 64-bit unsigned integer")
            if self.mode not in ("diagonal", "general"):
                raise InputError(f"unknown mode {self.mode!r}")
        return self


def _moments(cfg):
    """(player labels, mean or None, covariance)"""
    if cfg.returns:
        r = load_returns(cfg.returns)
        mu, cov = sample_moments(r)
        return list(r.names), mu, cov
    cov = load_covariance(cfg.cov)
    mu = load_mean(cfg.mean) if cfg.mean else None
    return [str(i + 1) for i in range(cov.n)], mu, cov


def _warn_sd(n):
    if n > SD_WARN_N:
        print(f"warning: exact SD-game Shapley for n={n} enumerates 2^{n} coalitions", file=sys.stderr)


def _game(cfg):
    """(player labels, tabular game, mean, covariance); the last two are None for --game."""
    if cfg.game:
        try:
            g = TabularGame.from_json(Path(cfg.game).read_text())
        except (json.JSONDecodeError, TypeError) as exc:
            raise InputError(f"{cfg.game}: invalid game JSON ({exc})") from None
        return [str(i + 1) for i in range(g.n)], g, None, None
    names, mu, cov = _moments(cfg)
    if cfg.method == "variance":
        g = variance.variance_game(cov)
    elif cfg.method == "sd":
        _warn_sd(cov.n)
        g = variance.sd_game(cov)
    else:
        g = variance.utility_game(mu, cov, cfg.theta)
    return names, g, mu, cov


def _shapley_of(cfg, g, mu, cov):
    if cfg.game or cfg.method == "sd":
        return games.shapley_exact(g)
    if cfg.method == "variance":
        return variance.variance_shapley(cov)
    return variance.utility_allocation(mu, cov, cfg.theta)


def _write(cfg, text):
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)


def _allocation_text(cfg, names, phi):
    if cfg.format == "json":
        doc = {
            "method": cfg.method,
            "theta": cfg.theta,
            "players": names,
            "allocation": [num(x) for x in phi],
            "total": num(float(np.sum(phi))),
        }
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["player", "shapley"])
    for name, x in zip(names, phi):
        w.writerow([name, fmt(x)])
    return buf.getvalue()


def cmd_allocate(cfg):
    names, mu, cov = _moments(cfg)
    if cfg.method == "variance":
        phi = variance.variance_shapley(cov)
    elif cfg.method == "utility":
        phi = variance.utility_allocation(mu, cov, cfg.theta)
    else:
        if cov.n > games.MAX_PLAYERS:
            raise GuardError(f"sd method needs n <= {games.MAX_PLAYERS} (tabular enumeration guard), got n={cov.n}")
        _warn_sd(cov.n)
        phi = variance.sd_shapley(cov)
    _write(cfg, _allocation_text(cfg, names, phi))
    return EXIT_OK


def _load_allocation(path, n):
    text = Path(path).read_text()
    if path.endswith(".json"):
        values = json.loads(text)["allocation"]
    else:
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if rows and rows[0][:2] == ["player", "shapley"]:
            rows = rows[1:]
        values = [float(r[-1]) for r in rows]
    x = np.asarray(values, dtype=np.float64)
    if x.shape != (n,):
        raise InputError(f"{path}: allocation has {x.size} entries, game has {n} players")
    return x


def cmd_check_core(cfg):
    names, g, mu, cov = _game(cfg)
    sup, sub = games.is_supermodular(g), games.is_submodular(g)
    if cfg.allocation:
        x, who = _load_allocation(cfg.allocation, g.n), "allocation"
    else:
        x, who = _shapley_of(cfg, g, mu, cov), "Shapley"
    core, anticore = games.in_core(g, x), games.in_anticore(g, x)
    if sup and sub:
        kind = "supermodular and submodular (additive)"
    elif sup:
        kind = "supermodular"
    elif sub:
        kind = "submodular"
    else:
        kind = "neither classified"
    summary = "; ".join(
        [kind, f"{who} {'in' if core else 'not in'} core", f"{who} {'in' if anticore else 'not in'} anticore"]
    )
    if cfg.format == "json":
        doc = {
            "supermodular": sup,
            "submodular": sub,
            "in_core": core,
            "in_anticore": anticore,
            "players": names,
            "allocation": [num(v) for v in x],
            "summary": summary,
        }
        _write(cfg, json.dumps(doc, indent=2) + "\n")
    else:
        _write(cfg, summary + "\n")
    return EXIT_OK


def _parse_coalition(text, n):
    try:
        players = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise InputError(f"coalition must be comma-separated player numbers, got {text!r}") from None
    if not players:
        raise InputError("coalition is empty")
    bad = [p for p in players if not 1 <= p <= n]
    if bad:
        raise InputError(f"player {bad[0]} out of range 1..{n}")
    return sorted(set(players))


def cmd_fuse(cfg):
    names, g, _, _ = _game(cfg)
    players = _parse_coalition(cfg.coalition, g.n)
    mask = games.coalition(p - 1 for p in players)
    fused = games.fuse(g, mask)
    phi = games.shapley_exact(g)
    phi_fused = games.shapley_exact(fused)
    holds = games.satisfies_fusion_property(g, mask)
    doc = {
        "coalition": players,
        "players": [nm for i, nm in enumerate(names) if i + 1 not in players] + ["+".join(names[p - 1] for p in players)],
        "fused_game": fused.to_dict(),
        "fused_player_value": num(phi_fused[-1]),
        "members_value_sum": num(phi[[p - 1 for p in players]].sum()),
        "fusion_property": "holds" if holds else "violated",
        "verdict": "fusion property holds" if holds else "fusion property violated",
    }
    _write(cfg, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def cmd_export_game(cfg):
    g = _game(cfg)[1]
    _write(cfg, g.to_json() + "\n")
    return EXIT_OK


def _sidecar_path(cfg):
    if cfg.sidecar:
        return Path(cfg.sidecar)
    if cfg.output:
        return Path(cfg.output).with_suffix(".violations.csv")
    return Path(f"coalloc-violations-{cfg.mode}-n{cfg.n}-seed{cfg.seed}.csv")


def write_counterexamples(path, report):
    n = report.n
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample", "slack"] + [f"cov_{i + 1}_{j + 1}" for i in range(n) for j in range(n)])
        for idx, margin, matrix in report.counterexamples:
            w.writerow([idx, repr(margin)] + [repr(float(v)) for v in np.asarray(matrix).ravel()])


def cmd_verify_conjecture(cfg):
    verify = (
        majorization.verify_conjecture_diagonal if cfg.mode == "diagonal" else majorization.verify_conjecture_general
    )
    report = verify(cfg.n, cfg.samples, cfg.seed, threads=cfg.threads)
    _write(cfg, json.dumps(report.to_dict(), indent=2) + "\n")
    if report.violations:
        path = _sidecar_path(cfg)
        write_counterexamples(path, report)
        print(f"{report.violations} violations; counterexamples written to {path}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


COMMANDS = {
    "allocate": cmd_allocate,
    "check-core": cmd_check_core,
    "fuse": cmd_fuse,
    "verify-conjecture": cmd_verify_conjecture,
    "export-game": cmd_export_game,
}


def _add_sources(p, game=True):
    p.add_argument("--returns", help="returns CSV with a header row of asset names")
    p.add_argument("--cov", help="covariance CSV, n rows of n values, no header")
    p.add_argument("--mean", help="single-row CSV of expected returns (utility with --cov)")
    if game:
        p.add_argument("--game", help="tabular game JSON {n, values}")
    p.add_argument("--method", choices=METHODS, default="variance")
    p.add_argument("--theta", type=float, help="risk aversion (utility method only)")
    p.add_argument("--output", "-o", help="write to this file instead of stdout")


def build_parser():
    parser = argparse.ArgumentParser(prog="coalloc", description=__doc__.splitlines()[0])
    parser.add_argument("--verbose", "-v", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("allocate", help="Shapley allocation of variance, SD or utility")
    _add_sources(p, game=False)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("check-core", help="modularity class and core/anticore membership")
    _add_sources(p)
    p.add_argument("--allocation", help="allocation CSV (player,shapley) or JSON; default is the Shapley value")
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("fuse", help="fuse players and test the fusion property")
    _add_sources(p)
    p.add_argument("--coalition", required=True, help="comma-separated 1-based player numbers, e.g. 2,3")

    p = sub.add_parser("export-game", help="write the full tabular game as JSON")
    _add_sources(p, game=False)

    p = sub.add_parser("verify-conjecture", help="Monte-Carlo majorization check")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("diagonal", "general"), default="diagonal")
    p.add_argument("--output", "-o", help="report JSON path (default stdout)")
    p.add_argument("--sidecar", help="CSV for violating matrices")
    p.add_argument("--threads", type=int, help="worker threads (capped by COALLOC_THREADS)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    fields = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__}
    try:
        cfg = RunConfig(**fields).validate()
        return COMMANDS[cfg.command](cfg)
    except GuardError as exc:
        print(f"error: guard violated: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (InputError, DataError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:
        log.debug("traceback", exc_info=True)
        print(f"error: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
