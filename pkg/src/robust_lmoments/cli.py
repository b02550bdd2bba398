"""Command-line front door.

Subcommands: ``moments`` (sample or population trimmed/winsorized
moments), ``asymcov`` (asymptotic covariance matrix), ``equivalence``
(cross-form agreement audit), ``fit`` (moment-matching parameter
estimation), and ``simulate`` (Monte Carlo verification).

Exit codes: 0 success, 1 computational failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import io
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .asymcov import CovMethod, CovMatrix, cov_matrix
from .audit import run_mtm_audit, run_mwm_audit, run_mwm_equal_props_audit
from .errors import RobustLMomentsError
from .estimate import fit as fit_model
from .models import parse_model, parse_model_template, parse_transform
from .moments import (
    CompositeH,
    Mode,
    MomentSpec,
    load_sample,
    population_moment,
    sample_moment,
)
from .simulate import SimulationConfig, run_mc

__all__ = ["RunConfig", "parse_args", "run", "main"]


@dataclass(frozen=True)
class RunConfig:
    command: str
    model: str | None = None
    transforms: tuple[str, ...] = ()
    trims: tuple[tuple[float, float], ...] = ()
    mode: str = "mtm"
    data: str | None = None
    out: str | None = None
    csv: bool = False
    method: str = "auto"
    seed: int = 0
    n: int = 1000
    replications: int = 500
    tolerance: float = 0.10
    config_file: str | None = None
    extra: tuple[tuple[str, str], ...] = field(default=())

    def canonical(self) -> str:
        """Stable one-line form; parsing it back yields an equal config."""
        parts = [self.command]
        if self.model:
            parts.append(f"--family {self.model}")
        for t in self.transforms:
            parts.append(f"--transform {t}")
        for a, b in self.trims:
            parts.append(f"--trim {a:g},{b:g}")
        parts.append(f"--mode {self.mode}")
        if self.data:
            parts.append(f"--data {self.data}")
        if self.out:
            parts.append(f"--out {self.out}")
        if self.csv:
            parts.append("--csv")
        if self.command in ("asymcov",):
            parts.append(f"--method {self.method}")
        if self.command in ("equivalence", "simulate"):
            parts.append(f"--seed {self.seed}")
        if self.command == "simulate":
            parts.append(f"-n {self.n}")
            parts.append(f"-R {self.replications}")
            parts.append(f"--tolerance {self.tolerance:g}")
        return " ".join(parts)


def _trim_pair(text: str) -> tuple[float, float]:
    try:
        a_txt, b_txt = text.split(",")
        a, b = float(a_txt), float(b_txt)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"expected 'a,b' with two numbers, got {text!r}"
        ) from exc
    if a < 0 or b < 0:
        raise argparse.ArgumentTypeError("trimming proportions must be >= 0")
    if a + b >= 1:
        raise argparse.ArgumentTypeError("a+b must be < 1")
    return a, b


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robust-lmoments",
        description=(
            "Robust L-statistic estimation: trimmed and winsorized moments, "
            "their asymptotic covariance matrix, moment-matching fits, and a "
            "Monte Carlo verification harness."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *, transforms=True, data=False):
        if transforms:
            p.add_argument(
                "--transform",
                action="append",
                default=None,
                help="transform of the observations: identity, power(k), "
                "log, or shifted(c); repeat for several coordinates",
            )
            p.add_argument(
                "--trim",
                action="append",
                type=_trim_pair,
                default=None,
                metavar="A,B",
                help="lower,upper trimming proportions with a+b < 1; "
                "repeat to pair with each --transform",
            )
            p.add_argument(
                "--mode",
                choices=["mtm", "mwm"],
                default="mtm",
                help="mtm discards the trimmed tails, mwm piles their "
                "probability mass onto the retained window edges",
            )
        if data:
            p.add_argument("--data", help="sample file, one number per line")
        p.add_argument("--out", help="write output to this file atomically")
        p.add_argument("--csv", action="store_true", help="CSV output")

    p = sub.add_parser(
        "moments",
        help="sample and/or population trimmed or winsorized moments",
        description=(
            "Sample side: the mean of the transform over the order "
            "statistics with the lowest floor(n*a) and highest floor(n*b) "
            "discarded (trimmed) or replaced by the nearest retained values "
            "(winsorized).  Population side: the integral of the composite "
            "transform-of-quantile over the retained probability window, "
            "normalized by the retained mass, plus edge atoms in the "
            "winsorized case."
        ),
    )
    add_common(p, data=True)
    p.add_argument("--family", help="distribution, e.g. exponential(1.0)")

    p = sub.add_parser(
        "asymcov",
        help="asymptotic variance-covariance matrix of the estimator",
        description=(
            "Entries are the integral over (0,1) of the product of the two "
            "coordinates' influence-style alpha functions; interchangeable "
            "routes evaluate the same quantity through the min(v,w)-vw "
            "kernel double integral, its closed form under the left-nested "
            "trimming ordering, equal-proportions shortcuts, or the "
            "nine-piece winsorized decomposition."
        ),
    )
    add_common(p)
    p.add_argument("--family", required=True)
    p.add_argument(
        "--method",
        choices=[m.value for m in CovMethod],
        default="auto",
        help="evaluation route; auto picks the fastest valid one per entry",
    )

    p = sub.add_parser(
        "equivalence",
        help="cross-form agreement audit over a corpus of configurations",
        description=(
            "Evaluates every interchangeable covariance route on a corpus "
            "of families, transforms, and trimming orderings, and reports "
            "the worst pairwise relative deviation."
        ),
    )
    p.add_argument("--seed", type=int, default=0, help="reserved; corpus is deterministic")
    p.add_argument("--out", help="write output to this file atomically")
    p.add_argument("--csv", action="store_true", help="CSV output")

    p = sub.add_parser(
        "fit",
        help="estimate free parameters by moment matching",
        description=(
            "Solves population moment = sample moment for the free "
            "parameters (marked '?') by damped Newton iteration, and "
            "reports delta-method standard errors from the asymptotic "
            "covariance of the sample moments."
        ),
    )
    add_common(p, data=True)
    p.add_argument(
        "--family",
        required=True,
        help="template with '?' for free parameters, e.g. exponential(?)",
    )

    p = sub.add_parser(
        "simulate",
        help="Monte Carlo check of the covariance formulas",
        description=(
            "Draws R samples of size n by inverse transform, compares the "
            "across-replication covariance of sqrt(n)-scaled moment "
            "deviations with the formula value, and fails when the worst "
            "relative deviation exceeds the tolerance."
        ),
    )
    add_common(p)
    p.add_argument("--family")
    p.add_argument("--config", dest="config_file", help="key=value file, '#' comments")
    p.add_argument("-n", type=int, default=1000, help="sample size per replication")
    p.add_argument("-R", "--replications", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=0.10)
    return parser


def _read_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise RobustLMomentsError(
                    f"{path}:{lineno}: expected key=value, got {line!r}"
                )
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def parse_args(argv: list[str]) -> RunConfig:
    ns = _build_parser().parse_args(argv)
    transforms = tuple(getattr(ns, "transform", None) or ())
    trims = tuple(getattr(ns, "trim", None) or ())
    cfg = RunConfig(
        command=ns.command,
        model=getattr(ns, "family", None),
        transforms=transforms or (("identity",) if ns.command != "equivalence" else ()),
        trims=trims,
        mode=getattr(ns, "mode", "mtm"),
        data=getattr(ns, "data", None),
        out=getattr(ns, "out", None),
        csv=getattr(ns, "csv", False),
        method=getattr(ns, "method", "auto"),
        seed=getattr(ns, "seed", 0),
        n=getattr(ns, "n", 1000),
        replications=getattr(ns, "replications", 500),
        tolerance=getattr(ns, "tolerance", 0.10),
        config_file=getattr(ns, "config_file", None),
    )
    if cfg.command == "simulate" and cfg.config_file:
        kv = _read_config_file(cfg.config_file)
        trims = cfg.trims
        transforms = cfg.transforms
        if "trim" in kv:
            trims = tuple(_trim_pair(t.strip()) for t in kv["trim"].split(";"))
        if "transform" in kv:
            transforms = tuple(t.strip() for t in kv["transform"].split(";"))
        cfg = RunConfig(
            command=cfg.command,
            model=kv.get("family", cfg.model),
            transforms=transforms,
            trims=trims,
            mode=kv.get("mode", cfg.mode),
            out=cfg.out,
            csv=cfg.csv,
            seed=int(kv.get("seed", cfg.seed)),
            n=int(kv.get("n", cfg.n)),
            replications=int(kv.get("replications", cfg.replications)),
            tolerance=float(kv.get("tolerance", cfg.tolerance)),
            config_file=cfg.config_file,
        )
    return cfg


def _specs(config: RunConfig) -> list[MomentSpec]:
    transforms = [parse_transform(t) for t in config.transforms]
    trims = list(config.trims) or [(0.0, 0.0)] * len(transforms)
    if len(trims) == 1 and len(transforms) > 1:
        trims = trims * len(transforms)
    if len(trims) != len(transforms):
        raise RobustLMomentsError(
            f"{len(transforms)} transforms but {len(trims)} trim pairs"
        )
    mode = Mode(config.mode)
    return [MomentSpec(t, a, b, mode) for t, (a, b) in zip(transforms, trims)]


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(config: RunConfig, text: str) -> None:
    if config.out:
        _atomic_write(config.out, text)
    else:
        sys.stdout.write(text)


def _format_matrix(cov: CovMatrix, csv: bool) -> str:
    buf = io.StringIO()
    k = cov.k
    if csv:
        buf.write("i,j,sigma2,method\n")
        for i in range(k):
            for j in range(k):
                buf.write(f"{i},{j},{cov.entries[i, j]!r},{cov.methods[i][j]}\n")
    else:
        for i in range(k):
            row = "  ".join(f"{cov.entries[i, j]: .12e}" for j in range(k))
            buf.write(row + "\n")
        buf.write("methods: " + "; ".join(
            f"({i},{j})={cov.methods[i][j]}" for i in range(k) for j in range(i, k)
        ) + "\n")
    return buf.getvalue()


def _run_moments(config: RunConfig) -> str:
    specs = _specs(config)
    lines = []
    csv = config.csv
    if csv:
        lines.append("coordinate,kind,value")
    sample = load_sample(config.data) if config.data else None
    model = parse_model(config.model) if config.model else None
    if sample is None and model is None:
        raise RobustLMomentsError("need --data and/or --family")
    for j, spec in enumerate(specs):
        if sample is not None:
            v = sample_moment(sample, spec)
            lines.append(f"{j},sample,{v!r}" if csv else f"[{j}] sample    {v:.12g}")
        if model is not None:
            v = population_moment(CompositeH(model, spec.transform), spec)
            lines.append(
                f"{j},population,{v!r}" if csv else f"[{j}] population {v:.12g}"
            )
    return "\n".join(lines) + "\n"


def _run_asymcov(config: RunConfig) -> str:
    specs = _specs(config)
    model = parse_model(config.model)
    cov = cov_matrix(specs, model, CovMethod(config.method))
    return _format_matrix(cov, config.csv)


def _run_equivalence(config: RunConfig) -> tuple[str, bool]:
    results = {
        "trimmed-routes": run_mtm_audit(),
        "winsorized-decomposition": run_mwm_audit(),
        "winsorized-equal-props": run_mwm_equal_props_audit(),
    }
    ok = all(r.passed for r in results.values())
    buf = io.StringIO()
    if config.csv:
        buf.write("audit,cases,comparisons,max_deviation,runtime_s,status\n")
        for name, r in results.items():
            buf.write(
                f"{name},{r.cases},{r.comparisons},{r.max_deviation!r},"
                f"{r.runtime_s:.2f},{'PASS' if r.passed else 'FAIL'}\n"
            )
    else:
        for name, r in results.items():
            buf.write(
                f"{'PASS' if r.passed else 'FAIL'} {name}: {r.cases} configs, "
                f"max deviation {r.max_deviation:.3e} in {r.runtime_s:.1f}s\n"
            )
            if r.worst_case is not None:
                buf.write(
                    f"  worst: {r.worst_case.model} "
                    f"{r.worst_case.spec_i} vs {r.worst_case.spec_j}\n"
                )
    return buf.getvalue(), ok


def _run_fit(config: RunConfig) -> str:
    if not config.data:
        raise RobustLMomentsError("fit requires --data")
    template = parse_model_template(config.model)
    sample = load_sample(config.data)
    if sample.size == 0:
        raise RobustLMomentsError("empty sample")
    specs = _specs(config)
    result = fit_model(template, sample, specs)
    se = np.sqrt(np.diag(result.cov_theta.entries) / sample.size)
    buf = io.StringIO()
    if config.csv:
        buf.write("parameter,estimate,std_error\n")
        for i, (th, s) in enumerate(zip(result.theta_hat, se)):
            buf.write(f"{i},{th!r},{s!r}\n")
    else:
        buf.write(f"model: {result.model}\n")
        for i, (th, s) in enumerate(zip(result.theta_hat, se)):
            buf.write(f"theta[{i}] = {th:.10g}  (se {s:.4g})\n")
        buf.write(
            f"iterations: {result.iterations}, "
            f"residual: {result.residual_norm:.3e}\n"
        )
        if result.non_unique:
            buf.write(
                f"warning: second solution found at {result.alt_theta}\n"
            )
    return buf.getvalue()


def _run_simulate(config: RunConfig) -> tuple[str, bool]:
    if not config.model:
        raise RobustLMomentsError("simulate requires --family (flag or config file)")
    sim = SimulationConfig(
        model=parse_model(config.model),
        specs=tuple(_specs(config)),
        n=config.n,
        replications=config.replications,
        master_seed=config.seed,
    )
    report = run_mc(sim)
    ok = report.max_rel_dev <= config.tolerance
    buf = io.StringIO()
    if config.csv:
        buf.write("i,j,empirical,theoretical,rel_dev\n")
        k = report.theoretical_cov.k
        for i in range(k):
            for j in range(k):
                buf.write(
                    f"{i},{j},{report.empirical_cov.entries[i, j]!r},"
                    f"{report.theoretical_cov.entries[i, j]!r},"
                    f"{report.per_entry_dev[i, j]!r}\n"
                )
    else:
        buf.write("empirical covariance:\n")
        buf.write(_format_matrix(report.empirical_cov, False))
        buf.write("theoretical covariance:\n")
        buf.write(_format_matrix(report.theoretical_cov, False))
        buf.write(
            f"max relative deviation: {report.max_rel_dev:.4f} "
            f"(tolerance {config.tolerance:g})\n"
        )
        buf.write(f"skewness per coordinate: {report.skewness}\n")
        buf.write(
            f"{'PASS' if ok else 'FAIL'}: replications={sim.replications} "
            f"n={sim.n} seed={sim.master_seed} "
            f"failures={report.failures} runtime={report.runtime_ms:.0f}ms\n"
        )
    return buf.getvalue(), ok


def run(config: RunConfig) -> int:
    try:
        if config.command == "moments":
            _emit(config, _run_moments(config))
        elif config.command == "asymcov":
            _emit(config, _run_asymcov(config))
        elif config.command == "equivalence":
            text, ok = _run_equivalence(config)
            _emit(config, text)
            return 0 if ok else 1
        elif config.command == "fit":
            _emit(config, _run_fit(config))
        elif config.command == "simulate":
            text, ok = _run_simulate(config)
            _emit(config, text)
            return 0 if ok else 1
        else:
            raise RobustLMomentsError(f"unknown command {config.command!r}")
    except (RobustLMomentsError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv: list[str] | None = None) -> int:
    return run(parse_args(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    sys.exit(main())
