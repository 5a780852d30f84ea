"""Command-line batch driver: build representations, run the verification suites, write a JSON report.

Exit status: 0 when every selected suite passes, 1 on a numeric failure (the report is still
written), 2 on a configuration error.
"""

import argparse
import datetime
import json
import platform
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .errors import EllqgError, InvalidArgument, InvalidParams
from .report import SamplePlan, _jsonable
from .theta import ModularParams

SCHEMA_VERSION = 1
SUITES = ("theta", "qloop", "functor", "eqg", "serre", "factorize", "invert", "roundtrip", "classify")
COMMANDS = {
    "build": (),
    "theta": ("theta",),
    "verify-qloop": ("qloop",),
    "functor": ("functor",),
    "verify-eqg": ("eqg",),
    "serre": ("serre",),
    "factorize": ("factorize",),
    "invert": ("invert",),
    "roundtrip": ("roundtrip",),
    "classify": ("classify",),
    "all": None,
}
KINDS = ("sl2", "sl3", "sl2xsl2")
DEFAULT_POINT = [0.25 * np.cos(0.9), 0.25 * np.sin(0.9)]


class ConfigError(EllqgError, ValueError):
    """The run configuration cannot be parsed or violates a parameter invariant."""


def parse_complex(v, what="value"):
    """Accept [re, im], a number, or a string such as '0.31+0.17i'."""
    try:
        if isinstance(v, (list, tuple)):
            if len(v) != 2:
                raise ValueError
            return complex(float(v[0]), float(v[1]))
        if isinstance(v, str):
            return complex(v.strip().replace(" ", "").replace("i", "j"))
        if isinstance(v, bool):
            raise ValueError
        return complex(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{what}: cannot read {v!r} as a complex number") from None


@dataclass
class RunConfig:
    kind: str = "sl2"
    modules: list = field(default_factory=lambda: [{"a": DEFAULT_POINT}])
    tau: complex = 0.8j
    hbar: complex = 0.31 + 0.17j
    trunc: int = 40
    tol: float = 1e-7
    seed: int = 7
    samples: int = 30
    theta_samples: int = 200
    suites: tuple = SUITES
    out: str = None

    def params(self):
        try:
            return ModularParams(tau=self.tau, hbar=self.hbar, trunc=self.trunc, tol_check=self.tol)
        except InvalidParams as exc:
            raise ConfigError(str(exc)) from None

    def echo(self):
        return {"kind": self.kind, "modules": _jsonable(self.modules), "tau": _jsonable(self.tau),
                "hbar": _jsonable(self.hbar), "trunc": self.trunc, "tol": self.tol, "seed": self.seed,
                "samples": self.samples, "theta_samples": self.theta_samples, "suites": list(self.suites)}


_KEYS = {"cartan", "kind", "modules", "params", "tau", "hbar", "trunc", "tol", "seed", "samples",
         "theta_samples", "suites", "out"}


def config_from_dict(obj):
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(obj) - _KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    flat = dict(obj.get("params", {}))
    flat.update({k: v for k, v in obj.items() if k != "params"})
    cfg = RunConfig()
    kind = flat.get("kind", flat.get("cartan", cfg.kind))
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
    cfg.kind = kind
    if "modules" in flat:
        mods = flat["modules"]
        if not isinstance(mods, list) or not mods:
            raise ConfigError("modules must be a non-empty list")
        for m in mods:
            if not isinstance(m, dict) or "a" not in m or set(m) - {"a", "b"}:
                raise ConfigError("each module needs 'a' (and optionally 'b' for sl2xsl2)")
        cfg.modules = mods
    for key in ("tau", "hbar"):
        if key in flat:
            setattr(cfg, key, parse_complex(flat[key], key))
    for key, typ in (("trunc", int), ("seed", int), ("samples", int), ("theta_samples", int), ("tol", float)):
        if key in flat:
            try:
                setattr(cfg, key, typ(flat[key]))
            except (TypeError, ValueError):
                raise ConfigError(f"{key} must be a number") from None
    if "suites" in flat:
        bad = [s for s in flat["suites"] if s not in SUITES]
        if bad:
            raise ConfigError(f"unknown suites {bad}; choose from {SUITES}")
        cfg.suites = tuple(flat["suites"])
    cfg.out = flat.get("out")
    if cfg.samples < 1 or cfg.theta_samples < 1:
        raise ConfigError("sample counts must be positive")
    return cfg


def load_config(path=None):
    if path is None:
        return RunConfig()
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc.msg} (line {exc.lineno})") from None
    return config_from_dict(obj)


# ----------------------------------------------------------------------------
# pipeline


class Pipeline:
    """Lazily built stages shared by the suites: V -> Theta(V) -> normalized -> Xi."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.params = cfg.params()
        self._cache = {}

    def _get(self, name, make):
        if name not in self._cache:
            self._cache[name] = make()
        return self._cache[name]

    @property
    def plan(self):
        return SamplePlan(count=self.cfg.samples, seed=self.cfg.seed)

    @property
    def rep(self):
        from .qloop import direct_sum, make_evaluation_module

        def build():
            reps = []
            for m in self.cfg.modules:
                a = parse_complex(m["a"], "module a")
                b = parse_complex(m["b"], "module b") if "b" in m else None
                if self.cfg.kind == "sl2xsl2" and b is None:
                    b = a * np.exp(1.2j) * 2.4
                try:
                    reps.append(make_evaluation_module(self.cfg.kind, a, self.params, b=b, seed=self.cfg.seed))
                except (InvalidArgument, InvalidParams) as exc:
                    raise ConfigError(f"module {m}: {exc}") from None
            return reps[0] if len(reps) == 1 else direct_sum(*reps)
        return self._get("rep", build)

    @property
    def erep(self):
        from .functor import theta_functor
        return self._get("erep", lambda: theta_functor(self.rep))

    @property
    def normalized(self):
        from .inverse import normalize_gauges
        return self._get("normalized", lambda: normalize_gauges(self.erep))


def _relation_suite(report):
    out = report.to_json()
    return out, report.passed


def suite_theta(pl):
    from .theta import check_theta_identities
    return _relation_suite(check_theta_identities(pl.params, pl.cfg.theta_samples, pl.cfg.seed))


def suite_qloop(pl):
    from .qloop import check_qloop_relations
    return _relation_suite(check_qloop_relations(pl.rep, pl.plan))


def suite_functor(pl):
    from .errors import NotHighestWeight
    from .functor import highest_weight_formulas
    from .verify import residue_vs_contour
    out = {"blocks": None if pl.erep.blocks is None else len(pl.erep.blocks),
           "residue_vs_contour": residue_vs_contour(pl.erep, pl.rep, count=10, seed=pl.cfg.seed)}
    ok = out["residue_vs_contour"] < pl.cfg.tol
    try:
        hw, hw_ok = _relation_suite(highest_weight_formulas(pl.rep, pl.cfg.samples, pl.cfg.seed))
        out["highest_weight"] = hw
        ok = ok and hw_ok
    except NotHighestWeight as exc:
        out["highest_weight"] = {"skipped": str(exc)}
    return out, ok


def suite_eqg(pl):
    from .verify import check_eqg_relations
    return _relation_suite(check_eqg_relations(pl.erep, pl.plan))


def suite_serre(pl):
    from .verify import check_serre
    n = pl.erep.rank
    if n < 2:
        return {"skipped": "rank 1: no Serre relations"}, True
    out, ok = {}, True
    for i in range(n):
        for j in range(n):
            if i != j:
                res, passed = _relation_suite(check_serre(pl.erep, i, j, SamplePlan(count=10, seed=pl.cfg.seed)))
                out[f"{i},{j}"] = res
                ok = ok and passed
    return out, ok


def suite_factorize(pl):
    from .factorization import factorization_report
    rep = factorization_report(pl.erep, samples=20, seed=pl.cfg.seed)
    tol = pl.cfg.tol
    ok = True
    for res in rep.values():
        ok = ok and res["pass"] and res["Gplus_zero"] < tol
        if res["preconditions"]:
            ok = ok and res["permuted_resolve"] < tol
    return rep, ok


def suite_invert(pl):
    from .inverse import _loop_residual, xi_functor
    W, record = pl.normalized
    V2 = xi_functor(W)
    res = _loop_residual(pl.rep, V2, samples=pl.cfg.samples, seed=pl.cfg.seed)
    return {"gauge": record.to_json(), "xi_vs_input": res}, res < pl.cfg.tol


def suite_roundtrip(pl):
    from .inverse import roundtrip_report
    rep = roundtrip_report(pl.rep, samples=pl.cfg.samples, seed=pl.cfg.seed)
    return rep, rep["xi_theta"] < pl.cfg.tol and rep["theta_xi"] < pl.cfg.tol


def suite_classify(pl):
    from .classify import elliptic_drinfeld_data, verify_triangularity
    from .errors import NotHighestWeight
    tri = verify_triangularity(pl.erep, samples=10, seed=pl.cfg.seed)
    out = {"triangularity": tri.to_json()}
    try:
        out["highest_weight"] = elliptic_drinfeld_data(pl.erep).to_json()
    except NotHighestWeight as exc:
        out["highest_weight"] = None
        out["not_highest_weight"] = str(exc)
        diag = getattr(exc, "diagnostic", None)
        if diag is not None:
            out["strings"] = diag.to_json()
    ok = tri.raising_residual < pl.cfg.tol and tri.eigen_residual < pl.cfg.tol and tri.span_collapse
    return out, ok


RUNNERS = {"theta": suite_theta, "qloop": suite_qloop, "functor": suite_functor, "eqg": suite_eqg,
           "serre": suite_serre, "factorize": suite_factorize, "invert": suite_invert,
           "roundtrip": suite_roundtrip, "classify": suite_classify}


def run_suite(cfg, command="all"):
    """Run the selected suites in pipeline order; returns (status, report)."""
    pl = Pipeline(cfg)
    selected = COMMANDS[command]
    suites = [s for s in SUITES if s in (cfg.suites if selected is None else selected)]
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": cfg.echo(),
        "environment": {"ellqg": __version__, "python": platform.python_version(), "numpy": np.__version__,
                        "params": pl.params.as_dict()},
        "suites": {},
    }
    if command == "build" or "qloop" in suites or not suites:
        report["representation"] = {"label": pl.rep.label, "dim": pl.rep.dim, "rep": pl.rep.to_json()}
    ok = True
    for name in suites:
        try:
            body, passed = RUNNERS[name](pl)
        except ConfigError:
            raise
        except EllqgError as exc:
            body, passed = {"error": type(exc).__name__, "message": str(exc)}, False
        body = dict(body) if isinstance(body, dict) else {"result": body}
        body["pass"] = bool(passed)
        report["suites"][name] = body
        ok = ok and passed
    report["pass"] = ok
    report["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return (0 if ok else 1), report


def dump_report(report):
    return json.dumps(_jsonable(report), sort_keys=True, indent=2, allow_nan=True) + "\n"


def build_parser():
    ap = argparse.ArgumentParser(prog="ellqg", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS), help="pipeline stage or suite to run")
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--out", help="report path (default: stdout)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--tol", type=float)
    ap.add_argument("--trunc", type=int)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = load_config(args.config)
        overrides = {k: getattr(args, k) for k in ("seed", "tol", "trunc") if getattr(args, k) is not None}
        cfg = replace(cfg, **overrides)
        if args.out:
            cfg.out = args.out
        status, report = run_suite(cfg, args.command)
    except ConfigError as exc:
        print(f"ellqg: config error: {exc}", file=sys.stderr)
        return 2
    text = dump_report(report)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for name, body in report["suites"].items():
        print(f"{name:10s} {'pass' if body['pass'] else 'FAIL'}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
