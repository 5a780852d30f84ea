"""Sampling plans and relation reports shared by the verification modules."""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SamplePlan:
    """How many samples to draw per relation, from which seed, with which pole margin."""

    count: int = 30
    seed: int = 7
    margin: float = 0.02
    max_attempts: int = 1000
    counts: dict = field(default_factory=dict)

    def n(self, relation):
        return int(self.counts.get(relation, self.count))

    def rng(self, salt=0):
        return np.random.default_rng([int(self.seed), int(salt)])


def _jsonable(v):
    if isinstance(v, complex) or isinstance(v, np.complexfloating):
        return [float(np.real(v)), float(np.imag(v))]
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v


@dataclass
class RelationResult:
    relation: str
    max_residual: float = 0.0
    worst: dict = field(default_factory=dict)
    samples: int = 0
    tol: float = 1e-8

    @property
    def passed(self):
        return bool(self.max_residual < self.tol)

    def to_json(self):
        return {
            "relation": self.relation,
            "max_residual": float(self.max_residual),
            "worst": _jsonable(self.worst),
            "samples": self.samples,
            "pass": self.passed,
        }


@dataclass
class RelationReport:
    """Per-relation maximum normalized residuals; pass iff each is below tol."""

    tol: float
    env: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)

    def add(self, relation, residual, **where):
        res = self.results.get(relation)
        if res is None:
            res = self.results[relation] = RelationResult(relation, tol=self.tol)
        res.samples += 1
        residual = float(residual)
        if not np.isfinite(residual):
            residual = float("inf")
        if residual >= res.max_residual:
            res.max_residual = residual
            res.worst = dict(where)

    def touch(self, relation):
        """Register a relation that had nothing to check (residual 0)."""
        if relation not in self.results:
            self.results[relation] = RelationResult(relation, tol=self.tol)

    def merge(self, other, prefix=""):
        for name, res in other.results.items():
            key = prefix + name
            mine = self.results.get(key)
            if mine is None or res.max_residual > mine.max_residual:
                new = RelationResult(key, res.max_residual, dict(res.worst),
                                     res.samples + (mine.samples if mine else 0), self.tol)
                self.results[key] = new
            else:
                mine.samples += res.samples
        return self

    def __getitem__(self, relation):
        return self.results[relation]

    def __contains__(self, relation):
        return relation in self.results

    @property
    def max_residual(self):
        return max((r.max_residual for r in self.results.values()), default=0.0)

    @property
    def passed(self):
        return all(r.passed for r in self.results.values())

    def failures(self):
        return [name for name, r in self.results.items() if not r.passed]

    def to_json(self):
        return {
            "tol": self.tol,
            "pass": self.passed,
            "max_residual": self.max_residual,
            "env": _jsonable(self.env),
            "relations": [self.results[k].to_json() for k in sorted(self.results)],
        }
