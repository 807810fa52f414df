"""Experiment configuration, validation and the level-by-level runner."""

from __future__ import annotations

import csv
import io
import json
import logging
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from . import counterexample as cex
from .exact_linalg import snf
from .group_core import FreeAbelian, builtin_family
from .homology import (
    check_composition,
    cover_euler_characteristic,
    cube_complex,
    homology_torsion,
    induce,
    parse_complex,
    presentation_complex,
    reidemeister_schreier,
    relative_bound,
    relative_torsion,
    torsion_bound_n1,
)
from .quotients import build_chain, farber_diagnostic, ChainSpec
from .transversal import (
    connect_repair,
    local_search_boundary_min,
    random_transversal,
    schreier_tree_transversal,
    weiss_tiling,
)

log = logging.getLogger(__name__)

PIPELINES = ("rs_n1", "induced", "bounds", "farber", "counterexample")
STRATEGIES = ("tree", "weiss", "local_search")
CHAIN_KINDS = ("congruence", "cyclic", "cyclic_sequence")

CSV_COLUMNS = (
    "level",
    "index",
    "transversal_size",
    "boundary_edges",
    "boundary_ratio",
    "T_n",
    "betti",
    "log_T_over_index",
    "bound_n1",
    "relative_bound",
    "farber_min_ratio",
    "farber_max_ratio",
)


class PipelineDisagreement(RuntimeError):
    """The two torsion pipelines, or a proven bound, disagree with each other."""


@dataclass
class ExperimentConfig:
    family: str = "free_abelian"
    family_params: dict = field(default_factory=dict)
    chain_kind: str = "congruence"
    depth: int = 2
    degree: int = 1
    strategy: str = "tree"
    budget: int = 0
    tile_level: int = 1
    random_start: bool = False
    pipelines: tuple = ("rs_n1", "induced")
    complex: str = "presentation"  # "presentation", "cube" or a fixture path
    farber_word_length: int = 3
    counterexample: dict = field(default_factory=lambda: {"p": 2, "f": "identity", "depth": 2})
    csv: str = "levels.csv"
    json: str = "certificates.json"
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        fam = data.pop("family", "free_abelian")
        if isinstance(fam, dict):
            data.setdefault("family_params", fam.get("params", {}))
            fam = fam.get("name", "free_abelian")
        chain = data.pop("chain", None)
        if isinstance(chain, dict):
            data.setdefault("chain_kind", chain.get("kind", "congruence"))
            data.setdefault("depth", chain.get("depth", 2))
        strat = data.get("strategy")
        if isinstance(strat, dict):
            data["strategy"] = strat.get("name", "tree")
            data.setdefault("budget", strat.get("budget", 0))
            data.setdefault("tile_level", strat.get("tile_level", 1))
            data.setdefault("random_start", strat.get("random_start", False))
        out = data.pop("output", None)
        if isinstance(out, dict):
            data.setdefault("csv", out.get("csv", "levels.csv"))
            data.setdefault("json", out.get("json", "certificates.json"))
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(family=fam, **data)
        cfg.pipelines = tuple(cfg.pipelines)
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def make_family(self):
        return builtin_family(self.family, **self.family_params)

    def make_complex(self, family):
        if self.complex == "presentation":
            return presentation_complex(family.presentation, family)
        if self.complex == "cube":
            return cube_complex(family.generator_count, family)
        text = Path(self.complex).read_text()
        cx = parse_complex(text, family.presentation)
        cx.check(family)
        return cx


def validate(config: ExperimentConfig) -> list:
    """All violated constraints; empty iff the config is runnable."""
    diags = []
    family = None
    try:
        family = config.make_family()
    except (ValueError, TypeError) as exc:
        diags.append(f"family: {exc}")
    if config.chain_kind not in CHAIN_KINDS:
        diags.append(f"chain kind {config.chain_kind!r} not in {CHAIN_KINDS}")
    elif config.chain_kind != "congruence" and family is not None and family.name != "lamplighter":
        diags.append(f"chain kind {config.chain_kind!r} needs the lamplighter family")
    if config.depth < 1:
        diags.append("depth must be >= 1")
    if config.degree < 1:
        diags.append("degree n must be >= 1")
    if config.strategy not in STRATEGIES:
        diags.append(f"strategy {config.strategy!r} not in {STRATEGIES}")
    if config.strategy == "weiss":
        if config.chain_kind == "cyclic_sequence":
            diags.append("weiss strategy needs a refining chain; cyclic_sequence is not nested")
        if config.tile_level < 1:
            diags.append("tile_level must be >= 1")
    if config.budget < 0:
        diags.append("budget must be >= 0")
    bad = [p for p in config.pipelines if p not in PIPELINES]
    if bad:
        diags.append(f"unknown pipelines {bad}")
    if "rs_n1" in config.pipelines and config.degree != 1:
        diags.append("rs_n1 pipeline computes degree 1 only")
    if config.farber_word_length < 1:
        diags.append("farber_word_length must be >= 1")
    if family is not None:
        if config.complex == "cube" and not isinstance(family, FreeAbelian):
            diags.append("cube complex needs the free_abelian family")
        else:
            try:
                cx = config.make_complex(family)
                if config.degree > cx.top_degree - 1:
                    diags.append(f"degree n={config.degree} exceeds complex top_degree - 1 = {cx.top_degree - 1}")
            except (OSError, ValueError) as exc:
                diags.append(f"complex: {exc}")
    if "counterexample" in config.pipelines:
        ce = config.counterexample
        if ce.get("f", "identity") not in cex.GROWTH_FUNCTIONS:
            diags.append(f"counterexample f must be one of {sorted(cex.GROWTH_FUNCTIONS)}")
        if int(ce.get("depth", 0)) < 0:
            diags.append("counterexample depth must be >= 0")
        try:
            cex.LamplighterStructure(int(ce.get("p", 2)))
        except ValueError as exc:
            diags.append(f"counterexample: {exc}")
    return diags


def _fmt_ratio(x: Fraction | None) -> str:
    return "" if x is None else str(x)


def choose_transversal(config: ExperimentConfig, chain: ChainSpec, level: int):
    family = chain.family
    action = chain.levels[level - 1]
    if config.strategy == "weiss":
        t = weiss_tiling(chain, min(config.tile_level, level), level)
    elif config.strategy == "local_search":
        if config.random_start:
            rng = random.Random(config.seed * 1000003 + level)
            t = random_transversal(action, family, rng)
        else:
            t = schreier_tree_transversal(action, family)
        t = local_search_boundary_min(t, action, family, config.budget)
    else:
        t = schreier_tree_transversal(action, family)
    if not t.is_connected:
        t = connect_repair(t, action, family)
    return t


def run_level(config: ExperimentConfig, chain: ChainSpec, level: int) -> tuple:
    """Compute one CSV row and its certificate; raises PipelineDisagreement on conflicts."""
    family = chain.family
    action = chain.levels[level - 1]
    N = action.degree
    n = config.degree
    t = choose_transversal(config, chain, level)
    cert: dict = {
        "level": level,
        "index": N,
        "transversal": {"size": t.size, "boundary_edges": t.boundary_edges,
                        "components": t.components, **t.patch},
    }
    row = {"level": level, "index": N, "transversal_size": t.size,
           "boundary_edges": t.boundary_edges, "boundary_ratio": repr(t.boundary_ratio)}
    torsion = betti = None
    pipelines = config.pipelines
    cx = config.make_complex(family) if {"induced", "bounds"} & set(pipelines) else None

    if "rs_n1" in pipelines:
        sp = reidemeister_schreier(family.presentation, action, t, family)
        k = family.presentation.max_relator_length
        res = snf(sp.relation_matrix())
        e_count = len(sp.generators)
        if e_count != N * family.generator_count - (N - 1):
            raise PipelineDisagreement(f"level {level}: |E| = {e_count} breaks the Schreier index formula")
        if len(sp.surviving) > t.boundary_edges:
            raise PipelineDisagreement(f"level {level}: |E''| exceeds the transversal boundary")
        bound = torsion_bound_n1(sp, k)
        if res.torsion > bound:
            raise PipelineDisagreement(f"level {level}: T_1 = {res.torsion} exceeds k^|E''|")
        torsion, betti = res.torsion, res.cokernel_free_rank
        row["bound_n1"] = str(bound)
        cert["rs_n1"] = {"E": e_count, "E_trivial": len(sp.trivial), "E_surviving": len(sp.surviving),
                         "k": k, "torsion": str(res.torsion), "factors": [str(d) for d in res.torsion_factors],
                         "betti": betti, "bound_exponent": len(sp.surviving)}

    induced = None
    if "induced" in pipelines or "bounds" in pipelines:
        induced = induce(cx, action)
        check_composition(induced)
        chi = cover_euler_characteristic(induced)
        if chi != N * cx.euler_characteristic():
            raise PipelineDisagreement(f"level {level}: Euler characteristic {chi} != {N} * {cx.euler_characteristic()}")
    if "induced" in pipelines:
        rep = homology_torsion(induced, n, level, N)
        if torsion is not None and (rep.torsion, rep.betti) != (torsion, betti):
            raise PipelineDisagreement(
                f"level {level}: Reidemeister-Schreier gives T_1={torsion}, b_1={betti}; "
                f"induced complex gives T_1={rep.torsion}, b_1={rep.betti}")
        torsion, betti = rep.torsion, rep.betti
        cert["induced"] = {"torsion": str(rep.torsion), "betti": rep.betti,
                           "factors": [str(d) for d in rep.factors], "euler_characteristic": chi}

    if "bounds" in pipelines:
        rb = relative_bound(cx, action, t, n, family)
        rel_tor = relative_torsion(cx, induced, rb, n, N)
        proven = n in cx.acyclic_degrees or (cx.name == "presentation" and n == 1)
        cert["bounds"] = {"m": rb.m, "base": rb.base, "interior": rb.interior, "relative_torsion": str(rel_tor),
                          "bound": str(rb.bound), "m_over_index": repr(rb.m / N), "hypothesis_declared": proven}
        if rel_tor > rb.bound:
            raise PipelineDisagreement(f"level {level}: tor(W/W0) exceeds base^m")
        if proven and torsion is not None and not (torsion <= rel_tor <= rb.bound):
            raise PipelineDisagreement(f"level {level}: T_{n} = {torsion} exceeds the relative bound")
        row["relative_bound"] = str(rb.bound)

    if "farber" in pipelines:
        single = ChainSpec(family, (action,), (), refining=False)
        rows = farber_diagnostic(single, config.farber_word_length)
        ratios = [r.fixed_ratio for r in rows]
        row["farber_min_ratio"] = _fmt_ratio(min(ratios) if ratios else None)
        row["farber_max_ratio"] = _fmt_ratio(max(ratios) if ratios else None)
        cert["farber"] = {"words": len(rows), "min": row["farber_min_ratio"], "max": row["farber_max_ratio"],
                          "nontrivial_fixing": sum(1 for x in ratios if x > 0)}

    if torsion is not None:
        import math

        row["T_n"] = str(torsion)
        row["betti"] = betti
        row["log_T_over_index"] = repr(math.log(torsion) / N)
        cert["T_n"] = str(torsion)
    return row, cert


def _run_level_star(args):
    return run_level(*args)


def run(config: ExperimentConfig, out_dir=".", jobs: int = 1) -> dict:
    """Execute the configured pipelines; returns the JSON document that was written."""
    diags = validate(config)
    if diags:
        raise ValueError("; ".join(diags))
    if not config.pipelines:
        return {}
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc: dict = {"config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(config).items()}}
    level_pipes = [p for p in config.pipelines if p != "counterexample"]
    if level_pipes:
        family = config.make_family()
        chain = build_chain(family, config.chain_kind, config.depth)
        doc["chain"] = {"kind": chain.kind, "degrees": chain.degrees, "exhausting": chain.exhausting,
                        "normal": chain.normal}
        tasks = [(config, chain, i) for i in range(1, config.depth + 1)]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_run_level_star, tasks))
        else:
            results = [run_level(*t) for t in tasks]
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n", restval="")
        writer.writeheader()
        for row, _ in results:
            writer.writerow(row)
        (out / config.csv).write_text(buf.getvalue())
        doc["levels"] = [c for _, c in results]
    if "counterexample" in config.pipelines:
        ce = config.counterexample
        p, fname, depth = int(ce.get("p", 2)), ce.get("f", "identity"), int(ce.get("depth", 2))
        certs = cex.choose_moduli(cex.GROWTH_FUNCTIONS[fname], depth, p)
        for c in certs:
            if not c.torsion_lower_bound > c.f_value:
                raise PipelineDisagreement(f"counterexample level {c.level}: torsion bound does not exceed f")
        doc["counterexample"] = cex.certificate_json(certs, p, fname)
    (out / config.json).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc
