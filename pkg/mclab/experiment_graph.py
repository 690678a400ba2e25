"""
LangGraph State Machine for Completion Experiments

Workflow:
1. Prepare one cell per size: the reveal mask and the seeded ground truth
2. Solve every cell with both completion estimators (thread pool, ordered by size)
3. Optionally probe every mask for stable-recovery violations
4. Assess the pattern: limit estimate of the masks, then the zero-measure verdict
5. Assemble the report

The graph is compiled without a checkpointer: the state carries numpy arrays,
which the checkpoint serializers do not round-trip.
"""

import logging
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from typing import List, TypedDict

import numba
import numpy as np
from langgraph.graph import END, StateGraph

from mclab.blockapx import limit_estimate
from mclab.catalog import generate_mask
from mclab.graphon import recovery_verdict
from mclab.matcore import avg_frobenius, nuclear_norm
from mclab.models import ExperimentConfig, ExperimentReport, NormTriple, PatternFamily, PatternVerdict, SizeRecord
from mclab.nucmin import complete_modified_cr, complete_plain_cr
from mclab.probe import STABLE, VIOLATION, ProbeEntry, probe_stable_recovery, synthesize_truth
from mclab.textio import read_mask

logger = logging.getLogger(__name__)

# Refinement level used for the pattern's limit estimate
VERDICT_LEVEL = 3


# --- LangGraph State Machine Setup ---
class ExperimentState(TypedDict, total=False):
    """State for the completion experiment workflow"""
    config: ExperimentConfig
    started: float
    cells: List[dict]
    records: List[SizeRecord]
    probes: List[ProbeEntry]
    verdict: PatternVerdict
    verdict_warning: str
    report: ExperimentReport


def prepare_cells_node(state: ExperimentState):
    """Builds the mask and ground truth of every cell"""
    cfg = state["config"]
    if cfg.pattern_family == PatternFamily.FROM_FILE:
        masks = [read_mask(cfg.mask_path)]
    else:
        masks = [generate_mask(cfg.pattern_family.value, k, density=cfg.density) for k in cfg.sizes]

    cells = []
    for P in masks:
        m, n = P.shape
        truth = synthesize_truth(m, cfg.rank_bound, cfg.box_bound, cfg.seed, n=n)
        cells.append({"k": m, "mask": P, "truth": truth})
    logger.debug(f"prepare_cells_node - {len(cells)} cells for family {cfg.pattern_family.value}")
    return {"cells": cells, "started": time.perf_counter()}


def _solve_cell(cell: dict, cfg: ExperimentConfig) -> SizeRecord:
    P, A = cell["mask"], cell["truth"]
    revealed = A * P
    modified = complete_modified_cr(revealed, P, cfg.box_bound, cfg.solver)
    plain = complete_plain_cr(revealed, P, cfg.solver)
    record = SizeRecord(
        k=cell["k"],
        errModified=avg_frobenius(modified.estimate - A),
        errPlain=avg_frobenius(plain.estimate - A),
        nuclear=NormTriple(modified=modified.nuclear_norm, plain=plain.nuclear_norm, truth=nuclear_norm(A)),
        iters={"modified": modified.iterations, "plain": plain.iterations},
        converged={"modified": modified.converged, "plain": plain.converged},
    )
    logger.info(
        f"solve_cells_node - k={record.k}: errModified {record.errModified:.4g}, errPlain {record.errPlain:.4g}"
    )
    return record


def solve_cells_node(state: ExperimentState):
    """Runs both estimators on every cell; results keep the order of the sizes"""
    cfg = state["config"]
    cells = state["cells"]
    with ThreadPoolExecutor(max_workers=min(cfg.workers, len(cells))) as pool:
        records = list(pool.map(lambda cell: _solve_cell(cell, cfg), cells))
    return {"records": records}


def probe_cells_node(state: ExperimentState):
    """Probes every mask for stable-recovery violations"""
    cfg = state["config"]
    cells = state["cells"]

    def run(cell):
        return probe_stable_recovery(cell["mask"], cfg.rank_bound, cfg.box_bound, seed=cfg.seed, cfg=cfg.probe)

    with ThreadPoolExecutor(max_workers=min(cfg.workers, len(cells))) as pool:
        probes = list(pool.map(run, cells))
    records = [
        rec.model_copy(update={"maskedDiff": p.masked_diff, "fullDiff": p.full_diff, "probeVerdict": p.verdict})
        for rec, p in zip(state["records"], probes)
    ]
    found = sum(p.verdict == VIOLATION for p in probes)
    logger.debug(f"probe_cells_node - {found} of {len(probes)} masks have a violation")
    return {"probes": probes, "records": records}


def assess_pattern_node(state: ExperimentState):
    """Estimates the limit graphon of the masks and applies the zero-measure criterion"""
    cfg = state["config"]
    cells = state["cells"]
    estimate = limit_estimate([cell["mask"] for cell in cells], VERDICT_LEVEL)
    report = recovery_verdict(estimate)
    # zero sets thinner than one line of the smallest mask are below resolution
    resolution = 1.0 / min(cells[0]["mask"].shape)
    admits = report.phi_zero <= resolution

    probe_verdict = None
    probes = state.get("probes")
    if probes:
        probe_verdict = VIOLATION if any(p.verdict == VIOLATION for p in probes) else STABLE
    verdict = PatternVerdict(
        admitsRecovery=admits,
        phiZero=report.phi_zero,
        etaGrid=report.eta_grid,
        phiValues=report.phi_values,
        probeVerdict=probe_verdict,
    )
    logger.info(
        f"assess_pattern_node - {cfg.pattern_family.value}: phi(0) = {report.phi_zero:.4g}, "
        f"admits recovery: {admits}"
    )
    return {"verdict": verdict, "verdict_warning": report.resolution_warning or ""}


def assemble_report_node(state: ExperimentState):
    """Collects the per-size records, the verdict and the run metadata"""
    cfg = state["config"]
    metadata = {
        "generatedAt": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "elapsedSeconds": round(time.perf_counter() - state["started"], 3),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "numba": numba.__version__,
        "verdictLevel": VERDICT_LEVEL,
    }
    if state.get("verdict_warning"):
        metadata["verdictWarning"] = state["verdict_warning"]
    report = ExperimentReport(
        config=cfg.model_dump(mode="json"),
        perSize=state["records"],
        patternVerdict=state["verdict"],
        metadata=metadata,
    )
    return {"report": report}


def route_after_solve(state: ExperimentState):
    """Routes to the probe step only when the config asks for it"""
    if state["config"].run_probe:
        logger.debug("route_after_solve -> probe_cells")
        return "probe_cells"
    logger.debug("route_after_solve -> assess_pattern")
    return "assess_pattern"


def build_experiment_graph():
    """Builds and compiles the experiment state machine"""
    builder = StateGraph(ExperimentState)

    builder.add_node("prepare_cells", prepare_cells_node)
    builder.add_node("solve_cells", solve_cells_node)
    builder.add_node("probe_cells", probe_cells_node)
    builder.add_node("assess_pattern", assess_pattern_node)
    builder.add_node("assemble_report", assemble_report_node)

    builder.set_entry_point("prepare_cells")
    builder.add_edge("prepare_cells", "solve_cells")
    builder.add_conditional_edges(
        "solve_cells",
        route_after_solve,
        {"probe_cells": "probe_cells", "assess_pattern": "assess_pattern"}
    )
    builder.add_edge("probe_cells", "assess_pattern")
    builder.add_edge("assess_pattern", "assemble_report")
    builder.add_edge("assemble_report", END)

    graph = builder.compile()
    logger.debug("build_experiment_graph - experiment state machine compiled")
    return graph


experiment_graph = build_experiment_graph()


def run_experiment_graph(cfg: ExperimentConfig) -> ExperimentState:
    """Runs the full workflow for one config and returns the final state"""
    return experiment_graph.invoke({"config": cfg})
