import hashlib
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
import pandas as pd
from scipy.optimize import minimize as scipy_minimize

from atiyah_core import atiyah_matrix, classify_scenario, independence_measure, relation_nullvector
from ball_model import (
    N_POINTS,
    BallIsometry,
    Configuration,
    coplanarity_test,
    from_klein,
    geodesic_configuration,
    hull_membership,
    hyperbolic_distance,
    random_ball_point,
    theorem_case,
    to_klein,
)
from certificates import certify
from config import DEFAULT_TOLERANCES, Tolerances
from enums import SampleCase
from errors import AtiyahError, DistinctPointsError, InvalidInputError, SamplingError
from points import BallPoint
from reports import BatchSummary, SampleRecord, SampleSpec, SearchResult

logger = logging.getLogger(__name__)

SAMPLING_BUDGET = 10_000
HISTOGRAM_BINS = 20
ISOMETRY_SHIFT = 0.3
# objective value of an infeasible simplex vertex; any feasible measure is at most 1
BARRIER = 1.0
# keeps r_max tanh(|y|) at or below r_max once tanh has rounded to 1
SATURATION_MARGIN = 4e-15
NELDER_MEAD_OPTIONS = {"xatol": 0.0, "fatol": 0.0, "adaptive": False}
CASES = (SampleCase.NonCoplanar, SampleCase.CoplanarHull, SampleCase.Collinear)

T = TypeVar("T")


def sub_seed(seed: int, index: int) -> int:
    """seed XOR a 64-bit hash of index; independent of scheduling."""
    digest = hashlib.blake2b(index.to_bytes(8, "little", signed=False), digest_size=8).digest()
    return (seed ^ int.from_bytes(digest, "little")) % 2**64


def to_ball(y: np.ndarray, r_max: float) -> np.ndarray:
    """R^12 -> four points of the ball of radius r_max by y -> r_max tanh(|y|) y/|y|."""
    rows = np.asarray(y, dtype=float).reshape(N_POINTS, 3)
    norms = np.linalg.norm(rows, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    factor = np.where(norms > 0, np.tanh(norms) / safe, 1.0)
    return r_max * (1.0 - SATURATION_MARGIN) * rows * factor[:, None]


class Explorer:
    """Sampler, batch verifier and counterexample search over four-point configurations"""

    def __init__(self, tolerances: Tolerances = DEFAULT_TOLERANCES, threads: int = 1):
        if threads < 1:
            raise InvalidInputError(f"threads must be positive, got {threads}")
        self.tolerances: Tolerances = tolerances
        self.threads: int = threads
        self.records: List[SampleRecord] = []

    def _map(self, fn: Callable[[int], T], indices: Sequence[int]) -> List[T]:
        if self.threads == 1:
            return [fn(k) for k in indices]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(fn, indices))

    # sampling

    def sample(self, spec: SampleSpec, index: int) -> Configuration:
        """The configuration number index of spec; (seed, index) alone determines it."""
        rng = np.random.default_rng(sub_seed(spec.seed, index))
        case = spec.case
        if case is SampleCase.Any:
            case = CASES[int(rng.integers(len(CASES)))]
        draw = {
            SampleCase.NonCoplanar: self._non_coplanar,
            SampleCase.CoplanarHull: self._coplanar_hull,
            SampleCase.Collinear: self._collinear,
        }[case]
        for attempt in range(SAMPLING_BUDGET):
            try:
                config = draw(rng, spec)
            except (DistinctPointsError, InvalidInputError):
                continue
            if config is not None:
                if attempt:
                    logger.debug(f"sample {index} ({case.value}) accepted after {attempt} rejections")
                return config
        raise SamplingError(f"rejection budget of {SAMPLING_BUDGET} exhausted for index {index} of {spec.model_dump_json()}")

    def _non_coplanar(self, rng: np.random.Generator, spec: SampleSpec) -> Optional[Configuration]:
        points = [BallPoint(random_ball_point(rng, spec.r_max)) for _ in range(N_POINTS)]
        config = Configuration(tuple(points), min_sep=spec.min_sep, r_max=spec.r_max)
        coplanar, _ = coplanarity_test(config, self.tolerances.tol_cop)
        return None if coplanar else config

    def _coplanar_hull(self, rng: np.random.Generator, spec: SampleSpec) -> Optional[Configuration]:
        """
        Three points of the equatorial disk in the Klein model and a fourth at uniform barycentric
        weights inside their triangle (hyperbolic hulls are Euclidean there), moved onto a random
        hyperbolic plane by a random isometry.
        """
        klein_radius = to_klein(np.array([spec.r_max, 0.0, 0.0]))[0]
        corners = []
        for _ in range(3):
            radius = klein_radius * np.sqrt(rng.uniform())
            angle = rng.uniform(0.0, 2.0 * np.pi)
            corners.append(np.array([radius * np.cos(angle), radius * np.sin(angle), 0.0]))
        weights = rng.dirichlet(np.ones(3))
        inner = sum(w * k for w, k in zip(weights, corners))
        isometry = BallIsometry.random(rng, ISOMETRY_SHIFT)
        points = [isometry.apply(BallPoint(from_klein(k))) for k in corners + [inner]]
        if any(p.norm > spec.r_max for p in points):
            return None
        config = Configuration(tuple(points), min_sep=spec.min_sep, r_max=spec.r_max)
        coplanar, _ = coplanarity_test(config, self.tolerances.tol_cop)
        if not coplanar or hull_membership(config, self.tolerances.tol_cop, self.tolerances.tol_hull) != 3:
            logger.debug("coplanar-hull draw failed its self-check")
            return None
        return config

    def _collinear(self, rng: np.random.Generator, spec: SampleSpec) -> Optional[Configuration]:
        radii = np.sort(rng.uniform(-spec.r_max, spec.r_max, N_POINTS))
        isometry = BallIsometry.random(rng, ISOMETRY_SHIFT)
        # a point pushed past r_max raises InvalidInputError and counts as a rejection
        return geodesic_configuration(radii, isometry, min_sep=spec.min_sep, r_max=spec.r_max)

    # verification

    def verify_sample(self, spec: SampleSpec, index: int, certificates: bool = False) -> SampleRecord:
        config = self.sample(spec, index)
        matrix = atiyah_matrix(config)
        measure = independence_measure(matrix)
        relation, residual = relation_nullvector(matrix)
        summary = None
        if certificates:
            report = certify(config, self.tolerances)
            summary = {
                "incidence": report.incidence.status.value,
                "coplanar_audit": report.coplanar_audit.status.value,
                "type": report.signature.class_name,
                "disjoint_hull_pairs": len(report.hulls.disjoint_pairs),
                "transversal": None if report.hulls.transversal is None else report.hulls.transversal.verdict.value,
                "disjoint_domains": bool(report.hulls.domains and report.hulls.domains.found),
            }
        return SampleRecord(
            index=index,
            case=spec.case,
            points=[p.tolist() for p in config.points],
            theorem_case=theorem_case(config, self.tolerances),
            measure=measure,
            residual=residual,
            scenario=classify_scenario(relation, self.tolerances).tag,
            failed=residual < self.tolerances.tol_residual and measure < self.tolerances.tol_measure,
            certificates=summary,
        )

    def batch_verify(self, spec: SampleSpec, certificates: bool = False) -> BatchSummary:
        """Verify spec.count samples; records stay in index order whatever the thread count."""
        self.records = self._map(lambda k: self.verify_sample(spec, k, certificates), range(spec.count))
        frame = self.summary_frame()
        if frame.empty:
            return BatchSummary(
                spec=spec, count=0, min_measure=None, mean_measure=None, min_residual=None, argmin_index=None
            )
        failures = frame.loc[frame["failed"], "index"].tolist()
        if failures:
            logger.warning(f"{len(failures)} samples have a singular matrix: {failures[:10]}")
        return BatchSummary(
            spec=spec,
            count=len(frame),
            min_measure=float(frame["measure"].min()),
            mean_measure=float(frame["measure"].mean()),
            min_residual=float(frame["residual"].min()),
            argmin_index=int(frame.loc[frame["measure"].idxmin(), "index"]),
            failures=failures,
            histogram=self.histogram_frame().to_dict(orient="records"),
            scenarios={k: int(v) for k, v in frame["scenario"].value_counts().sort_index().items()},
        )

    def summary_frame(self) -> pd.DataFrame:
        columns = ["index", "case", "theorem_case", "measure", "residual", "scenario", "failed"]
        rows = [r.model_dump(mode="json", include=set(columns)) for r in self.records]
        return pd.DataFrame(rows, columns=columns)

    def histogram_frame(self) -> pd.DataFrame:
        """Counts of log10(measure) per bin."""
        frame = self.summary_frame()
        if frame.empty:
            return pd.DataFrame(columns=["left", "right", "count"])
        logs = np.log10(np.maximum(frame["measure"].to_numpy(), 1e-300))
        counts, edges = np.histogram(logs, bins=HISTOGRAM_BINS)
        return pd.DataFrame({"left": edges[:-1], "right": edges[1:], "count": counts.astype(float)})

    def write_csv(self, path, histogram: bool = False) -> None:
        frame = self.histogram_frame() if histogram else self.summary_frame()
        frame.to_csv(path, index=False)

    # search

    def objective(self, y: np.ndarray) -> float:
        """independence_measure of the mapped configuration, or BARRIER plus the separation deficit."""
        coords = to_ball(y, self.tolerances.r_max)
        try:
            points = [BallPoint(x) for x in coords]
            config = Configuration(tuple(points), min_sep=self.tolerances.min_sep, r_max=self.tolerances.r_max)
        except InvalidInputError as exc:
            logger.debug(f"objective left the ball: {exc}")
            return 2.0 * BARRIER
        except DistinctPointsError:
            closest = min(hyperbolic_distance(points[i], points[j]) for i in range(N_POINTS) for j in range(i))
            return BARRIER + (self.tolerances.min_sep - closest) / self.tolerances.min_sep
        try:
            return independence_measure(atiyah_matrix(config))
        except AtiyahError as exc:
            logger.debug(f"objective hit a degenerate configuration: {exc}")
            return 2.0 * BARRIER

    def _restart(self, seed: int, restart: int, iterations: int) -> Optional[Tuple[float, np.ndarray, List[float]]]:
        rng = np.random.default_rng(sub_seed(seed, restart))
        start = rng.normal(scale=0.7, size=3 * N_POINTS)
        if self.objective(start) >= BARRIER:
            logger.info(f"restart {restart}: infeasible start, skipped")
            return None
        trace: List[float] = []

        def record(intermediate_result):
            trace.append(float(intermediate_result.fun))

        result = scipy_minimize(
            self.objective,
            start,
            method="Nelder-Mead",
            callback=record,
            options={"maxiter": iterations, **NELDER_MEAD_OPTIONS},
        )
        logger.debug(f"restart {restart}: best {result.fun:.6e} after {result.nit} iterations")
        return float(result.fun), np.asarray(result.x), trace

    def minimize(self, seed: int, restarts: int, iterations: int) -> SearchResult:
        """Nelder-Mead over 12 unconstrained parameters from seeded random starts; ties keep the first."""
        if restarts < 1 or iterations < 1:
            raise InvalidInputError("restarts and iterations must be positive")
        began = time.perf_counter()
        outcomes = self._map(lambda k: self._restart(seed, k, iterations), range(restarts))

        best: Optional[Tuple[int, float, np.ndarray, List[float]]] = None
        for restart, outcome in enumerate(outcomes):
            if outcome is None:
                continue
            value, x, trace = outcome
            if best is None or value < best[1]:
                best = (restart, value, x, trace)
        if best is None:
            raise SamplingError(f"every one of {restarts} restarts started infeasible (seed {seed})")

        restart, _, x, trace = best
        config = Configuration(
            tuple(BallPoint(p) for p in to_ball(x, self.tolerances.r_max)),
            min_sep=self.tolerances.min_sep,
            r_max=self.tolerances.r_max,
        )
        return SearchResult(
            seed=seed,
            restarts=restarts,
            skipped=sum(o is None for o in outcomes),
            iterations=iterations,
            best_points=[p.tolist() for p in config.points],
            best_measure=independence_measure(atiyah_matrix(config)),
            best_restart=restart,
            trace=trace,
            wall_clock=time.perf_counter() - began,
        )


def sample(spec: SampleSpec, index: int, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Configuration:
    return Explorer(tolerances).sample(spec, index)


def batch_verify(spec: SampleSpec, tolerances: Tolerances = DEFAULT_TOLERANCES, threads: int = 1) -> BatchSummary:
    return Explorer(tolerances, threads).batch_verify(spec)


def minimize(
    seed: int, restarts: int, iterations: int, tolerances: Tolerances = DEFAULT_TOLERANCES, threads: int = 1
) -> SearchResult:
    return Explorer(tolerances, threads).minimize(seed, restarts, iterations)

