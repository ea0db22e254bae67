from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from enums import (
    Chart,
    CheckStatus,
    DomainKind,
    FaceForm,
    RelationSource,
    SampleCase,
    ScenarioTag,
    StabVerdict,
    TheoremCase,
)

Complex = List[float]


class Check(BaseModel):
    name: str = Field(description="Short identifier of the predicate")
    status: CheckStatus = Field(description="pass, fail or not_applicable")
    margin: Optional[float] = Field(
        default=None, description="Numeric margin of the predicate (its definition is part of the name)"
    )
    detail: str = Field(default="", description="Human-readable context, e.g. why a check does not apply")


def check(name: str, ok: bool, margin: Optional[float] = None, detail: str = "") -> Check:
    return Check(
        name=name,
        status=CheckStatus.Pass if ok else CheckStatus.Fail,
        margin=None if margin is None else float(margin),
        detail=detail,
    )


def not_applicable(name: str, reason: str) -> Check:
    return Check(name=name, status=CheckStatus.NotApplicable, detail=reason)


def overall(checks: List[Check]) -> CheckStatus:
    statuses = {c.status for c in checks}
    if CheckStatus.Fail in statuses:
        return CheckStatus.Fail
    if statuses == {CheckStatus.NotApplicable} or not statuses:
        return CheckStatus.NotApplicable
    return CheckStatus.Pass


class RelationSection(BaseModel):
    source: RelationSource = Field(description="null_vector of M, or a planted relation for scenario replay")
    relation: List[Complex] = Field(description="Unit relation vector (c0, c1, c2, c3) as [re, im] pairs")
    residual: Optional[float] = Field(
        default=None, description="s_min / s_max of M; the relation only holds when this is tiny"
    )
    scenario: ScenarioTag = Field(description="Root pattern of the relation cubic")
    normalizer: List[List[Complex]] = Field(description="Moebius map (a, b; c, d) to the standard form")
    relative_discriminant: float = Field(description="|discriminant| / |coefficients|^4")
    relative_hessian: float = Field(description="|Hessian| / |coefficients|^2")
    roots: List[Optional[Complex]] = Field(description="Distinct roots of the cubic in the affine chart, null at infinity")
    multiplicities: List[int] = Field(description="Multiplicity of each distinct root")


class FaceReport(BaseModel):
    face: List[int] = Field(description="The three point indices of the face (1-based)")
    opposite: int = Field(description="The vertex off the face (1-based)")
    form: FaceForm = Field(description="sphere orthogonal to the unit sphere, or plane through the origin")
    normal: List[float] = Field(description="N of the cap plane <p, N> = h on the unit sphere")
    offset: float = Field(description="h of the cap plane")
    center: Optional[List[float]] = Field(default=None, description="Sphere center (sphere form only)")
    radius: Optional[float] = Field(default=None, description="Sphere radius (sphere form only)")
    orientation_bit: int = Field(
        description="+1 if the vertex cap is bounded in the chart, -1 if it contains infinity, 0 for a line"
    )
    side_counts: List[List[int]] = Field(
        description="Per triplet: roots on the vertex side, on the circle, on the far side"
    )
    pattern_ok: bool = Field(
        description="Three triplets in the closed vertex cap with two roots on the circle, one strictly beyond"
    )


class IncidenceSection(BaseModel):
    status: CheckStatus
    reason: str = ""
    faces: List[FaceReport] = Field(default_factory=list)
    checks: List[Check] = Field(default_factory=list)
    marginal: List[str] = Field(
        default_factory=list, description="Off-circle roots within a thousand tolerances of a circle"
    )


class CoplanarAuditSection(BaseModel):
    status: CheckStatus
    reason: str = ""
    checks: List[Check] = Field(default_factory=list)
    chart: Optional[Chart] = None
    disjoint_pairs: List[List[int]] = Field(
        default_factory=list, description="Triplet pairs (1-based) whose hulls are disjoint"
    )


class SignatureSection(BaseModel):
    status: CheckStatus
    reason: str = ""
    provisional: bool = Field(default=True, description="Type names are provisional labels, not theorem statements")
    orientation_bits: List[int] = Field(default_factory=list, description="Sorted per-face orientation bits")
    caps_containing_infinity: Optional[int] = None
    count_table: List[List[List[int]]] = Field(
        default_factory=list, description="Chart-free side counts, sorted per face and across faces"
    )
    disks_disjoint: Optional[bool] = Field(
        default=None, description="At least three triplets have pairwise disjoint minimal disks"
    )
    class_name: Optional[str] = None


class StabSection(BaseModel):
    verdict: StabVerdict
    angle: Optional[float] = Field(default=None, description="Direction of the line normal, in [0, pi)")
    offset: Optional[float] = Field(default=None, description="Line is {z : Re(z exp(-i angle)) = offset}")
    gap: float = Field(description="Best max(lo) - min(hi) found; <= margin means a transversal")
    verified: bool = Field(description="The witness passes the interval test for every hull")


class DomainReport(BaseModel):
    kind: DomainKind
    center: Optional[Complex] = None
    radius: Optional[float] = None
    normal: Optional[Complex] = None
    offset: Optional[float] = None


class DomainWitnessSection(BaseModel):
    found: bool
    triplets: List[int] = Field(default_factory=list, description="The three triplets (1-based)")
    domains: List[DomainReport] = Field(default_factory=list)
    verified: bool = False


class HullSection(BaseModel):
    chart: Chart
    pretwist: Optional[List[List[Complex]]] = Field(
        default=None, description="t -> 1/(t - a) applied before hull predicates, when needed"
    )
    excluded_triplets: List[int] = Field(default_factory=list, description="Triplets with a root at infinity")
    disjoint_pairs: List[List[int]] = Field(default_factory=list)
    transversal: Optional[StabSection] = None
    domains: Optional[DomainWitnessSection] = None


class ScenarioCheckSection(BaseModel):
    tag: Optional[ScenarioTag] = None
    status: CheckStatus
    reason: str = ""
    source: Optional[RelationSource] = None
    chart: Optional[Chart] = None
    checks: List[Check] = Field(default_factory=list)
    disjoint_pairs: List[List[int]] = Field(default_factory=list)
    contradiction_certified: Optional[bool] = None
    transversal: Optional[StabSection] = None
    domains: Optional[DomainWitnessSection] = None
    incidence_set: List[List[int]] = Field(default_factory=list, description="(i, j) with t_ij = p, 1-based")
    avoiding_triplets: List[int] = Field(default_factory=list, description="Triplets with no root at p, 1-based")


class CertificateReport(BaseModel):
    theorem_case: TheoremCase
    coplanarity_residual: float
    measure: float = Field(description="|det M| with unit columns")
    residual: float = Field(description="s_min / s_max of M")
    relation: RelationSection
    incidence: IncidenceSection
    coplanar_audit: CoplanarAuditSection
    signature: SignatureSection
    hulls: HullSection
    scenario_check: ScenarioCheckSection


class SampleSpec(BaseModel):
    seed: int = Field(ge=0, lt=2**64, description="64-bit master seed")
    count: int = Field(default=1, ge=0, description="Number of samples")
    case: SampleCase = Field(default=SampleCase.NonCoplanar, description="Theorem case to sample")
    r_max: float = Field(default=0.9, gt=0, lt=1, description="Maximum Euclidean norm of a point")
    min_sep: float = Field(default=0.05, gt=0, description="Minimum pairwise hyperbolic distance")


class SampleRecord(BaseModel):
    index: int
    case: SampleCase
    points: List[List[float]]
    theorem_case: TheoremCase
    measure: float
    residual: float
    scenario: ScenarioTag = Field(description="Scenario of the null direction of M")
    failed: bool = Field(description="Both residual and measure below their thresholds")
    certificates: Optional[Dict[str, Any]] = Field(
        default=None, description="Short certificate summary: section statuses and signature"
    )


class BatchSummary(BaseModel):
    spec: SampleSpec
    count: int
    min_measure: Optional[float]
    mean_measure: Optional[float]
    min_residual: Optional[float]
    argmin_index: Optional[int]
    failures: List[int] = Field(default_factory=list, description="Indices whose matrix counts as singular")
    histogram: List[Dict[str, float]] = Field(
        default_factory=list, description="log10(measure) bins: left edge, right edge, count"
    )
    scenarios: Dict[str, int] = Field(default_factory=dict)


class SearchResult(BaseModel):
    seed: int
    restarts: int = Field(description="Restarts that were run")
    skipped: int = Field(default=0, description="Restarts whose start point violated the constraints")
    iterations: int
    best_points: List[List[float]]
    best_measure: float
    best_restart: int
    trace: List[float] = Field(description="Best-vertex objective per iteration of the winning restart")
    wall_clock: float = Field(description="Seconds; excluded from determinism comparisons")
