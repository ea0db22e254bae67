from enum import Enum


class ScenarioTag(Enum):
    ThreeDistinct = "three_distinct"
    DoubleRoot = "double_root"
    TripleRoot = "triple_root"


class SampleCase(Enum):
    NonCoplanar = "non-coplanar"
    CoplanarHull = "coplanar-hull"
    Collinear = "collinear"
    Any = "any"


class TheoremCase(Enum):
    NonCoplanar = "non_coplanar"
    CoplanarHull = "coplanar_hull"
    CoplanarOther = "coplanar_other"


class DomainKind(Enum):
    Disk = "disk"
    HalfPlane = "half_plane"
    DiskComplement = "disk_complement"
    Plane = "plane"
    Point = "point"


class StabVerdict(Enum):
    WitnessFound = "witness_found"
    NoneWithinResolution = "none_within_resolution"


class Chart(Enum):
    Stereographic = "stereographic"
    PreTwisted = "pre_twisted"
    Normalized = "scenario_normalized"


class OutputFormat(Enum):
    Json = "json"
    Jsonl = "jsonl"
    Csv = "csv"


class CheckStatus(Enum):
    Pass = "pass"
    Fail = "fail"
    NotApplicable = "not_applicable"


class FaceForm(Enum):
    Sphere = "sphere"
    Plane = "plane"


class RelationSource(Enum):
    NullVector = "null_vector"
    Planted = "planted"
