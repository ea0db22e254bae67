# Entry: python main.py <command> [flags]
# endpoints | matrix | verify | classify | certify | sample | batch | minimize | oracle
# Exit codes: 0 ok, 2 verification failure, 3 invalid input, 4 internal consistency failure

import argparse
import json
import logging
import sys
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from atiyah_core import RelationVector, atiyah_matrix, classify_scenario, independence_measure, is_singular, relation_nullvector
from ball_model import Configuration, endpoint_oracle, hyperbolic_distance, ideal_endpoint, random_ball_point, root_system, theorem_case
from certificates import certify, coplanar_audit, incidence_audit, type_signature
from config import Tolerances, log_level
from enums import OutputFormat, SampleCase
from errors import AtiyahError, ConsistencyError, InvalidInputError
from explorer import Explorer
from points import BallPoint
from reports import SampleSpec

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 2
ORACLE_TOL = 1e-9
ORACLE_RADIUS = 0.99
ORACLE_MIN_SEP = 1e-4

Payload = Dict[str, Any]
Handler = Callable[[argparse.Namespace, Tolerances], Tuple[int, Payload]]


class CliArgumentParser(argparse.ArgumentParser):
    """Unknown flags and bad values become InvalidInputError instead of exiting"""

    def error(self, message: str):
        raise InvalidInputError(message)


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    common = CliArgumentParser(add_help=False)
    common.add_argument("--input", help="Configuration JSON file, or inline JSON starting with '{'")
    common.add_argument("--output", help="Write here instead of standard output")
    common.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.Json.value)
    common.add_argument("--no-meta", action="store_true", help="Omit the timestamp so output is byte-stable")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--count", type=int, default=1)
    common.add_argument("--case", choices=[c.value for c in SampleCase], default=SampleCase.NonCoplanar.value)
    for name, field in Tolerances.model_fields.items():
        common.add_argument(_flag(name), dest=name, type=float, default=None, help=field.description)

    parser = CliArgumentParser(prog="atiyah", description="Hyperbolic four-point Atiyah verifier")
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("endpoints", parents=[common], help="The twelve ideal endpoints t_ij")
    commands.add_parser("matrix", parents=[common], help="M, its determinant, measure and null relation")
    commands.add_parser("verify", parents=[common], help="Pass or fail against the singularity thresholds")
    commands.add_parser("classify", parents=[common], help="Type signature and incidence audit")
    certify_parser = commands.add_parser("certify", parents=[common], help="Full certificate report")
    certify_parser.add_argument("--planted-c", help="Relation to replay, JSON list of four numbers or [re, im] pairs")
    commands.add_parser("sample", parents=[common], help="Seeded configurations")
    batch_parser = commands.add_parser("batch", parents=[common], help="Batch verification")
    batch_parser.add_argument("--certificates", action="store_true", help="Attach a certificate summary per sample")
    batch_parser.add_argument("--histogram", action="store_true", help="With --format csv, write the histogram")
    minimize_parser = commands.add_parser("minimize", parents=[common], help="Counterexample search")
    minimize_parser.add_argument("--restarts", type=int, default=10)
    minimize_parser.add_argument("--iterations", type=int, default=500)
    commands.add_parser("oracle", parents=[common], help="Endpoint oracle cross-check")
    return parser


def _load_json(text: str, what: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{what} is not valid JSON: {exc}") from exc


def load_configuration(args: argparse.Namespace, tolerances: Tolerances) -> Configuration:
    if args.input is None:
        raise InvalidInputError(f"{args.command} needs --input")
    text = args.input
    if not text.lstrip().startswith("{"):
        try:
            with open(text, "r") as file:
                text = file.read()
        except OSError as exc:
            raise InvalidInputError(f"cannot read {args.input}: {exc}") from exc
    return Configuration.from_json(_load_json(text, "configuration"), min_sep=tolerances.min_sep, r_max=tolerances.r_max)


def parse_relation(text: str) -> RelationVector:
    entries = _load_json(text, "--planted-c")
    if not isinstance(entries, list) or len(entries) != 4:
        raise InvalidInputError("--planted-c needs four entries")
    try:
        values = [complex(*e) if isinstance(e, list) else complex(e) for e in entries]
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"--planted-c entries must be numbers or [re, im] pairs: {exc}") from exc
    return RelationVector(values)


def sample_spec(args: argparse.Namespace, tolerances: Tolerances) -> SampleSpec:
    return SampleSpec(
        seed=args.seed,
        count=args.count,
        case=SampleCase(args.case),
        r_max=tolerances.r_max if args.r_max is not None else SampleSpec.model_fields["r_max"].default,
        min_sep=tolerances.min_sep if args.min_sep is not None else SampleSpec.model_fields["min_sep"].default,
    )


def _complex(z: complex) -> List[float]:
    return [float(z.real), float(z.imag)]


# commands


def cmd_endpoints(args, tolerances):
    config = load_configuration(args, tolerances)
    rs = root_system(config)
    entries = rs.to_json()
    for entry in entries:
        entry["ideal"] = rs.ideal[entry["i"] - 1][entry["j"] - 1].tolist()
    return EXIT_OK, {"configuration": config.to_json(), "endpoints": entries}


def cmd_matrix(args, tolerances):
    config = load_configuration(args, tolerances)
    matrix = atiyah_matrix(config)
    relation, residual = relation_nullvector(matrix)
    return EXIT_OK, {
        "matrix": matrix.to_json(),
        "column_scales": [_complex(z) for z in matrix.column_scales],
        "determinant": _complex(matrix.determinant),
        "measure": independence_measure(matrix),
        "residual": residual,
        "relation": relation.to_json(),
        "scenario": classify_scenario(relation, tolerances).tag.value,
    }


def cmd_verify(args, tolerances):
    config = load_configuration(args, tolerances)
    matrix = atiyah_matrix(config)
    _, residual = relation_nullvector(matrix)
    singular = is_singular(matrix, tolerances)
    payload = {
        "verified": not singular,
        "measure": independence_measure(matrix),
        "residual": residual,
        "theorem_case": theorem_case(config, tolerances).value,
    }
    return (EXIT_VERIFICATION_FAILED if singular else EXIT_OK), payload


def cmd_classify(args, tolerances):
    config = load_configuration(args, tolerances)
    rs = root_system(config)
    return EXIT_OK, {
        "theorem_case": theorem_case(config, tolerances).value,
        "signature": type_signature(config, tolerances, rs).model_dump(mode="json"),
        "incidence": incidence_audit(config, tolerances, rs).model_dump(mode="json"),
        "coplanar_audit": coplanar_audit(config, tolerances, rs).model_dump(mode="json"),
    }


def cmd_certify(args, tolerances):
    config = load_configuration(args, tolerances)
    planted = None if args.planted_c is None else parse_relation(args.planted_c)
    report = certify(config, tolerances, planted_c=planted, seed=args.seed)
    return EXIT_OK, {"report": report.model_dump(mode="json")}


def cmd_sample(args, tolerances):
    spec = sample_spec(args, tolerances)
    explorer = Explorer(tolerances, args.threads)
    samples = [{"index": k, **explorer.sample(spec, k).to_json()} for k in range(spec.count)]
    return EXIT_OK, {"spec": spec.model_dump(mode="json"), "samples": samples}


def cmd_batch(args, tolerances):
    spec = sample_spec(args, tolerances)
    explorer = Explorer(tolerances, args.threads)
    summary = explorer.batch_verify(spec, certificates=args.certificates)
    payload = {
        "summary": summary.model_dump(mode="json"),
        "records": [r.model_dump(mode="json") for r in explorer.records],
        "_explorer": explorer,
    }
    return (EXIT_VERIFICATION_FAILED if summary.failures else EXIT_OK), payload


def cmd_minimize(args, tolerances):
    result = Explorer(tolerances, args.threads).minimize(args.seed, args.restarts, args.iterations)
    exclude = {"wall_clock"} if args.no_meta else None
    return EXIT_OK, {"search": result.model_dump(mode="json", exclude=exclude)}


def _oracle_pairs(args, tolerances) -> List[Tuple[BallPoint, BallPoint]]:
    if args.input is not None:
        points = load_configuration(args, tolerances).points
        return [(p, q) for p in points for q in points if p is not q]
    rng = np.random.default_rng(args.seed)
    pairs = []
    while len(pairs) < args.count:
        p = BallPoint(random_ball_point(rng, ORACLE_RADIUS))
        q = BallPoint(random_ball_point(rng, ORACLE_RADIUS))
        if hyperbolic_distance(p, q) >= ORACLE_MIN_SEP:
            pairs.append((p, q))
    return pairs


def cmd_oracle(args, tolerances):
    pairs = _oracle_pairs(args, tolerances)
    min_sep = min(tolerances.min_sep, ORACLE_MIN_SEP)
    deviations = [
        float(np.linalg.norm(ideal_endpoint(p, q, min_sep).coords - endpoint_oracle(p, q, min_sep).coords))
        for p, q in pairs
    ]
    worst = max(deviations, default=0.0)
    if worst > ORACLE_TOL:
        logger.error(f"endpoint oracle disagrees by {worst:.3e}")
        raise ConsistencyError(f"endpoint oracle disagrees with the ball translation by {worst:.3e}")
    return EXIT_OK, {"pairs": len(pairs), "max_deviation": worst, "tolerance": ORACLE_TOL}


COMMANDS: Dict[str, Handler] = {
    "endpoints": cmd_endpoints,
    "matrix": cmd_matrix,
    "verify": cmd_verify,
    "classify": cmd_classify,
    "certify": cmd_certify,
    "sample": cmd_sample,
    "batch": cmd_batch,
    "minimize": cmd_minimize,
    "oracle": cmd_oracle,
}


# output


def _dumps(payload: Any) -> str:
    try:
        return json.dumps(payload, allow_nan=False)
    except ValueError as exc:
        raise ConsistencyError(f"non-finite number in output: {exc}") from exc


def render(args: argparse.Namespace, tolerances: Tolerances, payload: Payload) -> str:
    explorer: Optional[Explorer] = payload.pop("_explorer", None)
    meta: Payload = {"command": args.command, "tolerances": tolerances.model_dump()}
    if not args.no_meta:
        meta["timestamp"] = datetime.now().strftime("%Y-%m-%d %H:%M:%S")

    output_format = OutputFormat(args.format)
    if output_format is OutputFormat.Csv:
        if explorer is None:
            raise InvalidInputError("csv output is only available for batch")
        frame = explorer.histogram_frame() if args.histogram else explorer.summary_frame()
        if not np.isfinite(frame.select_dtypes("number").to_numpy(dtype=float)).all():
            raise ConsistencyError("non-finite number in output")
        return frame.to_csv(index=False)
    if output_format is OutputFormat.Jsonl:
        lines = [_dumps({"meta": meta})]
        rows = payload.pop("records", None) or payload.pop("samples", None)
        lines += [_dumps(row) for row in rows or []]
        lines.append(_dumps(payload))
        return "\n".join(lines) + "\n"
    payload.pop("records", None)
    return _dumps({"meta": meta, **payload}) + "\n"


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, run one command, write its output; returns the exit code."""
    command = None
    try:
        args = build_parser().parse_args(argv)
        command = args.command
        if args.threads < 1 or args.count < 0:
            raise InvalidInputError("--threads must be positive and --count non-negative")
        overrides = {name: getattr(args, name) for name in Tolerances.model_fields}
        try:
            tolerances = Tolerances.from_env(overrides)
        except (ValidationError, ValueError) as exc:
            raise InvalidInputError(f"invalid tolerance: {exc}") from exc
        try:
            code, payload = COMMANDS[command](args, tolerances)
        except ValidationError as exc:
            raise InvalidInputError(str(exc)) from exc
        text = render(args, tolerances, payload)
        if args.output:
            with open(args.output, "w") as file:
                file.write(text)
        else:
            sys.stdout.write(text)
        return code
    except AtiyahError as exc:
        logger.debug(f"{command or 'cli'} failed", exc_info=True)
        error = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
        sys.stdout.write(json.dumps(error) + "\n")
        return exc.exit_code
    except Exception as exc:
        logger.exception(f"{command or 'cli'} failed unexpectedly")
        error = {"error": type(exc).__name__, "message": str(exc), "exit_code": ConsistencyError.exit_code}
        sys.stdout.write(json.dumps(error) + "\n")
        return ConsistencyError.exit_code


def main():
    logging.basicConfig(
        level=log_level(), stream=sys.stderr, format="%(asctime)s %(name)s %(levelname)s %(message)s"
    )
    sys.exit(run())


if __name__ == "__main__":
    main()
