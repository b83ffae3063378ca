"""Schema-mapping toolkit: dependencies, chase, composition,
decomposition, denesting, certain answers, and brute-force reference
checks over bounded universes."""

from .values import (
    BudgetExceeded,
    Constant,
    Fact,
    Instance,
    Null,
    Schema,
    Value,
    find_homomorphism,
    homomorphically_equivalent,
)
from .terms import App, Term, Var, depth, skel, subterms, term_vars
from .deps import (
    Clause,
    Diagnostic,
    Egd,
    EqAtom,
    FOTgd,
    Mapping,
    NotWeaklyAcyclic,
    RelAtom,
    StSODependency,
    infer_schemas,
    require_weakly_acyclic,
    skolemize,
    validate,
    weakly_acyclic,
)
from .syntax import (
    ParseError,
    ValidationError,
    dumps,
    instance_from_json,
    instance_to_json,
    parse_instance,
    parse_mapping,
    parse_query,
    render,
    render_instance,
    render_mapping,
    render_query,
    value_from_json,
    value_to_json,
)
from .chase import (
    ChaseResult,
    SequenceResult,
    chase_mapping,
    chase_sequence,
    chase_so_standard,
    chase_standard,
    chase_stso,
)
from .compose import (
    ComposeError,
    collapse_chain,
    compose_chain,
    compose_standard_pair,
    decompose_stso,
)
from .denest import (
    DepthExceeded,
    denest_pipeline,
    denest_sotgd_depth2,
    denest_stso,
)
from .certain import CertainResult, ConjunctiveQuery, UCQ, certain_answers, eval_ucq
from .oracle import (
    Budget,
    Verdict,
    chain_member,
    check_equiv,
    composition_member,
    enumerate_solutions,
    sat_so_standard,
    sat_stso,
)

__version__ = "0.1.0"

__all__ = [
    "App",
    "Budget",
    "BudgetExceeded",
    "CertainResult",
    "ChaseResult",
    "Clause",
    "ComposeError",
    "ConjunctiveQuery",
    "Constant",
    "DepthExceeded",
    "Diagnostic",
    "Egd",
    "EqAtom",
    "FOTgd",
    "Fact",
    "Instance",
    "Mapping",
    "NotWeaklyAcyclic",
    "Null",
    "ParseError",
    "RelAtom",
    "Schema",
    "SequenceResult",
    "StSODependency",
    "Term",
    "UCQ",
    "ValidationError",
    "Value",
    "Var",
    "Verdict",
    "certain_answers",
    "chain_member",
    "chase_mapping",
    "chase_sequence",
    "chase_so_standard",
    "chase_standard",
    "chase_stso",
    "check_equiv",
    "collapse_chain",
    "compose_chain",
    "compose_standard_pair",
    "composition_member",
    "decompose_stso",
    "denest_pipeline",
    "denest_sotgd_depth2",
    "denest_stso",
    "depth",
    "dumps",
    "enumerate_solutions",
    "eval_ucq",
    "find_homomorphism",
    "homomorphically_equivalent",
    "infer_schemas",
    "instance_from_json",
    "instance_to_json",
    "parse_instance",
    "parse_mapping",
    "parse_query",
    "render",
    "render_instance",
    "render_mapping",
    "render_query",
    "require_weakly_acyclic",
    "sat_so_standard",
    "sat_stso",
    "skel",
    "skolemize",
    "subterms",
    "term_vars",
    "validate",
    "value_from_json",
    "value_to_json",
    "weakly_acyclic",
]
