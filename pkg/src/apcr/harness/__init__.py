from .checks import CheckResult, check_correspondence, check_secrecy
from .network import EPOCH, RP_STEP_BUDGET, AdversaryView, Entry, Event, Network, RunOutcome, RunReport, Transcript, run_scenario
from .script import (
    AdversaryScript,
    Deliver,
    Drop,
    Duplicate,
    Forge,
    Inject,
    Modify,
    Reflect,
    Replay,
    Reroute,
    Rule,
    load_script,
    parse_msg_type,
    parse_script,
)
from .suite import Scenario, ScenarioResult, SuiteSummary, attack_suite, canonical_scenarios
from .topology import DEFAULT_CLAIMS, AttesterKeys, Topology

__all__ = [name for name in dir() if not name.startswith("_")]
