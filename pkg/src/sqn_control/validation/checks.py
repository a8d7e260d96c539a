"""
Structural invariant checks for sqn-control networks.

Drives a network with uniformly random valid actions and verifies:
- Packet conservation
- Nonnegative queues
- Empty destination queues (multi-hop)
- Allocation row sums
- Work-conserving and reachability mask compliance
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
from rich.console import Console
from rich.table import Table

from sqn_control.env.masks import link_class_mask, reachability_mask, work_conserving_mask
from sqn_control.env.network import make_network
from sqn_control.env.spec import NetworkConfig
from sqn_control.env.state import NetworkState, StepOutcome
from sqn_control.policies.baselines import RandomizedPolicy

console = Console()

CheckResult = tuple[bool, dict[str, Any]]


@dataclass
class StepRecord:
    """One simulated slot: the state acted in, the action and what followed."""

    state: NetworkState
    action: Any
    outcome: StepOutcome


def simulate(config: NetworkConfig, steps: int, seed: int) -> list[StepRecord]:
    """Run ``steps`` slots under the randomized policy."""
    env = make_network(config, seed)
    policy = RandomizedPolicy(config)
    records = []
    for _ in range(steps):
        state = env.state.copy()
        action = policy.act(state, env.streams.policy)
        records.append(StepRecord(state, action, env.step(action)))
    return records


def validate_network(
    config: NetworkConfig,
    steps: int = 10_000,
    seed: int = 0,
    verbose: bool = False,
) -> dict[str, Any]:
    """
    Check the structural invariants of a network's dynamics.

    Args:
        config: Network instance
        steps: Number of random slots to simulate
        seed: Seed for the network's random streams
        verbose: Print detailed results

    Returns:
        Dictionary with validation results
    """
    results: dict[str, Any] = {
        "network": config.name,
        "steps": steps,
        "overall_passed": True,
        "checks": {},
        "warnings": [],
        "errors": [],
    }

    try:
        records = simulate(config, steps, seed)
    except ValueError as e:
        results["overall_passed"] = False
        results["errors"].append(f"simulation: {e}")
        if verbose:
            _print_results(results)
        return results

    checks: list[tuple[str, Callable[[NetworkConfig, list[StepRecord]], CheckResult]]] = [
        ("packet_conservation", _check_conservation),
        ("nonnegativity", _check_nonnegative),
        ("destination_rows", _check_destination_rows),
        ("row_sums", _check_row_sums),
        ("work_conserving_mask", _check_work_conserving),
        ("reachability_mask", _check_reachability),
    ]

    for check_name, check_func in checks:
        try:
            passed, details = check_func(config, records)
            results["checks"][check_name] = {
                "passed": passed,
                "details": details,
            }
            if not passed:
                results["overall_passed"] = False
                if "error" in details:
                    results["errors"].append(f"{check_name}: {details['error']}")
            elif "warning" in details:
                results["warnings"].append(f"{check_name}: {details['warning']}")
        except Exception as e:
            results["checks"][check_name] = {
                "passed": False,
                "details": {"error": str(e)},
            }
            results["errors"].append(f"{check_name}: {e}")
            results["overall_passed"] = False

    if verbose:
        _print_results(results)

    return results


def _first_failure(flags: list[bool], records: list[StepRecord]) -> dict[str, Any]:
    bad = [r.state.t for r, ok in zip(records, flags) if not ok]
    if not bad:
        return {"violations": 0}
    return {"violations": len(bad), "error": f"{len(bad)} violations, first at t={bad[0]}"}


def _check_conservation(config: NetworkConfig, records: list[StepRecord]) -> CheckResult:
    """Backlog changes only by arrivals and deliveries."""
    flags = [
        r.outcome.next_state.backlog
        == r.state.backlog + int(r.outcome.arrivals.sum()) - int(r.outcome.delivered.sum())
        for r in records
    ]
    details = _first_failure(flags, records)
    details["delivered"] = int(sum(r.outcome.delivered.sum() for r in records))
    return details["violations"] == 0, details


def _check_nonnegative(config: NetworkConfig, records: list[StepRecord]) -> CheckResult:
    """No queue ever goes negative."""
    flags = [bool((r.outcome.next_state.q >= 0).all()) for r in records]
    details = _first_failure(flags, records)
    details["max_backlog"] = max((r.outcome.next_state.backlog for r in records), default=0)
    return details["violations"] == 0, details


def _check_destination_rows(config: NetworkConfig, records: list[StepRecord]) -> CheckResult:
    """Packets never wait at their own destination."""
    if config.is_single_hop:
        return True, {"warning": "not applicable to single-hop networks"}
    cols = np.arange(config.num_classes)
    dests = config.destinations
    flags = [bool((r.outcome.next_state.q[dests, cols] == 0).all()) for r in records]
    details = _first_failure(flags, records)
    return details["violations"] == 0, details


def _check_row_sums(config: NetworkConfig, records: list[StepRecord]) -> CheckResult:
    """Multi-hop allocations use exactly each link's capacity."""
    if config.is_single_hop:
        k = config.num_classes
        flags = [isinstance(r.action, int) and 0 <= r.action <= k for r in records]
    else:
        flags = [
            bool((np.asarray(r.action) >= 0).all() and (np.asarray(r.action).sum(axis=1) == r.state.y).all())
            for r in records
        ]
    details = _first_failure(flags, records)
    return details["violations"] == 0, details


def _check_work_conserving(config: NetworkConfig, records: list[StepRecord]) -> CheckResult:
    """Chosen link is usable, and Idle only when nothing is."""
    if not config.is_single_hop:
        return True, {"warning": "not applicable to multi-hop networks"}
    flags = []
    idle = 0
    for r in records:
        mask = work_conserving_mask(r.state)
        usable = (r.state.q[:, 0] > 0) & (r.state.y > 0)
        expected = np.append(usable, not usable.any())
        flags.append(bool((mask == expected).all()) and bool(mask[r.action]))
        idle += int(r.action == config.num_classes)
    details = _first_failure(flags, records)
    details["idle_slots"] = idle
    return details["violations"] == 0, details


def _check_reachability(config: NetworkConfig, records: list[StepRecord]) -> CheckResult:
    """Allocations only move packets toward a reachable destination."""
    if config.is_single_hop:
        return True, {"warning": "not applicable to single-hop networks"}
    allowed = link_class_mask(reachability_mask(config))
    flags = [bool((np.asarray(r.action)[~allowed] == 0).all()) for r in records]
    details = _first_failure(flags, records)
    details["allowed_pairs"] = int(allowed[:, 1:].sum())
    return details["violations"] == 0, details


def _print_results(results: dict[str, Any]) -> None:
    """Print validation results in a formatted table."""
    table = Table(title=f"Validation Results: {results.get('network')} ({results.get('steps'):,} steps)")
    table.add_column("Check", style="cyan")
    table.add_column("Status")
    table.add_column("Details")

    for check_name, check_result in results.get("checks", {}).items():
        passed = check_result.get("passed", False)
        status = "[green]PASSED[/green]" if passed else "[red]FAILED[/red]"

        details = check_result.get("details", {})
        if "error" in details:
            detail_str = f"[red]{details['error']}[/red]"
        elif "warning" in details:
            detail_str = f"[yellow]{details['warning']}[/yellow]"
        else:
            detail_str = ", ".join(f"{k}: {v}" for k, v in details.items())

        table.add_row(check_name, status, detail_str)

    console.print(table)

    if results.get("overall_passed"):
        console.print("\n[bold green]All validation checks passed![/bold green]")
    else:
        console.print("\n[bold red]Validation failed![/bold red]")
        for error in results.get("errors", []):
            console.print(f"  [red]• {error}[/red]")
