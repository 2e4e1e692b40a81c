"""File-backed bidding-session ledger.

One directory per session holding append-only JSON documents: the base
instance snapshot, one file per submitted round, one per solve report, one
per what-if record.  Nothing is ever rewritten, so the ledger doubles as
the conference audit trail; any round's instance is reproduced by
replaying deltas from the base snapshot.

State transitions are serialized per session with one in-flight solve at
a time; what-if runs work on ephemeral copies and never touch the ledger
beyond their own record file.
"""

from __future__ import annotations

import datetime as _dt
import json
import threading
import uuid
from pathlib import Path

from .. import analysis, costs as costs_mod, exact
from ..instance import (
    BidDeltaError,
    PenaltyPolicy,
    SsoaError,
    SupplyChainInstance,
    apply_bid_round,
    load_instance,
    override_from_doc,
    save_instance,
    validate_instance,
)

SCHEMA_VERSION = 1


class SessionError(SsoaError):
    """Business-rule rejection; carries an HTTP-ish status hint."""

    def __init__(self, message: str, status: int = 409):
        super().__init__(message)
        self.status = status


class UnknownSession(SessionError):
    def __init__(self, session_id: str):
        super().__init__(f"unknown session {session_id!r}", status=404)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


class Session:
    def __init__(self, store: "SessionStore", session_id: str):
        self.store = store
        self.id = session_id
        self.lock = threading.Lock()
        self._instances: dict[int, SupplyChainInstance] = {}

    @property
    def path(self) -> Path:
        return self.store.root / self.id

    # -- document access -------------------------------------------------

    def meta(self) -> dict:
        return _read(self.path / "meta.json")

    def base_instance(self) -> SupplyChainInstance:
        if 0 not in self._instances:
            self._instances[0] = load_instance(_read(self.path / "instance.json"))
        return self._instances[0]

    def round_numbers(self) -> list[int]:
        return sorted(int(p.stem.split("_")[1]) for p in self.path.glob("round_*.json"))

    def round_doc(self, number: int) -> dict:
        path = self.path / f"round_{number:04d}.json"
        if not path.exists():
            raise SessionError(f"round {number} does not exist", status=404)
        return _read(path)

    def report_doc(self, number: int) -> dict | None:
        path = self.path / f"report_{number:04d}.json"
        return _read(path) if path.exists() else None

    def solved(self, number: int) -> bool:
        return (self.path / f"report_{number:04d}.json").exists()

    def instance_at(self, number: int) -> SupplyChainInstance:
        """Replay deltas from the base snapshot up to the given round."""
        if number in self._instances:
            return self._instances[number]
        if number == 0:
            return self.base_instance()
        prev = self.instance_at(number - 1)
        doc = self.round_doc(number)
        overrides = [override_from_doc(e) for e in doc["delta"]]
        inst = apply_bid_round(prev, overrides, label=f"round-{number}")
        self._instances[number] = inst
        return inst

    # -- operations --------------------------------------------------------

    def submit_round(self, delta_docs: list[dict], label: str = "",
                     skip_unsolved: bool = False) -> int:
        with self.lock:
            rounds = self.round_numbers()
            number = (rounds[-1] + 1) if rounds else 1
            if rounds and not self.solved(rounds[-1]) and not skip_unsolved:
                raise SessionError(
                    f"round {rounds[-1]} is not solved; solve it or submit with "
                    "skip_unsolved to close it out")
            base = self.instance_at(number - 1)
            overrides = [override_from_doc(e) for e in delta_docs]
            inst = apply_bid_round(base, overrides, label=label or f"round-{number}")
            self._instances[number] = inst
            _write(self.path / f"round_{number:04d}.json", {
                "schema_version": SCHEMA_VERSION,
                "number": number,
                "label": label,
                "delta": delta_docs,
                "skipped_previous": bool(rounds and not self.solved(rounds[-1])),
                "submitted_at": _now(),
            })
            return number

    def solve_round(self, number: int, solver: str | None = None,
                    limits_doc: dict | None = None, seed: int | None = None) -> dict:
        # one in-flight solve per session: reject rather than queue
        if not self.lock.acquire(blocking=False):
            raise SessionError("another solve is already running on this session",
                               status=409)
        try:
            self.round_doc(number)  # existence check
            if self.solved(number):
                raise SessionError(f"round {number} is already solved; the ledger "
                                   "is immutable", status=409)
            settings = self.meta()["settings"]
            inst = self.instance_at(number)
            report_doc = self.store.run_solve(
                inst,
                kind=settings["model_kind"],
                solver=solver or settings["solver"],
                limits_doc=limits_doc or settings.get("limits") or {},
                seed=settings.get("seed", 0) if seed is None else seed,
            )
            report_doc["round"] = number
            report_doc["solved_at"] = _now()
            _write(self.path / f"report_{number:04d}.json", report_doc)
            return report_doc
        finally:
            self.lock.release()

    def what_if(self, base_round: int, mutation: dict) -> dict:
        base_report = self.report_doc(base_round)
        if base_report is None:
            raise SessionError(f"round {base_round} is not solved yet", status=409)
        inst = self.instance_at(base_round)
        mutated = apply_mutation(inst, mutation)
        violations = validate_instance(mutated)
        if violations:
            raise SessionError(
                "mutation yields an invalid instance: "
                + "; ".join(str(v) for v in violations), status=422)
        settings = self.meta()["settings"]
        report_doc = self.store.run_solve(
            mutated,
            kind=settings["model_kind"],
            solver=settings["solver"],
            limits_doc=settings.get("limits") or {},
            seed=settings.get("seed", 0),
        )
        baseline = base_report.get("objective")
        scenario = report_doc.get("objective")
        record = {
            "schema_version": SCHEMA_VERSION,
            "base_round": base_round,
            "mutation": mutation,
            "baseline_cost": baseline,
            "scenario_cost": scenario,
            "cost_delta": None if baseline is None or scenario is None
            else scenario - baseline,
            "report": report_doc,
            "ran_at": _now(),
        }
        stamp = uuid.uuid4().hex[:8]
        _write(self.path / f"whatif_{base_round:04d}_{stamp}.json", record)
        return record

    def summary(self) -> dict:
        meta = self.meta()
        rounds = []
        for number in self.round_numbers():
            doc = self.round_doc(number)
            report = self.report_doc(number)
            rounds.append({
                "number": number,
                "label": doc.get("label", ""),
                "submitted_at": doc.get("submitted_at"),
                "delta_size": len(doc.get("delta", [])),
                "solved": report is not None,
                "status": None if report is None else report.get("status"),
                "objective": None if report is None else report.get("objective"),
            })
        return {
            "id": self.id,
            "created_at": meta.get("created_at"),
            "settings": meta.get("settings"),
            "rounds": rounds,
        }


class SessionStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, instance_doc: dict, settings: dict) -> Session:
        inst = load_instance(instance_doc)
        violations = validate_instance(inst)
        if violations:
            raise SessionError(
                "instance failed validation: " + "; ".join(str(v) for v in violations),
                status=422)
        session_id = uuid.uuid4().hex[:12]
        session = Session(self, session_id)
        session.path.mkdir(parents=True)
        _write(session.path / "meta.json", {
            "schema_version": SCHEMA_VERSION,
            "id": session_id,
            "settings": settings,
            "created_at": _now(),
        })
        _write(session.path / "instance.json", save_instance(inst))
        with self._lock:
            self._sessions[session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id in self._sessions:
                return self._sessions[session_id]
        path = self.root / session_id
        if not (path / "meta.json").exists():
            raise UnknownSession(session_id)
        session = Session(self, session_id)
        with self._lock:
            self._sessions.setdefault(session_id, session)
        return self._sessions[session_id]

    def list_ids(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir()
                      if (p / "meta.json").exists())

    # -- solving -----------------------------------------------------------

    def run_solve(self, inst: SupplyChainInstance, kind: str, solver: str,
                  limits_doc: dict, seed: int) -> dict:
        limits = exact.SolveLimits(
            time_limit=float(limits_doc.get("time_limit", 300.0)),
            node_limit=int(limits_doc.get("node_limit", 2_000_000)),
            gap_target=float(limits_doc.get("gap_target", 1e-6)),
        )
        report = analysis.run_solver(inst, kind, solver, limits, seed)
        doc = report.to_doc()
        if report.allocation is not None:
            bd = costs_mod.evaluate(inst, report.allocation)
            doc["breakdown"] = bd.to_doc()
        return doc


# ---------------------------------------------------------------------------
# what-if mutations


def apply_mutation(inst: SupplyChainInstance, mutation: dict) -> SupplyChainInstance:
    """Build the ephemeral scenario instance for a what-if request."""
    kind = mutation.get("type")
    if kind == "remove_supplier":
        return _remove_supplier(inst, mutation)
    if kind == "force_assignment":
        return _edit_assignment_sets(inst, mutation, force=True)
    if kind == "forbid_assignment":
        return _edit_assignment_sets(inst, mutation, force=False)
    if kind == "shift_order":
        return _shift_order(inst, mutation)
    if kind == "change_penalty":
        return _change_penalty(inst, mutation)
    raise SessionError(f"unknown what-if mutation type {kind!r}", status=422)


def _clone(inst: SupplyChainInstance, **overrides) -> SupplyChainInstance:
    fields = dict(
        n_parts_blue=inst.n_parts_blue, n_parts_llv=inst.n_parts_llv,
        n_forgings_blue=inst.n_forgings_blue, n_forgings_llv=inst.n_forgings_llv,
        tier1_count=inst.tier1_count, tier2_count=inst.tier2_count,
        part_orders=inst.part_orders, yields=inst.yields,
        machining_unit_cost=inst.machining_unit_cost,
        machining_transport_cost=inst.machining_transport_cost,
        forging_unit_cost=inst.forging_unit_cost,
        forging_transport_cost=inst.forging_transport_cost,
        tier1_budget_min=inst.tier1_budget_min, tier1_budget_max=inst.tier1_budget_max,
        tier2_budget_min=inst.tier2_budget_min, tier2_budget_max=inst.tier2_budget_max,
        must_make_tier1=inst.must_make_tier1, must_make_tier2=inst.must_make_tier2,
        cannot_make_tier1=inst.cannot_make_tier1, cannot_make_tier2=inst.cannot_make_tier2,
        penalty=inst.penalty, sourcing=inst.sourcing, provenance=inst.provenance,
    )
    fields.update(overrides)
    return SupplyChainInstance(**fields)


def _remove_supplier(inst: SupplyChainInstance, mutation: dict) -> SupplyChainInstance:
    tier = mutation.get("tier")
    index = int(mutation.get("index", -1))
    if tier == "tier1":
        if not 0 <= index < inst.tier1_count:
            raise SessionError(f"unknown tier1 supplier {index}", status=422)
        cannot = set(inst.cannot_make_tier1)
        cannot.update((p, index) for p in range(inst.n_parts))
        must = [pair for pair in inst.must_make_tier1 if pair[1] != index]
        return _clone(inst, cannot_make_tier1=sorted(cannot), must_make_tier1=must)
    if tier == "tier2":
        if not 0 <= index < inst.tier2_count:
            raise SessionError(f"unknown tier2 supplier {index}", status=422)
        cannot = set(inst.cannot_make_tier2)
        cannot.update((f, j, index)
                      for f in range(inst.n_forgings) for j in range(inst.tier1_count))
        must = [t for t in inst.must_make_tier2 if t[2] != index]
        return _clone(inst, cannot_make_tier2=sorted(cannot), must_make_tier2=must)
    raise SessionError(f"remove_supplier tier must be tier1 or tier2, got {tier!r}",
                       status=422)


def _item_indices(inst: SupplyChainInstance, mutation: dict) -> tuple[str, int]:
    from ..instance import ItemId, ItemKind

    try:
        item = ItemId(ItemKind(mutation["kind"]), int(mutation["index"]))
    except (KeyError, ValueError) as exc:
        raise SessionError(f"bad item reference: {exc}", status=422) from exc
    if item.kind.is_part:
        try:
            return "part", inst.part_flat(item)
        except KeyError as exc:
            raise SessionError(str(exc), status=422) from exc
    try:
        return "forging", inst.forging_flat(item)
    except KeyError as exc:
        raise SessionError(str(exc), status=422) from exc


def _edit_assignment_sets(inst, mutation, force: bool) -> SupplyChainInstance:
    family, flat = _item_indices(inst, mutation)
    if family == "part":
        j = int(mutation.get("tier1", -1))
        if not 0 <= j < inst.tier1_count:
            raise SessionError(f"unknown tier1 supplier {j}", status=422)
        if force:
            must = sorted(set(inst.must_make_tier1) | {(flat, j)})
            return _clone(inst, must_make_tier1=must)
        cannot = sorted(set(inst.cannot_make_tier1) | {(flat, j)})
        return _clone(inst, cannot_make_tier1=cannot)
    j = int(mutation.get("tier1", -1))
    l = int(mutation.get("tier2", -1))
    if not 0 <= j < inst.tier1_count or not 0 <= l < inst.tier2_count:
        raise SessionError("unknown supplier pair for forging mutation", status=422)
    if force:
        must = sorted(set(inst.must_make_tier2) | {(flat, j, l)})
        return _clone(inst, must_make_tier2=must)
    cannot = sorted(set(inst.cannot_make_tier2) | {(flat, j, l)})
    return _clone(inst, cannot_make_tier2=cannot)


def _shift_order(inst, mutation) -> SupplyChainInstance:
    """Force an item's order away from one supplier and onto another."""
    family, flat = _item_indices(inst, mutation)
    source = int(mutation.get("from_supplier", -1))
    target = int(mutation.get("to_supplier", -1))
    if family == "part":
        for idx in (source, target):
            if not 0 <= idx < inst.tier1_count:
                raise SessionError(f"unknown tier1 supplier {idx}", status=422)
        must = sorted(set(inst.must_make_tier1) | {(flat, target)})
        cannot = sorted(set(inst.cannot_make_tier1) | {(flat, source)})
        must = [p for p in must if p != (flat, source)]
        return _clone(inst, must_make_tier1=must, cannot_make_tier1=cannot)
    j = int(mutation.get("tier1", -1))
    if not 0 <= j < inst.tier1_count:
        raise SessionError(f"unknown tier1 supplier {j}", status=422)
    for idx in (source, target):
        if not 0 <= idx < inst.tier2_count:
            raise SessionError(f"unknown tier2 supplier {idx}", status=422)
    must = sorted((set(inst.must_make_tier2) | {(flat, j, target)})
                  - {(flat, j, source)})
    cannot = sorted(set(inst.cannot_make_tier2) | {(flat, j, source)})
    return _clone(inst, must_make_tier2=must, cannot_make_tier2=cannot)


def _change_penalty(inst, mutation) -> SupplyChainInstance:
    supplier = int(mutation.get("tier2", -1))
    if not 0 <= supplier < inst.tier2_count:
        raise SessionError(f"unknown tier2 supplier {supplier}", status=422)
    threshold = inst.penalty.threshold.copy()
    factor = inst.penalty.factor.copy()
    if "threshold" in mutation:
        threshold[supplier] = float(mutation["threshold"])
    if "factor" in mutation:
        factor[supplier] = float(mutation["factor"])
    return _clone(inst, penalty=PenaltyPolicy(
        threshold, factor, inst.penalty.big_m, inst.penalty.epsilon))


# ---------------------------------------------------------------------------


def _read(path: Path) -> dict:
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def _write(path: Path, doc: dict) -> None:
    if path.exists():
        raise SessionError(f"refusing to overwrite ledger file {path.name}", status=409)
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=1, sort_keys=True)
    tmp.rename(path)
