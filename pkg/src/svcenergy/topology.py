"""Container -> pod -> node placement and container -> service membership."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import yaml

PRIMARY = "primary"
AUXILIARY = "auxiliary"
ROLES = (PRIMARY, AUXILIARY)


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Container:
    id: str
    pod: str
    node: str
    name: str


@dataclass(frozen=True)
class ServiceTopology:
    containers: Mapping[str, Container]
    services: Mapping[str, str]
    membership: Mapping[str, frozenset[str]]
    composed_services: Mapping[str, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for sid, role in self.services.items():
            if role not in ROLES:
                raise TopologyError(f"service {sid!r} has unknown role {role!r}")
        for cid in self.containers:
            owners = self.membership.get(cid)
            if not owners:
                raise TopologyError(f"container {cid!r} belongs to no service")
            unknown = set(owners) - set(self.services)
            if unknown:
                raise TopologyError(f"container {cid!r} references unknown services {sorted(unknown)}")
        stray = set(self.membership) - set(self.containers)
        if stray:
            raise TopologyError(f"membership lists unknown containers {sorted(stray)}")
        for name, members in self.composed_services.items():
            if name in self.services:
                raise TopologyError(f"composed service {name!r} shadows a service")
            unknown = set(members) - set(self.services)
            if unknown:
                raise TopologyError(f"composed service {name!r} references unknown services {sorted(unknown)}")

    def members(self, service: str) -> list[str]:
        """Sorted container ids of ``service`` (the container set P)."""
        if service not in self.services:
            raise TopologyError(f"unknown service {service!r}")
        return sorted(c for c, owners in self.membership.items() if service in owners)

    def services_with_role(self, role: str) -> list[str]:
        return sorted(s for s, r in self.services.items() if r == role)

    def expand(self, names: Iterable[str]) -> frozenset[str]:
        """Resolve service and composed-service names to plain service ids."""
        out: set[str] = set()
        for name in names:
            if name in self.services:
                out.add(name)
            elif name in self.composed_services:
                out |= self.composed_services[name]
            else:
                raise TopologyError(f"unknown service or composed service {name!r}")
        return frozenset(out)

    def resolve(self, pod: str | None, container: str | None) -> str | None:
        """Map exposition labels to a container id, or None if unattributable."""
        if pod is None or container is None:
            return None
        cid = f"{pod}/{container}"
        return cid if cid in self.containers else None

    def to_dict(self) -> dict:
        return {
            "services": dict(sorted(self.services.items())),
            "containers": [
                {
                    "pod": c.pod,
                    "name": c.name,
                    "node": c.node,
                    "services": sorted(self.membership[c.id]),
                }
                for c in sorted(self.containers.values(), key=lambda c: c.id)
            ],
            "composed_services": {k: sorted(v) for k, v in sorted(self.composed_services.items())},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ServiceTopology":
        try:
            services = {str(k): str(v) for k, v in data["services"].items()}
            containers: dict[str, Container] = {}
            membership: dict[str, frozenset[str]] = {}
            for entry in data["containers"]:
                c = Container(
                    id=f"{entry['pod']}/{entry['name']}",
                    pod=str(entry["pod"]),
                    node=str(entry.get("node", "node-0")),
                    name=str(entry["name"]),
                )
                if c.id in containers:
                    raise TopologyError(f"duplicate container {c.id!r}")
                containers[c.id] = c
                membership[c.id] = frozenset(entry["services"])
            composed = {str(k): frozenset(v) for k, v in (data.get("composed_services") or {}).items()}
        except (KeyError, TypeError, AttributeError) as exc:
            raise TopologyError(f"malformed topology: {exc}") from exc
        return cls(containers, services, membership, composed)

    @classmethod
    def load(cls, path: str | Path) -> "ServiceTopology":
        text = Path(path).read_text()
        data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
        return cls.from_dict(data)
