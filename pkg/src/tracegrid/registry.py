"""Registry of published workflow descriptions.

Publishing freezes a description: the registry keeps the canonical bytes of
every (name, version) pair forever, and `get` re-parses those bytes, so what
you read back is exactly what was stored. Revisions never touch earlier
versions; instances created against version N keep meaning version N.
"""
from __future__ import annotations

from typing import Callable

from . import canonical
from .clock import Clock, SystemClock
from .descriptions import WorkflowDescription
from .errors import DuplicateName, NotFound
from .graph import validate_or_raise

PublishHook = Callable[[dict], None]


class DescriptionRegistry:
    def __init__(self, clock: Clock | None = None, on_publish: PublishHook | None = None):
        self._clock = clock or SystemClock()
        self._on_publish = on_publish
        self._versions: dict[str, list[bytes]] = {}  # name -> canonical bytes, index = version - 1

    def define(self, content: WorkflowDescription) -> tuple[str, int]:
        """Publish version 1 of a new workflow name. The registry stays
        unchanged if validation rejects the content."""
        if content.name in self._versions:
            raise DuplicateName(f"workflow {content.name!r} already defined")
        validate_or_raise(content)
        return self._publish(content)

    def revise(self, name: str, content: WorkflowDescription) -> tuple[str, int]:
        """Publish the next version of an existing name."""
        if name not in self._versions:
            raise NotFound(f"workflow {name!r} is not defined")
        if content.name != name:
            content = WorkflowDescription.from_jsonable({**content.to_jsonable(), "name": name})
        validate_or_raise(content)
        return self._publish(content)

    def _publish(self, content: WorkflowDescription) -> tuple[str, int]:
        chain = self._versions.setdefault(content.name, [])
        version = len(chain) + 1
        stamped = content.published(version, self._clock.now_ms())
        data = stamped.serialize()
        chain.append(data)
        if self._on_publish is not None:
            self._on_publish(canonical.loads(data))
        return (content.name, version)

    def get(self, name: str, version: int | None = None) -> WorkflowDescription:
        """Fetch a published description; `version=None` means the latest."""
        return WorkflowDescription.from_jsonable(canonical.loads(self.serialized(name, version)))

    def serialized(self, name: str, version: int | None = None) -> bytes:
        chain = self._versions.get(name)
        if not chain:
            raise NotFound(f"workflow {name!r} is not defined")
        if version is None:
            return chain[-1]
        if not 1 <= version <= len(chain):
            raise NotFound(f"workflow {name!r} has no version {version}")
        return chain[version - 1]

    def latest_version(self, name: str) -> int:
        chain = self._versions.get(name)
        if not chain:
            raise NotFound(f"workflow {name!r} is not defined")
        return len(chain)

    def versions(self, name: str) -> list[dict]:
        chain = self._versions.get(name)
        if not chain:
            raise NotFound(f"workflow {name!r} is not defined")
        out = []
        for data in chain:
            d = canonical.loads(data)
            out.append({"version": d["version"], "createdAt": d["createdAt"], "digest": canonical.digest(data)})
        return out

    def names(self) -> list[str]:
        return sorted(self._versions)

    def restore(self, jsonable: dict) -> None:
        """Re-admit an already-published description during journal replay.

        Trusts the stored version stamp; replay must feed versions in order.
        """
        desc = WorkflowDescription.from_jsonable(jsonable)
        chain = self._versions.setdefault(desc.name, [])
        if desc.version != len(chain) + 1:
            raise ValueError(f"replay out of order for {desc.name!r}: got version {desc.version}")
        chain.append(desc.serialize())
