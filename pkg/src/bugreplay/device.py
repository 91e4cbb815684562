"""Device sessions: a real device over adb, or a simulated app.

The simulated app is a finite state machine: named states each hold a
view tree, and transitions map (state, gesture, subject) to a successor
state. Gestures address components by the preorder id of the source
state's full encoding; unmapped gestures are no-ops; crash states model
the bug firing. App spec files are JSON::

    {
      "initial": "home",
      "crash_states": ["boom"],
      "screen": [1080, 1920],
      "states": {"home": {"tree": {...}}, "other": {"xml": "<node .../>"}},
      "transitions": [
        {"from": "home", "action": "tap", "id": 2, "to": "menu"},
        {"from": "menu", "action": "scroll", "direction": "down", "to": "menu2"},
        {"from": "menu", "action": "back", "to": "home"}
      ]
    }

Tree literals use keys class, resource_id, text, content_desc,
bounds [l, t, r, b], children.
"""
from __future__ import annotations

import json
import logging
import random
import re
import shlex
import subprocess
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import DeviceError
from .gui import Bounds, ViewNode, parse_dump
from .steps import Direction, Step

logger = logging.getLogger(__name__)

_GESTURE_KINDS = {"tap", "double_tap", "long_tap", "input", "scroll", "back"}


class DeviceSession(ABC):
    """Gesture-level surface shared by real and simulated devices."""

    @property
    @abstractmethod
    def screen_size(self) -> tuple[int, int]: ...

    @abstractmethod
    def dump_hierarchy(self) -> ViewNode: ...

    @abstractmethod
    def tap(self, x: int, y: int) -> None: ...

    @abstractmethod
    def double_tap(self, x: int, y: int) -> None: ...

    @abstractmethod
    def long_tap(self, x: int, y: int) -> None: ...

    @abstractmethod
    def swipe(self, x1: int, y1: int, x2: int, y2: int) -> None: ...

    @abstractmethod
    def type_text(self, text: str) -> None: ...

    @abstractmethod
    def press_back(self) -> None: ...

    @abstractmethod
    def restart(self) -> None: ...

    @abstractmethod
    def crashed(self) -> bool: ...

    def close(self) -> None:
        pass


def preorder(root: ViewNode):
    """Yield (preorder_id, node, depth) over a tree, matching the full
    encoding's id assignment."""
    stack = [(root, 0)]
    nid = 0
    while stack:
        node, depth = stack.pop()
        yield nid, node, depth
        nid += 1
        for child in reversed(node.children):
            stack.append((child, depth + 1))


def _tree_from_literal(data: dict) -> ViewNode:
    bounds = data.get("bounds")
    return ViewNode(
        class_name=data.get("class", "android.widget.FrameLayout"),
        resource_id=data.get("resource_id"),
        text=data.get("text"),
        content_desc=data.get("content_desc"),
        bounds=Bounds(*bounds) if bounds else Bounds(0, 0, 0, 0),
        children=[_tree_from_literal(c) for c in data.get("children", [])],
    )


class SimulatedApp:
    """Immutable app description; sessions hold the moving parts."""

    def __init__(
        self,
        states: dict[str, ViewNode],
        transitions: dict[tuple, str],
        initial: str,
        crash_states=(),
        screen: tuple[int, int] = (1080, 1920),
    ):
        if not states:
            raise ValueError("simulated app needs at least one state")
        if initial not in states:
            raise ValueError(f"initial state {initial!r} is not defined")
        for name in crash_states:
            if name not in states:
                raise ValueError(f"crash state {name!r} is not defined")
        counts = {name: sum(1 for _ in preorder(tree)) for name, tree in states.items()}
        for key, target in transitions.items():
            state, kind, subject = key
            if state not in states:
                raise ValueError(f"transition from unknown state {state!r}")
            if target not in states:
                raise ValueError(f"transition to unknown state {target!r}")
            if kind not in _GESTURE_KINDS:
                raise ValueError(f"unknown gesture kind {kind!r}")
            if kind in ("tap", "double_tap", "long_tap", "input"):
                if not isinstance(subject, int) or not 0 <= subject < counts[state]:
                    raise ValueError(
                        f"transition {key} cites id outside 0..{counts[state] - 1}"
                    )
            elif kind == "scroll":
                if subject not in {d.value for d in Direction}:
                    raise ValueError(f"transition {key} has unknown direction")
            elif subject is not None:
                raise ValueError("back transitions take no subject")
        self.states = states
        self.transitions = transitions
        self.initial = initial
        self.crash_states = frozenset(crash_states)
        self.screen = screen
        self._claimed = False

    @classmethod
    def from_dict(cls, data: dict) -> "SimulatedApp":
        states = {}
        for name, body in data["states"].items():
            if "tree" in body:
                states[name] = _tree_from_literal(body["tree"])
            elif "xml" in body:
                states[name] = parse_dump(body["xml"])
            else:
                raise ValueError(f"state {name!r} needs a 'tree' or 'xml' entry")
        transitions = {}
        for t in data.get("transitions", []):
            kind = t["action"].replace("-", "_")
            if kind == "scroll":
                subject = t["direction"]
            elif kind == "back":
                subject = None
            else:
                subject = t["id"]
            transitions[(t["from"], kind, subject)] = t["to"]
        return cls(
            states=states,
            transitions=transitions,
            initial=data["initial"],
            crash_states=data.get("crash_states", []),
            screen=tuple(data.get("screen", (1080, 1920))),
        )

    @classmethod
    def load(cls, path) -> "SimulatedApp":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


class SimulatedDevice(DeviceSession):
    """Deterministic in-memory device over a SimulatedApp.

    Taps hit-test against the current tree: among nodes containing the
    point, the deepest one with a transition for the gesture wins, else
    the deepest plain node (which then just takes focus). Typed text goes
    to the focused node. One live session per app instance.
    """

    def __init__(self, app: SimulatedApp):
        if app._claimed:
            raise DeviceError("simulated app already has a live session")
        app._claimed = True
        self.app = app
        self.current = app.initial
        self._focused: int | None = None
        self._closed = False
        self._geometry: dict[str, list[tuple[int, ViewNode, int]]] = {}

    @property
    def screen_size(self) -> tuple[int, int]:
        return self.app.screen

    def _check_open(self):
        if self._closed:
            raise DeviceError("session is closed")

    def _nodes(self) -> list[tuple[int, ViewNode, int]]:
        if self.current not in self._geometry:
            self._geometry[self.current] = list(preorder(self.app.states[self.current]))
        return self._geometry[self.current]

    def _hit(self, x: int, y: int, kind: str) -> int | None:
        containing = [
            (depth, nid)
            for nid, node, depth in self._nodes()
            if node.bounds.left <= x < max(node.bounds.right, node.bounds.left + 1)
            and node.bounds.top <= y < max(node.bounds.bottom, node.bounds.top + 1)
        ]
        if not containing:
            return None
        keyed = [
            (depth, nid)
            for depth, nid in containing
            if (self.current, kind, nid) in self.app.transitions
        ]
        return max(keyed or containing)[1]

    def _apply(self, key: tuple) -> None:
        target = self.app.transitions.get(key)
        if target is not None:
            logger.debug("transition %s -> %s", key, target)
            self.current = target

    def dump_hierarchy(self) -> ViewNode:
        self._check_open()
        return self.app.states[self.current]

    def tap(self, x: int, y: int) -> None:
        self._check_open()
        nid = self._hit(x, y, "tap")
        self._focused = nid
        if nid is not None:
            self._apply((self.current, "tap", nid))

    def double_tap(self, x: int, y: int) -> None:
        self._check_open()
        nid = self._hit(x, y, "double_tap")
        if nid is not None:
            self._apply((self.current, "double_tap", nid))

    def long_tap(self, x: int, y: int) -> None:
        self._check_open()
        nid = self._hit(x, y, "long_tap")
        if nid is not None:
            self._apply((self.current, "long_tap", nid))

    def swipe(self, x1: int, y1: int, x2: int, y2: int) -> None:
        self._check_open()
        dx, dy = x2 - x1, y2 - y1
        if abs(dy) >= abs(dx):
            direction = "up" if dy < 0 else "down"
        else:
            direction = "left" if dx < 0 else "right"
        self._apply((self.current, "scroll", direction))

    def type_text(self, text: str) -> None:
        self._check_open()
        if self._focused is not None:
            self._apply((self.current, "input", self._focused))

    def press_back(self) -> None:
        self._check_open()
        self._apply((self.current, "back", None))

    def restart(self) -> None:
        self._check_open()
        self.current = self.app.initial
        self._focused = None

    def crashed(self) -> bool:
        self._check_open()
        return self.current in self.app.crash_states

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self.app._claimed = False


@dataclass
class AdbConfig:
    serial: str | None = None
    adb_path: str = "adb"
    package: str | None = None
    launch_command: str | None = None
    screen_size: tuple[int, int] | None = None
    dump_path: str = "/sdcard/window_dump.xml"


def _run_subprocess(argv: list[str]) -> str:
    proc = subprocess.run(argv, capture_output=True, text=True)
    if proc.returncode != 0:
        raise DeviceError(f"{' '.join(argv)} exited {proc.returncode}: {proc.stderr.strip()}")
    return proc.stdout


class AdbDevice(DeviceSession):
    """Drives a device through adb shell input commands.

    The exact command strings are part of this module's contract:

        tap         input tap X Y
        double tap  input tap X Y            (twice, <150ms apart)
        long tap    input swipe X Y X Y 800
        swipe       input swipe X1 Y1 X2 Y2 300
        text        input text VALUE         (spaces become %s)
        back        input keyevent KEYCODE_BACK

    A runner callable can replace subprocess execution for tests.
    """

    DOUBLE_TAP_GAP_SECONDS = 0.05
    LONG_TAP_MS = 800
    SWIPE_MS = 300

    def __init__(self, config: AdbConfig | None = None, runner=None):
        self.config = config or AdbConfig()
        self._runner = runner or _run_subprocess
        self._size = self.config.screen_size

    def _adb(self, *args: str) -> str:
        argv = [self.config.adb_path]
        if self.config.serial:
            argv += ["-s", self.config.serial]
        argv += list(args)
        return self._runner(argv)

    @property
    def screen_size(self) -> tuple[int, int]:
        if self._size is None:
            out = self._adb("shell", "wm", "size")
            m = re.search(r"(\d+)x(\d+)", out)
            if not m:
                raise DeviceError(f"cannot read screen size from {out!r}")
            self._size = (int(m.group(1)), int(m.group(2)))
        return self._size

    def dump_hierarchy(self) -> ViewNode:
        self._adb("shell", "uiautomator", "dump", self.config.dump_path)
        xml = self._adb("shell", "cat", self.config.dump_path)
        return parse_dump(xml)

    def tap(self, x: int, y: int) -> None:
        self._adb("shell", "input", "tap", str(x), str(y))

    def double_tap(self, x: int, y: int) -> None:
        self._adb("shell", "input", "tap", str(x), str(y))
        time.sleep(self.DOUBLE_TAP_GAP_SECONDS)
        self._adb("shell", "input", "tap", str(x), str(y))

    def long_tap(self, x: int, y: int) -> None:
        self._adb(
            "shell", "input", "swipe",
            str(x), str(y), str(x), str(y), str(self.LONG_TAP_MS),
        )

    def swipe(self, x1: int, y1: int, x2: int, y2: int) -> None:
        self._adb(
            "shell", "input", "swipe",
            str(x1), str(y1), str(x2), str(y2), str(self.SWIPE_MS),
        )

    def type_text(self, text: str) -> None:
        self._adb("shell", "input", "text", shlex.quote(text.replace(" ", "%s")))

    def press_back(self) -> None:
        self._adb("shell", "input", "keyevent", "KEYCODE_BACK")

    def restart(self) -> None:
        if self.config.package:
            self._adb("shell", "am", "force-stop", self.config.package)
        self._adb("logcat", "-c")
        if self.config.launch_command:
            self._adb("shell", *shlex.split(self.config.launch_command))

    def crashed(self) -> bool:
        log = self._adb("logcat", "-d", "-b", "crash")
        if "FATAL EXCEPTION" in log:
            return True
        if self.config.package:
            front = self._adb("shell", "dumpsys", "activity", "activities")
            m = re.search(r"mResumedActivity.*", front)
            if m and self.config.package not in m.group(0):
                return True
        return False


def apply_gestures(device: DeviceSession, gestures) -> None:
    """Replay a recorded raw gesture sequence verbatim."""
    for gesture in gestures:
        kind, *args = gesture
        if kind == "tap":
            device.tap(*args)
        elif kind == "double_tap":
            device.double_tap(*args)
        elif kind == "long_tap":
            device.long_tap(*args)
        elif kind == "swipe":
            device.swipe(*args)
        elif kind == "text":
            device.type_text(*args)
        elif kind == "back":
            device.press_back()
        elif kind == "restart":
            device.restart()
        else:
            raise ValueError(f"unknown gesture {gesture!r}")


def synthesize_omissions(steps: list[Step], k: int, seed: int) -> list[Step]:
    """Drop k of the steps uniformly at random (seeded), never the final
    one, and renumber. Models the incomplete reports users actually file."""
    if not 0 <= k <= 2:
        raise ValueError("k must be between 0 and 2")
    if k >= len(steps):
        raise ValueError("cannot omit that many steps")
    rng = random.Random(seed)
    dropped = set(rng.sample(range(len(steps) - 1), k))
    kept = [s for i, s in enumerate(steps) if i not in dropped]
    return [replace(s, index=i) for i, s in enumerate(kept, start=1)]
