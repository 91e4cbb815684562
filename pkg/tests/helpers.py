"""Shared test infrastructure: scenario apps, oracle backends, walkers.

Scenarios are JSON-ready app specs paired with the step list that reaches
their crash state. The oracle backends answer guidance queries by actually
reading the GUI block out of the prompt, which keeps replay tests honest:
nothing here peeks at device internals.
"""
from __future__ import annotations

import html as html_mod
import re
from collections import deque

from bugreplay.llm import LlmClient, LlmConfig
from bugreplay.steps import ActionType, bracket_tokens, parse_step_text, strip_quotes

SCREEN = (1080, 1920)
CRASH_STATE = "boom"

_QUERY_MARK = "If I need to "


# ---------------------------------------------------------------- trees

def text_view(text, top, *, height=80):
    return {"class": "android.widget.TextView", "text": text,
            "bounds": [40, top, 1040, top + height]}


def button(text, top, *, height=90):
    return {"class": "android.widget.Button", "text": text,
            "bounds": [40, top, 1040, top + height]}


def edit_text(text, top, *, rid=None, height=90):
    node = {"class": "android.widget.EditText", "text": text,
            "bounds": [40, top, 1040, top + height]}
    if rid:
        node["resource_id"] = rid
    return node


def screen_tree(children):
    return {"class": "android.widget.FrameLayout",
            "bounds": [0, 0, SCREEN[0], SCREEN[1]],
            "children": children}


def stacked(header, widgets):
    """Header TextView at the top, then the widgets every 130px."""
    children = [text_view(header, 60)]
    for i, w in enumerate(widgets):
        children.append(w(200 + 130 * i))
    return screen_tree(children)


_CRASH_TREE = screen_tree([text_view("Unfortunately, the app has stopped", 860)])


# ------------------------------------------------------------ scenarios

class Scenario:
    def __init__(self, name, spec, step_texts, bridges=None, decoys=None):
        self.name = name
        self.spec = spec
        self.steps = [parse_step_text(t, i) for i, t in enumerate(step_texts, 1)]
        self.bridges = bridges or {}
        self.decoys = decoys or {}

    def oracle(self):
        if self.decoys:
            return MisleadingOracle(self.decoys, bridges=self.bridges)
        return GuidanceOracle(bridges=self.bridges)


def _spec(states, transitions, initial, crash_states=(CRASH_STATE,)):
    states = dict(states)
    states.setdefault(CRASH_STATE, {"tree": _CRASH_TREE})
    return {"initial": initial, "crash_states": list(crash_states),
            "screen": list(SCREEN), "states": states, "transitions": transitions}


def _tap(frm, cid, to):
    return {"from": frm, "action": "tap", "id": cid, "to": to}


def scenario_single_step():
    spec = _spec(
        {"s0": {"tree": stacked("Main", [lambda y: button("Crash me", y)])}},
        [_tap("s0", 2, CRASH_STATE)], "s0")
    return Scenario("single_step", spec, ['[Tap] ["Crash me"]'])


def _linear_tap_chain(name, labels):
    """State i shows one button; tapping it moves to state i+1, last to boom."""
    states, transitions = {}, []
    for i, label in enumerate(labels):
        states[f"s{i}"] = {"tree": stacked(f"Screen {i}", [lambda y, t=label: button(t, y)])}
        to = f"s{i + 1}" if i + 1 < len(labels) else CRASH_STATE
        transitions.append(_tap(f"s{i}", 2, to))
    steps = [f'[Tap] ["{label}"]' for label in labels]
    bridges = {}
    for i, label in enumerate(labels):
        back = [labels[i - 1]] if i >= 1 else []
        if i >= 2:
            back.append(labels[i - 2])
        if back:
            bridges[label] = back
    return Scenario(name, _spec(states, transitions, "s0"), steps, bridges=bridges)


def scenario_linear_taps_3():
    return _linear_tap_chain("linear_taps_3", ["Alpha", "Bravo", "Charlie"])


def scenario_linear_taps_5():
    return _linear_tap_chain(
        "linear_taps_5",
        ["Open menu", "Settings", "Advanced", "Diagnostics", "Self test"])


def scenario_with_input():
    s0 = stacked("Create note", [lambda y: edit_text("Title", y, rid="app:id/title"),
                                 lambda y: button("Save", y)])
    s1 = stacked("Create note", [lambda y: edit_text("Hello", y, rid="app:id/title"),
                                 lambda y: button("Save", y)])
    spec = _spec(
        {"s0": {"tree": s0}, "s1": {"tree": s1}},
        [{"from": "s0", "action": "input", "id": 2, "to": "s1"},
         _tap("s1", 3, CRASH_STATE)],
        "s0")
    return Scenario("with_input", spec,
                    ['[Input] ["Title"] ["Hello"]', '[Tap] ["Save"]'])


def scenario_with_scroll():
    s0 = stacked("Feed top", [])
    s1 = stacked("Feed bottom", [lambda y: button("Load more", y)])
    spec = _spec(
        {"s0": {"tree": s0}, "s1": {"tree": s1}},
        [{"from": "s0", "action": "scroll", "direction": "down", "to": "s1"},
         _tap("s1", 2, CRASH_STATE)],
        "s0")
    return Scenario("with_scroll", spec, ["[Scroll] [down]", '[Tap] ["Load more"]'])


def scenario_with_longtap():
    s0 = stacked("Drafts", [lambda y: button("Old draft", y)])
    s1 = stacked("Draft actions", [lambda y: button("Delete forever", y)])
    spec = _spec(
        {"s0": {"tree": s0}, "s1": {"tree": s1}},
        [{"from": "s0", "action": "long-tap", "id": 2, "to": "s1"},
         _tap("s1", 2, CRASH_STATE)],
        "s0")
    return Scenario("with_longtap", spec,
                    ['[Long-tap] ["Old draft"]', '[Tap] ["Delete forever"]'])


def scenario_with_doubletap():
    s0 = stacked("Gallery", [lambda y: button("Open viewer", y)])
    s1 = stacked("Viewer", [lambda y: button("Chart", y)])
    spec = _spec(
        {"s0": {"tree": s0}, "s1": {"tree": s1}},
        [_tap("s0", 2, "s1"),
         {"from": "s1", "action": "double-tap", "id": 2, "to": CRASH_STATE}],
        "s0")
    return Scenario("with_doubletap", spec,
                    ['[Tap] ["Open viewer"]', '[Double-tap] ["Chart"]'])


def scenario_deep_tree():
    tree = screen_tree([
        {"class": "android.widget.LinearLayout", "resource_id": "app:id/toolbar",
         "bounds": [0, 0, 1080, 160], "children": [text_view("Files", 40)]},
        {"class": "android.widget.LinearLayout", "resource_id": "app:id/content",
         "bounds": [0, 160, 1080, 1920], "children": [
             {"class": "android.widget.LinearLayout", "resource_id": "app:id/row",
              "bounds": [0, 200, 1080, 400], "children": [
                  {"class": "android.widget.Button", "text": "Readme",
                   "bounds": [40, 220, 520, 380]},
                  {"class": "android.widget.Button", "text": "Manifest",
                   "bounds": [560, 220, 1040, 380]},
              ]},
         ]},
    ])
    spec = _spec({"s0": {"tree": tree}}, [_tap("s0", 6, CRASH_STATE)], "s0")
    return Scenario("deep_tree", spec, ['[Tap] ["Manifest"]'])


def _branch_states():
    s0 = stacked("Wizard", [lambda y: button("Continue", y),
                            lambda y: button("Skip setup", y)])
    s1 = stacked("Last page", [lambda y: button("Finish", y)])
    dead = stacked("Nothing here", [])
    return s0, s1, dead


def scenario_two_branch():
    s0, s1, dead = _branch_states()
    spec = _spec(
        {"s0": {"tree": s0}, "s1": {"tree": s1}, "dead": {"tree": dead}},
        [_tap("s0", 2, "s1"), _tap("s0", 3, "dead"), _tap("s1", 2, CRASH_STATE),
         {"from": "dead", "action": "back", "to": "s0"}],
        "s0")
    return Scenario("two_branch", spec, ['[Tap] ["Continue"]', '[Tap] ["Finish"]'],
                    decoys={"Continue": [3]})


def scenario_no_back_decoy():
    # same trap as two_branch, but the dead end ignores the back key, so
    # restoring the choice point must restart and replay the prefix
    s0, s1, dead = _branch_states()
    spec = _spec(
        {"s0": {"tree": s0}, "s1": {"tree": s1}, "dead": {"tree": dead}},
        [_tap("s0", 2, "s1"), _tap("s0", 3, "dead"), _tap("s1", 2, CRASH_STATE)],
        "s0")
    return Scenario("no_back_decoy", spec, ['[Tap] ["Continue"]', '[Tap] ["Finish"]'],
                    decoys={"Continue": [3]})


def scenario_mixed_all():
    m0 = stacked("Connection setup", [lambda y: edit_text("Server", y, rid="app:id/server"),
                                      lambda y: button("Connect", y)])
    m1 = stacked("Connection setup", [lambda y: edit_text("demo.local", y, rid="app:id/server"),
                                      lambda y: button("Connect", y)])
    m2 = stacked("Connected", [])
    m3 = stacked("History", [lambda y: button("Session log", y)])
    m4 = stacked("Log detail", [lambda y: button("Export", y)])
    spec = _spec(
        {"m0": {"tree": m0}, "m1": {"tree": m1}, "m2": {"tree": m2},
         "m3": {"tree": m3}, "m4": {"tree": m4}},
        [{"from": "m0", "action": "input", "id": 2, "to": "m1"},
         _tap("m1", 3, "m2"),
         {"from": "m2", "action": "scroll", "direction": "down", "to": "m3"},
         {"from": "m3", "action": "long-tap", "id": 2, "to": "m4"},
         {"from": "m4", "action": "double-tap", "id": 2, "to": CRASH_STATE}],
        "m0")
    return Scenario("mixed_all", spec, [
        '[Input] ["Server"] ["demo.local"]',
        '[Tap] ["Connect"]',
        "[Scroll] [down]",
        '[Long-tap] ["Session log"]',
        '[Double-tap] ["Export"]',
    ])


def scenario_unicode_texts():
    s0 = stacked("Café menü", [lambda y: button("Überprüfung starten", y)])
    s1 = stacked("设置", [lambda y: button("崩溃按钮", y)])
    spec = _spec(
        {"s0": {"tree": s0}, "s1": {"tree": s1}},
        [_tap("s0", 2, "s1"), _tap("s1", 2, CRASH_STATE)],
        "s0")
    return Scenario("unicode_texts", spec,
                    ['[Tap] ["Überprüfung starten"]',
                     '[Tap] ["崩溃按钮"]'])


SCENARIO_BUILDERS = [
    scenario_single_step,
    scenario_linear_taps_3,
    scenario_linear_taps_5,
    scenario_with_input,
    scenario_with_scroll,
    scenario_with_longtap,
    scenario_with_doubletap,
    scenario_deep_tree,
    scenario_two_branch,
    scenario_no_back_decoy,
    scenario_mixed_all,
    scenario_unicode_texts,
]


def all_scenarios():
    return [build() for build in SCENARIO_BUILDERS]


# ------------------------------------------------- independent walker

def _dict_preorder(tree):
    out, stack = [], [tree]
    while stack:
        node = stack.pop()
        out.append(node)
        stack.extend(reversed(node.get("children", [])))
    return out


def find_id_by_text(tree, text):
    for i, node in enumerate(_dict_preorder(tree)):
        if node.get("text") == text:
            return i
    raise AssertionError(f"component {text!r} not present in tree")


def walk_steps(spec, steps):
    """Execute steps directly against the app spec's transition table.

    This is a from-scratch interpretation of scenario semantics with no
    device, encoder, or model in the loop; it pins down what each
    scenario's step list is supposed to do.
    """
    transitions = {}
    for t in spec["transitions"]:
        kind = t["action"].replace("-", "_")
        if kind == "scroll":
            subject = t["direction"]
        elif kind == "back":
            subject = None
        else:
            subject = t["id"]
        transitions[(t["from"], kind, subject)] = t["to"]
    kind_for = {ActionType.TAP: "tap", ActionType.DOUBLE_TAP: "double_tap",
                ActionType.LONG_TAP: "long_tap"}
    state = spec["initial"]
    for step in steps:
        tree = spec["states"][state]["tree"]
        if step.action is ActionType.SCROLL:
            key = (state, "scroll", step.direction.value)
        elif step.action is ActionType.INPUT:
            key = (state, "input", find_id_by_text(tree, step.component))
        else:
            key = (state, kind_for[step.action], find_id_by_text(tree, step.component))
        if key not in transitions:
            raise AssertionError(f"no transition for {key}")
        state = transitions[key]
    return state


# ------------------------------------------------------ oracle backends

def split_guidance_prompt(rendered):
    """The final GUI block and query out of a rendered guidance prompt."""
    qpos = rendered.rfind(_QUERY_MARK)
    if qpos < 0:
        raise AssertionError("prompt has no guidance query")
    query = rendered[qpos:].strip()
    before = rendered[:qpos].rstrip()
    cut = before.rfind("\n\n")
    html = before[cut:].strip() if cut >= 0 else before.strip()
    return html, query


def parse_query(query):
    head, sep, tail = query.partition(", which component")
    if not sep:
        raise AssertionError(f"unrecognized query {query!r}")
    tokens = bracket_tokens(head)
    component = strip_quotes(tokens[1])
    excluded = {int(m) for m in re.findall(r"\[id=(\d+)\]", tail)}
    return component, excluded


_ELEM_RE = re.compile(r'^<(\w+) id=(\d+)((?: [a-z]+="[^"]*")*)>(.*)$')


def parse_elements(html):
    """Flat element records scraped from encoded screen text."""
    elems = []
    for raw in html.splitlines():
        m = _ELEM_RE.match(raw.strip())
        if not m:
            continue
        tag, nid, attrs, rest = m.group(1), int(m.group(2)), m.group(3), m.group(4)
        label = re.match(r"<label>(.*)</label>$", rest)
        if label:
            text = label.group(1)
        else:
            text = re.sub(r"</\w+>$", "", rest)
        cls = re.search(r' class="([^"]*)"', attrs)
        alt = re.search(r' alt="([^"]*)"', attrs)
        elems.append({
            "tag": tag,
            "id": nid,
            "text": html_mod.unescape(text) if text else None,
            "class": cls.group(1) if cls else None,
            "alt": html_mod.unescape(alt.group(1)) if alt else None,
        })
    return elems


def match_component(elems, wanted, excluded):
    """Lowest non-excluded id whose text, label, alt, or class matches."""
    needle = wanted.strip().lower()
    for elem in elems:
        if elem["id"] in excluded:
            continue
        haystack = [elem["text"], elem["alt"], elem["class"]]
        if any(h is not None and h.strip().lower() == needle for h in haystack):
            return elem["id"]
    return None


class GuidanceOracle(LlmClient):
    """Answers guidance queries from the prompt's own GUI block.

    bridges maps a component name to an ordered list of component names
    that, when the target is absent, are worth tapping to look for it.
    """

    def __init__(self, bridges=None, config=None):
        super().__init__(config or LlmConfig(max_tokens=1_000_000))
        self.bridges = {k.strip().lower(): list(v) for k, v in (bridges or {}).items()}
        self.queries = []

    def _complete(self, prompt):
        html, query = split_guidance_prompt(prompt.rendered)
        component, excluded = parse_query(query)
        self.queries.append((component, frozenset(excluded), query))
        return self._answer(component, excluded, parse_elements(html))

    def _answer(self, component, excluded, elems):
        hit = match_component(elems, component, excluded)
        if hit is not None:
            return f"The component is visible, so I operate on [id={hit}] in the screen."
        for via in self.bridges.get(component.strip().lower(), []):
            hop = match_component(elems, via, excluded)
            if hop is not None:
                return f"It is not on this screen; a nearby component may lead there. [MISSING] [id={hop}]"
        return "I cannot locate any suitable component on this screen."


class MisleadingOracle(GuidanceOracle):
    """Gives one scripted wrong id per component before answering honestly."""

    def __init__(self, decoys, bridges=None, config=None):
        super().__init__(bridges=bridges, config=config)
        self.decoys = {k.strip().lower(): deque(v) for k, v in decoys.items()}

    def _answer(self, component, excluded, elems):
        queue = self.decoys.get(component.strip().lower())
        if queue and queue[0] not in excluded:
            return f"[id={queue.popleft()}]"
        return super()._answer(component, excluded, elems)


class AlwaysMissingLlm(LlmClient):
    """Adversarial guidance: every answer is an exploratory nudge."""

    def __init__(self, config=None):
        super().__init__(config or LlmConfig(max_tokens=1_000_000))

    def _complete(self, prompt):
        return "[MISSING] [id=0]"


class ScriptedLlm(LlmClient):
    """Fixed answers in order, for tests that need exact control."""

    def __init__(self, answers, config=None):
        super().__init__(config or LlmConfig(max_tokens=1_000_000))
        self.answers = deque(answers)
        self.prompts = []

    def _complete(self, prompt):
        self.prompts.append(prompt)
        if not self.answers:
            raise AssertionError("scripted llm ran out of answers")
        return self.answers.popleft()


def guided_components(steps):
    return [s.component for s in steps if s.component is not None]


# ---------------------------------------------------- random view trees

from bugreplay.gui import Bounds, ViewNode  # noqa: E402

CLASS_POOL = [
    "android.widget.TextView",
    "android.widget.Button",
    "android.widget.ImageButton",
    "android.widget.ImageView",
    "android.widget.EditText",
    "android.widget.CheckBox",
    "android.widget.RadioButton",
    "android.widget.Switch",
    "android.widget.LinearLayout",
    "android.widget.FrameLayout",
    "android.widget.RelativeLayout",
    "android.widget.ScrollView",
    "android.view.View",
    "androidx.appcompat.widget.AppCompatButton",
    "com.example.custom.FancyWidget",
    "Button",
    "button",
]

TEXT_POOL = [
    None, None, None, "", "OK", "Send  now", "a & b", "<b>bold</b>",
    'He said "hi"', "line\nbreak", "tab\tsep", "Überprüfung",
    "崩溃", "   padded   ", "semi;colon", "trailing space ",
]

DESC_POOL = [None, None, None, "icon", "user avatar", "back & forth", 'the "main" one']

RID_POOL = [
    None, None, "com.app:id/item", "com.app:id/list_row", "plain_id",
    "com.app:id/a/b", "android:id/content",
]


def random_bounds(rng):
    left = rng.randrange(0, 1000)
    top = rng.randrange(0, 1800)
    return Bounds(left, top, left + rng.randrange(0, 500), top + rng.randrange(0, 300))


def random_view_tree(rng, max_nodes=200):
    budget = [rng.randint(1, max_nodes)]

    def build(depth):
        budget[0] -= 1
        node = ViewNode(
            class_name=rng.choice(CLASS_POOL),
            resource_id=rng.choice(RID_POOL),
            text=rng.choice(TEXT_POOL),
            content_desc=rng.choice(DESC_POOL),
            bounds=random_bounds(rng),
        )
        while budget[0] > 0 and depth < 10 and rng.random() < 0.6:
            node.children.append(build(depth + 1))
        return node

    return build(0)
