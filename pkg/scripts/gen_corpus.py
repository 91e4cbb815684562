"""Regenerate the built-in exemplar corpus data file.

The guidance exemplars' HTML is produced by the real encoder from the
trees below, so the id attributes the reasoning text cites are correct
by construction. Run from the repo root:

    python scripts/gen_corpus.py
"""
from __future__ import annotations

import json
from pathlib import Path

from bugreplay.gui import Bounds, ViewNode, encode_gui

OUT = Path(__file__).resolve().parent.parent / "src" / "bugreplay" / "data" / "default_corpus.json"


def login_screen() -> ViewNode:
    panel = ViewNode(
        "android.widget.LinearLayout",
        resource_id="com.example.mail:id/login_panel",
        bounds=Bounds(0, 0, 1080, 1920),
        children=[
            ViewNode(
                "android.widget.ImageView",
                content_desc="app logo",
                bounds=Bounds(390, 120, 690, 420),
            ),
            ViewNode(
                "android.widget.TextView",
                text="Welcome back",
                bounds=Bounds(60, 480, 1020, 560),
            ),
            ViewNode(
                "android.widget.EditText",
                resource_id="com.example.mail:id/username_field",
                text="Username",
                bounds=Bounds(60, 640, 1020, 760),
            ),
            ViewNode(
                "android.widget.EditText",
                resource_id="com.example.mail:id/password_field",
                text="Password",
                bounds=Bounds(60, 800, 1020, 920),
            ),
            ViewNode(
                "android.widget.Button",
                resource_id="com.example.mail:id/login_btn",
                text="Log in",
                bounds=Bounds(60, 1000, 1020, 1120),
            ),
            ViewNode(
                "android.widget.TextView",
                text="Forgot password?",
                bounds=Bounds(60, 1180, 1020, 1240),
            ),
        ],
    )
    return ViewNode(
        "android.widget.FrameLayout",
        bounds=Bounds(0, 0, 1080, 1920),
        children=[panel],
    )


def settings_screen() -> ViewNode:
    return ViewNode(
        "android.widget.LinearLayout",
        resource_id="com.example.settings:id/settings_list",
        bounds=Bounds(0, 0, 1080, 1920),
        children=[
            ViewNode(
                "android.widget.Button",
                resource_id="com.example.settings:id/display_btn",
                text="display",
                bounds=Bounds(0, 200, 1080, 380),
            ),
            ViewNode(
                "android.widget.Button",
                resource_id="com.example.settings:id/sound_btn",
                text="sound",
                bounds=Bounds(0, 400, 1080, 580),
            ),
            ViewNode(
                "android.widget.Button",
                resource_id="com.example.settings:id/storage_btn",
                text="storage",
                bounds=Bounds(0, 600, 1080, 780),
            ),
            ViewNode(
                "android.widget.Button",
                resource_id="com.example.settings:id/about_btn",
                text="about",
                bounds=Bounds(0, 800, 1080, 980),
            ),
        ],
    )


BOOKMARK_INPUT = """\
1. Open bookmark
2. Tap "add new bookmark" and create a name with "a"
3. Create another one with name "b"
4. Click "a"
5. Go back to bookmark after changing name "a" to "b"
6. App crash"""

BOOKMARK_COT = """\
1st step is "Open bookmark". The action is "open" and the target component is "bookmark". However, there is no explicit "open" in the Available actions list. Therefore, we select the closest semantic action "tap". Following the Action primitives, the entity of the first step is [Tap] ["bookmark"].

2nd step is "Tap 'add new bookmark' and create a name with 'a'". Due to the conjunction word "and", this step can be separated into two sub-steps, "Tap 'add new bookmark'" and "create a name with 'a'" ...

3rd step is "Create another one with name 'b'". Due to its semantic meaning, this step is meant to repeat the previous steps to add another bookmark with name "b". Therefore, it should actually be the 2nd step ...

4th step is "Click 'a'" ...

5th step is "Go back to bookmark after changing name 'a' to 'b'". Due to the conjunction word "after", this step can be separated into two sub-steps, "Go back to bookmark" and "change name 'a' to 'b'". The conjunction word "after" also alters the temporal order of the sub-steps, that "change name 'a' to 'b'" should be executed first, followed by "go back to bookmark" ...

6th step is "App crash". This step does not have any operations."""

BOOKMARK_OUTPUT = [
    '[Tap] ["bookmark"]',
    '[Tap] ["add new bookmark"]',
    '[Input] ["name"] ["a"]',
    '[Tap] ["add new bookmark"]',
    '[Input] ["name"] ["b"]',
    '[Tap] ["a"]',
    '[Input] ["name"] ["b"]',
    '[Tap] ["back"]',
]

SETTINGS_INPUT = """\
1. Go to settings
2. Scroll down to the bottom
3. Choose "Server address" and enter the address
4. The app freezes"""

SETTINGS_COT = """\
1st step is "Go to settings". The action "go to" is not in the Available actions list, so we select the closest semantic action "tap" on the "settings" component. Following the Action primitives, the entity is [Tap] ["settings"].

2nd step is "Scroll down to the bottom". The action is "scroll" and the direction is "down". Following the Action primitives, the entity is [Scroll] [down].

3rd step is "Choose 'Server address' and enter the address". Due to the conjunction word "and", this step can be separated into two sub-steps, "Choose 'Server address'" and "enter the address". "Choose" maps to the closest semantic action "tap". "Enter" is the action "input" on the "address" field, but the user gives no explicit value, so we use the placeholder value "test". The entities are [Tap] ["Server address"] and [Input] ["address"] ["test"].

4th step is "The app freezes". This step describes the failure and does not have any operations."""

SETTINGS_OUTPUT = [
    '[Tap] ["settings"]',
    '[Scroll] [down]',
    '[Tap] ["Server address"]',
    '[Input] ["address"] ["test"]',
]

PLAYLIST_INPUT = (
    'Open "Playlists" -> double tap the cover of "Morning mix" to preview it '
    '-> long press on it, then tap delete. The app crashes every time.'
)

PLAYLIST_COT = """\
The report writes several operations in one line, separated by "->" and "then". We split it into four sub-steps, "Open 'Playlists'", "double tap the cover of 'Morning mix'", "long press on it", and "tap delete".

1st sub-step is "Open 'Playlists'". There is no explicit "open" in the Available actions list, so we select the closest semantic action "tap". The entity is [Tap] ["Playlists"].

2nd sub-step is "double tap the cover of 'Morning mix'". "Double tap" matches the available action "double-tap", and the target component is the "cover". The entity is [Double-tap] ["cover"].

3rd sub-step is "long press on it". The pronoun "it" refers to "Morning mix", and "long press" matches the available action "long-tap". The entity is [Long-tap] ["Morning mix"].

4th sub-step is "tap delete". The action is "tap" and the target component is "delete". The entity is [Tap] ["delete"].

"The app crashes every time" describes the failure and does not have any operations."""

PLAYLIST_OUTPUT = [
    '[Tap] ["Playlists"]',
    '[Double-tap] ["cover"]',
    '[Long-tap] ["Morning mix"]',
    '[Tap] ["delete"]',
]

LOGIN_COT = (
    'There is no explicit "Sign in" component in the current GUI screen. '
    'However, there is a semantic closest component "Log in" button. '
    'The id attribute of "Log in" component is 6. '
    "So, we could potentially operate on [id=6] in the screen."
)

SETTINGS_GUIDANCE_COT = (
    'There is no explicit and semantic similar "darkmode" component in the '
    "current GUI screen, so it appears a [MISSING] step. "
    'However, "darkmode" could be related to the "display" button in the screen. '
    'The id attribute of "display" component is 1. '
    "So, we could potentially operate on [id=1] component in the screen."
)


def main() -> None:
    login = encode_gui(login_screen())
    settings = encode_gui(settings_screen())
    assert login.index[6].text == "Log in", login.html
    assert settings.index[1].text == "display", settings.html
    corpus = {
        "extraction": [
            {"input": BOOKMARK_INPUT, "cot": BOOKMARK_COT, "output": BOOKMARK_OUTPUT},
            {"input": SETTINGS_INPUT, "cot": SETTINGS_COT, "output": SETTINGS_OUTPUT},
            {"input": PLAYLIST_INPUT, "cot": PLAYLIST_COT, "output": PLAYLIST_OUTPUT},
        ],
        "guidance": [
            {
                "gui_html": login.html,
                "query": '[Tap] ["Sign in"]',
                "cot": LOGIN_COT,
                "output": "[id=6]",
            },
            {
                "gui_html": settings.html,
                "query": '[Tap] ["darkmode"]',
                "cot": SETTINGS_GUIDANCE_COT,
                "output": "[MISSING] [id=1]",
            },
        ],
    }
    OUT.write_text(json.dumps(corpus, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
