"""Turn a UIAutomator hierarchy dump into model-ready HTML.

The encoder assigns every view its preorder position as a numeric id, so
an id cited in a model answer maps straight back to the original node.
Run from the repo root after an editable install:

    python3 demos/encode_screen.py
"""
from pathlib import Path

from bugreplay.gui import encode_gui, parse_dump, resolve_component, screen_digest

DUMP = Path(__file__).parent / "data" / "login_dump.xml"


def main():
    root = parse_dump(DUMP.read_text(encoding="utf-8"))
    encoded = encode_gui(root)

    print("Screen encoding:")
    print(encoded.html)
    print()
    print(f"digest {screen_digest(encoded.html)} identifies this exact screen")
    print()

    # ids are stable references back into the hierarchy
    node = resolve_component(encoded, 6)
    cx, cy = node.bounds.center()
    print(f"id=6 resolves to a {node.class_name.rsplit('.', 1)[-1]} "
          f"with text {node.text!r}; a tap would land at ({cx}, {cy})")
    print()

    # oversized screens fall back to a compact form that drops layout-only
    # containers; surviving ids still resolve to the original nodes
    compact = encode_gui(root, elide_wrappers=True)
    print("Compact encoding (wrapper containers elided):")
    print(compact.html)


if __name__ == "__main__":
    main()
