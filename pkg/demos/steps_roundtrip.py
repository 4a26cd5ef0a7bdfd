"""Convert broken source to a steps tree, save it, and generate code back.

The input is missing its ``ok`` and ``next``. The converter closes both
blocks, and the regenerated program runs.
"""

import sys

from ringlet import LanguageState
from ringlet.steps import steps_to_text, text_to_steps, tree_stats
from ringlet.stpfile import dumps, loads

SOURCE = 'for x = 1 to 5 if x = 3 ? "Three" else ? x'


def show(node, depth=0):
    kind = node.step_type.name
    print(f"{'  ' * depth}{node.id:>3} {kind:<18} {node.caption}")
    for child in node.children:
        show(child, depth + 1)


def main(source=SOURCE):
    tree = text_to_steps(source, source_name="demo.ring")
    show(tree.root)
    print("stats:", tree_stats(tree))

    stp = dumps(tree)
    print("\n.stp file:\n" + stp)
    assert loads(stp) == tree

    code = steps_to_text(tree)
    print("generated:\n" + code)
    state = LanguageState()
    state.run_source(code)
    state.destroy()


if __name__ == "__main__":
    main(open(sys.argv[1], encoding="utf-8").read() if len(sys.argv) > 1 else SOURCE)
