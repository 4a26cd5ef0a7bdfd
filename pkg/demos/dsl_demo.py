"""Brace hooks turning plain statements into a tiny report language.

Inside ``new Report { ... }`` every bare number is routed to ``braceExprEval``,
the word ``Important`` is read through ``getImportant`` and ``braceEnd``
prints the summary.
"""

from ringlet import LanguageState

PROGRAM = """
new Report {
    100 400 300 600 120
    Important
}

class Report
    values = [] important = 0
    func braceExprEval value
        add(values, value)
    func getImportant
        important = 1
    func braceEnd
        total = 0
        for i = 1 to len(values) total = total + values[i] next
        ? "Sum: " + total
        if important
            ? "Important:"
            for i = 1 to len(values)
                if values[i] > 350 ? values[i] ok
            next
        ok
"""


def main():
    state = LanguageState()
    status = state.run_source(PROGRAM)
    if state.error is not None:
        print(f"{status.value}: {state.error}")
    state.destroy()


if __name__ == "__main__":
    main()
