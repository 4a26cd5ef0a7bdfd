"""Host-side embedding: isolated states, a host builtin, suspend and resume."""

import io

from ringlet import LanguageState, Status

ASK = """
put "Name: " get name
put "Age: " get age
? "Hello " + name + ", next year you will be " + (1 + age)
"""


def isolated_states():
    a, b = LanguageState(output=io.StringIO()), LanguageState(output=io.StringIO())
    a.run_source("x = 1")
    b.run_source("x = 2")
    print("a.x =", a.get_global("x"), " b.x =", b.get_global("x"))
    a.destroy()
    b.destroy()


def host_builtin():
    state = LanguageState()
    state.register_builtin("hypot", lambda st, x, y: (x * x + y * y) ** 0.5)
    state.run_source("? hypot(3, 4)")
    state.destroy()


def scripted_console(answers):
    state = LanguageState()
    # each get hands control back to the host instead of reading stdin
    state.register_builtin("get", lambda st, name: st.suspend(name))
    status = state.run_source(ASK)
    while status is Status.Suspended:
        name = state.suspend_request["awaiting_variable"]
        print(f"<{answers[name]}>")
        status = state.resume({name: answers[name]})
    print("history:", " -> ".join(s.value for s in state.history))
    state.destroy()


if __name__ == "__main__":
    isolated_states()
    host_builtin()
    scripted_console({"name": "Mona", "age": "41"})
