ACCEPTANCE = {}


def record(criterion, part, ok, detail=""):
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(ok), detail))


def acceptance_lines():
    lines = []
    for c in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[c]
        ok = all(p[1] for p in parts)
        bad = [f"{p[0]}: {p[2]}" if p[2] else p[0] for p in parts if not p[1]]
        desc = ", ".join(p[0] for p in parts)
        tail = f" [failing: {'; '.join(bad)}]" if bad else ""
        lines.append(f"criterion {c}: {'PASS' if ok else 'FAIL'} ({desc}){tail}")
    return lines


def pytest_terminal_summary(terminalreporter):
    lines = acceptance_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
