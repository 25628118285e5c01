from collections import defaultdict


def collisions(edges, colors):
    """Pairs of edge indices sharing an endpoint and a color (None means uncolored)."""
    at = defaultdict(dict)
    bad = []
    for i, ((u, v), c) in enumerate(zip(edges, colors)):
        if c is None:
            continue
        for x in (u, v):
            j = at[x].get(c)
            if j is not None:
                bad.append((j, i))
            else:
                at[x][c] = i
    return bad


# criterion number -> (title, passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}

CRITERIA = {
    1: "properness over 200 seeded runs",
    2: "distinct colors within the closed-form budget",
    3: "colored fractions of the randomized schemes",
    4: "marked-set space and palette counters",
    5: "expander degree and Hasse derivative oracles",
    6: "online matching at q = 65537",
    7: "byte-identical double runs",
    8: "recursion depth",
    9: "multigraph pairing and bipartization",
}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title in CRITERIA.items():
        if number in ACCEPTANCE:
            passed, detail = ACCEPTANCE[number]
            status = "PASS" if passed else "FAIL"
        else:
            status, detail = "NOT RUN", ""
        terminalreporter.write_line(f"criterion {number} [{status}] {title}" + (f" ({detail})" if detail else ""))
