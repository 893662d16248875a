"""Generate the operator-scale trial scenario fixture.

36 legitimate cells in 5 radio-isolated clusters (one collector + ring
satellites each), 8 stationary UEs, and a planted eNB position cycling
through 120 distinct PCIs in back-to-back activity windows.
"""

HEADER = """\
# Operator-scale workload: five eNB clusters (36 cells), eight UEs, and a
# planted eNB near cluster 0 cycling through 120 PCIs the operator never
# allocated. Every legitimate neighbor sits one handover hop from its
# collector, so expansion depth 1 yields no false positives.

[scenario]
seed = 9
duration_ms = 100000
tick_ms = 100
capture_margin_db = inf
detection_floor_dbm = -110
"""

CELL = """\

[cell]
uid = {uid}
rat = EUTRA
pci = {pci}
earfcn = 100
mcc = 262
mnc = 01
tac_lac = 500
cell_identity = {pci}
x = {x}
y = {y}
tx_power_dbm = {tx}{extra}
"""

RING6 = [(250, 0), (-250, 0), (0, 250), (0, -250), (180, 180), (-180, -180)]
RING7 = RING6 + [(180, -180)]

UES = [
    (30, 20),
    (-40, 10),
    (6030, 15),
    (5960, -25),
    (12010, 5),
    (18020, -10),
    (24030, 25),
    (23980, 40),
]


def main():
    out = [HEADER]
    for k in range(5):
        cx = 6000 * k
        collector_pci = 50 * k + 1
        ring = RING7 if k == 4 else RING6
        sat_uids = [f"site{k}-s{j + 1}" for j in range(len(ring))]
        out.append(
            CELL.format(
                uid=f"site{k}-c",
                pci=collector_pci,
                x=cx,
                y=0,
                tx=43,
                extra="\nho_neighbors = " + ";".join(sat_uids),
            )
        )
        for j, (dx, dy) in enumerate(ring):
            out.append(
                CELL.format(
                    uid=sat_uids[j],
                    pci=collector_pci + 1 + j,
                    x=cx + dx,
                    y=dy,
                    tx=43,
                    extra=f"\nho_neighbors = site{k}-c",
                )
            )
    for i in range(120):
        out.append(
            CELL.format(
                uid=f"planted-{i:03}",
                pci=300 + i,
                x=60,
                y=60,
                tx=30,
                extra=f"\nfalse = true\nactive = {i * 800}:{(i + 1) * 800}",
            )
        )
    for x, y in UES:
        out.append(f"\n[ue]\nx = {x}\ny = {y}\n")
    out.append(
        """
[measurement]
meas_id = 1
rat = EUTRA
carrier_freq = 100
trigger = periodic
max_report_cells = 8
report_interval_ms = 100
report_amount = inf
"""
    )
    with open("crates/cli/tests/fixtures/trial.scenario", "w") as f:
        f.write("".join(out))


if __name__ == "__main__":
    main()
