"""Regenerate the bundled synthetic airport layout.

The geometry is a schematic of a small island apron: civilian stands on the
south apron, military stands on the north apron, a landside strip in between
holding the handling office, GSE parking and the two cargo drop-off areas.
Edge lengths are Euclidean distances between node positions.

    python scripts/make_layout.py > src/reliefsim/data/layout_default.json
"""

import json
import math
import sys

nodes: dict[str, tuple[float, float, str]] = {
    "5i": (600.0, 0.0, "taxi_entry"),
    "5e": (-180.0, 0.0, "taxi_exit"),
    "oc_office": (100.0, 0.0, "oc_office"),
    "gse_parking": (150.0, 0.0, "gse_parking"),
    "drop_civ": (300.0, -60.0, "drop_off_civilian"),
    "drop_mil": (400.0, 60.0, "drop_off_military"),
    "movcon_post": (420.0, 60.0, "movcon_post"),
    "mil_coord_post": (160.0, 40.0, "mil_coord_post"),
    "tower": (520.0, 0.0, "ground_tower"),
}
edges: list[tuple[str, str]] = []

# the outer stands sit west of the office so that every stand is within 400 m of it
civ_xs = [0, 100, 200, 300, -60, -120]
mil_xs = [100, 200, 300, 0]
xs = sorted(set(civ_xs) | {400, 500})
for x in xs:
    nodes[f"rs{x}"] = (float(x), -90.0, "road")
    nodes[f"rn{x}"] = (float(x), 90.0, "road")
for a, b in zip(xs, xs[1:]):
    edges += [(f"rs{a}", f"rs{b}"), (f"rn{a}", f"rn{b}")]

edges += [
    ("oc_office", "gse_parking"),
    ("oc_office", "rs100"),
    ("oc_office", "rn100"),
    ("gse_parking", "rs200"),
    ("gse_parking", "rn200"),
    ("drop_civ", "rs300"),
    ("drop_mil", "rn400"),
    ("drop_mil", "movcon_post"),
    ("mil_coord_post", "rn200"),
    ("mil_coord_post", "oc_office"),
    ("tower", "movcon_post"),
    ("tower", "rs500"),
]

# taxiways
tx = sorted(set(civ_xs) | {400, 500, 560})
for x in tx:
    nodes[f"ts{x}"] = (float(x), -200.0, "taxi_waypoint")
    nodes[f"tn{x}"] = (float(x), 200.0, "taxi_waypoint")
nodes["tv0"] = (560.0, 0.0, "taxi_waypoint")
south = [f"ts{x}" for x in tx]
north = [f"tn{x}" for x in tx]
for seq in (south, north):
    edges += list(zip(seq, seq[1:]))
edges += [("5i", "tv0"), ("tv0", "ts560"), ("tv0", "tn560"), (south[0], "5e"), (north[0], "5e")]

spots = []
for i, x in enumerate(civ_xs, start=1):
    sid = f"P{i}"
    nodes[sid] = (float(x), -170.0, "parking_civilian")
    edges += [(sid, f"rs{x}"), (sid, f"ts{x}")]
    spots.append((sid, x, "s"))
for i, x in enumerate(mil_xs, start=1):
    sid = f"M{i}"
    nodes[sid] = (float(x), 170.0, "parking_military")
    edges += [(sid, f"rn{x}"), (sid, f"tn{x}")]
    spots.append((sid, x, "n"))


def taxi_in(sid: str, x: int, side: str) -> list[str]:
    lane = [n for n in (south if side == "s" else north) if nodes[n][0] >= x]
    return ["5i", "tv0"] + lane[::-1] + [sid]


def taxi_out(sid: str, x: int, side: str) -> list[str]:
    lane = [n for n in (south if side == "s" else north) if nodes[n][0] <= x]
    return [sid] + lane[::-1] + ["5e"]


routes = []
for sid, x, side in spots:
    routes.append({"from": "5i", "to": sid, "nodes": taxi_in(sid, x, side)})
    routes.append({"from": sid, "to": "5e", "nodes": taxi_out(sid, x, side)})


def length(a: str, b: str) -> float:
    (x1, y1, _), (x2, y2, _) = nodes[a], nodes[b]
    return round(math.hypot(x2 - x1, y2 - y1), 1)


doc = {
    "layout_version": 1,
    "name": "synthetic island apron",
    "nodes": [{"id": k, "x": v[0], "y": v[1], "kind": v[2]} for k, v in nodes.items()],
    "edges": [{"a": a, "b": b, "length": length(a, b)} for a, b in edges],
    "routes": routes,
}
json.dump(doc, sys.stdout, indent=1)
sys.stdout.write("\n")
