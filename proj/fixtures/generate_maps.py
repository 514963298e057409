"""Regenerates the fixture maps under fixtures/maps."""
import json
import math
from pathlib import Path

OUT = Path(__file__).resolve().parent / "maps"
LANE_HALF = 1.75
ROAD_HALF = 3.5
BOX = 10.0
ARM = 80.0


def line(p0, p1, step=2.0):
    n = max(1, math.ceil(math.dist(p0, p1) / step))
    return [[round(p0[0] + (p1[0] - p0[0]) * k / n, 6), round(p0[1] + (p1[1] - p0[1]) * k / n, 6)] for k in range(n + 1)]


def arc(center, radius, a0, a1, step=1.0):
    n = max(2, math.ceil(abs(a1 - a0) * radius / step))
    return [[round(center[0] + radius * math.cos(a0 + (a1 - a0) * k / n), 6),
             round(center[1] + radius * math.sin(a0 + (a1 - a0) * k / n), 6)] for k in range(n + 1)]


def lane(lane_id, points, speed, successors=(), left=None, right=None, junction=False):
    return {"id": lane_id, "points": points, "speed_limit": speed, "successors": list(successors),
            "left_neighbor": left, "right_neighbor": right, "is_junction": junction}


def straight():
    lanes = [lane("L1", line((0, 0), (100, 0), 5), 12.0, ["L2"]),
             lane("L2", line((100, 0), (200, 0), 5), 12.0)]
    area = [[[-5, -ROAD_HALF], [205, -ROAD_HALF], [205, ROAD_HALF], [-5, ROAD_HALF]]]
    return {"lanes": lanes, "drivable_area": area}


def parallel():
    lanes = [lane("A", line((0, 0), (200, 0), 5), 12.0, left="B"),
             lane("B", line((0, 3.5), (200, 3.5), 5), 12.0, right="A")]
    area = [[[-5, -1.75], [205, -1.75], [205, 5.25], [-5, 5.25]]]
    return {"lanes": lanes, "drivable_area": area}


def rot(p, k):
    """Rotates a point by k quarter turns counter-clockwise."""
    x, y = p
    for _ in range(k % 4):
        x, y = -y, x
    return [round(x, 6), round(y, 6)]


def intersection():
    # Right-hand traffic. Arm k is the southern arm rotated k quarter turns;
    # "in" lanes drive toward the centre, "out" lanes away from it.
    arms = ["S", "E", "N", "W"]
    lanes = []
    for k, name in enumerate(arms):
        inc = [rot(p, k) for p in line((LANE_HALF, -BOX - ARM), (LANE_HALF, -BOX), 5)]
        out = [rot(p, k) for p in line((-LANE_HALF, -BOX), (-LANE_HALF, -BOX - ARM), 5)]
        right_to, straight_to, left_to = arms[(k + 1) % 4], arms[(k + 2) % 4], arms[(k + 3) % 4]
        lanes.append(lane(f"{name}_in", inc, 12.0, [f"J_{name}_R", f"J_{name}_S", f"J_{name}_L"]))
        lanes.append(lane(f"{name}_out", out, 12.0))
        # Junction lanes in the southern frame, then rotated.
        straight_pts = line((LANE_HALF, -BOX), (LANE_HALF, BOX), 1)
        right_pts = arc((BOX, -BOX), BOX - LANE_HALF, math.pi, math.pi / 2)
        left_pts = arc((-BOX, -BOX), BOX + LANE_HALF, 0.0, math.pi / 2)
        lanes.append(lane(f"J_{name}_S", [rot(p, k) for p in straight_pts], 10.0, [f"{straight_to}_out"], junction=True))
        lanes.append(lane(f"J_{name}_R", [rot(p, k) for p in right_pts], 6.0, [f"{right_to}_out"], junction=True))
        lanes.append(lane(f"J_{name}_L", [rot(p, k) for p in left_pts], 8.0, [f"{left_to}_out"], junction=True))
    far = BOX + ARM
    return {"lanes": sorted(lanes, key=lambda l: l["id"]), "drivable_area": [cross_polygon(far)]}


def cross_polygon(far):
    pts = []
    for k in range(4):
        for p in ([-ROAD_HALF, -far], [ROAD_HALF, -far], [ROAD_HALF, -BOX], [BOX, -BOX], [BOX, -ROAD_HALF]):
            pts.append(rot(p, k))
    return pts


def dangling():
    lanes = [lane("L1", line((0, 0), (50, 0), 5), 10.0, ["L99"])]
    return {"lanes": lanes, "drivable_area": [[[-5, -3.5], [55, -3.5], [55, 3.5], [-5, 3.5]]]}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, doc in [("straight.json", straight()), ("parallel.json", parallel()),
                      ("intersection.json", intersection()), ("dangling.json", dangling())]:
        (OUT / name).write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()
