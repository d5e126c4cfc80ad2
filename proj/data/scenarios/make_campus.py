#!/usr/bin/env python3
"""Writes campus.json: the reference campus scenario.

Buildings block both grids; the lake and lawn only block pedestrians. Cells
are packed row-major, least-significant bit first, then base64 encoded.
"""
import base64
import json
import math
import sys

W = H = 200
REF = {"lat": 39.980, "lon": 116.340, "alt": 0.0}
R = 6371000.0

BUILDINGS = {
    "library": (35, 165, 65, 190),
    "teaching": (100, 70, 140, 100),
    "gym": (60, 90, 90, 120),
}
PEDESTRIAN_ONLY = {
    "lake": (120, 105, 150, 135),
    "lawn": (20, 40, 60, 80),
}


def to_gps(x, y):
    lat = REF["lat"] + math.degrees(y / R)
    lon = REF["lon"] + math.degrees(x / (R * math.cos(math.radians(REF["lat"]))))
    return {"lat": lat, "lon": lon, "alt": 0.0}


def pack(blocks):
    cells = bytearray((W * H + 7) // 8)
    for x0, y0, x1, y1 in blocks:
        for row in range(y0, y1):
            for col in range(x0, x1):
                i = row * W + col
                cells[i // 8] |= 1 << (i % 8)
    return base64.b64encode(bytes(cells)).decode()


def main(out):
    uav_blocks = list(BUILDINGS.values())
    ped_blocks = uav_blocks + list(PEDESTRIAN_ONLY.values())
    doc = {
        "name": "campus",
        "seed": 2025,
        "reference_gps": REF,
        "z_cruise": 5.0,
        "obstacle_height": 30.0,
        "grids": [
            {"kind": "uav_exploration", "origin": [0, 0], "resolution": 1.0,
             "width": W, "height": H, "cells_b64": pack(uav_blocks)},
            {"kind": "pedestrian_guidance", "origin": [0, 0], "resolution": 1.0,
             "width": W, "height": H, "cells_b64": pack(ped_blocks)},
        ],
        "landmarks": [
            {"id": "lm_badminton", "name": "Badminton Court", "gps": to_gps(162.5, 142.5),
             "orientation_tag": "Badminton Court South Entrance",
             "description": "Outdoor badminton court with six lit courts next to the lake.",
             "aliases": ["badminton courts", "court"]},
            {"id": "lm_library", "name": "Library", "gps": to_gps(50.5, 160.5),
             "orientation_tag": "Library South Gate",
             "description": "The main campus library, a five-storey reading hall with a glass facade.",
             "aliases": ["main library"]},
            {"id": "lm_teaching", "name": "Teaching Building", "gps": to_gps(120.5, 104.5),
             "orientation_tag": "Teaching Building North",
             "description": "Teaching Building hosting lecture halls and classrooms.",
             "aliases": ["classroom building"]},
            {"id": "lm_street", "name": "Central Campus Street", "gps": to_gps(130.5, 40.5),
             "orientation_tag": "Central Campus Street East End",
             "description": "The tree-lined central street linking the south gate to the sports area.",
             "aliases": ["campus street", "main street"]},
        ],
        "pedestrians": [
            {"id": "user", "path": [[100.5, 12.5]], "speed": 0.0, "is_user": True},
            {"id": "walker_a", "path": [[80.5, 30.5], [95.5, 30.5], [95.5, 45.5], [80.5, 45.5]],
             "speed": 1.2, "is_user": False},
            {"id": "walker_b", "path": [[150.5, 20.5], [180.5, 20.5]], "speed": 1.0, "is_user": False},
        ],
        "objects": [
            {"id": "obj_library", "class_tag": "building", "landmark_tags": ["library"],
             "center": [50.0, 177.5, 10.0], "size": [30.0, 25.0, 20.0]},
            {"id": "obj_teaching", "class_tag": "building", "landmark_tags": ["teaching building"],
             "center": [120.0, 85.0, 12.0], "size": [40.0, 30.0, 24.0]},
            {"id": "obj_gym", "class_tag": "building", "landmark_tags": ["gym"],
             "center": [75.0, 105.0, 8.0], "size": [30.0, 30.0, 16.0]},
            {"id": "obj_court", "class_tag": "court", "landmark_tags": ["badminton court"],
             "center": [162.5, 155.0, 0.5], "size": [20.0, 12.0, 1.0]},
            {"id": "obj_tree_1", "class_tag": "tree", "landmark_tags": [],
             "center": [110.0, 40.0, 3.0], "size": [2.0, 2.0, 6.0]},
            {"id": "obj_tree_2", "class_tag": "tree", "landmark_tags": [],
             "center": [85.0, 60.0, 3.0], "size": [2.0, 2.0, 6.0]},
            {"id": "obj_tree_3", "class_tag": "tree", "landmark_tags": ["library"],
             "center": [40.0, 150.0, 3.0], "size": [2.0, 2.0, 6.0]},
            {"id": "obj_bench", "class_tag": "bench", "landmark_tags": ["badminton court"],
             "center": [170.0, 140.0, 0.4], "size": [2.0, 0.6, 0.8]},
        ],
        "uav_start": {"position": [100.5, 15.5, 0.0], "yaw": math.pi / 2},
        "camera": {"fx": 100.0, "fy": 100.0, "cx": 80.0, "cy": 60.0, "width": 160, "height": 120,
                   "extrinsic": "forward"},
        "limits": {"v_max": 4.0, "a_max": 2.0},
        "knowledge": [
            {"id": "web_badminton_hours", "kind": "web_info",
             "text": "The badminton court is open from 8am to 10pm; booking at the gym desk.",
             "tags": ["badminton", "court", "hours"]},
            {"id": "web_library_event", "kind": "web_info",
             "text": "The library hosts a rare book exhibition on the ground floor this week.",
             "tags": ["library", "event"]},
            {"id": "web_lake_notice", "kind": "web_info",
             "text": "The lake path is closed to pedestrians; walk around via the teaching building.",
             "tags": ["lake", "route"]},
        ],
    }
    with open(out, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "campus.json")
