#!/usr/bin/env python3
# Copyright 2026 The CLEO Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates presets/*.json from the compact hierarchy and task tables below.

Split maps are derived: the parent of a class introduced at task t is its
nearest ontology ancestor introduced before t (background otherwise). A split
is exhaustive when no leaf under the parent is left uncovered after task t.

    python3 tools/make_presets.py presets/
"""

import json
import os
import sys

BG = "background"


def tree(spec):
    """Flattens a nested {name: children} dict into [(name, parent)]."""
    out = []

    def walk(node, parent):
        if isinstance(node, dict):
            for name, kids in node.items():
                out.append((name, parent))
                walk(kids, name)
        else:
            for name in node:
                out.append((name, parent))

    walk(spec, None)
    return out


CITYSCAPES = tree({
    "flat": ["road", "sidewalk"],
    "construction": ["building", "wall", "fence"],
    "object": ["pole", "traffic light", "traffic sign"],
    "nature": ["vegetation", "terrain"],
    "sky": [],
    "human": ["person", "rider"],
    "vehicle": ["car", "truck", "bus", "train", "motorcycle", "bicycle"],
})


def pascal(table_name="dining table"):
    return tree({
        "animals": {
            "domestic": ["cat", "dog"],
            "farmyard": ["cow", "horse", "sheep"],
            "bird": [],
        },
        "household": {
            "furniture": ["chair", "sofa", table_name],
            "bottle": [],
            "tv/monitor": [],
            "plant": [],
        },
        "person": [],
        "vehicle": {
            "4-wheeler": ["car", "bus"],
            "2-wheeler": ["bicycle", "motorbike"],
            "aeroplane": [],
            "boat": [],
            "train": [],
        },
    })


MV_TASK0 = [
    "bird", "ground animal", "curb", "fence", "guard rail", "barrier", "wall",
    "bike lane", "crosswalk - plain", "curb cut", "parking", "pedestrian area",
    "rail track", "road", "service lane", "sidewalk", "bridge", "building",
    "tunnel", "person", "bicyclist", "motorcyclist", "other rider",
    "lane marking - crosswalk", "lane marking - general", "mountain", "sand",
    "sky", "snow", "terrain", "vegetation", "water", "banner", "bench",
    "bike rack", "billboard", "catch basin", "cctv camera", "fire hydrant",
    "junction box", "mailbox", "manhole", "phone booth", "pothole",
    "street light", "pole", "traffic sign frame", "utility pole",
    "traffic light", "traffic sign (back)", "traffic sign (front)",
    "trash can", "bicycle", "boat", "bus", "car", "caravan", "motorcycle",
    "on rails", "other vehicle", "trailer", "truck", "wheeled slow",
    "car mount", "ego vehicle",
]

# One parent per evolutionary step, in step order.
MV_STEPS = [
    ("barrier", ["concrete block", "road median", "road side",
                 "lane separator"]),
    ("lane marking - crosswalk", ["lane marking (only) - crosswalk"]),
    ("parking", ["parking aisle"]),
    ("road", ["road shoulder"]),
    ("traffic sign (front)", ["temporary barrier",
                              "traffic sign - direction (front)",
                              "traffic sign - parking",
                              "traffic sign - temporary (front)"]),
    ("traffic sign (back)", ["traffic sign - direction (back)",
                             "traffic sign - temporary (back)"]),
    (BG, ["ambiguous barrier", "driveway", "traffic island", "garage",
          "person group", "parking meter", "pole group", "traffic cone",
          "traffic sign - ambiguous", "vehicle group", "water valve",
          "dynamic", "ground", "static"]),
    ("billboard", ["signage - ambiguous", "signage - back",
                   "signage - information", "signage - other",
                   "signage - store"]),
    ("lane marking - general", [
        "lane marking - straight line", "lane marking - zigzag line",
        "lane marking - ambiguous", "lane marking - arrow (left)",
        "lane marking - arrow (other)", "lane marking - arrow (right)",
        "lane marking - arrow (split left or straight)",
        "lane marking - arrow (split right or straight)",
        "lane marking - arrow (straight)", "lane marking - give way (row)",
        "lane marking - give way (single)",
        "lane marking - hatched (chevron)",
        "lane marking - hatched (diagonal)", "lane marking - other",
        "lane marking - stop line", "lane marking - symbol (bicycle)",
        "lane marking - symbol (other)", "lane marking - text",
        "lane marking (only) - dashed line", "lane marking (only) - other",
        "lane marking (only) - test"]),
    ("traffic light", ["traffic light - pedestrians",
                       "traffic light - general (upright)",
                       "traffic light - general (horizontal)",
                       "traffic light - cyclists", "traffic light - other"]),
]

# Content of each evolving parent that no step introduces.
MV_REMAINDER = {
    "barrier": "barrier (remainder)",
    "lane marking - crosswalk": "lane marking - crosswalk (remainder)",
    "parking": "parking (remainder)",
    "road": "road (remainder)",
    "traffic sign (front)": "traffic sign (front) (remainder)",
    "traffic sign (back)": "traffic sign (back) (remainder)",
    "billboard": "signage - advertisement",
    "lane marking - general": "lane marking - dashed line",
    "traffic light": "traffic light - general (single)",
}

# Single-step ordering of the new classes.
MV_EX1_TASK1 = [
    "ambiguous barrier", "concrete block", "driveway", "dynamic", "garage",
    "ground", "lane marking (only) - crosswalk",
    "lane marking (only) - dashed line", "lane marking (only) - other",
    "lane marking (only) - test", "lane marking - ambiguous",
    "lane marking - arrow (left)", "lane marking - arrow (other)",
    "lane marking - arrow (right)",
    "lane marking - arrow (split left or straight)",
    "lane marking - arrow (split right or straight)",
    "lane marking - arrow (straight)", "lane marking - give way (row)",
    "lane marking - give way (single)", "lane marking - hatched (chevron)",
    "lane marking - hatched (diagonal)", "lane marking - other",
    "lane marking - stop line", "lane marking - straight line",
    "lane marking - symbol (bicycle)", "lane marking - symbol (other)",
    "lane marking - text", "lane marking - zigzag line", "lane separator",
    "parking aisle", "parking meter", "person group", "pole group",
    "road median", "road shoulder", "road side", "signage - ambiguous",
    "signage - back", "signage - information", "signage - other",
    "signage - store", "static", "temporary barrier", "traffic cone",
    "traffic island", "traffic light - cyclists",
    "traffic light - general (horizontal)",
    "traffic light - general (upright)", "traffic light - other",
    "traffic light - pedestrians", "traffic sign - ambiguous",
    "traffic sign - direction (back)", "traffic sign - direction (front)",
    "traffic sign - parking", "traffic sign - temporary (back)",
    "traffic sign - temporary (front)", "vehicle group", "water valve",
]


def mapillary():
    nodes = [(name, None) for name in MV_TASK0]
    for parent, kids in MV_STEPS:
        nodes += [(k, None if parent == BG else parent) for k in kids]
        if parent in MV_REMAINDER:
            nodes.append((MV_REMAINDER[parent], parent))
    # background-children keep parent "background" explicitly
    fixed = []
    bg_kids = set(dict(MV_STEPS)[BG])
    for name, parent in nodes:
        fixed.append((name, BG if name in bg_kids else parent))
    return fixed


def build(nodes, tasks):
    parent = dict(nodes)
    names = [BG] + [n for n, _ in nodes]
    assert len(set(names)) == len(names), "duplicate class names"
    children = {}
    for n, p in nodes:
        children.setdefault(p if p is not None else BG, []).append(n)

    def ancestors(c):
        p = parent.get(c)
        while p is not None and p != BG:
            yield p
            p = parent.get(p)

    def path_below(leaf, top):
        out = [leaf]
        for a in ancestors(leaf):
            if a == top:
                break
            out.append(a)
        return out

    def leaves_under(c):
        kids = children.get(c, [])
        if not kids:
            return [c]
        out = []
        for k in kids:
            out += leaves_under(k)
        return out

    known = set()
    out_tasks = []
    for t, intro in enumerate(tasks):
        assert len(set(intro)) == len(intro), f"task {t} repeats a class"
        for c in intro:
            assert c in parent, f"unknown class {c!r}"
            assert c not in known, f"{c!r} introduced twice"
        if t == 0:
            splits = [{"parent": BG, "children": list(intro),
                       "exhaustive": False}]
        else:
            order, groups = [], {}
            for c in intro:
                p = next((a for a in ancestors(c) if a in known), BG)
                if p not in groups:
                    order.append(p)
                    groups[p] = []
                groups[p].append(c)
            after = known | set(intro)
            splits = []
            for p in order:
                if p == BG:
                    exhaustive = False
                else:
                    exhaustive = all(any(x in after
                                         for x in path_below(l, p))
                                     for l in leaves_under(p))
                splits.append({"parent": p, "children": groups[p],
                               "exhaustive": exhaustive})
        known |= set(intro)
        out_tasks.append({"t": t, "introduced": list(intro),
                          "splits": splits})

    classes = [{"id": 0, "name": BG, "parent": None}]
    for i, (n, p) in enumerate(nodes, start=1):
        classes.append({"id": i, "name": n, "parent": p})
    return {"classes": classes, "tasks": out_tasks}


CS_T0 = ["flat", "construction", "object", "nature", "sky", "human", "vehicle"]
VOC_T0 = ["animals", "household", "person", "vehicle"]

PRESETS = {
    "cs_ex1": (CITYSCAPES, [
        CS_T0,
        ["road", "building", "pole", "vegetation", "person", "car"],
        ["wall", "traffic light", "truck"],
        ["bus"],
        ["train"],
        ["motorcycle"],
    ]),
    "cs_ex2": (CITYSCAPES, [
        CS_T0,
        ["road"],
        ["building", "wall"],
        ["pole", "traffic light"],
        ["vegetation"],
        ["person"],
        ["car", "truck", "bus", "train", "motorcycle"],
    ]),
    "voc_ex1": (pascal(), [
        VOC_T0,
        ["farmyard", "bird", "bottle", "furniture", "2-wheeler", "aeroplane"],
        ["cow", "horse", "sheep", "chair", "sofa", "dining table", "bicycle",
         "motorbike"],
    ]),
    "voc_ex2": (pascal(), [
        VOC_T0,
        ["bird", "plant", "train"],
        ["sheep", "tv/monitor", "boat"],
        ["horse", "dining table", "aeroplane"],
        ["cow", "sofa", "motorbike"],
        ["dog", "chair", "bicycle"],
    ]),
    "voc_ex3": (pascal("table"), [
        VOC_T0,
        ["dog", "horse", "cow", "sheep", "bird"],
        ["chair", "sofa", "table", "tv/monitor", "plant"],
        ["bus", "bicycle", "motorbike", "aeroplane", "boat", "train"],
    ]),
    "mv_ex1": (mapillary(), [MV_TASK0, MV_EX1_TASK1]),
    "mv_ex2": (mapillary(), [MV_TASK0] + [kids for _, kids in MV_STEPS]),
}


def main(out_dir):
    step_union = sorted(sum((k for _, k in MV_STEPS), []))
    assert step_union == sorted(MV_EX1_TASK1), "MV step tables disagree"
    os.makedirs(out_dir, exist_ok=True)
    for name, (nodes, tasks) in PRESETS.items():
        doc = build(nodes, tasks)
        with open(os.path.join(out_dir, name + ".json"), "w",
                  encoding="utf-8") as f:
            json.dump(doc, f, indent=1, ensure_ascii=False)
            f.write("\n")
        print(f"{name}: {len(doc['classes'])} classes, "
              f"{len(doc['tasks'])} tasks")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "presets")
