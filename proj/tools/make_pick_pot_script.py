#!/usr/bin/env python3
"""Writes the scripted keyboard session for the pick_pot task (20 Hz ticks)."""
import json
import sys

TICK = 0.05
# (key, start time s, ticks held)
STEPS = [
    ("o", 0.525, 11),   # lower the right hand onto the pot
    ("g", 1.325, 2),    # close gripper
    ("u", 1.625, 15),   # lift
    ("a", 2.625, 58),   # turn left; the last velocity is held for the 0.25 s ttl
    ("o", 6.025, 15),   # lower onto the second table
    ("h", 7.025, 2),    # open gripper
]


def main(path):
    lines = ["# keyboard script for data/tasks/pick_pot.yaml"]
    for key, start, ticks in STEPS:
        for t, pressed in ((start, True), (start + ticks * TICK, False)):
            lines.append(json.dumps({"t": round(t, 6), "device": "kb", "type": "key", "code": key, "pressed": pressed}))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/scripts/pick_pot_keyboard.ndjson")
