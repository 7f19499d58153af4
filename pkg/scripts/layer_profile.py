#!/usr/bin/env python3
"""Per-task layer responsiveness profiles on the seeded toy model.

Prints raw and normalized scores per layer for the insert, swap, and
delete edit tasks, plus the top-k selection each profile implies. With
untrained weights the profiles carry no semantic zone structure; the
point is the pipeline, not the pattern.
"""

from kvflow.config import config_from_dict, resolve_k
from kvflow.dit import init_weights
from kvflow.probe import guidance_responsiveness, select_vital_layers
from kvflow.workbench import build_probe_set

BASE = {
    "seed": 42,
    "model": {"layers": 8, "d_model": 64, "heads": 4},
    "video": {"frames": 4, "height": 8, "width": 8, "channels": 4},
    "policy": {"k": 4},
    "probe": {"items": 6, "probe_t": 1.0},
}


def main():
    for task in ("insert", "swap", "delete"):
        cfg = config_from_dict(dict(BASE, edit={"task": task, "region": [2, 2, 3, 3], "prompt_seed": 101}))
        weights = init_weights(cfg.model.to_dit_config(cfg.video), cfg.seed)
        profile = guidance_responsiveness(weights, build_probe_set(cfg))
        k = resolve_k(cfg.policy, cfg.model.layers)
        selected = select_vital_layers(profile, k)
        print(f"--- task: {task} (top-{k}: {list(selected)}) ---")
        print(f"{'layer':<6} {'raw':<12} normalized")
        for l in range(profile.num_layers):
            mark = " *" if l in selected else ""
            print(f"{l:<6} {profile.raw[l]:<12.6e} {profile.normalized[l]:.4f}{mark}")
        print()


if __name__ == "__main__":
    main()
