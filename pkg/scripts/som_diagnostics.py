"""Train a 1-D SOM on image patches and dump its diagnostics.

Writes the successive-neuron distance graph before and after training and a
subsampled quantisation-error trace as CSV files, and prints a summary.
"""
import argparse
import csv
import time
from pathlib import Path

import numpy as np

from restore import metrics
from restore import somdeblur as sd
from restore.cli import resolve_input


def write_column(path, header, values):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, v in enumerate(values):
            w.writerow([i, f"{v:.6f}"])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--input", default="phantom:texture:128")
    ap.add_argument("--n-neurons", type=int, default=256)
    ap.add_argument("--total-steps", type=int)
    ap.add_argument("--scan", default="ordered", choices=("ordered", "random"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--outdir", default="out/som")
    args = ap.parse_args(argv)

    img = resolve_input(args.input)
    cfg = sd.SomConfig(n_neurons=args.n_neurons, total_steps=args.total_steps,
                       scan=args.scan, seed=args.seed)
    before = sd.init_map(img, cfg)
    t0 = time.perf_counter()
    m = sd.calibrate(sd.som_train(img, cfg, initial=before))
    elapsed = time.perf_counter() - t0

    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    write_column(out / "distance_before.csv", ["neuron", "distance"], sd.distance_graph(before))
    write_column(out / "distance_after.csv", ["neuron", "distance"], sd.distance_graph(m))
    trace = m.quant_error_trace
    stride = max(1, len(trace) // 1000)
    write_column(out / "quant_error.csv", ["step", "e_quant"], trace[::stride])
    sd.save_map(m, out / "map.sommap")

    recon = sd.som_reconstruct(img, m)
    print(f"steps            {cfg.total_steps} ({elapsed:.2f} s)")
    print(f"E_quant          {trace[0]:.3f} -> {trace[-1]:.3f}")
    print(f"max distance     {sd.max_successive_distance(before):.3f} -> {sd.max_successive_distance(m):.3f}")
    print(f"edge neurons     {sum(label == 'edge' for label in m.labels)} / {m.n}")
    print(f"recon PSNR       {metrics.psnr(img, recon):.3f} dB")
    print(f"mean ||w||       {np.mean(sd.distance_graph(m)):.3f}")


if __name__ == "__main__":
    main()
