"""Regenerate the sample datasets shipped in src/acamsim/data."""

from pathlib import Path

import numpy as np

from acamsim.analysis import DatasetSpec, make_dataset
from acamsim.fewshot import save_embeddings, synth_embeddings
from acamsim.kernel import dump_xy_csv

DATA = Path(__file__).resolve().parents[1] / "src" / "acamsim" / "data"
SIN_SEED = 20240501
EMBED_SEED = 7


def main():
    data = make_dataset(DatasetSpec(), SIN_SEED)
    (DATA / "sin5x_train.csv").write_text(dump_xy_csv(data.train_x, data.train_y))
    # test targets are the noiseless function values
    (DATA / "sin5x_test.csv").write_text(dump_xy_csv(data.test_x, data.test_f))
    save_embeddings(synth_embeddings(20, 10, cluster_std=0.4, seed=EMBED_SEED),
                    DATA / "embeddings.csv")


if __name__ == "__main__":
    main()
