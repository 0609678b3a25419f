"""Test error against the number of basis polynomials k on the beam task."""
import argparse
import csv
import sys

from mwt.model import ModelConfig, OperatorModel, TrainConfig, train
from mwt.pdedata import GenerationConfig, generate_dataset


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--ks", type=int, nargs="+", default=[1, 2, 3, 4, 5, 6])
    p.add_argument("--equation", default="beam", choices=["beam", "beam3"])
    p.add_argument("--resolution", type=int, default=256)
    p.add_argument("--n-train", type=int, default=200)
    p.add_argument("--n-test", type=int, default=50)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--groups", type=int, default=4)
    p.add_argument("--modes", type=int, default=16)
    args = p.parse_args()

    ds = generate_dataset(GenerationConfig(args.equation, n_samples=args.n_train + args.n_test,
                                           resolution=args.resolution))
    tr, te = ds.split(args.n_train, args.n_test)
    out = csv.writer(sys.stdout)
    out.writerow(["k", "train_rel_l2", "test_rel_l2"])
    for k in args.ks:
        model = OperatorModel(ModelConfig(k=k, groups=args.groups, modes=args.modes, head=128))
        optim = TrainConfig(epochs=args.epochs, batch_size=10, lr=2e-3, step=80, gamma=0.25,
                            normalize_targets=True)
        last = train(model, tr, optim, te).history[-1]
        out.writerow([k, f"{last.train_rel_l2:.6g}", f"{last.test_rel_l2:.6g}"])
        sys.stdout.flush()


if __name__ == "__main__":
    main()
