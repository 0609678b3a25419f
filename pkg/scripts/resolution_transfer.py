"""Train at one resolution, then evaluate the same weights at finer resolutions."""
import argparse

from mwt.model import ModelConfig, OperatorModel, TrainConfig, evaluate, train
from mwt.pdedata import GenerationConfig, generate_dataset


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--equation", default="burgers")
    p.add_argument("--train-resolution", type=int, default=128)
    p.add_argument("--eval-resolutions", type=int, nargs="+", default=[256, 512, 1024])
    p.add_argument("--n-train", type=int, default=200)
    p.add_argument("--n-test", type=int, default=50)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--basis", default="legendre")
    p.add_argument("--no-shift", action="store_true", help="disable circular-shift augmentation")
    args = p.parse_args()

    finest = max(args.eval_resolutions + [args.train_resolution])
    ds = generate_dataset(GenerationConfig(args.equation, n_samples=args.n_train + args.n_test,
                                           resolution=finest))
    tr, te = ds.split(args.n_train, args.n_test)
    model = OperatorModel(ModelConfig(basis=args.basis, k=4, groups=4, modes=16, head=128))
    s = args.train_resolution
    optim = TrainConfig(epochs=args.epochs, batch_size=10, lr=2e-3, step=80, gamma=0.25,
                        shift_augment=not args.no_shift)
    result = train(model, tr.at_resolution(s), optim, te.at_resolution(s))
    print(f"resolution {s}: {result.history[-1].test_rel_l2:.5f} (training resolution)")
    for r in args.eval_resolutions:
        print(f"resolution {r}: {evaluate(result.model, te.at_resolution(r)):.5f}")


if __name__ == "__main__":
    main()
