"""Regenerates the frozen digit-classifier fixtures under fixtures/digits.

Uses the 8x8 handwritten digits set bundled with scikit-learn. Networks are
bias-free and every layer's weights are rescaled so max |w| < 1, which keeps
them representable in the [-1, 1) weight format used by the explorer.

    python3 scripts/train_digits_fixtures.py
"""
import os

import numpy as np
import torch
import torch.nn as nn
from sklearn.datasets import load_digits

OUT = os.path.join(os.path.dirname(__file__), "..", "fixtures", "digits")
EVAL_SIZE = 500

torch.manual_seed(7)
np.random.seed(7)

digits = load_digits()
x = digits.images.astype(np.float32) / 16.0
y = digits.target.astype(np.int64)
perm = np.random.permutation(len(x))
x, y = x[perm], y[perm]
x_eval, y_eval = x[:EVAL_SIZE], y[:EVAL_SIZE]
x_train, y_train = x[EVAL_SIZE:], y[EVAL_SIZE:]


def mlp():
    return nn.Sequential(
        nn.Flatten(),
        nn.Linear(64, 32, bias=False), nn.ReLU(),
        nn.Linear(32, 16, bias=False), nn.ReLU(),
        nn.Linear(16, 10, bias=False),
    )


def cnn():
    return nn.Sequential(
        nn.Conv2d(1, 8, 3, padding=1, bias=False), nn.ReLU(), nn.MaxPool2d(2),
        nn.Conv2d(8, 16, 3, padding=1, bias=False), nn.ReLU(), nn.MaxPool2d(2),
        nn.Flatten(),
        # torch flattens (c, y, x); the fixture layout is (y, x, c), permuted on export
        nn.Linear(64, 10, bias=False),
    )


def train(model, epochs=60):
    xt = torch.tensor(x_train).unsqueeze(1)
    yt = torch.tensor(y_train)
    opt = torch.optim.Adam(model.parameters(), lr=0.01)
    for _ in range(epochs):
        idx = torch.randperm(len(xt))
        for i in range(0, len(xt), 64):
            b = idx[i:i + 64]
            opt.zero_grad()
            loss = nn.functional.cross_entropy(model(xt[b]), yt[b])
            loss.backward()
            opt.step()
    with torch.no_grad():
        acc = (model(torch.tensor(x_eval).unsqueeze(1)).argmax(1).numpy() == y_eval).mean()
    return acc


def fmt(v):
    return " ".join("%.6f" % float(a) for a in v)


def export(name, layers):
    with open(os.path.join(OUT, name + ".weights"), "w") as f:
        f.write("# tartan-weights v1\n")
        f.write("# frozen weights produced by scripts/train_digits_fixtures.py\n")
        for lname, w in layers:
            w = w / (np.abs(w).max() * 1.0001)
            f.write("layer %s %d\n" % (lname, w.size))
            flat = w.reshape(-1)
            for i in range(0, len(flat), 16):
                f.write(fmt(flat[i:i + 16]) + "\n")


m = mlp()
print("mlp eval accuracy", train(m))
ws = [l.weight.detach().numpy() for l in m if isinstance(l, nn.Linear)]
export("mlp", [("fc1", ws[0]), ("fc2", ws[1]), ("fc3", ws[2])])

c = cnn()
print("cnn eval accuracy", train(c))
convs = [l.weight.detach().numpy() for l in c if isinstance(l, nn.Conv2d)]
fcw = [l.weight.detach().numpy() for l in c if isinstance(l, nn.Linear)][0]
# conv weights (f, c, ky, kx) -> (f, ky, kx, c)
convs = [w.transpose(0, 2, 3, 1) for w in convs]
# fc input order (c, y, x) -> (y, x, c)
fcw = fcw.reshape(10, 16, 2, 2).transpose(0, 2, 3, 1).reshape(10, 64)
export("cnn", [("conv1", convs[0]), ("conv2", convs[1]), ("fc", fcw)])

with open(os.path.join(OUT, "eval.set"), "w") as f:
    f.write("# tartan-evalset v1\n")
    f.write("# %d samples of the scikit-learn 8x8 digits set, pixel/16\n" % EVAL_SIZE)
    f.write("shape = 8 8 1\n")
    f.write("classes = 10\n")
    for xi, yi in zip(x_eval, y_eval):
        f.write("%d %s\n" % (yi, " ".join("%g" % v for v in xi.reshape(-1))))
