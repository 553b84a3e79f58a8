#!/usr/bin/env python3
"""Train the small committed fixture CSNN and export it as fdsnn-model/1 JSON.

This is a fixture generator for the C++ test suite, not a general trainer.
Architecture: conv 8x8/stride 2/pad 1 (10 maps) -> spiking -> avgpool 2x2 ->
linear 360->160 -> spiking -> linear 160->10 -> spiking, no biases. Neurons
follow the charge/fire/reset rule used by the C++ float oracle, with a
sigmoid-derivative surrogate gradient and MSE loss on firing rates.
"""
import argparse
import gzip
import json
import math
import struct

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F


def read_idx(path):
    with gzip.open(path, "rb") as f:
        data = f.read()
    magic = struct.unpack(">I", data[:4])[0]
    if magic == 0x803:
        n, r, c = struct.unpack(">III", data[4:16])
        return np.frombuffer(data[16:], dtype=np.uint8).reshape(n, r, c)
    n = struct.unpack(">I", data[4:8])[0]
    return np.frombuffer(data[8:], dtype=np.uint8)


class SpikeFn(torch.autograd.Function):
    alpha = 1.0

    @staticmethod
    def forward(ctx, x):
        ctx.save_for_backward(x)
        return (x >= 0).to(x.dtype)

    @staticmethod
    def backward(ctx, grad):
        (x,) = ctx.saved_tensors
        a = SpikeFn.alpha
        e = torch.exp(-x / a)
        return grad * e / (a * (1 + e) ** 2)


class Neuron:
    """Charge: H = V + (I - V)/tau (tau=inf: H = V + I). Fire: H >= v_th.
    Reset: 0 on fire or H <= 0, else H."""

    def __init__(self, tau, v_th=1.0):
        self.tau, self.v_th = tau, v_th
        self.v = None

    def reset(self):
        self.v = None

    def __call__(self, i):
        v = torch.zeros_like(i) if self.v is None else self.v
        h = v + i if math.isinf(self.tau) else v + (i - v) / self.tau
        s = SpikeFn.apply(h - self.v_th)
        self.v = F.relu(h) * (1 - s)
        return s


class FakeQuant(torch.autograd.Function):
    @staticmethod
    def forward(ctx, w, scale):
        return torch.sign(w * scale) * torch.floor(torch.abs(w * scale) + 0.5) / scale

    @staticmethod
    def backward(ctx, grad):
        return grad, None


class Csnn(nn.Module):
    def __init__(self, tau):
        super().__init__()
        # Effective integer scales per weight layer (theta/L, theta/(2*4), theta/2); None = float weights.
        self.scales = None
        self.cap = None
        self.penalty = 0.0
        self.conv = nn.Conv2d(1, 10, 8, stride=2, padding=1, bias=False)
        self.fc1 = nn.Linear(360, 160, bias=False)
        self.fc2 = nn.Linear(160, 10, bias=False)
        self.n1, self.n2, self.n3 = Neuron(tau), Neuron(tau), Neuron(tau)

    def forward(self, x, T):
        for n in (self.n1, self.n2, self.n3):
            n.reset()
        out = 0
        stats = [0.0, 0.0, 0.0]
        self.penalty = 0.0
        ws = [self.conv.weight, self.fc1.weight, self.fc2.weight]
        if self.scales is not None:
            ws = [FakeQuant.apply(w, s) for w, s in zip(ws, self.scales)]
        for _ in range(T):
            i1 = F.conv2d(x, ws[0], stride=2, padding=1)
            s1 = self.n1(i1)
            i2 = F.linear(F.avg_pool2d(s1, 2).flatten(1), ws[1])
            s2 = self.n2(i2)
            i3 = F.linear(s2, ws[2])
            if self.cap is not None:
                for i in (i1, i2, i3):
                    self.penalty = self.penalty + F.relu(i.abs() - self.cap).pow(2).mean()
            s3 = self.n3(i3)
            out = out + s3
            for k, i in enumerate((i1, i2, i3)):
                stats[k] = max(stats[k], float(i.detach().abs().max()))
        return out / T, stats


def quantize(x, levels):
    x = x.astype(np.float32) / 255.0
    return np.rint(x * levels) / levels if levels > 0 else x


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--data", default="data/mnist-desk")
    ap.add_argument("--tau", default="inf")
    ap.add_argument("--T", type=int, default=2)
    ap.add_argument("--L", type=int, default=1)
    ap.add_argument("--epochs", type=int, default=20)
    ap.add_argument("--lr", type=float, default=1e-3)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--cap", type=float, default=None, help="soft cap on per-neuron input magnitude |I|")
    ap.add_argument("--cap-weight", type=float, default=1.0)
    ap.add_argument("--qat-theta", type=float, default=None, help="train through weights discretized at this theta")
    ap.add_argument("--qat-from", type=int, default=0, help="epoch at which discretized training starts")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    torch.manual_seed(args.seed)
    np.random.seed(args.seed)
    torch.set_num_threads(1)
    SpikeFn.alpha = args.alpha
    tau = math.inf if args.tau == "inf" else float(args.tau)

    xtr = torch.tensor(quantize(read_idx(f"{args.data}/train-images-idx3-ubyte.gz"), args.L)).unsqueeze(1)
    ytr = torch.tensor(read_idx(f"{args.data}/train-labels-idx1-ubyte.gz").astype(np.int64))
    xte = torch.tensor(quantize(read_idx(f"{args.data}/t10k-images-idx3-ubyte.gz"), args.L)).unsqueeze(1)
    yte = torch.tensor(read_idx(f"{args.data}/t10k-labels-idx1-ubyte.gz").astype(np.int64))

    model = Csnn(tau)
    model.cap = args.cap
    opt = torch.optim.Adam(model.parameters(), lr=args.lr)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, args.epochs)
    for epoch in range(args.epochs):
        if args.qat_theta is not None and epoch >= args.qat_from:
            th = args.qat_theta
            model.scales = [th / args.L, th / 8.0, th / 2.0]
        model.train()
        perm = torch.randperm(len(ytr))
        for b in range(0, len(ytr), 64):
            idx = perm[b:b + 64]
            rate, _ = model(xtr[idx], args.T)
            loss = F.mse_loss(rate, F.one_hot(ytr[idx], 10).float())
            if args.cap is not None:
                loss = loss + args.cap_weight * model.penalty
            opt.zero_grad()
            loss.backward()
            opt.step()
        sched.step()
        model.eval()
        with torch.no_grad():
            scales, model.scales = model.scales, None
            rate, stats = model(xte, args.T)
            acc = (rate.argmax(1) == yte).float().mean().item()
            qacc = float("nan")
            if scales is not None:
                model.scales = scales
                qrate, _ = model(xte, args.T)
                qacc = (qrate.argmax(1) == yte).float().mean().item()
        print(f"epoch {epoch} loss {loss.item():.4f} test_acc {acc:.4f} disc_acc {qacc:.4f} "
              f"max|I| {[round(s, 2) for s in stats]}", flush=True)

    weights = [model.conv.weight.detach().double().flatten().tolist(),
               model.fc1.weight.detach().double().flatten().tolist(),
               model.fc2.weight.detach().double().flatten().tolist()]
    doc = {
        "format": "fdsnn-model/1",
        "input_shape": [1, 28, 28],
        "tau": "inf" if math.isinf(tau) else tau,
        "v_th": 1.0,
        "v_reset": 0.0,
        "T": args.T,
        "L": args.L,
        "arch": [
            {"type": "conv2d", "in_channels": 1, "out_channels": 10, "kernel": 8, "stride": 2, "padding": 1},
            {"type": "spiking"},
            {"type": "avgpool", "window": 2},
            {"type": "linear", "in": 360, "out": 160},
            {"type": "spiking"},
            {"type": "linear", "in": 160, "out": 10},
            {"type": "spiking"},
        ],
        "weights": weights,
        "train_report": {"test_accuracy": acc, "epochs": args.epochs, "seed": args.seed,
                         "surrogate": "sigmoid-derivative", "alpha": args.alpha,
                         "input_cap": args.cap, "cap_weight": args.cap_weight,
                         "qat_theta": args.qat_theta, "qat_from": args.qat_from,
                         "discretized_test_accuracy": qacc},
    }
    with open(args.out, "w") as f:
        json.dump(doc, f, separators=(",", ":"))
    print("wrote", args.out)


if __name__ == "__main__":
    main()
