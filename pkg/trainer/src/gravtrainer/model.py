"""Volumetric inversion networks.

The plain variant resizes a 2D gravity map, passes it through a small
convolutional input stage with a residual add, lifts it into a cube by a
pointwise convolution whose channels become the depth axis, and runs a
standard 3D U-Net with segmentation and regression heads. An autoencoder
branch reconstructs the resized input map from the bottleneck. The sequence
variant replaces the input stage with a stack of convolutional LSTM cells
over ten maps (kernel sizes 7/5/3, 16 features each) and drops the
autoencoder branch.
"""

from __future__ import annotations

import math

import torch
import torch.nn as nn
import torch.nn.functional as F

from .specs import NetSpec


def conv_block_3d(in_ch: int, out_ch: int) -> nn.Sequential:
    layers = []
    for i in range(2):
        layers += [
            nn.Conv3d(in_ch if i == 0 else out_ch, out_ch, 3, padding=1),
            nn.BatchNorm3d(out_ch),
            nn.ReLU(inplace=True),
        ]
    return nn.Sequential(*layers)


def conv_block_2d(in_ch: int, out_ch: int, k: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(in_ch, out_ch, k, padding=k // 2),
        nn.BatchNorm2d(out_ch),
        nn.ReLU(inplace=True),
    )


class InputStage(nn.Module):
    """Resize the map, run 7/5/3 conv blocks, and add back the resized input.

    The resized input is broadcast-added across the feature channels so the
    lift sees both learned features and the raw map.
    """

    def __init__(self, size: int, filters: int):
        super().__init__()
        self.size = size
        self.out_channels = filters
        self.blocks = nn.Sequential(
            conv_block_2d(1, filters, 7),
            conv_block_2d(filters, filters, 5),
            conv_block_2d(filters, filters, 3),
        )

    def resize(self, maps: torch.Tensor) -> torch.Tensor:
        return F.interpolate(maps, size=(self.size, self.size), mode="bilinear", align_corners=False)

    def forward(self, maps: torch.Tensor) -> torch.Tensor:
        x = self.resize(maps)
        return self.blocks(x) + x


class UNet3D(nn.Module):
    """Symmetric encoder/decoder with skip concatenation."""

    def __init__(self, base: int, depth: int):
        super().__init__()
        chans = [base * 2**i for i in range(depth)]
        self.encoders = nn.ModuleList()
        in_ch = 1
        for c in chans:
            self.encoders.append(conv_block_3d(in_ch, c))
            in_ch = c
        self.pool = nn.MaxPool3d(2)
        self.up = nn.ModuleList()
        self.decoders = nn.ModuleList()
        for c_skip, c_in in zip(chans[-2::-1], chans[:0:-1]):
            self.up.append(nn.ConvTranspose3d(c_in, c_skip, 2, stride=2))
            self.decoders.append(conv_block_3d(2 * c_skip, c_skip))
        self.bottleneck_channels = chans[-1]
        self.out_channels = chans[0]

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        skips = []
        for i, enc in enumerate(self.encoders):
            x = enc(x)
            if i < len(self.encoders) - 1:
                skips.append(x)
                x = self.pool(x)
        bottleneck = x
        for up, dec, skip in zip(self.up, self.decoders, reversed(skips)):
            x = up(x)
            x = dec(torch.cat([x, skip], dim=1))
        return x, bottleneck


class Head(nn.Module):
    def __init__(self, in_ch: int, filters: int, sigmoid: bool):
        super().__init__()
        self.body = conv_block_3d(in_ch, filters)
        self.out = nn.Conv3d(filters, 1, 1)
        self.sigmoid = sigmoid

    def forward(self, x):
        y = self.out(self.body(x))
        return torch.sigmoid(y) if self.sigmoid else y


class MapDecoder(nn.Module):
    """Bottleneck vector -> reshaped 4x4 tile -> upsampled map reconstruction."""

    def __init__(self, bottleneck_channels: int, size: int):
        super().__init__()
        if bottleneck_channels % 16 == 0:
            self.tile_channels = bottleneck_channels // 16
        elif bottleneck_channels % 4 == 0:
            self.tile_channels = bottleneck_channels // 4
        else:
            raise ValueError("bottleneck channels must be divisible by 4")
        self.tile = int(math.isqrt(bottleneck_channels // self.tile_channels))
        n_up = int(math.log2(size / self.tile))
        if self.tile * 2**n_up != size:
            raise ValueError("map size must be a power-of-two multiple of the tile")
        ch = max(16, self.tile_channels)
        layers = [conv_block_2d(self.tile_channels, ch, 3)]
        for _ in range(n_up):
            layers += [nn.ConvTranspose2d(ch, ch, 2, stride=2), conv_block_2d(ch, ch, 3)]
        layers += [nn.Conv2d(ch, 1, 1)]
        self.body = nn.Sequential(*layers)

    def forward(self, bottleneck: torch.Tensor) -> torch.Tensor:
        pooled = F.adaptive_max_pool3d(bottleneck, 1).flatten(1)
        tile = pooled.reshape(-1, self.tile_channels, self.tile, self.tile)
        return self.body(tile)


class VolumeCore(nn.Module):
    """Pointwise lift to a cube plus the U-Net and its heads.

    reg_gain rescales the linear regression output so the optimizer works in
    roughly unit-sized targets regardless of the physical target scale; the
    training loop sets it from the training volumes and it travels with the
    checkpoint.
    """

    def __init__(self, spec: NetSpec, in_channels: int = 1):
        super().__init__()
        r = spec.resize_target
        self.lift = nn.Conv2d(in_channels, r, 1)
        self.unet = UNet3D(spec.base_filters, spec.depth)
        self.seg_head = Head(self.unet.out_channels, spec.base_filters, sigmoid=True)
        self.reg_head = Head(self.unet.out_channels, spec.base_filters, sigmoid=False)
        self.register_buffer("reg_gain", torch.ones(()))
        self.decoder = (
            MapDecoder(self.unet.bottleneck_channels, r) if spec.with_autoencoder else None
        )

    def forward(self, plane: torch.Tensor) -> dict:
        cube = self.lift(plane).unsqueeze(1)  # channels become the z axis
        feats, bottleneck = self.unet(cube)
        out = {"seg": self.seg_head(feats), "reg": self.reg_gain * self.reg_head(feats)}
        if self.decoder is not None:
            out["ae"] = self.decoder(bottleneck)
        return out


class InversionNet(nn.Module):
    """Single-map inversion network (plain and physics variants)."""

    def __init__(self, spec: NetSpec):
        super().__init__()
        self.spec = spec
        self.input_stage = InputStage(spec.resize_target, spec.base_filters)
        self.core = VolumeCore(spec, in_channels=self.input_stage.out_channels)

    def resize_input(self, maps: torch.Tensor) -> torch.Tensor:
        return self.input_stage.resize(maps)

    def forward(self, maps: torch.Tensor) -> dict:
        return self.core(self.input_stage(maps))


class ConvLSTMCell(nn.Module):
    def __init__(self, in_ch: int, hidden: int, kernel: int):
        super().__init__()
        self.hidden = hidden
        self.gates = nn.Conv2d(in_ch + hidden, 4 * hidden, kernel, padding=kernel // 2)

    def forward(self, x, state):
        h, c = state
        i, f, o, g = torch.chunk(self.gates(torch.cat([x, h], dim=1)), 4, dim=1)
        i, f, o = torch.sigmoid(i), torch.sigmoid(f), torch.sigmoid(o)
        c = f * c + i * torch.tanh(g)
        h = o * torch.tanh(c)
        return h, c

    def run(self, seq: torch.Tensor) -> torch.Tensor:
        b, t, _, hgt, wid = seq.shape
        h = seq.new_zeros(b, self.hidden, hgt, wid)
        c = seq.new_zeros(b, self.hidden, hgt, wid)
        outs = []
        for step in range(t):
            h, c = self.forward(seq[:, step], (h, c))
            outs.append(h)
        return torch.stack(outs, dim=1)


class SequenceNet(nn.Module):
    """Ten-map sequence variant: ConvLSTM stack feeding the volume core."""

    LSTM_FEATURES = 16
    LSTM_KERNELS = (7, 5, 3)

    def __init__(self, spec: NetSpec):
        super().__init__()
        if spec.variant != "lstm":
            raise ValueError("SequenceNet requires the lstm variant spec")
        self.spec = spec
        self.size = spec.resize_target
        in_ch = 1
        cells, norms = [], []
        for k in self.LSTM_KERNELS:
            cells.append(ConvLSTMCell(in_ch, self.LSTM_FEATURES, k))
            norms.append(nn.BatchNorm2d(self.LSTM_FEATURES))
            in_ch = self.LSTM_FEATURES
        self.cells = nn.ModuleList(cells)
        self.norms = nn.ModuleList(norms)
        self.core = VolumeCore(spec, in_channels=self.LSTM_FEATURES)

    def forward(self, seqs: torch.Tensor) -> dict:
        b, t, _, hgt, wid = seqs.shape
        flat = seqs.reshape(b * t, 1, hgt, wid)
        flat = F.interpolate(flat, size=(self.size, self.size), mode="bilinear", align_corners=False)
        x = flat.reshape(b, t, 1, self.size, self.size)
        for cell, norm in zip(self.cells, self.norms):
            x = cell.run(x)
            bt = x.reshape(b * t, -1, self.size, self.size)
            x = F.relu(norm(bt)).reshape(b, t, -1, self.size, self.size)
        return self.core(x[:, -1])


def build_model(spec: NetSpec) -> nn.Module:
    if spec.variant == "lstm":
        return SequenceNet(spec)
    return InversionNet(spec)


def parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())
