"""Inception-module network with factorized convolutions and parallel
branches, width-scalable channel plan."""

import torch
from torch import nn
import torch.nn.functional as F

from .base import scaled_channels


class BasicConv2d(nn.Module):
    def __init__(self, in_ch, out_ch, **kwargs):
        super().__init__()
        self.conv = nn.Conv2d(in_ch, out_ch, bias=False, **kwargs)
        self.bn = nn.BatchNorm2d(out_ch, eps=0.001)

    def forward(self, x):
        return F.relu(self.bn(self.conv(x)), inplace=True)


class InceptionA(nn.Module):
    def __init__(self, in_ch, pool_features, s):
        super().__init__()
        self.branch1x1 = BasicConv2d(in_ch, s(64), kernel_size=1)
        self.branch5x5 = nn.Sequential(
            BasicConv2d(in_ch, s(48), kernel_size=1),
            BasicConv2d(s(48), s(64), kernel_size=5, padding=2),
        )
        self.branch3x3dbl = nn.Sequential(
            BasicConv2d(in_ch, s(64), kernel_size=1),
            BasicConv2d(s(64), s(96), kernel_size=3, padding=1),
            BasicConv2d(s(96), s(96), kernel_size=3, padding=1),
        )
        self.branch_pool = BasicConv2d(in_ch, pool_features, kernel_size=1)
        self.out_channels = s(64) + s(64) + s(96) + pool_features

    def forward(self, x):
        pool = self.branch_pool(F.avg_pool2d(x, 3, stride=1, padding=1))
        return torch.cat(
            [self.branch1x1(x), self.branch5x5(x), self.branch3x3dbl(x), pool], 1
        )


class InceptionB(nn.Module):
    """Grid-size reduction block."""

    def __init__(self, in_ch, s):
        super().__init__()
        self.branch3x3 = BasicConv2d(in_ch, s(384), kernel_size=3, stride=2)
        self.branch3x3dbl = nn.Sequential(
            BasicConv2d(in_ch, s(64), kernel_size=1),
            BasicConv2d(s(64), s(96), kernel_size=3, padding=1),
            BasicConv2d(s(96), s(96), kernel_size=3, stride=2),
        )
        self.out_channels = s(384) + s(96) + in_ch

    def forward(self, x):
        pool = F.max_pool2d(x, 3, stride=2)
        return torch.cat([self.branch3x3(x), self.branch3x3dbl(x), pool], 1)


class InceptionC(nn.Module):
    """Factorized 7x7 branches: 1x7 and 7x1 convolutions."""

    def __init__(self, in_ch, channels_7x7, s):
        super().__init__()
        c7 = channels_7x7
        self.branch1x1 = BasicConv2d(in_ch, s(192), kernel_size=1)
        self.branch7x7 = nn.Sequential(
            BasicConv2d(in_ch, c7, kernel_size=1),
            BasicConv2d(c7, c7, kernel_size=(1, 7), padding=(0, 3)),
            BasicConv2d(c7, s(192), kernel_size=(7, 1), padding=(3, 0)),
        )
        self.branch7x7dbl = nn.Sequential(
            BasicConv2d(in_ch, c7, kernel_size=1),
            BasicConv2d(c7, c7, kernel_size=(7, 1), padding=(3, 0)),
            BasicConv2d(c7, c7, kernel_size=(1, 7), padding=(0, 3)),
            BasicConv2d(c7, c7, kernel_size=(7, 1), padding=(3, 0)),
            BasicConv2d(c7, s(192), kernel_size=(1, 7), padding=(0, 3)),
        )
        self.branch_pool = BasicConv2d(in_ch, s(192), kernel_size=1)
        self.out_channels = 4 * s(192)

    def forward(self, x):
        pool = self.branch_pool(F.avg_pool2d(x, 3, stride=1, padding=1))
        return torch.cat(
            [self.branch1x1(x), self.branch7x7(x), self.branch7x7dbl(x), pool], 1
        )


class InceptionD(nn.Module):
    """Second grid-size reduction block."""

    def __init__(self, in_ch, s):
        super().__init__()
        self.branch3x3 = nn.Sequential(
            BasicConv2d(in_ch, s(192), kernel_size=1),
            BasicConv2d(s(192), s(320), kernel_size=3, stride=2),
        )
        self.branch7x7x3 = nn.Sequential(
            BasicConv2d(in_ch, s(192), kernel_size=1),
            BasicConv2d(s(192), s(192), kernel_size=(1, 7), padding=(0, 3)),
            BasicConv2d(s(192), s(192), kernel_size=(7, 1), padding=(3, 0)),
            BasicConv2d(s(192), s(192), kernel_size=3, stride=2),
        )
        self.out_channels = s(320) + s(192) + in_ch

    def forward(self, x):
        pool = F.max_pool2d(x, 3, stride=2)
        return torch.cat([self.branch3x3(x), self.branch7x7x3(x), pool], 1)


class InceptionE(nn.Module):
    """Expanded-filter-bank block with split 1x3/3x1 outputs."""

    def __init__(self, in_ch, s):
        super().__init__()
        self.branch1x1 = BasicConv2d(in_ch, s(320), kernel_size=1)
        self.branch3x3_1 = BasicConv2d(in_ch, s(384), kernel_size=1)
        self.branch3x3_2a = BasicConv2d(s(384), s(384), kernel_size=(1, 3),
                                        padding=(0, 1))
        self.branch3x3_2b = BasicConv2d(s(384), s(384), kernel_size=(3, 1),
                                        padding=(1, 0))
        self.branch3x3dbl_1 = nn.Sequential(
            BasicConv2d(in_ch, s(448), kernel_size=1),
            BasicConv2d(s(448), s(384), kernel_size=3, padding=1),
        )
        self.branch3x3dbl_2a = BasicConv2d(s(384), s(384), kernel_size=(1, 3),
                                           padding=(0, 1))
        self.branch3x3dbl_2b = BasicConv2d(s(384), s(384), kernel_size=(3, 1),
                                           padding=(1, 0))
        self.branch_pool = BasicConv2d(in_ch, s(192), kernel_size=1)
        self.out_channels = s(320) + 4 * s(384) + s(192)

    def forward(self, x):
        b3 = self.branch3x3_1(x)
        b3 = torch.cat([self.branch3x3_2a(b3), self.branch3x3_2b(b3)], 1)
        bd = self.branch3x3dbl_1(x)
        bd = torch.cat([self.branch3x3dbl_2a(bd), self.branch3x3dbl_2b(bd)], 1)
        pool = self.branch_pool(F.avg_pool2d(x, 3, stride=1, padding=1))
        return torch.cat([self.branch1x1(x), b3, bd, pool], 1)


def inception_stages(width: float, num_classes: int):
    s = lambda c: scaled_channels(c, width)

    stem = nn.Sequential(
        BasicConv2d(3, s(32), kernel_size=3, stride=2),
        BasicConv2d(s(32), s(32), kernel_size=3),
        BasicConv2d(s(32), s(64), kernel_size=3, padding=1),
        nn.MaxPool2d(3, stride=2),
        BasicConv2d(s(64), s(80), kernel_size=1),
        BasicConv2d(s(80), s(192), kernel_size=3),
        nn.MaxPool2d(3, stride=2),
    )

    a1 = InceptionA(s(192), s(32), s)
    a2 = InceptionA(a1.out_channels, s(64), s)
    a3 = InceptionA(a2.out_channels, s(64), s)
    rb = InceptionB(a3.out_channels, s)
    c1 = InceptionC(rb.out_channels, s(128), s)
    c2 = InceptionC(c1.out_channels, s(160), s)
    c3 = InceptionC(c2.out_channels, s(160), s)
    c4 = InceptionC(c3.out_channels, s(192), s)
    rd = InceptionD(c4.out_channels, s)
    e1 = InceptionE(rd.out_channels, s)
    e2 = InceptionE(e1.out_channels, s)

    return [
        ("stem", stem),
        ("mixedA1", a1),
        ("mixedA2", a2),
        ("mixedA3", a3),
        ("reduceB", rb),
        ("mixedC1", c1),
        ("mixedC2", c2),
        ("mixedC3", c3),
        ("mixedC4", c4),
        ("reduceD", rd),
        ("mixedE1", e1),
        ("mixedE2", e2),
        ("head", nn.Sequential(
            nn.AdaptiveAvgPool2d(1),
            nn.Dropout(0.5),
            nn.Flatten(),
            nn.Linear(e2.out_channels, num_classes),
        )),
    ]
