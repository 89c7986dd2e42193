"""Depthwise-separable convolution network: entry/middle/exit flows with
residual connections, width-scalable channel plan."""

from torch import nn

from .base import scaled_channels


class SeparableConv2d(nn.Module):
    def __init__(self, in_ch, out_ch, kernel_size=3, stride=1, padding=1):
        super().__init__()
        self.depthwise = nn.Conv2d(in_ch, in_ch, kernel_size, stride, padding,
                                   groups=in_ch, bias=False)
        self.pointwise = nn.Conv2d(in_ch, out_ch, 1, bias=False)

    def forward(self, x):
        return self.pointwise(self.depthwise(x))


class SepConvBlock(nn.Module):
    """Stack of relu+sepconv+bn units with an additive skip path."""

    def __init__(self, in_ch, out_ch, reps, stride=1, start_with_relu=True,
                 grow_first=True):
        super().__init__()
        if out_ch != in_ch or stride != 1:
            self.skip = nn.Conv2d(in_ch, out_ch, 1, stride=stride, bias=False)
            self.skip_bn = nn.BatchNorm2d(out_ch)
        else:
            self.skip = None

        layers = []
        ch = in_ch
        if grow_first:
            layers += [nn.ReLU(inplace=False), SeparableConv2d(in_ch, out_ch),
                       nn.BatchNorm2d(out_ch)]
            ch = out_ch
            for _ in range(reps - 1):
                layers += [nn.ReLU(inplace=False), SeparableConv2d(ch, ch),
                           nn.BatchNorm2d(ch)]
        else:
            for _ in range(reps - 1):
                layers += [nn.ReLU(inplace=False), SeparableConv2d(ch, ch),
                           nn.BatchNorm2d(ch)]
            layers += [nn.ReLU(inplace=False), SeparableConv2d(ch, out_ch),
                       nn.BatchNorm2d(out_ch)]
        if not start_with_relu:
            layers = layers[1:]
        if stride != 1:
            layers.append(nn.MaxPool2d(3, stride, 1))
        self.body = nn.Sequential(*layers)

    def forward(self, x):
        out = self.body(x)
        if self.skip is not None:
            return out + self.skip_bn(self.skip(x))
        return out + x


def xception_stages(width: float, num_classes: int):
    s = lambda c: scaled_channels(c, width)

    stem = nn.Sequential(
        nn.Conv2d(3, s(32), 3, stride=2, bias=False),
        nn.BatchNorm2d(s(32)),
        nn.ReLU(inplace=True),
        nn.Conv2d(s(32), s(64), 3, bias=False),
        nn.BatchNorm2d(s(64)),
        nn.ReLU(inplace=True),
    )

    stages = [
        ("stem", stem),
        ("entry1", SepConvBlock(s(64), s(128), reps=2, stride=2,
                                start_with_relu=False)),
        ("entry2", SepConvBlock(s(128), s(256), reps=2, stride=2)),
        ("entry3", SepConvBlock(s(256), s(728), reps=2, stride=2)),
    ]
    for i in range(8):
        stages.append((f"mid{i + 1}", SepConvBlock(s(728), s(728), reps=3)))
    stages.append(("exit", SepConvBlock(s(728), s(1024), reps=2, stride=2,
                                        grow_first=False)))
    stages.append(("postconv", nn.Sequential(
        SeparableConv2d(s(1024), s(1536)),
        nn.BatchNorm2d(s(1536)),
        nn.ReLU(inplace=True),
        SeparableConv2d(s(1536), s(2048)),
        nn.BatchNorm2d(s(2048)),
        nn.ReLU(inplace=True),
    )))
    stages.append(("head", nn.Sequential(
        nn.AdaptiveAvgPool2d(1),
        nn.Flatten(),
        nn.Linear(s(2048), num_classes),
    )))
    return stages
