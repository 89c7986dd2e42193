"""Small 3-block CNN for fast tests and desk-scale experiments."""

from torch import nn

from .base import scaled_channels


def tiny_cnn_stages(width: float, num_classes: int):
    c1 = scaled_channels(16, width)
    c2 = scaled_channels(32, width)
    c3 = scaled_channels(64, width)
    return [
        ("block1", nn.Sequential(
            nn.Conv2d(3, c1, 3, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.MaxPool2d(2),
        )),
        ("block2", nn.Sequential(
            nn.Conv2d(c1, c2, 3, padding=1),
            nn.ReLU(inplace=True),
            nn.MaxPool2d(2),
        )),
        ("block3", nn.Sequential(
            nn.Conv2d(c2, c3, 3, padding=1),
            nn.ReLU(inplace=True),
        )),
        ("head", nn.Sequential(
            nn.AdaptiveAvgPool2d(1),
            nn.Flatten(),
            nn.Linear(c3, num_classes),
        )),
    ]
