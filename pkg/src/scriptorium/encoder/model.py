"""ResNet-18 style encoder with a detachable classification head."""
import torch
from torch import nn
from torchvision.models import resnet18

FEATURE_DIM = 512


class StyleNet(nn.Module):
    """ResNet-18 trunk (7x7/2 stem, max pool, 4 x 2 basic blocks, global average pool).

    ``features`` returns the pooled 512-d vector; ``forward`` adds the affine head.
    """

    def __init__(self, num_classes):
        super().__init__()
        if num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {num_classes}")
        trunk = resnet18(weights=None, num_classes=num_classes)
        self.stem = nn.Sequential(trunk.conv1, trunk.bn1, trunk.relu, trunk.maxpool)
        self.layer1 = trunk.layer1
        self.layer2 = trunk.layer2
        self.layer3 = trunk.layer3
        self.layer4 = trunk.layer4
        self.pool = trunk.avgpool
        self.head = trunk.fc

    @property
    def num_classes(self):
        return self.head.out_features

    def features(self, x):
        x = self.stem(x)
        x = self.layer4(self.layer3(self.layer2(self.layer1(x))))
        return torch.flatten(self.pool(x), 1)

    def forward(self, x):
        return self.head(self.features(x))

    def replace_head(self, num_classes, seed=0):
        if num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {num_classes}")
        gen = torch.Generator().manual_seed(seed)
        head = nn.Linear(FEATURE_DIM, num_classes)
        bound = 1.0 / FEATURE_DIM ** 0.5
        with torch.no_grad():
            head.weight.uniform_(-bound, bound, generator=gen)
            head.bias.uniform_(-bound, bound, generator=gen)
        self.head = head
        return self

    def backbone_parameters(self):
        return sum(p.numel() for name, p in self.named_parameters() if not name.startswith("head."))


def build_encoder(num_classes, seed=0):
    """Fresh encoder; convolutions use He (fan-out) init, as torchvision does, under ``seed``."""
    if num_classes < 2:
        raise ValueError(f"num_classes must be >= 2, got {num_classes}")
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        return StyleNet(num_classes)
