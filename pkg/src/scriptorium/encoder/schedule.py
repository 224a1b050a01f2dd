"""Per-iteration exponential learning-rate decay."""

INITIAL_LR = 2e-5
DECAY_PER_ITERATION = 10 ** (-1 / 90000)


def lr_at(iteration, initial_lr=INITIAL_LR, decay=DECAY_PER_ITERATION):
    """Closed form: ``initial_lr * decay ** iteration``."""
    return initial_lr * decay ** iteration


class ExponentialDecay:
    """Multiplies the optimizer learning rate by ``decay`` after every iteration."""

    def __init__(self, optimizer, initial_lr=INITIAL_LR, decay=DECAY_PER_ITERATION):
        if initial_lr <= 0:
            raise ValueError("initial_lr must be positive")
        if not 0 < decay <= 1:
            raise ValueError("decay must lie in (0, 1]")
        self.optimizer = optimizer
        self.initial_lr = initial_lr
        self.decay = decay
        self.iteration = 0
        self.lr = initial_lr
        self._apply()

    def _apply(self):
        if self.optimizer is None:
            return
        for group in self.optimizer.param_groups:
            group["lr"] = self.lr

    def step(self):
        self.iteration += 1
        self.lr *= self.decay
        self._apply()

    def state_dict(self):
        return {"iteration": self.iteration, "lr": self.lr}

    def load_state_dict(self, state):
        self.iteration = state["iteration"]
        self.lr = state["lr"]
        self._apply()
