from typing import Optional

import numpy as np


class AdamOptimizer:
    """
    Адаптивная оценка моментов для одного массива параметров.

    При передаче маски строк обновление ленивое: моменты и параметры меняются
    только у затронутых строк, как в разреженных вариантах Adam.
    """

    def __init__(
        self,
        shape,
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.99,
        eps: float = 1e-15,
    ) -> None:
        if lr <= 0:
            raise ValueError(f"Шаг обучения должен быть положительным: {lr}")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0

    def step(self, param: np.ndarray, grad: np.ndarray, rows: Optional[np.ndarray] = None) -> None:
        """
        Обновляет param на месте.

        Args:
            param: Параметры
            grad: Градиент той же формы
            rows: Булева маска по ведущим осям; None - обновить всё
        """
        self.t += 1
        correction1 = 1.0 - self.beta1**self.t
        correction2 = 1.0 - self.beta2**self.t
        if rows is None:
            self.m *= self.beta1
            self.m += (1.0 - self.beta1) * grad
            self.v *= self.beta2
            self.v += (1.0 - self.beta2) * grad * grad
            param -= self.lr * (self.m / correction1) / (np.sqrt(self.v / correction2) + self.eps)
            return

        g = grad[rows]
        m = self.beta1 * self.m[rows] + (1.0 - self.beta1) * g
        v = self.beta2 * self.v[rows] + (1.0 - self.beta2) * g * g
        self.m[rows] = m
        self.v[rows] = v
        param[rows] -= self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
