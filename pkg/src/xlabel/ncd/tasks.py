"""Labeling tasks and their fixed prediction order."""
import enum


class Task(str, enum.Enum):
    DM = "DM"
    HTN = "HTN"
    CKD = "CKD"
    DLP = "DLP"

    def __str__(self):
        return self.value


# Downstream tasks consume upstream predictions as input features, so
# evaluation must follow this order.
CHAIN_ORDER = (Task.DM, Task.HTN, Task.CKD, Task.DLP)
