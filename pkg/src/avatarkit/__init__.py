"""avatarkit: a desk-scale telexistence stack.

Operator-side retargeting, a latency-emulating peer-to-peer bus, and a
simulated humanoid avatar with layered locomotion control and bidirectional
haptic/visual feedback, steerable live through a web console.
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
