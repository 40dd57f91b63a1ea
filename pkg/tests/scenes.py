"""Synthetic reconstructions of four recorded evaluation episodes, in pixels."""

import numpy as np

from motif.generators import gen_detour, gen_vertical_shaking, gen_wave
from motif.trajectory import Episode, Region, SceneObject, Trajectory

SIZE = 480


def laptop_scene() -> Episode:
    """Cup carried down, then left, staying clear of a laptop to its upper right."""
    laptop = SceneObject("laptop", Region.box(300, 60, 460, 180))
    corners = np.array([(280, 200), (280, 400), (100, 400)], float)
    legs = [a + np.linspace(0, 1, 30)[:, None] * (b - a) for a, b in zip(corners[:-1], corners[1:])]
    traj = Trajectory.single(np.concatenate([legs[0], legs[1][1:]]))
    return Episode("laptop", traj, "pick up the cup and place it to the lower left of the laptop",
                   "move downward, then move to the left", (laptop,), image_size=(SIZE, SIZE))


def curl_hair_scene() -> Episode:
    traj, _ = gen_wave(start=(0.5, 0.1), end=(0.5, 0.9), n=160, amplitude=0.08, frequency=4)
    return Episode("curl", traj.transformed(SIZE), "curl hair",
                   "move downward while making horizontal oscillations", image_size=(SIZE, SIZE))


def sprinkle_scene() -> Episode:
    traj, _ = gen_vertical_shaking(n=10, start=(0.75, 0.45), amplitude=0.1, frequency=6, drift=0.5,
                                   drift_direction="left")
    return Episode("sprinkle", traj.transformed(SIZE), "sprinkle parsley on pizza",
                   "move to the left while making vertical oscillations", image_size=(SIZE, SIZE))


def delivery_scene() -> Episode:
    manhole = SceneObject("manhole", Region.box(0.4, 0.4, 0.6, 0.6))
    traj, _ = gen_detour(start=(0.5, 0.9), end=(0.5, 0.1), obstacle=manhole, side="right", n=20)
    scene = (SceneObject("manhole", manhole.region.transformed(SIZE)),)
    return Episode("delivery", traj.transformed(SIZE), "deliver lemonade",
                   "move forward while making a detour to the right of the manhole", scene, image_size=(SIZE, SIZE))
