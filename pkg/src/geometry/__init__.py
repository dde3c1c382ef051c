"""3D primitives, occlusion tests and 2D polygonal regions."""
