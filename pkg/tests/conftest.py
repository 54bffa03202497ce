import numpy as np
import pytest

from curleig.mesh import generate_flat_torus, generate_icosphere, save_mesh, TriangleMesh


@pytest.fixture(scope="session")
def torus32():
    return generate_flat_torus(2 * np.pi, 32)


@pytest.fixture(scope="session")
def torus48():
    return generate_flat_torus(2 * np.pi, 48)


@pytest.fixture(scope="session")
def torus64():
    return generate_flat_torus(2 * np.pi, 64)


@pytest.fixture(scope="session")
def sphere3():
    return generate_icosphere(1.0, 3)


@pytest.fixture(scope="session")
def sphere4():
    return generate_icosphere(1.0, 4)


def build_genus2_mesh(spacing=0.035):
    """Closed genus-2 surface: isosurface of a tube around a figure-eight.

    g(x,y) = (x^2+y^2)^2 - (x^2-y^2) is a lemniscate; the 0-level of
    g^2 + z^2 - eps bounds a solid neighborhood of the figure-eight whose
    boundary has Euler characteristic -2.
    """
    from skimage.measure import marching_cubes

    eps = 0.004
    x = np.arange(-1.35, 1.35 + spacing, spacing)
    y = np.arange(-0.75, 0.75 + spacing, spacing)
    z = np.arange(-0.35, 0.35 + spacing, spacing)
    X, Y, Z = np.meshgrid(x, y, z, indexing="ij")
    g = (X**2 + Y**2) ** 2 - (X**2 - Y**2)
    vol = g**2 + Z**2 - eps
    verts, faces, _, _ = marching_cubes(vol, level=0.0, spacing=(spacing,) * 3)
    return TriangleMesh(verts, faces[:, ::-1])


@pytest.fixture(scope="session")
def genus2_obj(tmp_path_factory):
    path = tmp_path_factory.mktemp("fixtures") / "genus2.obj"
    save_mesh(build_genus2_mesh(), str(path))
    return str(path)
