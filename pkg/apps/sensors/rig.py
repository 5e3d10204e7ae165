"""
센서 리그 - LiDAR와 카메라를 같은 포인트 클라우드 인터페이스로 다룬다.
"""

from functools import singledispatch

from apps.geometry.clouds import VEHICLE, PointCloud, fuse_clouds
from apps.geometry.transforms import RigidTransform
from apps.scene.world import WorldSnapshot

from .camera import CameraSpec, render_depth, unproject_depth
from .lidar import LidarSpec, lidar_scan


@singledispatch
def sensor_cloud(spec, world: WorldSnapshot, ego_pose: RigidTransform, threads: int = 1):
    """센서 하나의 차량 좌표계 포인트 클라우드"""
    raise TypeError(f"지원하지 않는 센서 사양입니다: {type(spec).__name__}")


@sensor_cloud.register
def _(spec: LidarSpec, world, ego_pose, threads=1) -> PointCloud:
    return lidar_scan(spec, world, ego_pose, threads)


@sensor_cloud.register
def _(spec: CameraSpec, world, ego_pose, threads=1) -> PointCloud:
    return unproject_depth(spec, render_depth(spec, world, ego_pose, threads))


def rig_cloud(sensors, world: WorldSnapshot, ego_pose: RigidTransform, threads: int = 1):
    """
    리그 전체 센서 클라우드의 합집합 (센서가 없으면 빈 클라우드)

    ego 차체(보닛 등)에 맞은 점도 그대로 둔다. ego 점을 빼는 것은 기준 클라우드뿐이다.
    """
    clouds = [sensor_cloud(spec, world, ego_pose, threads) for spec in sensors]
    return fuse_clouds(clouds, VEHICLE, world.timestep)
