# profile.py
"""
Actor profiles: online two-level nearest-neighbour clustering of the faces an actor acquires.

A face joins the closest top cluster when its squared distance to that cluster's centroid is
below `theta_coarse`, otherwise it opens a new one. Inside the chosen top cluster the same rule
is applied with `theta_fine` over sub-clusters. Top clusters smaller than `min_cluster_size` are
treated as outliers; the sub-cluster centroids of the remaining ones represent the actor.
"""
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from models.config import ProfileConfig
from models.errors import DimensionMismatch
from models.vectors import as_matrix


class _CentroidTable:
    """Running sums and counts of a list of clusters, kept as one matrix for vectorised lookups."""

    def __init__(self, dim: int):
        self.sums = np.zeros((4, dim))
        self.counts = np.zeros(4)
        self.size = 0

    def nearest(self, face: np.ndarray):
        """Index and squared distance of the closest centroid, or (None, inf) when empty."""
        if self.size == 0:
            return None, np.inf
        centroids = self.sums[:self.size] / self.counts[:self.size, np.newaxis]
        diff = centroids - face
        sqdist = np.einsum("ij,ij->i", diff, diff)
        index = int(np.argmin(sqdist))
        return index, float(sqdist[index])

    def add(self, index: Optional[int], face: np.ndarray) -> int:
        if index is None:
            if self.size == self.sums.shape[0]:
                self.sums = np.vstack([self.sums, np.zeros_like(self.sums)])
                self.counts = np.concatenate([self.counts, np.zeros_like(self.counts)])
            index = self.size
            self.size += 1
        self.sums[index] += face
        self.counts[index] += 1
        return index

    def centroid(self, index: int) -> np.ndarray:
        return self.sums[index] / self.counts[index]


@dataclass(eq=False)
class ClusterNode:
    table: _CentroidTable
    index: int
    members: List[int] = field(default_factory=list)
    children: List["ClusterNode"] = field(default_factory=list)
    sub_table: Optional[_CentroidTable] = None

    @property
    def centroid(self) -> np.ndarray:
        return self.table.centroid(self.index)

    @property
    def member_count(self) -> int:
        return len(self.members)


class ActorProfile:
    def __init__(self, actor: str, cfg: Optional[ProfileConfig] = None, dim: Optional[int] = None):
        self.actor = actor
        self.cfg = cfg or ProfileConfig()
        self.dim = dim
        self.top_clusters: List[ClusterNode] = []
        self.face_log: List[np.ndarray] = []
        self._top: Optional[_CentroidTable] = None

    def __len__(self) -> int:
        return len(self.face_log)

    def add_face(self, face) -> "ActorProfile":
        face = np.asarray(face, dtype=np.float64)
        if self.dim is None:
            self.dim = face.shape[-1]
        if face.ndim != 1 or face.shape[0] != self.dim:
            raise DimensionMismatch(self.dim, face.shape[-1], what="profile face")
        if self._top is None:
            self._top = _CentroidTable(self.dim)
        position = len(self.face_log)
        self.face_log.append(face)

        top = self._join(self._top, self.top_clusters, face, self.cfg.theta_coarse, position)
        if top.sub_table is None:
            top.sub_table = _CentroidTable(self.dim)
        self._join(top.sub_table, top.children, face, self.cfg.theta_fine, position)
        return self

    def add_faces(self, faces) -> "ActorProfile":
        for face in as_matrix(faces, self.dim):
            self.add_face(face)
        return self

    def qualifying_clusters(self) -> List[ClusterNode]:
        return [c for c in self.top_clusters if c.member_count >= self.cfg.min_cluster_size]

    def representatives(self) -> List[np.ndarray]:
        return [child.centroid for cluster in self.qualifying_clusters() for child in cluster.children]

    def representative_matrix(self) -> np.ndarray:
        reps = self.representatives()
        if not reps:
            return np.zeros((0, self.dim or 0))
        return np.stack(reps)

    def replay(self) -> "ActorProfile":
        """A fresh profile rebuilt from `face_log` in insertion order."""
        rebuilt = ActorProfile(self.actor, self.cfg, self.dim)
        for face in self.face_log:
            rebuilt.add_face(face)
        return rebuilt

    def to_dict(self) -> dict:
        clusters = []
        for cluster in self.top_clusters:
            outlier = cluster.member_count < self.cfg.min_cluster_size
            clusters.append({
                "size": cluster.member_count,
                "outlier": outlier,
                "sub_clusters": [
                    {"size": child.member_count, "centroid": [float(v) for v in child.centroid]}
                    for child in cluster.children
                ],
            })
        return {
            "actor": self.actor,
            "faces": len(self.face_log),
            "representatives": sum(len(c.children) for c in self.qualifying_clusters()),
            "clusters": clusters,
        }

    @staticmethod
    def _join(table: _CentroidTable, nodes: List[ClusterNode], face: np.ndarray, threshold: float,
              position: int) -> ClusterNode:
        index, sqdist = table.nearest(face)
        if index is None or sqdist >= threshold:
            index = table.add(None, face)
            nodes.append(ClusterNode(table, index))
        else:
            table.add(index, face)
        node = nodes[index]
        node.members.append(position)
        return node
