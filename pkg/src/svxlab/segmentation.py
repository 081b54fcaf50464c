"""Streaming hierarchical supervoxel segmentation.

Each hierarchy level is produced by minimum-spanning-tree style merging:
two components join across an edge when its weight does not exceed either
component's internal difference plus a size-scaled threshold, scanning
edges in nondecreasing weight order. Level 1 runs over the voxel lattice;
every further level runs over the region graph of the level below, with
the threshold constant scaled by level index so the hierarchy coarsens.

Streaming processes the video in windows of ``stream_range`` frames. Each
window's graph includes the lattice edges connecting it to the final
committed frame of the previous window. Labels already committed are
immutable: new voxels may join committed regions, but committed voxels
never relabel and committed regions never merge with each other.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .video_io import VideoVolume, gaussian_smooth

SVXL_MAGIC = b"SVXL"

LEVEL_PRESETS = {"fine": 8, "medium": 16, "coarse": 24}


class SegmentationError(Exception):
    pass


@dataclass(frozen=True)
class LatticeEdge:
    a: int
    b: int
    weight: float


class EdgeList:
    """Columnar edge storage; iterates as LatticeEdge for inspection."""

    def __init__(self, a, b, weight):
        self.a = np.asarray(a, dtype=np.int64)
        self.b = np.asarray(b, dtype=np.int64)
        self.weight = np.asarray(weight, dtype=np.float64)
        if not (len(self.a) == len(self.b) == len(self.weight)):
            raise ValueError("edge component arrays must share length")

    @classmethod
    def from_edges(cls, edges) -> "EdgeList":
        if isinstance(edges, cls):
            return edges
        rows = [(e.a, e.b, e.weight) for e in edges]
        if not rows:
            return cls(np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, np.float64))
        a, b, w = zip(*rows)
        return cls(np.array(a), np.array(b), np.array(w))

    def __len__(self) -> int:
        return len(self.a)

    def __iter__(self) -> Iterator[LatticeEdge]:
        for a, b, w in zip(self.a, self.b, self.weight):
            yield LatticeEdge(int(a), int(b), float(w))

    def __getitem__(self, i: int) -> LatticeEdge:
        return LatticeEdge(int(self.a[i]), int(self.b[i]), float(self.weight[i]))


@dataclass
class SupervoxelLabeling:
    """One complete partition of the voxel lattice."""

    level_index: int
    labels: np.ndarray  # (frames, height, width) int64
    region_sizes: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.region_sizes:
            ids, counts = np.unique(self.labels, return_counts=True)
            self.region_sizes = {int(i): int(c) for i, c in zip(ids, counts)}

    @property
    def supervoxel_count(self) -> int:
        return len(self.region_sizes)

    def validate(self, min_size: int | None = None) -> None:
        ids, counts = np.unique(self.labels, return_counts=True)
        observed = {int(i): int(c) for i, c in zip(ids, counts)}
        if observed != self.region_sizes:
            raise SegmentationError(f"level {self.level_index}: region_sizes disagree with labels")
        if (ids < 0).any():
            raise SegmentationError(f"level {self.level_index}: negative labels present")
        if min_size is not None and self.labels.size >= min_size:
            small = [i for i, c in observed.items() if c < min_size]
            if small:
                raise SegmentationError(
                    f"level {self.level_index}: regions below min_size {min_size}: {small[:5]}"
                )


@dataclass
class Hierarchy:
    """Ordered stack of supervoxel labelings with parent links.

    ``parent_maps[h]`` maps labels of ``levels[h]`` to labels of
    ``levels[h + 1]``.
    """

    levels: list[SupervoxelLabeling]
    parent_maps: list[dict[int, int]]

    @property
    def depth(self) -> int:
        return len(self.levels)

    def validate(self, min_size: int | None = None) -> None:
        for lab in self.levels:
            lab.validate(min_size)
        for h in range(self.depth - 1):
            fine, coarse = self.levels[h], self.levels[h + 1]
            pm = self.parent_maps[h]
            lut = np.full(max(pm) + 1, -1, dtype=np.int64)
            for child, parent in pm.items():
                lut[child] = parent
            if not np.array_equal(lut[fine.labels], coarse.labels):
                raise SegmentationError(f"nesting violated between levels {h + 1} and {h + 2}")
            if coarse.supervoxel_count > fine.supervoxel_count:
                raise SegmentationError(f"supervoxel count increased at level {h + 2}")


@dataclass(frozen=True)
class SegmentationParams:
    """Merge thresholds and streaming geometry.

    ``c`` is the threshold constant at level 1, ``c_reg`` at all higher
    levels (scaled by level index), ``min_size`` the region floor in
    voxels, ``sigma`` the spatial pre-smoothing width, ``stream_range``
    the frames per streaming window, ``hie_num`` the level count.
    """

    c: float = 0.2
    c_reg: float = 10.0
    min_size: int = 20
    sigma: float = 0.4
    stream_range: int = 10
    hie_num: int = 30
    connectivity: int = 6

    def __post_init__(self):
        if self.c <= 0 or self.c_reg <= 0 or self.min_size <= 0 or self.sigma < 0:
            raise SegmentationError("c, c_reg, min_size must be positive; sigma non-negative")
        if self.stream_range < 1 or self.hie_num < 1:
            raise SegmentationError("stream_range and hie_num must be >= 1")
        if self.connectivity not in (6, 26):
            raise SegmentationError(f"connectivity must be 6 or 26, got {self.connectivity}")

    def tau_for_level(self, level: int) -> float:
        return self.c if level == 1 else self.c_reg * level


def _lattice_offsets(connectivity: int) -> list[tuple[int, int, int]]:
    if connectivity == 6:
        return [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    offsets = []
    for dt in (0, 1):
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if (dt, dy, dx) == (0, 0, 0):
                    continue
                if dt == 0 and (dy < 0 or (dy == 0 and dx < 0)):
                    continue  # one direction per unordered pair
                offsets.append((dt, dy, dx))
    return offsets


def build_voxel_graph(v: VideoVolume, connectivity: int = 6) -> EdgeList:
    """One edge per unordered adjacent voxel pair under the chosen
    connectivity; weight is the Euclidean RGB distance. Voxel ids are flat
    (t, y, x) raster indices."""
    if connectivity not in (6, 26):
        raise SegmentationError(f"connectivity must be 6 or 26, got {connectivity}")
    t, h, w = v.frame_count, v.height, v.width
    vox = v.voxels.astype(np.float64)
    ids = np.arange(t * h * w, dtype=np.int64).reshape(t, h, w)

    a_parts, b_parts, w_parts = [], [], []
    for dt, dy, dx in _lattice_offsets(connectivity):
        src_sl = (
            slice(0, t - dt),
            slice(max(0, -dy), h - max(0, dy)),
            slice(max(0, -dx), w - max(0, dx)),
        )
        dst_sl = (
            slice(dt, t),
            slice(max(0, dy), h + min(0, dy)),
            slice(max(0, dx), w + min(0, dx)),
        )
        diff = np.sqrt(((vox[src_sl] - vox[dst_sl]) ** 2).sum(axis=-1))
        if diff.size == 0:
            continue
        a_parts.append(ids[src_sl].ravel())
        b_parts.append(ids[dst_sl].ravel())
        w_parts.append(diff.ravel())
    if not a_parts:
        return EdgeList(np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, np.float64))
    return EdgeList(np.concatenate(a_parts), np.concatenate(b_parts), np.concatenate(w_parts))


@dataclass
class MergeResult:
    """Outcome of one merging round.

    ``node_ids`` preserves input order; ``roots[i]`` is the internal
    component index of ``node_ids[i]``. Component statistics are keyed by
    that internal index. ``anchors`` holds, per component, the frozen node
    id it contains (or None for free components).
    """

    node_ids: list[int]
    roots: np.ndarray
    voxel_sizes: dict[int, int]
    node_counts: dict[int, int]
    internal: dict[int, float]
    anchors: dict[int, int | None]

    @property
    def component_count(self) -> int:
        return len(self.voxel_sizes)

    def assignment(self) -> dict[int, int]:
        return {nid: int(r) for nid, r in zip(self.node_ids, self.roots)}


def fh_merge(
    nodes: Iterable[int],
    edges,
    tau_constant: float,
    min_size: int,
    node_voxel_sizes: dict[int, int] | None = None,
    frozen: dict[int, tuple[float, int, int]] | None = None,
) -> MergeResult:
    """Merge components over ``edges`` in nondecreasing (weight, a, b) order.

    Components C1, C2 joined by edge e merge iff
    ``w(e) <= min(Int(C1) + tau/|C1|, Int(C2) + tau/|C2|)``, where Int is
    the maximum MST edge weight inside the component and |C| its node
    count. Afterwards any component below ``min_size`` voxels is merged,
    smallest component first, across its minimum-weight outgoing edge,
    until none remain (or a single component spans the whole graph).

    ``frozen`` maps node ids to carried (internal, node_count, voxel_count)
    state of committed regions: frozen components may absorb free
    components but never merge with each other.
    """
    node_ids = list(nodes)
    if not node_ids:
        raise SegmentationError("fh_merge requires a nonempty node set")
    edges = EdgeList.from_edges(edges)
    n = len(node_ids)
    frozen = frozen or {}

    ids = np.asarray(node_ids, dtype=np.int64)
    if len(np.unique(ids)) != n:
        raise SegmentationError("duplicate node ids")
    min_id, max_id = int(ids.min()), int(ids.max())
    lut = np.full(max_id - min_id + 1, -1, dtype=np.int64)
    lut[ids - min_id] = np.arange(n)
    if len(edges):
        if edges.a.min() < min_id or edges.a.max() > max_id or \
           edges.b.min() < min_id or edges.b.max() > max_id:
            raise SegmentationError("edge references unknown node")
        ea = lut[edges.a - min_id]
        eb = lut[edges.b - min_id]
        if (ea < 0).any() or (eb < 0).any():
            raise SegmentationError("edge references unknown node")
    else:
        ea = np.empty(0, np.int64)
        eb = np.empty(0, np.int64)
    ew = edges.weight

    voxels = [1] * n
    nnodes = [1] * n
    internal = [0.0] * n
    anchor: list[int | None] = [None] * n
    if node_voxel_sizes:
        for nid, s in node_voxel_sizes.items():
            voxels[int(lut[nid - min_id])] = int(s)
    for nid, (int_val, ncount, vcount) in frozen.items():
        i = int(lut[nid - min_id])
        internal[i] = float(int_val)
        nnodes[i] = int(ncount)
        voxels[i] = int(vcount)
        anchor[i] = nid

    parent = list(range(n))
    thr = [internal[i] + tau_constant / nnodes[i] for i in range(n)]

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(ra: int, rb: int, w: float) -> int:
        if anchor[rb] is not None:
            ra, rb = rb, ra
        parent[rb] = ra
        voxels[ra] += voxels[rb]
        nnodes[ra] += nnodes[rb]
        internal[ra] = max(internal[ra], internal[rb], w)
        thr[ra] = internal[ra] + tau_constant / nnodes[ra]
        return ra

    if len(edges):
        order = np.lexsort((eb, ea, ew))
        for k_a, k_b, k_w in zip(ea[order].tolist(), eb[order].tolist(), ew[order].tolist()):
            ra = find(k_a)
            rb = find(k_b)
            if ra == rb:
                continue
            if anchor[ra] is not None and anchor[rb] is not None:
                continue
            if k_w <= thr[ra] and k_w <= thr[rb]:
                union(ra, rb, k_w)

        if min_size > 1:
            _enforce_min_size(parent, voxels, nnodes, internal, anchor, find, union,
                              ea, eb, ew, min_size)

    roots = np.fromiter((find(i) for i in range(n)), dtype=np.int64, count=n)
    root_set = sorted(set(int(r) for r in roots))
    return MergeResult(
        node_ids=node_ids,
        roots=roots,
        voxel_sizes={r: voxels[r] for r in root_set},
        node_counts={r: nnodes[r] for r in root_set},
        internal={r: internal[r] for r in root_set},
        anchors={r: anchor[r] for r in root_set},
    )


def _enforce_min_size(parent, voxels, nnodes, internal, anchor, find, union,
                      ea: np.ndarray, eb: np.ndarray, ew: np.ndarray, min_size: int) -> None:
    """Merge undersized components, smallest first, each across its current
    minimum-weight outgoing edge; repeat until none remain."""
    n = len(parent)
    total = sum(voxels[find(i)] for i in set(find(j) for j in range(n)))

    # node -> incident edge index ranges, via a stable sort of endpoints
    endpoints = np.concatenate([ea, eb])
    edge_of = np.concatenate([np.arange(len(ea)), np.arange(len(ea))])
    order = np.argsort(endpoints, kind="stable")
    sorted_nodes = endpoints[order]
    sorted_edges = edge_of[order]
    starts = np.searchsorted(sorted_nodes, np.arange(n + 1))

    ea_l, eb_l, ew_l = ea.tolist(), eb.tolist(), ew.tolist()

    while True:
        members: dict[int, list[int]] = {}
        for i in range(n):
            members.setdefault(find(i), []).append(i)
        small = [r for r in members if voxels[r] < min_size and voxels[r] < total]
        if not small:
            return
        small.sort(key=lambda r: (voxels[r], r))
        merged_any = False
        for r in small:
            if find(r) != r or voxels[r] >= min_size:
                continue
            best = None
            for i in members[r]:
                for k in sorted_edges[starts[i]:starts[i + 1]].tolist():
                    other = find(eb_l[k] if ea_l[k] == i else ea_l[k])
                    if other == r:
                        continue
                    if anchor[r] is not None and anchor[other] is not None:
                        continue
                    key = (ew_l[k], ea_l[k], eb_l[k])
                    if best is None or key < best[0]:
                        best = (key, other)
            if best is None:
                continue
            survivor = union(r, best[1], best[0][0])
            absorbed = best[1] if survivor == r else r
            members[survivor].extend(members.pop(absorbed))
            merged_any = True
        if not merged_any:
            return


def _collapse_region_edges(la: np.ndarray, lb: np.ndarray, w: np.ndarray) -> EdgeList:
    """Group parallel region edges to their minimum weight; drops internal
    (same-label) edges. Handles negative labels."""
    crossing = la != lb
    la, lb, w = la[crossing], lb[crossing], w[crossing]
    if len(la) == 0:
        return EdgeList(np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, np.float64))
    lo = np.minimum(la, lb)
    hi = np.maximum(la, lb)
    shift = -int(lo.min()) if lo.min() < 0 else 0
    pair = (lo + shift) * (int(hi.max()) + shift + 1) + (hi + shift)
    order = np.lexsort((w, pair))
    pair_sorted = pair[order]
    first = np.ones(len(pair_sorted), dtype=bool)
    first[1:] = pair_sorted[1:] != pair_sorted[:-1]
    keep = order[first]
    return EdgeList(lo[keep], hi[keep], w[keep])


def build_region_graph(prev: SupervoxelLabeling, edges) -> tuple[list[int], EdgeList]:
    """One node per region of ``prev``; one edge per adjacent region pair,
    weighted by the minimum crossing voxel-edge weight."""
    edges = EdgeList.from_edges(edges)
    flat = prev.labels.ravel()
    nodes = sorted(prev.region_sizes)
    if len(edges) == 0:
        return nodes, EdgeList(np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, np.float64))
    return nodes, _collapse_region_edges(flat[edges.a], flat[edges.b], edges.weight)


def segmentation_energy(s: SupervoxelLabeling, edges, tau: float) -> float:
    """Merging objective of a labeling: tau times the total MST weight
    inside each region plus the minimum crossing weight of every adjacent
    region pair, counted once per unordered pair. Test oracle; not used by
    the merge loop."""
    edges = EdgeList.from_edges(edges)
    flat = s.labels.ravel()

    order = np.lexsort((edges.b, edges.a, edges.weight))
    parent: dict[int, int] = {}

    def find(x: int) -> int:
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    internal_total = 0.0
    for k in order.tolist():
        a, b, w = int(edges.a[k]), int(edges.b[k]), float(edges.weight[k])
        if flat[a] != flat[b]:
            continue
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            internal_total += w

    _, region_edges = build_region_graph(s, edges)
    return tau * internal_total + float(region_edges.weight.sum())


class _StreamSegmenter:
    """Window-by-window hierarchical merging with committed-label reuse.

    Node id convention inside a window: new voxels use extended-volume flat
    indices; a committed region with label L appears as the frozen sentinel
    id ``-1 - L``.
    """

    def __init__(self, params: SegmentationParams):
        self.p = params
        H = params.hie_num
        self.next_label = [0] * H
        self.region_info: list[dict[int, tuple[float, int, int]]] = [dict() for _ in range(H)]
        self.parent_arr: list[np.ndarray] = [np.empty(0, dtype=np.int64) for _ in range(H - 1)]
        self.committed_chunks: list[list[np.ndarray]] = [[] for _ in range(H)]
        self.seam_rgb: np.ndarray | None = None  # smoothed last committed frame
        self.seam_labels: list[np.ndarray] | None = None  # per level, (h, w)

    def process_window(self, window: np.ndarray) -> None:
        """Segment one smoothed window, shape (t, h, w, 3)."""
        p = self.p
        H = p.hie_num
        t, h, w = window.shape[:3]
        plane = h * w
        has_seam = self.seam_rgb is not None
        committed_before = list(self.next_label)

        if has_seam:
            combined = np.concatenate([self.seam_rgb[None], window])
        else:
            combined = window
        edges = build_voxel_graph(VideoVolume(combined), p.connectivity)
        ea, eb, ew = edges.a, edges.b, edges.weight
        if has_seam:
            keep = ~((ea < plane) & (eb < plane))
            ea, eb, ew = ea[keep], eb[keep], ew[keep]
        n_ext = combined.shape[0] * plane
        new_lo = plane if has_seam else 0  # first extended id belonging to a new voxel

        ext_prev: np.ndarray | None = None  # flat labels over extended volume, previous level
        window_labels: list[np.ndarray] = []

        for level in range(1, H + 1):
            idx = level - 1
            tau = p.tau_for_level(level)

            if level == 1:
                if has_seam:
                    seam_l1 = self.seam_labels[0].ravel()
                    na, nb = ea.copy(), eb.copy()
                    for arr in (na, nb):
                        m = arr < plane
                        arr[m] = -1 - seam_l1[arr[m]]
                    frozen = {int(-1 - L): self.region_info[0][int(L)]
                              for L in np.unique(seam_l1)}
                    node_ids = list(range(new_lo, n_ext)) + sorted(frozen)
                    mr = fh_merge(node_ids, EdgeList(na, nb, ew), tau, p.min_size, frozen=frozen)
                else:
                    node_ids = list(range(n_ext))
                    mr = fh_merge(node_ids, EdgeList(ea, eb, ew), tau, p.min_size)
                root_label = self._assign_labels(mr, idx)
                lut_root = np.full(len(mr.node_ids), -1, dtype=np.int64)
                for root, lab in root_label.items():
                    lut_root[root] = lab
                n_new = n_ext - new_lo
                ext_cur = np.empty(n_ext, dtype=np.int64)
                ext_cur[new_lo:] = lut_root[mr.roots[:n_new]]
                if has_seam:
                    ext_cur[:plane] = seam_l1
            else:
                prev_committed = committed_before[idx - 1]
                la = ext_prev[ea].copy()
                lb = ext_prev[eb].copy()
                if prev_committed:
                    pa = self.parent_arr[idx - 1]
                    for arr in (la, lb):
                        m = arr < prev_committed
                        arr[m] = -1 - pa[arr[m]]
                redges = _collapse_region_edges(la, lb, ew)

                present = np.unique(ext_prev)
                free_nodes = present[present >= prev_committed]
                frozen = {}
                if prev_committed:
                    committed_present = present[present < prev_committed]
                    if len(committed_present):
                        parents = np.unique(self.parent_arr[idx - 1][committed_present])
                        frozen = {int(-1 - P): self.region_info[idx][int(P)] for P in parents}
                sizes_all = dict(zip(
                    (int(x) for x in present),
                    (int(c) for c in np.unique(ext_prev, return_counts=True)[1]),
                ))
                node_voxel_sizes = {int(f): sizes_all[int(f)] for f in free_nodes}
                node_ids = [int(f) for f in free_nodes] + sorted(frozen)
                mr = fh_merge(node_ids, redges, tau, p.min_size,
                              node_voxel_sizes=node_voxel_sizes, frozen=frozen)
                root_label = self._assign_labels(mr, idx)

                # Parent links for labels created at the previous level this
                # window, recorded in label order.
                assign = mr.assignment()
                new_prev_labels = range(prev_committed, self.next_label[idx - 1])
                parent_new = np.fromiter(
                    (root_label[assign[L]] for L in new_prev_labels),
                    dtype=np.int64, count=self.next_label[idx - 1] - prev_committed,
                )
                self.parent_arr[idx - 1] = np.concatenate([self.parent_arr[idx - 1], parent_new])

                ext_cur = self.parent_arr[idx - 1][ext_prev]

            self._update_region_info(idx, mr, root_label,
                                     ext_cur[new_lo:] if has_seam else ext_cur)
            window_labels.append(ext_cur[new_lo:].reshape(t, h, w))
            ext_prev = ext_cur

        for idx in range(H):
            self.committed_chunks[idx].append(window_labels[idx])
        self.seam_rgb = np.asarray(window[-1], dtype=np.float64)
        self.seam_labels = [window_labels[idx][-1] for idx in range(H)]

    def _assign_labels(self, mr: MergeResult, idx: int) -> dict[int, int]:
        """Anchored components keep their committed label; free components
        get fresh ids in first-occurrence order over the input nodes."""
        root_label: dict[int, int] = {}
        for root in (int(r) for r in mr.roots):
            if root in root_label:
                continue
            anc = mr.anchors[root]
            if anc is not None:
                root_label[root] = -1 - anc
            else:
                root_label[root] = self.next_label[idx]
                self.next_label[idx] += 1
        return root_label

    def _update_region_info(self, idx: int, mr: MergeResult, root_label: dict[int, int],
                            new_flat_labels: np.ndarray) -> None:
        """Internal difference and node counts come from the merge result;
        committed voxel counts grow by the new frames' label counts."""
        info = self.region_info[idx]
        counts = dict(zip(*(arr.tolist() for arr in np.unique(new_flat_labels, return_counts=True))))
        for root, lab in root_label.items():
            old = info.get(lab)
            old_voxels = old[2] if old else 0
            info[lab] = (mr.internal[root], mr.node_counts[root],
                         old_voxels + counts.get(lab, 0))

    def result(self) -> Hierarchy:
        if not self.committed_chunks[0]:
            raise SegmentationError("no frames processed")
        levels = []
        for idx in range(self.p.hie_num):
            labels = np.concatenate(self.committed_chunks[idx], axis=0)
            levels.append(SupervoxelLabeling(level_index=idx + 1, labels=labels))
        parent_maps = []
        for idx in range(self.p.hie_num - 1):
            pa = self.parent_arr[idx]
            present = np.unique(levels[idx].labels)
            parent_maps.append({int(L): int(pa[L]) for L in present})
        return Hierarchy(levels=levels, parent_maps=parent_maps)


def build_hierarchy(v: VideoVolume, p: SegmentationParams) -> Hierarchy:
    """Batch hierarchical segmentation: pre-smooth, then merge level by
    level over the whole volume at once."""
    smoothed = gaussian_smooth(v, p.sigma)
    seg = _StreamSegmenter(p)
    seg.process_window(smoothed.voxels.astype(np.float64))
    return seg.result()


def stream_segment(frames, p: SegmentationParams) -> Hierarchy:
    """Streaming hierarchical segmentation over consecutive windows of
    ``p.stream_range`` frames. ``frames`` is a VideoVolume or an iterable
    of (height, width, 3) arrays."""
    if isinstance(frames, VideoVolume):
        frames = iter(frames.voxels)
    seg = _StreamSegmenter(p)
    buffer: list[np.ndarray] = []
    seen = False
    for frame in frames:
        buffer.append(np.asarray(frame))
        seen = True
        if len(buffer) == p.stream_range:
            _process_buffer(seg, buffer, p)
            buffer = []
    if buffer:
        _process_buffer(seg, buffer, p)
    if not seen:
        raise SegmentationError("frame stream yielded no frames")
    return seg.result()


def _process_buffer(seg: _StreamSegmenter, buffer: list[np.ndarray], p: SegmentationParams) -> None:
    window = VideoVolume(np.stack(buffer))
    smoothed = gaussian_smooth(window, p.sigma)
    seg.process_window(smoothed.voxels.astype(np.float64))


def extract_level(h: Hierarchy, which: str | int) -> SupervoxelLabeling:
    """Fetch one labeling by preset name (fine=8, medium=16, coarse=24) or
    explicit 1-based level index."""
    if isinstance(which, str):
        if which not in LEVEL_PRESETS:
            raise SegmentationError(
                f"unknown level preset {which!r}; expected one of {sorted(LEVEL_PRESETS)}")
        level = LEVEL_PRESETS[which]
    else:
        level = int(which)
    if not 1 <= level <= h.depth:
        raise SegmentationError(f"level {level} out of range: hierarchy has {h.depth} levels")
    return h.levels[level - 1]


def write_label_map(s: SupervoxelLabeling, path: str | Path) -> None:
    """SVXL file: magic, three u32-LE (width, height, frames), then
    per-voxel u32-LE labels in (t, y, x) raster order."""
    t, h, w = s.labels.shape
    if s.labels.min() < 0 or s.labels.max() >= 2**32:
        raise SegmentationError("labels do not fit in u32")
    with open(path, "wb") as f:
        f.write(SVXL_MAGIC)
        f.write(struct.pack("<III", w, h, t))
        f.write(np.ascontiguousarray(s.labels, dtype="<u4").tobytes())


def read_label_map(path: str | Path, level_index: int = 0) -> SupervoxelLabeling:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != SVXL_MAGIC:
            raise SegmentationError(f"{path}: bad magic {magic!r}, expected {SVXL_MAGIC!r}")
        w, h, t = struct.unpack("<III", f.read(12))
        raw = f.read(w * h * t * 4)
        if len(raw) != w * h * t * 4:
            raise SegmentationError(f"{path}: truncated label raster")
    labels = np.frombuffer(raw, dtype="<u4").astype(np.int64).reshape(t, h, w)
    return SupervoxelLabeling(level_index=level_index, labels=labels)
