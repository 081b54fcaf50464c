import itertools

import numpy as np
import pytest

from svxlab.segmentation import (
    EdgeList,
    LatticeEdge,
    SegmentationError,
    SegmentationParams,
    SupervoxelLabeling,
    build_hierarchy,
    build_region_graph,
    build_voxel_graph,
    extract_level,
    fh_merge,
    read_label_map,
    segmentation_energy,
    stream_segment,
    write_label_map,
)
from svxlab.video_io import VideoVolume

from conftest import constant_volume, random_volume


def brute_force_adjacencies(t, h, w, connectivity=6):
    """Independent enumeration of unordered adjacent voxel pairs."""
    def neighbors(p):
        pt, py, px = p
        for dt in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    if (dt, dy, dx) == (0, 0, 0):
                        continue
                    if connectivity == 6 and abs(dt) + abs(dy) + abs(dx) != 1:
                        continue
                    q = (pt + dt, py + dy, px + dx)
                    if 0 <= q[0] < t and 0 <= q[1] < h and 0 <= q[2] < w:
                        yield q

    pairs = set()
    for p in itertools.product(range(t), range(h), range(w)):
        for q in neighbors(p):
            pairs.add(frozenset((p, q)))
    return pairs


class TestBuildVoxelGraph:
    def test_two_voxels_in_time(self):
        v = constant_volume(2, 1, 1)
        edges = build_voxel_graph(v, 6)
        assert len(edges) == 1

    def test_2x2x2_edge_count_matches_brute_force(self, rng):
        v = random_volume(rng, 2, 2, 2)
        edges = build_voxel_graph(v, 6)
        assert len(edges) == 12
        assert len(edges) == len(brute_force_adjacencies(2, 2, 2, 6))

    def test_constant_volume_zero_weights(self):
        edges = build_voxel_graph(constant_volume(2, 3, 3), 6)
        assert np.all(edges.weight == 0)

    @pytest.mark.parametrize("connectivity", [6, 26])
    def test_random_volume_matches_brute_force(self, rng, connectivity):
        t, h, w = 2, 3, 4
        v = random_volume(rng, t, h, w)
        edges = build_voxel_graph(v, connectivity)
        expected = brute_force_adjacencies(t, h, w, connectivity)
        got = set()
        flat = v.voxels.reshape(-1, 3).astype(float)
        for e in edges:
            pa = np.unravel_index(e.a, (t, h, w))
            pb = np.unravel_index(e.b, (t, h, w))
            got.add(frozenset((pa, pb)))
            assert e.weight == pytest.approx(np.linalg.norm(flat[e.a] - flat[e.b]))
        assert got == expected


class TestFhMerge:
    def test_zero_weights_single_region(self):
        v = constant_volume(2, 2, 2)
        edges = build_voxel_graph(v, 6)
        mr = fh_merge(range(8), edges, tau_constant=0.5, min_size=1)
        assert mr.component_count == 1

    def test_two_blocks_stay_apart(self):
        # FH predicate by hand: 100 > 0 + 0.2/4 on both sides.
        edges = EdgeList([0, 1, 2, 4, 5, 6, 3], [1, 2, 3, 5, 6, 7, 4],
                         [0, 0, 0, 0, 0, 0, 100.0])
        mr = fh_merge(range(8), edges, tau_constant=0.2, min_size=1)
        assert mr.component_count == 2

    def test_min_size_forces_merge(self):
        edges = EdgeList([0, 1, 2, 4, 5, 6, 3], [1, 2, 3, 5, 6, 7, 4],
                         [0, 0, 0, 0, 0, 0, 100.0])
        mr = fh_merge(range(8), edges, tau_constant=0.2, min_size=5)
        assert mr.component_count == 1

    def test_empty_node_set_rejected(self):
        with pytest.raises(SegmentationError):
            fh_merge([], EdgeList([], [], []), 1.0, 1)

    def test_unknown_edge_endpoint_rejected(self):
        with pytest.raises(SegmentationError):
            fh_merge([0, 1], EdgeList([0], [7], [1.0]), 1.0, 1)

    def test_fh_boundary_predicate_random_instances(self, rng):
        # Not-too-fine property, pre-size-enforcement, vs brute-force MSTs.
        for _ in range(25):
            dims = rng.integers(1, 4, size=3)
            while dims.prod() < 2 or dims.prod() > 8:
                dims = rng.integers(1, 4, size=3)
            v = random_volume(rng, *dims)
            tau = float(rng.uniform(0.05, 60.0))
            edges = build_voxel_graph(v, 6)
            mr = fh_merge(range(int(dims.prod())), edges, tau, min_size=1)
            assert_fh_boundary_predicate(mr, edges, tau)


def assert_fh_boundary_predicate(mr, edges, tau):
    """Brute-force check: every adjacent final pair's min crossing weight
    exceeds min(Int(C1) + tau/|C1|, Int(C2) + tau/|C2|)."""
    assign = mr.assignment()
    comp_members = {}
    for node, root in assign.items():
        comp_members.setdefault(root, []).append(node)

    def mst_internal(nodes):
        nodes = set(nodes)
        internal = [e for e in edges if e.a in nodes and e.b in nodes]
        parent = {n: n for n in nodes}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        best = 0.0
        for e in sorted(internal, key=lambda e: e.weight):
            ra, rb = find(e.a), find(e.b)
            if ra != rb:
                parent[ra] = rb
                best = max(best, e.weight)
        return best

    internal = {root: mst_internal(members) for root, members in comp_members.items()}
    crossing = {}
    for e in edges:
        ra, rb = assign[e.a], assign[e.b]
        if ra == rb:
            continue
        key = frozenset((ra, rb))
        crossing[key] = min(crossing.get(key, float("inf")), e.weight)
    for key, w in crossing.items():
        ra, rb = tuple(key)
        mint = min(internal[ra] + tau / len(comp_members[ra]),
                   internal[rb] + tau / len(comp_members[rb]))
        assert w > mint, f"boundary predicate violated: {w} <= {mint}"


class TestBuildRegionGraph:
    def test_single_region_no_edges(self):
        lab = SupervoxelLabeling(1, np.zeros((1, 2, 2), dtype=np.int64))
        nodes, redges = build_region_graph(lab, EdgeList([0, 1], [1, 2], [3.0, 4.0]))
        assert nodes == [0]
        assert len(redges) == 0

    def test_min_of_crossing_weights(self):
        lab = SupervoxelLabeling(1, np.array([[[0, 0, 0, 1, 1, 1]]], dtype=np.int64))
        edges = EdgeList([2, 1, 0], [3, 4, 5], [3.0, 1.0, 2.0])
        _, redges = build_region_graph(lab, edges)
        assert len(redges) == 1
        assert redges[0].weight == 1.0

    def test_random_labeling_matches_exhaustive_scan(self, rng):
        v = random_volume(rng, 2, 3, 3)
        edges = build_voxel_graph(v, 6)
        labels = rng.integers(0, 4, size=(2, 3, 3)).astype(np.int64)
        lab = SupervoxelLabeling(1, labels)
        nodes, redges = build_region_graph(lab, edges)

        flat = labels.ravel()
        expected = {}
        for e in edges:
            la, lb = int(flat[e.a]), int(flat[e.b])
            if la == lb:
                continue
            key = (min(la, lb), max(la, lb))
            expected[key] = min(expected.get(key, float("inf")), e.weight)
        got = {(e.a, e.b): e.weight for e in redges}
        assert set(got) == set(expected)
        for key in expected:
            assert got[key] == pytest.approx(expected[key])
        assert nodes == sorted(set(flat.tolist()))


def brute_force_energy(labels_flat, edges, tau):
    """Independent energy: exhaustive spanning-tree search per region plus
    min crossing weight per adjacent pair."""
    regions = {}
    for node, lab in enumerate(labels_flat):
        regions.setdefault(int(lab), set()).add(node)

    def min_spanning_weight(nodes):
        internal = [e for e in edges if e.a in nodes and e.b in nodes]
        if len(nodes) <= 1:
            return 0.0
        best = None
        for combo in itertools.combinations(internal, len(nodes) - 1):
            parent = {n: n for n in nodes}

            def find(x):
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            ok = True
            for e in combo:
                ra, rb = find(e.a), find(e.b)
                if ra == rb:
                    ok = False
                    break
                parent[ra] = rb
            if ok and len({find(n) for n in nodes}) == 1:
                total = sum(e.weight for e in combo)
                best = total if best is None else min(best, total)
        assert best is not None, "region not connected"
        return best

    internal_total = sum(min_spanning_weight(nodes) for nodes in regions.values())
    crossing = {}
    for e in edges:
        la, lb = int(labels_flat[e.a]), int(labels_flat[e.b])
        if la != lb:
            key = (min(la, lb), max(la, lb))
            crossing[key] = min(crossing.get(key, float("inf")), e.weight)
    return tau * internal_total + sum(crossing.values())


class TestSegmentationEnergy:
    def test_singletons_sum_min_crossings(self, rng):
        v = random_volume(rng, 1, 2, 3)
        edges = build_voxel_graph(v, 6)
        labels = np.arange(6, dtype=np.int64).reshape(1, 2, 3)
        energy = segmentation_energy(SupervoxelLabeling(1, labels), edges, tau=3.0)
        assert energy == pytest.approx(float(edges.weight.sum()))

    def test_single_mst_edge(self):
        lab = SupervoxelLabeling(1, np.zeros((2, 1, 1), dtype=np.int64))
        energy = segmentation_energy(lab, EdgeList([0], [1], [5.0]), tau=2.0)
        assert energy == pytest.approx(10.0)

    def test_all_three_region_path_labelings_match_brute_force(self, rng):
        # 6-voxel path graph: a 6-frame 1x1 video.
        weights = rng.uniform(0.5, 9.0, size=5)
        edges = EdgeList(np.arange(5), np.arange(1, 6), weights)
        for cuts in itertools.combinations(range(1, 6), 2):
            labels = np.zeros(6, dtype=np.int64)
            labels[cuts[0]:] = 1
            labels[cuts[1]:] = 2
            lab = SupervoxelLabeling(1, labels.reshape(6, 1, 1))
            tau = 1.7
            assert segmentation_energy(lab, edges, tau) == pytest.approx(
                brute_force_energy(labels, list(edges), tau))


def enumerate_connected_partitions(n, edges):
    """All partitions of nodes 0..n-1 whose blocks are connected."""
    neighbors = {i: set() for i in range(n)}
    for e in edges:
        neighbors[e.a].add(e.b)
        neighbors[e.b].add(e.a)

    def connected(block):
        block = set(block)
        seen = {next(iter(block))}
        frontier = list(seen)
        while frontier:
            cur = frontier.pop()
            for nb in neighbors[cur] & block - seen:
                seen.add(nb)
                frontier.append(nb)
        return seen == block

    def recurse(i, blocks):
        if i == n:
            if all(connected(b) for b in blocks):
                yield [list(b) for b in blocks]
            return
        for b in blocks:
            b.append(i)
            yield from recurse(i + 1, blocks)
            b.pop()
        blocks.append([i])
        yield from recurse(i + 1, blocks)
        blocks.pop()

    yield from recurse(0, [])


def fh_predicate_holds(blocks, edges, tau):
    label_of = {}
    for li, block in enumerate(blocks):
        for node in block:
            label_of[node] = li

    def internal(block):
        block_set = set(block)
        parent = {x: x for x in block}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        best = 0.0
        inside = sorted((e for e in edges if e.a in block_set and e.b in block_set),
                        key=lambda e: e.weight)
        for e in inside:
            ra, rb = find(e.a), find(e.b)
            if ra != rb:
                parent[ra] = rb
                best = max(best, e.weight)
        return best

    ints = [internal(b) for b in blocks]
    crossing = {}
    for e in edges:
        la, lb = label_of[e.a], label_of[e.b]
        if la != lb:
            key = (min(la, lb), max(la, lb))
            crossing[key] = min(crossing.get(key, float("inf")), e.weight)
    for (la, lb), w in crossing.items():
        mint = min(ints[la] + tau / len(blocks[la]), ints[lb] + tau / len(blocks[lb]))
        if w <= mint:
            return False
    return True


class TestGreedyVsOracle:
    def test_level1_energy_within_brute_force_satisfying_set(self, rng):
        # Enumerate every connected partition of a tiny volume, keep those
        # satisfying the FH boundary predicate, and require the greedy
        # level-1 result's energy to be one of theirs.
        for trial in range(6):
            dims = [(6, 1, 1), (2, 3, 1), (1, 2, 3), (2, 2, 2)][trial % 4]
            v = random_volume(rng, *dims)
            n = int(np.prod(dims))
            tau = float(rng.uniform(1.0, 80.0))
            edges = build_voxel_graph(v, 6)
            mr = fh_merge(range(n), edges, tau, min_size=1)

            greedy_labels = np.empty(n, dtype=np.int64)
            for node, root in mr.assignment().items():
                greedy_labels[node] = root
            greedy_energy = segmentation_energy(
                SupervoxelLabeling(1, greedy_labels.reshape(dims)), edges, tau)

            edge_list = list(edges)
            satisfying = []
            for blocks in enumerate_connected_partitions(n, edge_list):
                if fh_predicate_holds(blocks, edge_list, tau):
                    labels = np.empty(n, dtype=np.int64)
                    for li, block in enumerate(blocks):
                        for node in block:
                            labels[node] = li
                    satisfying.append(segmentation_energy(
                        SupervoxelLabeling(1, labels.reshape(dims)), edges, tau))
            assert satisfying, "brute force found no FH-satisfying partition"
            assert any(abs(greedy_energy - e) < 1e-9 for e in satisfying)


class TestBuildHierarchy:
    def test_constant_volume_single_supervoxel_everywhere(self):
        h = build_hierarchy(constant_volume(4, 5, 5), SegmentationParams(hie_num=6))
        assert all(lab.supervoxel_count == 1 for lab in h.levels)

    def test_two_color_volume_two_regions(self):
        vox = np.zeros((4, 6, 8, 3), dtype=np.uint8)
        vox[:, :, 4:] = 255
        h = build_hierarchy(VideoVolume(vox), SegmentationParams(hie_num=8))
        # Above the size-enforcement floor the two colors never merge.
        assert h.levels[-1].supervoxel_count == 2
        counts = [lab.supervoxel_count for lab in h.levels]
        assert counts == sorted(counts, reverse=True)

    def test_invariants_on_random_videos(self, rng):
        for _ in range(4):
            dims = (int(rng.integers(2, 6)), int(rng.integers(3, 9)), int(rng.integers(3, 9)))
            v = random_volume(rng, *dims)
            p = SegmentationParams(hie_num=10, min_size=4)
            h = build_hierarchy(v, p)
            assert h.depth == 10
            h.validate(min_size=4)
            for lab in h.levels:
                assert sum(lab.region_sizes.values()) == v.voxels[..., 0].size


class TestStreaming:
    def test_single_window_equals_batch_exactly(self, rng):
        v = random_volume(rng, 8, 6, 6)
        p = SegmentationParams(hie_num=12, stream_range=10)
        hb = build_hierarchy(v, p)
        hs = stream_segment(v, p)
        for lb, ls in zip(hb.levels, hs.levels):
            assert np.array_equal(lb.labels, ls.labels)

    def test_constant_video_streams_to_one_region(self):
        v = constant_volume(25, 4, 4)
        h = stream_segment(v, SegmentationParams(hie_num=5, stream_range=10))
        for lab in h.levels:
            assert lab.supervoxel_count == 1

    def test_two_color_counts_match_batch(self):
        vox = np.zeros((25, 6, 8, 3), dtype=np.uint8)
        vox[:, :, 4:] = 255
        v = VideoVolume(vox)
        p = SegmentationParams(hie_num=8, stream_range=10)
        hb = build_hierarchy(v, p)
        hs = stream_segment(v, p)
        assert [l.supervoxel_count for l in hs.levels] == \
            [l.supervoxel_count for l in hb.levels]

    def test_committed_labels_immutable_across_windows(self, rng):
        frames = [rng.integers(0, 256, size=(5, 5, 3), dtype=np.uint8) for _ in range(12)]
        p = SegmentationParams(hie_num=4, stream_range=4, min_size=2)

        partial = stream_segment(iter(frames[:8]), p)
        full = stream_segment(iter(frames), p)
        for lp, lf in zip(partial.levels, full.levels):
            assert np.array_equal(lf.labels[:8], lp.labels)

    def test_streamed_hierarchy_invariants(self, rng):
        v = random_volume(rng, 13, 5, 6)
        p = SegmentationParams(hie_num=8, stream_range=5, min_size=3)
        h = stream_segment(v, p)
        h.validate(min_size=3)

    def test_empty_stream_rejected(self):
        with pytest.raises(SegmentationError):
            stream_segment(iter([]), SegmentationParams())


class TestExtractLevel:
    def _hierarchy(self, depth):
        h = build_hierarchy(constant_volume(2, 3, 3), SegmentationParams(hie_num=depth))
        return h

    def test_named_presets(self):
        h = self._hierarchy(30)
        assert extract_level(h, "fine").level_index == 8
        assert extract_level(h, "medium").level_index == 16
        assert extract_level(h, "coarse").level_index == 24

    def test_explicit_out_of_range_names_depth(self):
        h = self._hierarchy(30)
        with pytest.raises(SegmentationError, match="30"):
            extract_level(h, 31)

    def test_unknown_preset(self):
        h = self._hierarchy(4)
        with pytest.raises(SegmentationError, match="preset"):
            extract_level(h, "finest")


class TestLabelMapIO:
    def test_round_trip(self, tmp_path, rng):
        labels = rng.integers(0, 9, size=(3, 4, 5)).astype(np.int64)
        lab = SupervoxelLabeling(7, labels)
        path = tmp_path / "level_07.svxl"
        write_label_map(lab, path)
        loaded = read_label_map(path, level_index=7)
        assert np.array_equal(loaded.labels, labels)
        assert loaded.region_sizes == lab.region_sizes
