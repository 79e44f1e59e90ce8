import math
import random

import pytest
import torch

from lineformer.sensitive import line_means, select_sensitive


class TestLineMeans:
    def test_constant_rows(self):
        le = torch.full((2, 3, 8), 2.5)
        assert torch.equal(line_means(le), torch.full((2, 3), 2.5))

    def test_symmetric_row_is_zero(self):
        le = torch.tensor([[[1.0, -1.0, 1.0, -1.0]]])
        assert line_means(le).item() == 0.0

    def test_matches_scalar_loop(self):
        torch.manual_seed(3)
        le = torch.randn(2, 5, 32)
        means = line_means(le)
        for i in range(2):
            for j in range(5):
                expected = sum(le[i, j, d].item() for d in range(32)) / 32
                assert math.isclose(means[i, j].item(), expected, abs_tol=1e-7)

    def test_requires_three_dims(self):
        with pytest.raises(ValueError):
            line_means(torch.randn(4, 5))


class TestSelectSensitive:
    def test_smallest_mean_selected(self):
        le = torch.zeros(1, 3, 4)
        le[0, 0] = 1.0
        le[0, 1] = 0.2
        le[0, 2] = 0.5
        sel = select_sensitive(le, torch.ones(1, 3, dtype=torch.long))
        assert sel.index.tolist() == [1]
        assert torch.equal(sel.vector, le[:, 1, :])

    def test_single_real_line(self):
        le = torch.randn(1, 4, 8)
        mask = torch.tensor([[1, 0, 0, 0]])
        assert select_sensitive(le, mask).index.tolist() == [0]

    def test_tie_breaks_to_smallest_index(self):
        le = torch.zeros(1, 2, 4)
        le[0, 0] = 0.3
        le[0, 1] = 0.3
        sel = select_sensitive(le, torch.ones(1, 2, dtype=torch.long))
        assert sel.index.tolist() == [0]

    def test_abs_mode_prefers_closest_to_zero(self):
        le = torch.zeros(1, 2, 4)
        le[0, 0] = -5.0
        le[0, 1] = 1.0
        mask = torch.ones(1, 2, dtype=torch.long)
        assert select_sensitive(le, mask, use_abs=False).index.tolist() == [0]
        assert select_sensitive(le, mask, use_abs=True).index.tolist() == [1]

    def test_all_masked_rejected(self):
        mask = torch.tensor([[0, 0]])
        with pytest.raises(ValueError, match="unmasked line"):
            select_sensitive(torch.randn(1, 2, 4), mask)

    def test_oracle_equivalence_1000_instances(self):
        rng = random.Random(123456)
        torch.manual_seed(123456)
        for _ in range(1000):
            b = rng.randint(1, 4)
            k = rng.randint(1, 100)
            h = rng.randint(1, 64)
            le = torch.randn(b, k, h)
            mask = torch.zeros(b, k, dtype=torch.long)
            for i in range(b):
                real = rng.randint(1, k)
                mask[i, :real] = 1
            sel = select_sensitive(le, mask)
            for i in range(b):
                best_j, best_mean = None, None
                for j in range(k):
                    if mask[i, j] == 0:
                        continue
                    m = le[i, j].mean().item()
                    if best_mean is None or m < best_mean:
                        best_j, best_mean = j, m
                assert sel.index[i].item() == best_j
                assert mask[i, sel.index[i]].item() == 1

    def test_gradient_reaches_selected_lines_only(self):
        le = torch.randn(2, 3, 4, requires_grad=True)
        mask = torch.ones(2, 3, dtype=torch.long)
        sel = select_sensitive(le, mask)
        sel.vector.sum().backward()
        for i in range(2):
            for j in range(3):
                expected = 1.0 if j == sel.index[i].item() else 0.0
                assert torch.equal(le.grad[i, j], torch.full((4,), expected))
