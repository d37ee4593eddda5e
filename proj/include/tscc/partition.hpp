#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "tscc/common.hpp"

namespace tscc {

/// Disjoint index sets I_1..I_K covering 0..N-1.
struct Partition {
    std::vector<std::vector<int>> index_sets;

    int blocks() const { return static_cast<int>(index_sets.size()); }

    int total() const {
        int n = 0;
        for (const auto& s : index_sets) n += static_cast<int>(s.size());
        return n;
    }

    std::vector<int> sizes() const {
        std::vector<int> out;
        out.reserve(index_sets.size());
        for (const auto& s : index_sets) out.push_back(static_cast<int>(s.size()));
        return out;
    }

    /// Cluster id (0-based) per point index.
    std::vector<int> to_labels() const {
        std::vector<int> labels(total(), -1);
        for (int k = 0; k < blocks(); ++k)
            for (int i : index_sets[k]) labels[i] = k;
        return labels;
    }

    void validate() const {
        const int n = total();
        std::vector<char> seen(n, 0);
        for (const auto& s : index_sets)
            for (int i : s) {
                if (i < 0 || i >= n)
                    throw validation_error("Partition: index out of range");
                if (seen[i]++)
                    throw validation_error("Partition: overlapping index sets");
            }
    }

    /// Contiguous blocks of the given sizes: {0..s1-1}, {s1..s1+s2-1}, ...
    static Partition contiguous(const std::vector<int>& sizes) {
        Partition p;
        int off = 0;
        for (int s : sizes) {
            std::vector<int> block(s);
            for (int i = 0; i < s; ++i) block[i] = off + i;
            p.index_sets.push_back(std::move(block));
            off += s;
        }
        return p;
    }

    static Partition from_labels(const std::vector<int>& labels, int K = -1) {
        int k_max = -1;
        for (int l : labels) k_max = std::max(k_max, l);
        const int K_eff = (K > 0) ? K : k_max + 1;
        if (k_max >= K_eff)
            throw validation_error("Partition: label exceeds cluster count");
        Partition p;
        p.index_sets.resize(K_eff);
        for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
            if (labels[i] < 0)
                throw validation_error("Partition: negative label");
            p.index_sets[labels[i]].push_back(i);
        }
        return p;
    }
};

}  // namespace tscc
